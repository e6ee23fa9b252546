#include "dopamine/trajectory.hpp"

#include <fstream>

namespace dopamine {

void Trajectory::validate() const {
    if (id.empty()) throw ConfigError("trajectory id must not be empty");
    if (num_frames < 2) throw ConfigError("trajectory '" + id + "': needs at least 2 frames");
    if (views.empty()) throw ConfigError("trajectory '" + id + "': needs at least one view");
    if (keyframe_indices.size() < 2) {
        throw ConfigError("trajectory '" + id + "': needs at least 2 keyframes");
    }
    if (keyframe_indices.front() != 0 || keyframe_indices.back() != num_frames - 1) {
        throw ConfigError("trajectory '" + id + "': keyframes must start at 0 and end at L-1");
    }
    for (std::size_t i = 1; i < keyframe_indices.size(); ++i) {
        if (keyframe_indices[i] <= keyframe_indices[i - 1]) {
            throw ConfigError("trajectory '" + id + "': keyframes must be strictly increasing");
        }
    }
    for (const auto& view : views) {
        const auto it = frames_per_view.find(view);
        if (it == frames_per_view.end() || static_cast<int>(it->second.size()) != num_frames) {
            throw ConfigError("trajectory '" + id + "': view '" + view +
                              "' must carry exactly num_frames refs");
        }
    }
}

std::map<std::string, std::string> Trajectory::refs_at(int frame_index) const {
    std::map<std::string, std::string> out;
    for (const auto& view : views) {
        out[view] = frames_per_view.at(view).at(static_cast<std::size_t>(frame_index));
    }
    return out;
}

nlohmann::json Trajectory::to_json() const {
    return nlohmann::json{{"id", id},
                          {"task_text", task_text},
                          {"num_frames", num_frames},
                          {"views", views},
                          {"keyframes", keyframe_indices},
                          {"frames_per_view", frames_per_view}};
}

Trajectory Trajectory::from_json(const nlohmann::json& j) {
    Trajectory t;
    try {
        t.id = j.at("id").get<std::string>();
        t.task_text = j.value("task_text", std::string());
        t.num_frames = j.at("num_frames").get<int>();
        t.views = j.at("views").get<std::vector<std::string>>();
        t.keyframe_indices = j.at("keyframes").get<std::vector<int>>();
        if (j.contains("frames_per_view")) {
            t.frames_per_view =
                j.at("frames_per_view").get<std::map<std::string, std::vector<std::string>>>();
        } else {
            // Manifests may omit explicit refs; synthesize canonical ones.
            for (const auto& view : t.views) {
                auto& refs = t.frames_per_view[view];
                refs.reserve(static_cast<std::size_t>(t.num_frames));
                for (int f = 0; f < t.num_frames; ++f) {
                    refs.push_back(t.id + "/" + view + "/" + std::to_string(f));
                }
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad trajectory record: ") + e.what());
    }
    t.validate();
    return t;
}

Trajectory Trajectory::synthetic(std::string id, std::string task_text, int num_frames,
                                 std::vector<int> keyframes, std::vector<std::string> views) {
    Trajectory t;
    t.id = std::move(id);
    t.task_text = std::move(task_text);
    t.num_frames = num_frames;
    t.views = std::move(views);
    t.keyframe_indices = std::move(keyframes);
    for (const auto& view : t.views) {
        auto& refs = t.frames_per_view[view];
        refs.reserve(static_cast<std::size_t>(num_frames));
        for (int f = 0; f < num_frames; ++f) {
            refs.push_back(t.id + "/" + view + "/" + std::to_string(f));
        }
    }
    t.validate();
    return t;
}

std::vector<Trajectory> read_trajectory_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trajectory manifest: " + path);
    std::vector<Trajectory> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw IoError(path + ":" + std::to_string(lineno) + ": invalid JSON: " + e.what());
        }
        out.push_back(Trajectory::from_json(j));
    }
    return out;
}

void write_trajectory_manifest(const std::string& path, const std::vector<Trajectory>& trajs) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write trajectory manifest: " + path);
    for (const auto& t : trajs) out << t.to_json().dump() << "\n";
}

}  // namespace dopamine
