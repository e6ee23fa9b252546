#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dopamine/common.hpp"

namespace dopamine {

// An ordered multi-view state sequence with keyframe annotations; the unit of
// ingestion for the labeling pipeline. Frame references are opaque strings
// (file paths or synthetic state ids); nothing here decodes images.
struct Trajectory {
    std::string id;
    std::string task_text;
    int num_frames = 0;                      // L, identical across views
    std::vector<std::string> views;
    std::vector<int> keyframe_indices;       // strictly increasing, first 0, last L-1
    std::map<std::string, std::vector<std::string>> frames_per_view;

    void validate() const;

    // Per-view refs for one frame index.
    std::map<std::string, std::string> refs_at(int frame_index) const;

    nlohmann::json to_json() const;
    static Trajectory from_json(const nlohmann::json& j);

    // Synthesizes "<id>/<view>/<index>" refs for every view and frame.
    static Trajectory synthetic(std::string id, std::string task_text, int num_frames,
                                std::vector<int> keyframes,
                                std::vector<std::string> views = {"front", "wrist"});
};

// Line-delimited JSON manifest, one trajectory per line with fields
// {id, task_text, num_frames, views, keyframes, frames_per_view}.
std::vector<Trajectory> read_trajectory_manifest(const std::string& path);
void write_trajectory_manifest(const std::string& path, const std::vector<Trajectory>& trajs);

}  // namespace dopamine
