#include "dopamine/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "dopamine/rng.hpp"

namespace dopamine::labeling {

using progress::Hop;
using progress::Progress;

void SamplingConfig::validate() const {
    if (chunk_size < 1) throw ConfigError("chunk_size must be >= 1");
    if (n_hop_bins < 1) throw ConfigError("n_hop_bins must be >= 1");
    if (n_distance_bins < 1) throw ConfigError("n_distance_bins must be >= 1");
    if (!(zero_hop_fraction >= 0.0 && zero_hop_fraction < 1.0)) {
        throw ConfigError("zero_hop_fraction must be in [0,1)");
    }
    if (zero_hop_epsilon < 0.0) throw ConfigError("zero_hop_epsilon must be >= 0");
}

int hop_bin_of(double hop, int n_hop_bins) {
    const double x = (hop + 1.0) / 2.0;
    const int bin = static_cast<int>(std::floor(x * n_hop_bins));
    return std::clamp(bin, 0, n_hop_bins - 1);
}

int gap_bin_of(int gap, int max_gap, int n_distance_bins) {
    if (max_gap < 1) return 0;
    const int bin = ((gap - 1) * n_distance_bins) / max_gap;
    return std::clamp(bin, 0, n_distance_bins - 1);
}

std::vector<StateSample> sample_states(const Trajectory& traj, const SamplingConfig& cfg) {
    cfg.validate();
    traj.validate();
    const int L = traj.num_frames;
    if (cfg.chunk_size > L) {
        throw ConfigError("trajectory '" + traj.id + "': chunk_size " +
                          std::to_string(cfg.chunk_size) + " exceeds frame count " +
                          std::to_string(L));
    }
    const int n_segments = static_cast<int>(traj.keyframe_indices.size()) - 1;
    const int points_per_segment = (L / cfg.chunk_size) / n_segments;  // floor(floor(L/C)/N)

    std::vector<int> indices(traj.keyframe_indices.begin(), traj.keyframe_indices.end());
    for (int seg = 0; seg < n_segments; ++seg) {
        const int a = traj.keyframe_indices[static_cast<std::size_t>(seg)];
        const int b = traj.keyframe_indices[static_cast<std::size_t>(seg) + 1];
        for (int k = 1; k <= points_per_segment; ++k) {
            const double frac = static_cast<double>(k) / (points_per_segment + 1);
            const int idx = a + static_cast<int>(std::lround(frac * (b - a)));
            if (idx > a && idx < b) indices.push_back(idx);
        }
    }
    std::sort(indices.begin(), indices.end());
    indices.erase(std::unique(indices.begin(), indices.end()), indices.end());

    const int M = static_cast<int>(indices.size()) - 1;
    std::vector<StateSample> out;
    out.reserve(indices.size());
    for (int i = 0; i <= M; ++i) {
        out.push_back({indices[static_cast<std::size_t>(i)],
                       M == 0 ? 0.0 : static_cast<double>(i) / M});
    }
    return out;
}

namespace {

HopSample make_sample(const Trajectory& traj, const std::vector<StateSample>& states, int i,
                      int j, double label, bool zero_channel, const SamplingConfig& cfg) {
    const auto& before = states[static_cast<std::size_t>(i)];
    const auto& after = states[static_cast<std::size_t>(j)];
    HopSample s;
    s.trajectory_id = traj.id;
    s.task_text = traj.task_text;
    s.init_ref = traj.refs_at(traj.keyframe_indices.front());
    s.goal_ref = traj.refs_at(traj.keyframe_indices.back());
    s.before_ref = traj.refs_at(before.frame_index);
    s.after_ref = traj.refs_at(after.frame_index);
    s.hop = label;
    s.hop_percent = static_cast<int>(std::lround(label * 100.0));
    s.phi_before = before.phi;
    s.phi_after = after.phi;
    s.temporal_gap = std::abs(after.frame_index - before.frame_index);
    s.hop_bin = hop_bin_of(label, cfg.n_hop_bins);
    s.gap_bin = gap_bin_of(s.temporal_gap, traj.num_frames - 1, cfg.n_distance_bins);
    s.zero_channel = zero_channel;
    s.views_used = traj.views;
    return s;
}

}  // namespace

std::vector<HopSample> generate_hop_samples(const Trajectory& traj, const SamplingConfig& cfg,
                                            GenerationDiagnostics* diag) {
    const std::vector<StateSample> states = sample_states(traj, cfg);
    const std::size_t n_states = states.size();
    const int max_gap = traj.num_frames - 1;
    const double epsilon =
        cfg.zero_hop_epsilon > 0.0
            ? cfg.zero_hop_epsilon
            : 0.5 / std::max<std::size_t>(n_states - 1, 1);  // half an inter-state step

    rng::Rng gen(rng::derive(cfg.rng_seed, "labeling/" + traj.id));

    const int quota = cfg.n_hop_bins * cfg.n_distance_bins;

    // Candidate pool of ordered (before, after) index pairs.
    std::vector<std::pair<int, int>> pool;
    if (n_states <= 200) {
        pool.reserve(n_states * (n_states - 1));
        for (std::size_t i = 0; i < n_states; ++i) {
            for (std::size_t j = 0; j < n_states; ++j) {
                if (i != j) pool.emplace_back(static_cast<int>(i), static_cast<int>(j));
            }
        }
    } else {
        pool.reserve(static_cast<std::size_t>(50) * quota);
        for (int k = 0; k < 50 * quota; ++k) {
            const int i = static_cast<int>(gen.index(n_states));
            int j = static_cast<int>(gen.index(n_states - 1));
            if (j >= i) ++j;
            pool.emplace_back(i, j);
        }
    }

    // Stratify the non-trivial pairs by (hop_bin, gap_bin).
    std::vector<std::vector<std::pair<int, int>>> cells(
        static_cast<std::size_t>(quota));
    std::vector<std::pair<int, int>> zero_pool;
    for (const auto& [i, j] : pool) {
        const double phi_p = states[static_cast<std::size_t>(i)].phi;
        const double phi_q = states[static_cast<std::size_t>(j)].phi;
        if (std::fabs(phi_q - phi_p) <= epsilon) continue;  // zero pool handled below
        const double hop =
            progress::hop_label(Progress(phi_p), Progress(phi_q)).value();
        const int hb = hop_bin_of(hop, cfg.n_hop_bins);
        const int gap = std::abs(states[static_cast<std::size_t>(j)].frame_index -
                                 states[static_cast<std::size_t>(i)].frame_index);
        const int gb = gap_bin_of(gap, max_gap, cfg.n_distance_bins);
        cells[static_cast<std::size_t>(hb * cfg.n_distance_bins + gb)].emplace_back(i, j);
    }
    // Near-static pairs, including self-pairs, feed the zero-hop channel.
    for (std::size_t i = 0; i < n_states; ++i) {
        for (std::size_t j = 0; j < n_states; ++j) {
            if (std::fabs(states[j].phi - states[i].phi) <= epsilon) {
                zero_pool.emplace_back(static_cast<int>(i), static_cast<int>(j));
            }
        }
    }

    GenerationDiagnostics local;
    std::vector<HopSample> out;
    out.reserve(static_cast<std::size_t>(quota) + 8);
    for (int hb = 0; hb < cfg.n_hop_bins; ++hb) {
        for (int gb = 0; gb < cfg.n_distance_bins; ++gb) {
            auto& bucket = cells[static_cast<std::size_t>(hb * cfg.n_distance_bins + gb)];
            if (bucket.empty()) {
                local.empty_cells.emplace_back(hb, gb);
                continue;
            }
            const auto [i, j] = bucket[gen.index(bucket.size())];
            const double hop = progress::hop_label(Progress(states[static_cast<std::size_t>(i)].phi),
                                                   Progress(states[static_cast<std::size_t>(j)].phi))
                                   .value();
            out.push_back(make_sample(traj, states, i, j, hop, false, cfg));
            ++local.non_trivial_emitted;
        }
    }

    // Zero-hop anchoring: a fraction alpha of the final set, labels exactly 0.
    if (cfg.zero_hop_fraction > 0.0 && local.non_trivial_emitted > 0) {
        const double a = cfg.zero_hop_fraction;
        local.zero_channel_target = static_cast<int>(
            std::lround(local.non_trivial_emitted * a / (1.0 - a)));
        gen.shuffle(zero_pool);
        const int n_zero =
            std::min<int>(local.zero_channel_target, static_cast<int>(zero_pool.size()));
        for (int k = 0; k < n_zero; ++k) {
            const auto [i, j] = zero_pool[static_cast<std::size_t>(k)];
            out.push_back(make_sample(traj, states, i, j, 0.0, true, cfg));
            ++local.zero_channel_emitted;
        }
    }

    if (diag) *diag = local;
    return out;
}

std::vector<HopSample> expand_views(const std::vector<HopSample>& samples,
                                    const std::vector<std::vector<std::string>>& view_subsets) {
    std::vector<HopSample> out;
    out.reserve(samples.size() * view_subsets.size());
    for (const auto& s : samples) {
        for (const auto& subset : view_subsets) {
            HopSample e = s;
            e.init_ref.clear();
            e.goal_ref.clear();
            e.before_ref.clear();
            e.after_ref.clear();
            for (const auto& view : subset) {
                const auto it = s.before_ref.find(view);
                if (it == s.before_ref.end()) {
                    throw ConfigError("expand_views: unknown view '" + view + "' for trajectory " +
                                      s.trajectory_id);
                }
                e.init_ref[view] = s.init_ref.at(view);
                e.goal_ref[view] = s.goal_ref.at(view);
                e.before_ref[view] = it->second;
                e.after_ref[view] = s.after_ref.at(view);
            }
            e.views_used = subset;
            out.push_back(std::move(e));
        }
    }
    return out;
}

BinOccupancy bin_occupancy_report(const std::vector<HopSample>& samples,
                                  const SamplingConfig& cfg) {
    BinOccupancy occ;
    occ.n_hop_bins = cfg.n_hop_bins;
    occ.n_distance_bins = cfg.n_distance_bins;
    occ.counts.assign(static_cast<std::size_t>(cfg.n_hop_bins),
                      std::vector<long>(static_cast<std::size_t>(cfg.n_distance_bins), 0));
    for (const auto& s : samples) {
        ++occ.total;
        if (s.zero_channel) {
            ++occ.zero_channel_count;
            continue;
        }
        occ.counts[static_cast<std::size_t>(s.hop_bin)][static_cast<std::size_t>(s.gap_bin)]++;
    }
    occ.zero_channel_fraction =
        occ.total > 0 ? static_cast<double>(occ.zero_channel_count) / occ.total : 0.0;
    return occ;
}

long BinOccupancy::max_cell() const {
    long m = 0;
    for (const auto& row : counts)
        for (long c : row) m = std::max(m, c);
    return m;
}

long BinOccupancy::min_cell() const {
    long m = counts.empty() || counts.front().empty() ? 0 : counts[0][0];
    for (const auto& row : counts)
        for (long c : row) m = std::min(m, c);
    return m;
}

nlohmann::json HopSample::to_json() const {
    return nlohmann::json{{"trajectory_id", trajectory_id},
                          {"task_text", task_text},
                          {"init_ref", init_ref},
                          {"goal_ref", goal_ref},
                          {"before_ref", before_ref},
                          {"after_ref", after_ref},
                          {"hop", hop},
                          {"hop_percent", hop_percent},
                          {"phi_before", phi_before},
                          {"phi_after", phi_after},
                          {"temporal_gap", temporal_gap},
                          {"hop_bin", hop_bin},
                          {"gap_bin", gap_bin},
                          {"zero_channel", zero_channel},
                          {"views_used", views_used}};
}

HopSample HopSample::from_json(const nlohmann::json& j) {
    HopSample s;
    try {
        s.trajectory_id = j.at("trajectory_id").get<std::string>();
        s.task_text = j.value("task_text", std::string());
        s.init_ref = j.at("init_ref").get<RefSet>();
        s.goal_ref = j.at("goal_ref").get<RefSet>();
        s.before_ref = j.at("before_ref").get<RefSet>();
        s.after_ref = j.at("after_ref").get<RefSet>();
        s.hop = j.at("hop").get<double>();
        s.hop_percent = j.at("hop_percent").get<int>();
        s.phi_before = j.at("phi_before").get<double>();
        s.phi_after = j.at("phi_after").get<double>();
        s.temporal_gap = j.at("temporal_gap").get<int>();
        s.hop_bin = j.at("hop_bin").get<int>();
        s.gap_bin = j.at("gap_bin").get<int>();
        s.zero_channel = j.value("zero_channel", false);
        s.views_used = j.at("views_used").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("bad hop-sample record: ") + e.what());
    }
    return s;
}

void write_hop_samples_jsonl(const std::string& path, const std::vector<HopSample>& samples) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write hop samples: " + path);
    for (const auto& s : samples) out << s.to_json().dump() << "\n";
}

std::vector<HopSample> read_hop_samples_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open hop samples: " + path);
    std::vector<HopSample> out;
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
        out.push_back(HopSample::from_json(j));
    }
    return out;
}

void write_occupancy_csv(const std::string& path, const BinOccupancy& occ) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write occupancy csv: " + path);
    out << "hop_bin,gap_bin,count\n";
    for (int h = 0; h < occ.n_hop_bins; ++h) {
        for (int g = 0; g < occ.n_distance_bins; ++g) {
            out << h << "," << g << ","
                << occ.counts[static_cast<std::size_t>(h)][static_cast<std::size_t>(g)] << "\n";
        }
    }
    out << "zero_channel,," << occ.zero_channel_count << "\n";
}

}  // namespace dopamine::labeling
