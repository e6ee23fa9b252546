#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dopamine/progress.hpp"
#include "dopamine/trajectory.hpp"

// Turns keyframed trajectories into balanced hop-labeled training samples:
// adaptive within-segment sampling, hop x temporal-gap stratification,
// zero-hop anchoring, and multi-view expansion.
namespace dopamine::labeling {

struct SamplingConfig {
    int chunk_size = 5;               // C in the per-segment point count
    int n_hop_bins = 25;              // uniform bins over [-1, 1]
    int n_distance_bins = 4;          // temporal-gap bins within each hop bin
    double zero_hop_fraction = 0.05;  // alpha_zero: share of explicitly zero samples
    double zero_hop_epsilon = 0.0;    // 0 picks the default 0.5/M at generation time
    std::uint64_t rng_seed = 0;

    void validate() const;
};

// One sampled state: a frame index and its ground-truth progress i/M.
struct StateSample {
    int frame_index = 0;
    double phi = 0.0;
};

// Per segment [K_j, K_{j+1}] inserts m = floor((1/N) * floor(L/C)) uniformly
// spaced interior frames, keeps all keyframes, and assigns progress i/M over
// the M+1 resulting states. First state has phi 0, last has phi 1.
std::vector<StateSample> sample_states(const Trajectory& traj, const SamplingConfig& cfg);

using RefSet = std::map<std::string, std::string>;  // view -> frame ref

// One training tuple: task text, init/goal anchors, a BEFORE/AFTER pair, and
// the hop label. hop is exact; hop_percent is its integer-percent
// quantization as written to the dataset.
struct HopSample {
    std::string trajectory_id;
    std::string task_text;
    RefSet init_ref;
    RefSet goal_ref;
    RefSet before_ref;
    RefSet after_ref;
    double hop = 0.0;
    int hop_percent = 0;
    double phi_before = 0.0;
    double phi_after = 0.0;
    int temporal_gap = 0;  // |after frame - before frame|
    int hop_bin = 0;
    int gap_bin = 0;
    bool zero_channel = false;
    std::vector<std::string> views_used;

    nlohmann::json to_json() const;
    static HopSample from_json(const nlohmann::json& j);
};

// Fill diagnostics: which (hop_bin, gap_bin) cells the trajectory could not
// populate, plus zero-channel accounting. Under-full cells are reported,
// never padded with duplicates.
struct GenerationDiagnostics {
    std::vector<std::pair<int, int>> empty_cells;
    int non_trivial_emitted = 0;
    int zero_channel_emitted = 0;
    int zero_channel_target = 0;
};

// Stratified sample generation. Candidate pairs are the exhaustive ordered
// pairs when the trajectory has at most 200 sampled states, otherwise a
// seeded random pool of 50x the cell quota. Each (hop_bin, gap_bin) cell
// receives at most one sample; a zero-hop channel of fraction alpha is added
// on top with labels pinned to exactly 0. Deterministic under rng_seed.
std::vector<HopSample> generate_hop_samples(const Trajectory& traj, const SamplingConfig& cfg,
                                            GenerationDiagnostics* diag = nullptr);

// Emits one sample per (sample, view subset), restricting the per-view refs
// to the subset. Labels are unchanged. Unknown view names are an error.
std::vector<HopSample> expand_views(const std::vector<HopSample>& samples,
                                    const std::vector<std::vector<std::string>>& view_subsets);

struct BinOccupancy {
    int n_hop_bins = 0;
    int n_distance_bins = 0;
    std::vector<std::vector<long>> counts;  // [hop_bin][gap_bin], zero channel excluded
    long zero_channel_count = 0;
    long total = 0;
    double zero_channel_fraction = 0.0;

    long max_cell() const;
    long min_cell() const;
};

BinOccupancy bin_occupancy_report(const std::vector<HopSample>& samples,
                                  const SamplingConfig& cfg);

// Uniform hop bin over [-1,1]; hop=1 lands in the last bin.
int hop_bin_of(double hop, int n_hop_bins);
// Uniform gap bin over [1, max_gap]; gap
// values above max_gap clamp into the last bin.
int gap_bin_of(int gap, int max_gap, int n_distance_bins);

// Dataset I/O: line-delimited JSON (one sample per line, UTF-8) and the
// occupancy histogram as CSV (hop_bin, gap_bin, count).
void write_hop_samples_jsonl(const std::string& path, const std::vector<HopSample>& samples);
std::vector<HopSample> read_hop_samples_jsonl(const std::string& path);
void write_occupancy_csv(const std::string& path, const BinOccupancy& occ);

}  // namespace dopamine::labeling
