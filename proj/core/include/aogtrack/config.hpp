#pragma once

#include <cstdint>
#include <string>

#include "aogtrack/features.hpp"
#include "aogtrack/median_flow.hpp"

namespace aog {

struct ParserConfig {
    int radius = 3;
    double nms_iou = 0.7;
    int n_best = 10;
};

struct LearnerConfig {
    double C = 100.0;
    bool normalize_loss = true;     // divide C by the training set size
    int grid_side = 0;              // 0 picks 3 or 4 from the initial box
    double grid_side_cutoff = 80.0; // min box side (pixels) for a side of 4
    int min_part = 1;
    double overlap_ratio = 0.0;
    int cells_per_unit = 2;
    double epsilon = 0.05;          // merit tolerance when pruning Or-branches
    double vote_threshold = 0.10;
    double threshold_cap = 0.0;     // the detection threshold never exceeds this score
    double relabel_iou = 0.7;
    double background_iou = 0.5;    // pool windows overlapping a positive less than this are negatives
    double hard_margin = -1.0;
    int mining_rounds = 5;
    int lsvm_rounds = 2;
    int lbfgs_iterations = 1000;
    double lbfgs_tolerance = 1e-4;
    double lbfgs_progress = 1e-6;   // relative objective drop that ends LBFGS early
    int update_iterations = 20;     // per-frame incremental parameter update
    int relearn_cap = 100;
    int relearn_first = 10;
    int merit_pool = 5000;
    int hard_negative_cap = 1000;
    int negatives_per_frame = 20;
    double initial_deformation = 0.05;
    int level_margin = 1;           // pyramid levels around a positive's level
};

struct TrackerConfig {
    double roi_scale = 3.0;
    int dp_window = 5;
    int n_intrackable = 5;
    int n_new_sample = 10;
    double motion_iou = 0.3;
    double sigma = 3.0;
    int level_band = 3;             // levels searched either side of the current scale
    bool temporal_dp = true;
    bool relearn = true;
    bool online_update = true;
};

/// Every tunable constant of the engine. Defaults follow the published setup.
struct EngineConfig {
    FeatureConfig features;
    ParserConfig parser;
    LearnerConfig learner;
    TrackerConfig tracker;
    MedianFlowOptions flow;
};

std::string config_to_json(const EngineConfig& cfg);
/// Keys absent from the JSON keep their current values; unknown keys throw
/// std::invalid_argument.
void apply_config_json(EngineConfig& cfg, const std::string& json);
EngineConfig load_config_file(const std::string& path);
const char* engine_version();

/// FNV-1a hash of the canonical JSON serialisation.
std::uint64_t config_hash(const EngineConfig& cfg);

}  // namespace aog
