#include "aogtrack/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace aog {

using nlohmann::json;

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(FeatureConfig, cell_size, interval, hog, lbp, color)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ParserConfig, radius, nms_iou, n_best)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(LearnerConfig, C, normalize_loss, grid_side, grid_side_cutoff, min_part, overlap_ratio,
                                   cells_per_unit, epsilon, vote_threshold, threshold_cap, relabel_iou, background_iou,
                                   hard_margin, mining_rounds, lsvm_rounds, lbfgs_iterations, lbfgs_tolerance, lbfgs_progress,
                                   update_iterations, relearn_cap, relearn_first, merit_pool, hard_negative_cap,
                                   negatives_per_frame, initial_deformation, level_margin)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(TrackerConfig, roi_scale, dp_window, n_intrackable, n_new_sample, motion_iou,
                                   sigma, level_band, temporal_dp, relearn, online_update)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(MedianFlowOptions, grid, window, pyramid_levels, max_fb_error, min_survivors)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(EngineConfig, features, parser, learner, tracker, flow)

namespace {

void check_keys(const json& patch, const json& reference, const std::string& path) {
    if (!patch.is_object()) throw std::invalid_argument("config: '" + path + "' must be an object");
    for (const auto& [key, value] : patch.items()) {
        const std::string where = path.empty() ? key : path + "." + key;
        if (!reference.contains(key)) throw std::invalid_argument("config: unknown key '" + where + "'");
        if (reference[key].is_object()) check_keys(value, reference[key], where);
    }
}

}  // namespace

std::string config_to_json(const EngineConfig& cfg) {
    return json(cfg).dump(2);
}

void apply_config_json(EngineConfig& cfg, const std::string& text) {
    json patch;
    try {
        patch = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    json current = cfg;
    check_keys(patch, current, "");
    current.merge_patch(patch);
    try {
        cfg = current.get<EngineConfig>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
}

EngineConfig load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    EngineConfig cfg;
    apply_config_json(cfg, ss.str());
    return cfg;
}

std::uint64_t config_hash(const EngineConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : json(cfg).dump()) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

const char* engine_version() { return AOGTRACK_VERSION; }

}  // namespace aog
