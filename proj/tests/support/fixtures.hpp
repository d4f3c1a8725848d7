#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "aogtrack/geometry.hpp"
#include "aogtrack/learner.hpp"
#include "oracles.hpp"

namespace fixtures {

/// Smooth colour noise with fine grain, deterministic in `seed`.
cv::Mat noise_image(int w, int h, std::uint64_t seed);

/// Copy of `image` shifted by whole pixels; uncovered pixels repeat the border.
cv::Mat translate(const cv::Mat& image, int dx, int dy);

/// Random latent examples for the parameter layout of `model`: random
/// pyramids, random root placements and the best parse tree there.
std::vector<aog::LsvmExample> random_examples(oracle::Rng& rng, const aog::Model& model, int count);

/// Random parsing problem: full AOG on a grid of at most 2 x 2 units with
/// random parameters, a random 3-level pyramid and a random search radius.
struct ParseInstance {
    aog::Model model;
    aog::FeaturePyramid pyramid;
    int radius = 1;
};
ParseInstance random_parse_instance(oracle::Rng& rng);

/// Random temporal table: about a fifth of the frames are invalid and a
/// random share of the transitions is infinite.
struct DpInstance {
    aog::DpTable table;
    std::vector<std::vector<std::vector<double>>> edges;   // [frame][i][j] into the next valid frame
    std::vector<int> next;                                 // next valid frame or -1

    /// The returned function refers to this instance.
    aog::TransitionCost cost() const;
};
DpInstance random_dp_instance(oracle::Rng& rng, int frames, int max_candidates);

/// `model` restricted to its whole-object branch.
aog::Model object_only(const aog::Model& model);

/// Fresh empty directory under the system temp path.
std::filesystem::path temp_dir(const std::string& name);

}  // namespace fixtures
