#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "aogtrack/features.hpp"
#include "aogtrack/model.hpp"

namespace aog {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Score per valid placement; -inf marks placements with no valid parse.
struct ScoreMap {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    ScoreMap() = default;
    ScoreMap(int w, int h, double fill = kNegInf)
        : width(std::max(w, 0)), height(std::max(h, 0)), data(std::size_t(width) * height, fill) {}

    bool empty() const { return width == 0 || height == 0; }
    bool inside(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
    double& at(int x, int y) { return data[std::size_t(y) * width + x]; }
    double at(int x, int y) const { return data[std::size_t(y) * width + x]; }
    /// -inf outside the map.
    double value(int x, int y) const { return inside(x, y) ? at(x, y) : kNegInf; }
};

/// Valid cross-correlation of a w_cells x h_cells template with a level.
ScoreMap score_terminal(const FeatureMap& level, std::span<const float> weights, int w_cells, int h_cells);

struct TerminalTemplate {
    std::span<const float> weights;
    int w_cells = 0;
    int h_cells = 0;
};

/// score_terminal for several templates at once (one matrix product).
std::vector<ScoreMap> score_terminals(const FeatureMap& level, std::span<const TerminalTemplate> templates);

/// Pointwise max; `argmax` (optional) receives the index of the first maximal
/// child. All maps must share dimensions.
ScoreMap score_or(std::span<const ScoreMap* const> children, std::vector<std::int32_t>* argmax = nullptr);

/// Result of the bounded deformation max.
struct DeformedMap {
    ScoreMap map;
    std::vector<std::int8_t> dx;
    std::vector<std::int8_t> dy;
};

/// max over |dx|,|dy| <= radius of child(x+dx, y+dy) - <theta, [dx^2, dx, dy^2, dy]>,
/// computed as two separable passes.
DeformedMap local_max(const ScoreMap& child, const std::array<double, 4>& theta, int radius);

/// Sum of child maps, each read at (x + ox, y + oy). The output has the given
/// dimensions; any -inf term makes the sum -inf.
struct ShiftedMap {
    const ScoreMap* map;
    int ox;
    int oy;
};
ScoreMap score_decomposition(std::span<const ShiftedMap> children, int width, int height);

/// Score maps of every node on every pyramid level it is evaluated on.
struct ScoreMapPyramid {
    std::vector<std::vector<ScoreMap>> maps;                   // [node][level]
    std::vector<std::vector<std::vector<std::int8_t>>> dx;     // Deformation nodes only
    std::vector<std::vector<std::vector<std::int8_t>>> dy;
    int min_object_level = 0;
    int max_object_level = -1;

    const ScoreMap& map(NodeId id, int level) const {
        return maps[static_cast<std::size_t>(id)][static_cast<std::size_t>(level)];
    }
};

struct ParseOptions {
    double threshold = kNegInf;   // root candidates need score >= threshold
    double nms_iou = 0.7;
    int n_best = 10;              // <= 0 keeps every surviving candidate
    int radius = 3;               // deformation search radius in cells
    int min_level = 0;            // object-level range; -1 for the last level
    int max_level = -1;
};

struct Detection {
    Box window;       // detection window in image coordinates
    double score = 0.0;
    ParseTree tree;
};

/// Bottom-up pass over the pyramid for object levels in the option range.
ScoreMapPyramid compute_score_maps(const Model& model, const FeaturePyramid& pyramid, const ParseOptions& opts);

/// Top-down retrieval of the best parse tree with the object at `root`.
ParseTree retrieve_parse_tree(const Model& model, const ScoreMapPyramid& maps, const Placement& root);

/// Image-space window of an object placement.
Box window_box(const Model& model, const PyramidGeometry& geometry, const Placement& root);

/// Greedy score-descending suppression; ties broken by window coordinates.
std::vector<Detection> nms(std::vector<Detection> detections, double iou_threshold);

/// Full spatial DP: candidates with root score >= threshold, NMS, N-best, and
/// parse trees for the survivors. `keep_maps` receives the score maps if set.
std::vector<Detection> parse(const Model& model, const FeaturePyramid& pyramid, const ParseOptions& opts,
                             ScoreMapPyramid* keep_maps = nullptr);

/// bias + sum over terminals of (appearance score - deformation penalty),
/// evaluated directly from the pyramid.
double reconstruct_score(const Model& model, const FeaturePyramid& pyramid, const ParseTree& tree);

/// Sparse joint feature vector of a parse tree: score = <theta, phi> for the
/// flat parameter vector of param_layout.
struct SparseFeature {
    struct Block {
        std::size_t offset = 0;
        std::vector<float> values;
    };
    std::vector<Block> blocks;                               // appearance crops
    std::vector<std::pair<std::size_t, double>> scalars;     // deformation and bias entries

    double dot(std::span<const double> theta) const;
    /// out += scale * phi
    void axpy(double scale, std::span<double> out) const;
    double squared_norm() const;
};

SparseFeature extract_feature(const Model& model, const ParamLayout& layout, const FeaturePyramid& pyramid,
                              const ParseTree& tree);

}  // namespace aog
