#pragma once

#include <array>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "aogtrack/aog.hpp"
#include "aogtrack/features.hpp"

namespace aog {

/// Smallest allowed quadratic deformation coefficient.
inline constexpr double kMinQuadratic = 0.01;

/// Parameters indexed by node id. Only terminals carry appearance weights,
/// only Deformation And-nodes carry deformation weights and only the children
/// of the root Or-node carry a bias.
struct ModelParams {
    std::vector<std::vector<float>> appearance;
    std::vector<std::array<double, 4>> deformation;
    std::vector<double> bias;

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Object AOG together with its parameters, feature setup and detection
/// threshold. Object boxes are detection windows scaled about their centre by
/// (box_ratio_x, box_ratio_y), which absorbs the grid's aspect quantisation.
struct Model {
    Aog aog;
    ModelParams params;
    FeatureConfig features;
    PartLayout layout;
    int channels = 0;
    double threshold = -std::numeric_limits<double>::infinity();
    double box_ratio_x = 1.0;
    double box_ratio_y = 1.0;

    /// Object template size in cells at the object level.
    int window_width() const { return layout.cells_per_unit * aog.spec().width; }
    int window_height() const { return layout.cells_per_unit * aog.spec().height; }

    Box window_to_box(const Box& window) const;
    Box box_to_window(const Box& box) const;

    /// Throws std::logic_error when parameter shapes do not match the graph.
    void validate() const;
};

bool has_deformation(const Aog& aog, NodeId id);
bool has_bias(const Aog& aog, NodeId id);

/// Zero appearance and bias, deformation set to `deformation`.
ModelParams make_params(const Aog& aog, const PartLayout& layout, int channels,
                        const std::array<double, 4>& deformation = {kMinQuadratic, 0.0, kMinQuadratic, 0.0});

/// Clamp quadratic deformation coefficients to at least kMinQuadratic.
void project_deformation(const Aog& aog, ModelParams& params);

/// Offsets of each parameter block inside the flat parameter vector. Blocks
/// follow node id order: appearance, then deformation, then bias.
struct ParamLayout {
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> appearance;
    std::vector<std::size_t> deformation;
    std::vector<std::size_t> bias;
    std::size_t size = 0;
};

ParamLayout param_layout(const Model& model);
std::vector<double> flatten(const Model& model, const ParamLayout& layout);
void unflatten(std::span<const double> theta, const ParamLayout& layout, Model& model);

/// Model over extract_subgraph(model.aog, kept); parameters carried over by
/// source node id.
Model restrict_model(const Model& model, const ChildSelection& kept);

/// Parameters for `target` taken from `source` wherever both graphs share a
/// source node id; other nodes keep the values already in `into`.
void transfer_params(const Model& source, const Aog& target, ModelParams& into);

/// Versioned model file: text header, AOG structure block, binary parameter
/// blob. Round trips are bit exact.
void save_model(const Model& model, std::ostream& os);
Model load_model(std::istream& is);
void save_model_file(const Model& model, const std::string& path);
Model load_model_file(const std::string& path);

}  // namespace aog
