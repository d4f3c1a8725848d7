#pragma once

#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "aogtrack/config.hpp"
#include "aogtrack/dataset.hpp"
#include "aogtrack/lbfgs.hpp"
#include "aogtrack/model.hpp"
#include "aogtrack/parser.hpp"

namespace aog {

// ---------------------------------------------------------------------------
// Geometry shared by learning and tracking

/// Grid dimensions for an object box: the shorter side gets `side` cells, the
/// longer one follows the aspect ratio (at most twice `side`).
GridSpec grid_for_box(const Box& box, int side, int min_part = 1, double overlap_ratio = 0.0);

/// 4 if min(w, h) >= cutoff pixels, else 3.
int grid_side_for_box(const Box& box, double cutoff);

/// Object-only model shaped for `box`: AOG with the whole-object template,
/// zero parameters, and box ratios mapping template windows onto `box`.
Model make_object_model(const GridSpec& grid, const Box& box, const FeatureConfig& features, int channels,
                        int cells_per_unit);

/// Layout with parts at the object resolution (offset 0) or one octave finer.
PartLayout part_layout(int cells_per_unit, bool twice_resolution, int interval);

/// Pyramid over `region` of `image` in which the model window matches
/// `window` (image pixels) at level `levels_below`; `levels_above` coarser
/// levels follow. Returns an empty pyramid when the region is too small.
FeaturePyramid window_pyramid(const Model& model, const cv::Mat& image, const cv::Rect& region, const Box& window,
                              int levels_below, int levels_above);

/// Square of side roi_scale * max(w, h) centred on the box, clipped.
Box compute_roi(const Box& box, double width, double height, double roi_scale);

// ---------------------------------------------------------------------------
// Latent SVM

struct LsvmExample {
    SparseFeature phi;
    int label = 1;   // +1 or -1
};

/// 1/2 ||theta||^2 + C / normalizer * sum hinge(label * <theta, phi>).
/// Writes the (sub)gradient into `grad` when it is non-empty.
double lsvm_objective(std::span<const double> theta, std::span<const LsvmExample> examples, double C,
                      double normalizer, std::span<double> grad = {});

/// LBFGS on the convexified objective, projecting quadratic deformation
/// weights of `model` to at least kMinQuadratic.
LbfgsResult minimize_lsvm(const Model& model, const ParamLayout& layout, std::vector<double> theta0,
                          std::span<const LsvmExample> examples, double C, double normalizer,
                          const LbfgsOptions& opts);

// ---------------------------------------------------------------------------
// Structure learning pieces

/// Misclassification rate at the midpoint of the two class means. Scores on
/// the threshold go to the larger class.
double error_rate(std::span<const double> positive_scores, std::span<const double> negative_scores);

/// Per-node appearance weights cropped from the object template (row-major
/// cells x channels over the whole grid). Parts one octave finer use a
/// bilinearly doubled template.
ModelParams init_terminal_params(std::span<const float> root_template, double bias, const Aog& aog,
                                 const PartLayout& layout, int channels, double deformation);

/// Breadth-first from the root, every Or keeps its best child plus all
/// children whose error is within epsilon of it.
ChildSelection select_initial_branches(const Aog& full, std::span<const double> merits, double epsilon);

/// Keep configurations chosen by at least `threshold` of the positives (the
/// most frequent one if none qualifies). Returns the per-Or union of their
/// choices.
ChildSelection majority_vote(const Aog& aog, std::span<const ParseTree> trees, double threshold);

// ---------------------------------------------------------------------------
// Full pipeline

struct LearnReport {
    bool accepted = false;
    bool twice_resolution = false;
    bool object_only = false;
    std::vector<double> svm_trace;                       // full-data objective per mining round
    std::vector<std::pair<double, double>> lsvm_trace;   // (before, after) per LSVM round
    std::vector<double> merits;                          // per node of the full AOG
    std::size_t full_nodes = 0;
    std::size_t initial_nodes = 0;
    std::size_t final_nodes = 0;
    std::string note;
};

struct LearnResult {
    Model model;
    LearnReport report;
    std::vector<LsvmExample> positives;   // final latent positives
    std::vector<LsvmExample> negatives;   // final hard negatives
    double normalizer = 1.0;
};

/// Object-only model trained by linear SVM with hard negative mining.
LearnResult train_root_model(const TrainingDataset& ds, std::span<const int> frames, const Box& reference,
                             const EngineConfig& cfg);

/// Root SVM, merit pruning, latent SVM, majority-vote pruning and
/// verification, retried with parts at twice the resolution and finally
/// falling back to the object-only model.
LearnResult learn_object_aog(const TrainingDataset& ds, std::span<const int> frames, const Box& reference,
                             const EngineConfig& cfg);

/// Parses `frame` and accepts iff the best detection scores at least the
/// model threshold and overlaps `box` by at least nms_iou.
bool verify_model(const Model& model, const cv::Mat& frame, const Box& box, const EngineConfig& cfg,
                  Detection* best = nullptr);

/// Cached latent examples for cheap per-frame parameter updates.
class OnlineLearner {
public:
    void reset(const LearnResult& learned);
    void add(LsvmExample example, bool keep_forever = false);
    /// Warm-started LBFGS over the cache; refreshes the model threshold.
    void update(Model& model, const EngineConfig& cfg);
    std::size_t size() const { return examples_.size(); }

private:
    std::vector<LsvmExample> examples_;
    std::vector<bool> pinned_;
    std::size_t negative_cap_ = 1000;
};

}  // namespace aog
