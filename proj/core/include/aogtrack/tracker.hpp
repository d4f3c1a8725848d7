#pragma once

#include <deque>
#include <map>
#include <optional>
#include <vector>

#include <opencv2/core.hpp>

#include "aogtrack/config.hpp"
#include "aogtrack/dataset.hpp"
#include "aogtrack/learner.hpp"
#include "aogtrack/median_flow.hpp"
#include "aogtrack/parser.hpp"
#include "aogtrack/temporal_dp.hpp"

namespace aog {

/// Running mean and variance (Welford).
class TrackabilityStats {
public:
    void add(double x);
    void reset() { *this = {}; }
    std::size_t count() const { return count_; }
    double mean() const { return mean_; }
    /// Population standard deviation; 0 with fewer than two samples.
    double stddev() const;
    /// True iff at least two samples exist and x < mean - sigma * std.
    bool intrackable(double x, double sigma) const;

private:
    std::size_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// Placement score minus the mean of the finite values of `map`.
double trackability(const ScoreMap& map, double score);

/// 0 when the gate accepts `candidate` against `predicted` (IoU >= min_iou) or
/// when no prediction is available, +inf otherwise.
double motion_cost(const Box& candidate, const std::optional<Box>& predicted, double min_iou);

struct Candidate {
    Box box;                    // object box in the frame
    double score = 0.0;
    double trackability = 0.0;  // root score minus the root map mean at its level
    std::vector<Box> parts;     // part configuration of the parse tree
    std::vector<std::pair<NodeId, double>> part_trackability;  // per part terminal in the tree
};

struct FrameResult {
    int frame = 0;
    Box box = Box::invalid();
    double score = 0.0;
    bool valid = false;
    bool whole_frame = false;   // the ROI gave nothing and the whole frame was parsed
    double trackability = 0.0;
    bool intrackable = false;
    bool relearned = false;     // structure re-learned after this frame
    bool low_confidence = false;
    std::vector<Box> parts;
    std::vector<std::pair<NodeId, double>> part_trackability;
};

/// Single-object tracker. Frame 0 is the initialisation frame; track() must
/// then be fed consecutive frames. Results of the last dp_window frames may
/// still change until they leave the temporal window.
class AogTracker {
public:
    explicit AogTracker(EngineConfig cfg = {});

    /// Learns the initial object AOG. Throws std::invalid_argument if the box
    /// does not lie inside the frame.
    void init(const cv::Mat& frame, const Box& box);

    /// Processes the next frame and returns its current estimate.
    FrameResult track(const cv::Mat& frame);

    /// Committed results for every frame so far (frame 0 included), with the
    /// temporal window resolved one final time.
    std::vector<FrameResult> finish();

    /// Candidates in the ROI, then in the whole frame if the ROI gives none.
    std::vector<Candidate> detect(const cv::Mat& frame, const Box& previous, bool* whole_frame) const;

    const Model& model() const { return model_; }
    const LearnReport& last_report() const { return report_; }
    int relearn_count() const { return relearns_; }
    const EngineConfig& config() const { return cfg_; }
    const TrackabilityStats& stats() const { return stats_; }

private:
    struct WindowFrame {
        int frame = 0;
        std::vector<Candidate> candidates;
    };

    std::vector<Candidate> parse_region(const cv::Mat& frame, const cv::Rect& region, const Box& previous,
                                        std::vector<SparseFeature>* features, double* peak = nullptr) const;
    std::vector<Candidate> detect_with_features(const cv::Mat& frame, const Box& previous, bool* whole_frame,
                                                std::vector<SparseFeature>* features, double* peak = nullptr) const;
    std::optional<FlowTransform> composed_flow(int from, int to) const;
    /// Re-solves the temporal window and rewrites the provisional results of
    /// its frames. Returns the choice for the newest frame.
    int solve_window();
    void learn_online(int frame, const cv::Mat& image, const std::vector<Candidate>& candidates, int chosen,
                      std::vector<SparseFeature>& features);
    void relearn(int frame);

    EngineConfig cfg_;
    Model model_;
    LearnReport report_;
    TrainingDataset dataset_;
    OnlineLearner online_;
    Box reference_;
    cv::Mat previous_frame_;
    Box previous_box_;              // last valid estimate
    int index_ = 0;
    int relearns_ = 0;
    TrackabilityStats stats_;
    std::map<NodeId, TrackabilityStats> part_stats_;   // by full-AOG node id
    int intrackable_count_ = 0;
    int new_samples_ = 0;
    std::vector<int> valid_frames_;
    std::vector<std::optional<FlowTransform>> flows_;   // flows_[t]: frame t-1 -> t
    std::deque<WindowFrame> window_;
    std::vector<FrameResult> results_;                  // provisional, then committed
    int committed_ = 0;                                 // frames [0, committed_) are final
};

}  // namespace aog
