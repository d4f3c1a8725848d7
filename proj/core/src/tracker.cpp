#include "aogtrack/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace aog {

void TrackabilityStats::add(double x) {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / double(count_);
    m2_ += delta * (x - mean_);
}

double TrackabilityStats::stddev() const {
    return count_ < 2 ? 0.0 : std::sqrt(std::max(m2_ / double(count_), 0.0));
}

bool TrackabilityStats::intrackable(double x, double sigma) const {
    return count_ >= 2 && x < mean_ - sigma * stddev();
}

double trackability(const ScoreMap& map, double score) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double v : map.data)
        if (std::isfinite(v)) {
            sum += v;
            ++n;
        }
    return n == 0 ? 0.0 : score - sum / double(n);
}

double motion_cost(const Box& candidate, const std::optional<Box>& predicted, double min_iou) {
    if (!predicted) return 0.0;
    return iou(candidate, *predicted) >= min_iou ? 0.0 : std::numeric_limits<double>::infinity();
}

namespace {

cv::Rect pixel_rect(const Box& b, int width, int height) {
    const int x0 = std::max(0, static_cast<int>(std::floor(b.x)));
    const int y0 = std::max(0, static_cast<int>(std::floor(b.y)));
    const int x1 = std::min(width, static_cast<int>(std::ceil(b.right())));
    const int y1 = std::min(height, static_cast<int>(std::ceil(b.bottom())));
    return {x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
}

}  // namespace

AogTracker::AogTracker(EngineConfig cfg) : cfg_(std::move(cfg)) {}

void AogTracker::init(const cv::Mat& frame, const Box& box) {
    const cv::Mat f = frame.clone();
    dataset_ = init_dataset(f, box, cfg_.features.cell_size, 0);
    reference_ = box;
    const std::vector<int> frames{0};
    LearnResult learned = learn_object_aog(dataset_, frames, box, cfg_);
    model_ = std::move(learned.model);
    report_ = learned.report;
    online_.reset(learned);

    previous_frame_ = f;
    previous_box_ = box;
    index_ = 0;
    relearns_ = 0;
    stats_.reset();
    part_stats_.clear();
    intrackable_count_ = new_samples_ = 0;
    valid_frames_ = {0};
    flows_ = {std::nullopt};
    window_.clear();
    FrameResult first;
    first.frame = 0;
    first.box = box;
    first.valid = true;
    first.score = model_.threshold;
    results_ = {first};
    committed_ = 1;
}

std::vector<Candidate> AogTracker::parse_region(const cv::Mat& frame, const cv::Rect& region, const Box& previous,
                                                std::vector<SparseFeature>* features, double* peak) const {
    const int band = cfg_.tracker.level_band;
    const FeaturePyramid pyr = window_pyramid(model_, frame, region, model_.box_to_window(previous),
                                              band + model_.layout.part_level_offset, band);
    if (pyr.empty()) return {};
    ParseOptions opts;
    opts.threshold = model_.threshold;
    opts.nms_iou = cfg_.parser.nms_iou;
    opts.n_best = cfg_.parser.n_best;
    opts.radius = cfg_.parser.radius;
    opts.min_level = model_.layout.part_level_offset;
    ScoreMapPyramid maps;
    const std::vector<Detection> dets = parse(model_, pyr, opts, &maps);
    if (dets.empty() && peak) {
        // No placement reaches the threshold: rate the best one anyway.
        double best = kNegInf;
        for (int l = maps.min_object_level; l <= maps.max_object_level; ++l) {
            const ScoreMap& m = maps.map(model_.aog.root(), l);
            const auto it = std::max_element(m.data.begin(), m.data.end());
            if (it != m.data.end() && std::isfinite(*it) && *it > best) {
                best = *it;
                *peak = trackability(m, *it);
            }
        }
    }
    const PyramidGeometry geometry = pyr.geometry();
    const ParamLayout layout = param_layout(model_);

    std::vector<Candidate> out;
    for (const Detection& d : dets) {
        Candidate c;
        c.box = model_.window_to_box(d.window);
        c.score = d.score;
        const Placement& root = d.tree.nodes.front().placement;
        c.trackability = trackability(maps.map(model_.aog.root(), root.level), d.score);
        for (const ParseNode& n : d.tree.nodes) {
            if (model_.aog.node(n.node).kind != NodeKind::Terminal || model_.aog.is_object_level(n.node)) continue;
            const ScoreMap& m = maps.map(n.node, n.placement.level);
            if (!std::isfinite(m.value(n.placement.x, n.placement.y))) continue;
            c.part_trackability.emplace_back(n.node, trackability(m, m.value(n.placement.x, n.placement.y)));
        }
        const Configuration conf = collapse(d.tree, model_.aog, model_.layout, d.window, geometry);
        c.parts.assign(conf.boxes.begin() + 1, conf.boxes.end());
        if (features) features->push_back(extract_feature(model_, layout, pyr, d.tree));
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<Candidate> AogTracker::detect_with_features(const cv::Mat& frame, const Box& previous, bool* whole_frame,
                                                        std::vector<SparseFeature>* features, double* peak) const {
    if (whole_frame) *whole_frame = false;
    const Box roi = compute_roi(previous, frame.cols, frame.rows, cfg_.tracker.roi_scale);
    std::vector<Candidate> c = parse_region(frame, pixel_rect(roi, frame.cols, frame.rows), previous, features);
    if (!c.empty()) return c;
    if (whole_frame) *whole_frame = true;
    if (features) features->clear();
    return parse_region(frame, cv::Rect(0, 0, frame.cols, frame.rows), previous, features, peak);
}

std::vector<Candidate> AogTracker::detect(const cv::Mat& frame, const Box& previous, bool* whole_frame) const {
    return detect_with_features(frame, previous, whole_frame, nullptr);
}

std::optional<FlowTransform> AogTracker::composed_flow(int from, int to) const {
    FlowTransform t;
    for (int k = from + 1; k <= to; ++k) {
        if (k < 0 || k >= static_cast<int>(flows_.size()) || !flows_[static_cast<std::size_t>(k)]) return std::nullopt;
        t = t.then(*flows_[static_cast<std::size_t>(k)]);
    }
    return t;
}

int AogTracker::solve_window() {
    if (window_.empty()) return -1;
    const double gate = cfg_.tracker.motion_iou;
    DpTable table;
    for (const WindowFrame& w : window_) {
        std::vector<double> u;
        for (const Candidate& c : w.candidates) u.push_back(-c.score);
        table.unary.push_back(std::move(u));
    }

    // Anchor the oldest frame to the last committed valid result when it is
    // close enough for the flow chain to mean anything.
    const int first = window_.front().frame;
    for (int k = std::min(committed_, first) - 1; k >= 0 && k >= first - cfg_.tracker.dp_window - 1; --k) {
        const FrameResult& r = results_[static_cast<std::size_t>(k)];
        if (!r.valid) continue;
        const auto flow = composed_flow(k, first);
        const std::optional<Box> pred = flow ? std::optional<Box>(flow->apply(r.box)) : std::nullopt;
        for (std::size_t i = 0; i < window_.front().candidates.size(); ++i)
            table.unary.front()[i] += motion_cost(window_.front().candidates[i].box, pred, gate);
        break;
    }

    DpResult res;
    if (cfg_.tracker.temporal_dp) {
        auto cost = [&](int a, int i, int b, int j) {
            const WindowFrame& fa = window_[static_cast<std::size_t>(a)];
            const WindowFrame& fb = window_[static_cast<std::size_t>(b)];
            const auto flow = composed_flow(fa.frame, fb.frame);
            const std::optional<Box> pred =
                flow ? std::optional<Box>(flow->apply(fa.candidates[static_cast<std::size_t>(i)].box)) : std::nullopt;
            return motion_cost(fb.candidates[static_cast<std::size_t>(j)].box, pred, gate);
        };
        res = temporal_dp(table, cost);
    } else {
        res.choice.assign(window_.size(), -1);
        res.choice.back() = window_.back().candidates.empty() ? -1 : 0;
    }

    for (std::size_t k = 0; k < window_.size(); ++k) {
        const int c = res.choice[k];
        if (c < 0) continue;
        FrameResult& r = results_[static_cast<std::size_t>(window_[k].frame)];
        const Candidate& cand = window_[k].candidates[static_cast<std::size_t>(c)];
        r.box = cand.box;
        r.score = cand.score;
        r.trackability = cand.trackability;
        r.parts = cand.parts;
        r.part_trackability = cand.part_trackability;
        r.low_confidence = res.low_confidence;
    }
    return res.choice.back();
}

FrameResult AogTracker::track(const cv::Mat& frame) {
    if (previous_frame_.empty()) throw std::logic_error("track() called before init()");
    const int t = ++index_;
    const cv::Mat f = frame.clone();
    flows_.push_back(median_flow(previous_frame_, f, previous_box_, cfg_.flow));

    FrameResult result;
    result.frame = t;
    std::vector<SparseFeature> features;
    double peak = std::numeric_limits<double>::quiet_NaN();
    std::vector<Candidate> candidates = detect_with_features(f, previous_box_, &result.whole_frame, &features, &peak);
    result.valid = !candidates.empty();
    if (!result.valid && std::isfinite(peak)) {
        // Invalid frames are rated but do not enter the statistics.
        result.trackability = peak;
        result.intrackable = stats_.intrackable(peak, cfg_.tracker.sigma);
        if (result.intrackable) ++intrackable_count_;
    }
    results_.push_back(result);

    window_.push_back({t, candidates});
    while (static_cast<int>(window_.size()) > cfg_.tracker.dp_window + 1) {
        committed_ = window_.front().frame + 1;
        window_.pop_front();
    }
    const int chosen = solve_window();

    FrameResult& r = results_.back();
    if (r.valid && chosen >= 0) {
        // Parts flag partial occlusion and local changes the root score can absorb.
        const double sigma = cfg_.tracker.sigma;
        r.intrackable = stats_.intrackable(r.trackability, sigma);
        stats_.add(r.trackability);
        for (const auto& [node, value] : r.part_trackability) {
            TrackabilityStats& s = part_stats_[model_.aog.source_id(node)];
            if (s.intrackable(value, sigma)) r.intrackable = true;
            s.add(value);
        }
        if (r.intrackable) ++intrackable_count_;
        ++new_samples_;
        valid_frames_.push_back(t);
        previous_box_ = r.box;
        learn_online(t, f, candidates, chosen, features);
        if (cfg_.tracker.relearn && intrackable_count_ > cfg_.tracker.n_intrackable &&
            new_samples_ > cfg_.tracker.n_new_sample) {
            relearn(t);
            r.relearned = true;
        }
    }
    previous_frame_ = f;
    return r;
}

void AogTracker::learn_online(int frame, const cv::Mat& image, const std::vector<Candidate>& candidates, int chosen,
                              std::vector<SparseFeature>& features) {
    const Candidate& best = candidates[static_cast<std::size_t>(chosen)];
    const Box positive = clip(best.box, image.cols, image.rows);
    std::vector<Box> others;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (static_cast<int>(i) == chosen) continue;
        const Box b = clip(candidates[i].box, image.cols, image.rows);
        if (b.valid()) others.push_back(b);
    }
    if (positive.valid()) update_dataset(dataset_, frame, image, positive, others, cfg_.parser.nms_iou);
    const int cap = cfg_.learner.relearn_cap;
    if (static_cast<int>(dataset_.frames.size()) > cap + 1) {
        const std::vector<int> keep =
            select_training_frames(dataset_.positive_frames(), cap, cfg_.learner.relearn_first);
        dataset_.retain(keep);
    }

    if (!cfg_.tracker.online_update || features.size() != candidates.size()) return;
    online_.add({std::move(features[static_cast<std::size_t>(chosen)]), 1});
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (static_cast<int>(i) != chosen && iou(candidates[i].box, best.box) < cfg_.learner.background_iou)
            online_.add({std::move(features[i]), -1});
    online_.update(model_, cfg_);
}

void AogTracker::relearn(int frame) {
    (void)frame;
    ++relearns_;
    const std::vector<int> frames =
        select_training_frames(dataset_.positive_frames(), cfg_.learner.relearn_cap, cfg_.learner.relearn_first);
    dataset_.retain(frames);
    LearnResult learned = learn_object_aog(dataset_, frames, reference_, cfg_);
    if (learned.report.accepted) {
        model_ = std::move(learned.model);
        online_.reset(learned);
    }
    report_ = learned.report;
    // Trackability statistics span the whole sequence; only the counters restart.
    intrackable_count_ = 0;
    new_samples_ = 0;
}

std::vector<FrameResult> AogTracker::finish() {
    solve_window();
    committed_ = static_cast<int>(results_.size());
    window_.clear();
    return results_;
}

}  // namespace aog
