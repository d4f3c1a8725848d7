#include "aogtrack/learner.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <tuple>

#include <opencv2/imgproc.hpp>

#include "aogtrack/linear_svm.hpp"

namespace aog {

// ---------------------------------------------------------------------------
// Geometry

GridSpec grid_for_box(const Box& box, int side, int min_part, double overlap_ratio) {
    if (!box.valid()) throw std::invalid_argument("grid_for_box: invalid box");
    if (side < 1) throw std::invalid_argument("grid side must be positive");
    const double aspect = std::max(box.w, box.h) / std::min(box.w, box.h);
    const int longer = std::clamp(static_cast<int>(std::lround(side * aspect)), side, 2 * side);
    GridSpec g;
    g.width = box.w >= box.h ? longer : side;
    g.height = box.w >= box.h ? side : longer;
    g.min_part_width = g.min_part_height = min_part;
    g.overlap_ratio = overlap_ratio;
    return g;
}

int grid_side_for_box(const Box& box, double cutoff) {
    return std::min(box.w, box.h) >= cutoff ? 4 : 3;
}

Model make_object_model(const GridSpec& grid, const Box& box, const FeatureConfig& features, int channels,
                        int cells_per_unit) {
    const Aog full = build_full_aog(grid);
    NodeId wrapper = kNoNode;
    for (const Edge& e : full.node(full.root()).children)
        if (full.is_object_level(e.child)) wrapper = e.child;
    Model m;
    m.aog = extract_subgraph(full, {{full.root(), {wrapper}}});
    m.features = features;
    m.layout = {cells_per_unit, 0, 1};
    m.channels = channels;
    m.params = make_params(m.aog, m.layout, channels);
    const double wc = m.window_width();
    const double hc = m.window_height();
    const double p = std::sqrt(box.w * box.h / (wc * hc));
    m.box_ratio_x = box.w / (wc * p);
    m.box_ratio_y = box.h / (hc * p);
    return m;
}

PartLayout part_layout(int cells_per_unit, bool twice_resolution, int interval) {
    return {cells_per_unit, twice_resolution ? interval : 0, twice_resolution ? 2 : 1};
}

FeaturePyramid window_pyramid(const Model& model, const cv::Mat& image, const cv::Rect& region, const Box& window,
                              int levels_below, int levels_above) {
    const cv::Rect r = region & cv::Rect(0, 0, image.cols, image.rows);
    if (r.width <= 0 || r.height <= 0 || !window.valid()) return {};
    const double ps = std::sqrt(window.w * window.h / (double(model.window_width()) * model.window_height()));
    PyramidOptions opts;
    opts.base_scale = model.features.cell_size * std::pow(2.0, double(levels_below) / model.features.interval) / ps;
    opts.origin_x = r.x;
    opts.origin_y = r.y;
    opts.max_level = levels_below + levels_above;
    // Guard against absurd upsampling of tiny windows.
    if (opts.base_scale * std::max(r.width, r.height) > 8192.0) return {};
    try {
        return build_pyramid(image(r), model.features, opts);
    } catch (const std::invalid_argument&) {
        return {};
    }
}

Box compute_roi(const Box& box, double width, double height, double roi_scale) {
    const double side = roi_scale * std::max(box.w, box.h);
    return clip(Box::from_center(box.center_x(), box.center_y(), side, side), width, height);
}

// ---------------------------------------------------------------------------
// Latent SVM

double lsvm_objective(std::span<const double> theta, std::span<const LsvmExample> examples, double C,
                      double normalizer, std::span<double> grad) {
    double reg = 0.0;
    for (double v : theta) reg += v * v;
    if (!grad.empty()) std::copy(theta.begin(), theta.end(), grad.begin());
    const double w = C / normalizer;
    double loss = 0.0;
    for (const auto& ex : examples) {
        const double margin = ex.label * ex.phi.dot(theta);
        if (margin < 1.0) {
            loss += 1.0 - margin;
            if (!grad.empty()) ex.phi.axpy(-w * ex.label, grad);
        }
    }
    return 0.5 * reg + w * loss;
}

LbfgsResult minimize_lsvm(const Model& model, const ParamLayout& layout, std::vector<double> theta0,
                          std::span<const LsvmExample> examples, double C, double normalizer,
                          const LbfgsOptions& opts) {
    std::vector<std::size_t> quadratic;
    for (std::size_t i = 0; i < layout.deformation.size(); ++i) {
        if (layout.deformation[i] == ParamLayout::npos) continue;
        quadratic.push_back(layout.deformation[i]);
        quadratic.push_back(layout.deformation[i] + 2);
    }
    (void)model;
    auto objective = [&](std::span<const double> x, std::span<double> g) {
        return lsvm_objective(x, examples, C, normalizer, g);
    };
    auto project = [&](std::span<double> x) {
        for (std::size_t k : quadratic) x[k] = std::max(x[k], kMinQuadratic);
    };
    return lbfgs_minimize(objective, std::move(theta0), opts, project);
}

// ---------------------------------------------------------------------------
// Structure learning pieces

double error_rate(std::span<const double> pos, std::span<const double> neg) {
    const std::size_t total = pos.size() + neg.size();
    if (total == 0) return 0.0;
    if (pos.empty() || neg.empty()) return 0.0;
    const double mp = std::accumulate(pos.begin(), pos.end(), 0.0) / pos.size();
    const double mn = std::accumulate(neg.begin(), neg.end(), 0.0) / neg.size();
    const double thr = 0.5 * (mp + mn);
    const bool ties_positive = pos.size() >= neg.size();
    std::size_t wrong = 0;
    for (double s : pos)
        if (s < thr || (s == thr && !ties_positive) || std::isnan(s)) ++wrong;
    for (double s : neg)
        if (s > thr || (s == thr && ties_positive) || std::isnan(s)) ++wrong;
    return double(wrong) / double(total);
}

ModelParams init_terminal_params(std::span<const float> root_template, double bias, const Aog& aog,
                                 const PartLayout& layout, int channels, double deformation) {
    const int k = layout.cells_per_unit;
    const int wc = k * aog.spec().width;
    const int hc = k * aog.spec().height;
    if (root_template.size() != std::size_t(wc) * hc * channels)
        throw std::invalid_argument("root template does not match the grid");
    ModelParams p = make_params(aog, layout, channels, {deformation, 0.0, deformation, 0.0});

    // Template at part resolution.
    const int f = layout.part_resolution;
    std::vector<float> part_template(root_template.begin(), root_template.end());
    if (f != 1) {
        cv::Mat src(hc, wc, CV_32FC1), dst;
        part_template.assign(std::size_t(wc) * f * hc * f * channels, 0.0f);
        for (int c = 0; c < channels; ++c) {
            for (int y = 0; y < hc; ++y)
                for (int x = 0; x < wc; ++x) src.at<float>(y, x) = root_template[(std::size_t(y) * wc + x) * channels + c];
            cv::resize(src, dst, cv::Size(wc * f, hc * f), 0, 0, cv::INTER_LINEAR);
            for (int y = 0; y < hc * f; ++y)
                for (int x = 0; x < wc * f; ++x)
                    part_template[(std::size_t(y) * wc * f + x) * channels + c] = dst.at<float>(y, x);
        }
    }

    for (const AogNode& n : aog.nodes()) {
        const auto i = static_cast<std::size_t>(n.id);
        if (has_bias(aog, n.id)) p.bias[i] = bias;
        if (n.kind != NodeKind::Terminal) continue;
        const CellRect c = node_cells(aog, layout, n.id);
        const bool object = aog.is_object_level(n.id);
        const float* src = object ? root_template.data() : part_template.data();
        const int sw = object ? wc : wc * f;
        auto& out = p.appearance[i];
        for (int y = 0; y < c.h; ++y)
            for (int x = 0; x < c.w; ++x)
                std::copy_n(&src[(std::size_t(c.y + y) * sw + c.x + x) * channels], channels,
                            &out[(std::size_t(y) * c.w + x) * channels]);
    }
    return p;
}

ChildSelection select_initial_branches(const Aog& full, std::span<const double> merits, double epsilon) {
    if (merits.size() != full.size()) throw std::invalid_argument("merits must cover every node");
    ChildSelection sel;
    std::vector<bool> seen(full.size(), false);
    std::deque<NodeId> queue{full.root()};
    seen[0] = true;
    while (!queue.empty()) {
        const NodeId id = queue.front();
        queue.pop_front();
        const AogNode& n = full.node(id);
        std::vector<NodeId> next;
        if (n.kind == NodeKind::Or) {
            double best = std::numeric_limits<double>::infinity();
            for (const Edge& e : n.children) best = std::min(best, merits[static_cast<std::size_t>(e.child)]);
            auto& kept = sel[id];
            for (const Edge& e : n.children)
                if (merits[static_cast<std::size_t>(e.child)] <= best + epsilon) kept.push_back(e.child);
            next = kept;
        } else {
            for (const Edge& e : n.children) next.push_back(e.child);
        }
        for (NodeId c : next) {
            if (seen[static_cast<std::size_t>(c)]) continue;
            seen[static_cast<std::size_t>(c)] = true;
            queue.push_back(c);
        }
    }
    return sel;
}

ChildSelection majority_vote(const Aog& aog, std::span<const ParseTree> trees, double threshold) {
    if (trees.empty()) return {};
    std::map<std::vector<NodeId>, std::vector<std::size_t>> configs;
    for (std::size_t t = 0; t < trees.size(); ++t) {
        std::vector<NodeId> key;
        for (const ParseNode& pn : trees[t].nodes) key.push_back(pn.node);
        std::sort(key.begin(), key.end());
        key.erase(std::unique(key.begin(), key.end()), key.end());
        configs[key].push_back(t);
    }
    std::vector<std::size_t> keep;
    std::size_t best_count = 0;
    std::size_t best_tree = 0;
    for (const auto& [key, members] : configs) {
        if (double(members.size()) >= threshold * double(trees.size())) keep.insert(keep.end(), members.begin(), members.end());
        if (members.size() > best_count) {
            best_count = members.size();
            best_tree = members.front();
        }
    }
    if (keep.empty()) keep.push_back(best_tree);

    std::map<NodeId, std::set<NodeId>> chosen;
    for (std::size_t t : keep)
        for (const ParseNode& pn : trees[t].nodes)
            if (aog.node(pn.node).kind == NodeKind::Or) chosen[pn.node].insert(pn.chosen);
    ChildSelection sel;
    for (const auto& [or_id, kids] : chosen) sel[or_id] = {kids.begin(), kids.end()};
    // Or-nodes never reached by a kept tree are unreachable after extraction;
    // give them a harmless selection so extraction stays well defined.
    return sel;
}

// ---------------------------------------------------------------------------
// Training contexts

namespace {

struct Context {
    int frame = 0;
    bool pool = false;
    FeaturePyramid pyramid;
    PyramidGeometry geometry;
    std::vector<Box> positive_windows;
    std::vector<Placement> positive_nearest;
    std::vector<Box> negative_windows;
    std::vector<Placement> negative_nearest;
    std::vector<Placement> background;   // pool contexts: windows clear of every positive
};

int object_level_min(const Model& m) { return m.layout.part_level_offset; }

template <class Fn>
void for_each_placement(const Model& m, const Context& c, Fn&& fn) {
    const int wc = m.window_width();
    const int hc = m.window_height();
    for (int l = object_level_min(m); l < static_cast<int>(c.pyramid.levels.size()); ++l) {
        const FeatureMap& lv = c.pyramid.levels[static_cast<std::size_t>(l)];
        for (int y = 0; y + hc <= lv.height; ++y)
            for (int x = 0; x + wc <= lv.width; ++x) {
                const Placement p{l, x, y};
                fn(p, window_box(m, c.geometry, p));
            }
    }
}

Placement nearest_placement(const Model& m, const Context& c, const Box& window, double* best_iou = nullptr) {
    Placement best{-1, 0, 0};
    double bi = -1.0;
    for_each_placement(m, c, [&](const Placement& p, const Box& w) {
        const double o = iou(w, window);
        if (o > bi) {
            bi = o;
            best = p;
        }
    });
    if (best_iou) *best_iou = bi;
    return best;
}

std::vector<Context> build_contexts(const TrainingDataset& ds, std::span<const int> frames, const Model& shape,
                                    const EngineConfig& cfg) {
    std::set<int> use(frames.begin(), frames.end());
    use.insert(ds.first_frame);
    const int offset = shape.layout.part_level_offset;
    const int band = cfg.tracker.level_band;
    const int interval = shape.features.interval;

    std::vector<Context> out;
    for (int f : use) {
        if (!ds.frames.count(f)) continue;
        const cv::Mat& img = ds.frame(f);
        Context c;
        c.frame = f;
        c.pool = std::find(ds.pool_frames.begin(), ds.pool_frames.end(), f) != ds.pool_frames.end();
        for (const auto& p : ds.positives)
            if (p.frame == f) c.positive_windows.push_back(shape.box_to_window(p.box));
        for (const auto& n : ds.negatives)
            if (n.frame == f) c.negative_windows.push_back(shape.box_to_window(n.box));
        if (c.positive_windows.empty()) continue;
        if (!c.pool && static_cast<int>(c.negative_windows.size()) > cfg.learner.negatives_per_frame)
            c.negative_windows.resize(static_cast<std::size_t>(cfg.learner.negatives_per_frame));

        const Box& ref = c.positive_windows.front();
        int below = band;
        int above = band;
        cv::Rect region(0, 0, img.cols, img.rows);
        if (!c.pool) {
            int lo = 0, hi = 0;
            Box u = ref;
            for (const auto* list : {&c.positive_windows, &c.negative_windows}) {
                for (const Box& w : *list) {
                    const int rel = static_cast<int>(std::lround(interval * std::log2(std::sqrt(w.area() / ref.area()))));
                    lo = std::min(lo, rel);
                    hi = std::max(hi, rel);
                    u = united(u, w);
                }
            }
            below = cfg.learner.level_margin - lo;
            above = cfg.learner.level_margin + hi;
            const double pad = 0.5 * std::max(ref.w, ref.h);
            region = cv::Rect(cv::Point(static_cast<int>(std::floor(u.x - pad)), static_cast<int>(std::floor(u.y - pad))),
                              cv::Point(static_cast<int>(std::ceil(u.right() + pad)),
                                        static_cast<int>(std::ceil(u.bottom() + pad))));
        }
        c.pyramid = window_pyramid(shape, img, region, ref, below + offset, above);
        if (c.pyramid.empty()) continue;
        c.geometry = c.pyramid.geometry();
        for (const Box& w : c.positive_windows) c.positive_nearest.push_back(nearest_placement(shape, c, w));
        for (const Box& w : c.negative_windows) c.negative_nearest.push_back(nearest_placement(shape, c, w));
        if (c.pool) {
            for_each_placement(shape, c, [&](const Placement& p, const Box& w) {
                for (const Box& pw : c.positive_windows)
                    if (iou(w, pw) >= cfg.learner.background_iou) return;
                c.background.push_back(p);
            });
        }
        // Drop positives without any usable placement.
        for (std::size_t i = c.positive_nearest.size(); i-- > 0;) {
            if (c.positive_nearest[i].level >= 0) continue;
            c.positive_nearest.erase(c.positive_nearest.begin() + static_cast<std::ptrdiff_t>(i));
            c.positive_windows.erase(c.positive_windows.begin() + static_cast<std::ptrdiff_t>(i));
        }
        for (std::size_t i = c.negative_nearest.size(); i-- > 0;) {
            if (c.negative_nearest[i].level >= 0) continue;
            c.negative_nearest.erase(c.negative_nearest.begin() + static_cast<std::ptrdiff_t>(i));
            c.negative_windows.erase(c.negative_windows.begin() + static_cast<std::ptrdiff_t>(i));
        }
        if (!c.positive_windows.empty()) out.push_back(std::move(c));
    }
    return out;
}

/// |D| in the loss weight: every positive plus the negative budget kept in the
/// working set, so the weight matches the online learner's example count.
double dataset_size(const std::vector<Context>& ctxs, const EngineConfig& cfg) {
    double n = double(cfg.learner.hard_negative_cap);
    for (const auto& c : ctxs) n += double(c.positive_windows.size());
    return std::max(n, 1.0);
}

ParseOptions context_options(const Model& m, const EngineConfig& cfg) {
    ParseOptions o;
    o.radius = cfg.parser.radius;
    o.min_level = object_level_min(m);
    o.max_level = -1;
    return o;
}

double root_score(const Model& m, const ScoreMapPyramid& maps, const Placement& p) {
    return maps.map(m.aog.root(), p.level).value(p.x, p.y);
}

struct Labels {
    std::vector<LsvmExample> positives;
    std::vector<ParseTree> trees;
    std::vector<double> scores;
    std::vector<LsvmExample> negatives;
};

Labels relabel_and_mine(const Model& m, const std::vector<Context>& ctxs, const EngineConfig& cfg, bool mine) {
    const ParamLayout layout = param_layout(m);
    const ParseOptions opts = context_options(m, cfg);
    Labels out;
    for (const Context& c : ctxs) {
        const ScoreMapPyramid maps = compute_score_maps(m, c.pyramid, opts);
        for (const Box& target : c.positive_windows) {
            double best = kNegInf;
            Placement arg{-1, 0, 0};
            for_each_placement(m, c, [&](const Placement& p, const Box& w) {
                if (iou(w, target) < cfg.learner.relabel_iou) return;
                const double s = root_score(m, maps, p);
                if (s > best) {
                    best = s;
                    arg = p;
                }
            });
            if (arg.level < 0 || !std::isfinite(best)) continue;
            ParseTree t = retrieve_parse_tree(m, maps, arg);
            out.positives.push_back({extract_feature(m, layout, c.pyramid, t), 1});
            out.scores.push_back(best);
            out.trees.push_back(std::move(t));
        }
        if (!mine) continue;

        std::vector<std::pair<double, Placement>> hard;
        auto consider = [&](const Placement& p) {
            const double s = root_score(m, maps, p);
            if (std::isfinite(s) && s > cfg.learner.hard_margin) hard.emplace_back(s, p);
        };
        for (const Placement& p : c.background) consider(p);
        const std::size_t cap = static_cast<std::size_t>(c.pool ? cfg.learner.hard_negative_cap
                                                                : cfg.learner.negatives_per_frame);
        for (const Placement& p : c.negative_nearest) consider(p);
        std::sort(hard.begin(), hard.end(), [](const auto& a, const auto& b) {
            return std::tie(b.first, a.second) < std::tie(a.first, b.second);
        });
        if (hard.size() > cap) hard.resize(cap);
        for (const auto& [s, p] : hard)
            out.negatives.push_back({extract_feature(m, layout, c.pyramid, retrieve_parse_tree(m, maps, p)), -1});
    }
    return out;
}

std::vector<LsvmExample> concat(const std::vector<LsvmExample>& a, const std::vector<LsvmExample>& b) {
    std::vector<LsvmExample> out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

/// One coordinate-descent round: fixed latent labels, LBFGS on the
/// convexified loss. Returns (before, after).
std::pair<double, double> lsvm_round(Model& m, const Labels& labels, const EngineConfig& cfg, double normalizer) {
    const ParamLayout layout = param_layout(m);
    const std::vector<LsvmExample> data = concat(labels.positives, labels.negatives);
    std::vector<double> theta = flatten(m, layout);
    const double before = lsvm_objective(theta, data, cfg.learner.C, normalizer);
    LbfgsOptions lo;
    lo.max_iterations = cfg.learner.lbfgs_iterations;
    lo.tolerance = cfg.learner.lbfgs_tolerance;
    lo.progress_tolerance = cfg.learner.lbfgs_progress;
    LbfgsResult r = minimize_lsvm(m, layout, std::move(theta), data, cfg.learner.C, normalizer, lo);
    unflatten(r.x, layout, m);
    return {before, r.value};
}

double min_score(const std::vector<double>& s) {
    return s.empty() ? kNegInf : *std::min_element(s.begin(), s.end());
}

double detection_threshold(const std::vector<double>& positive_scores, const EngineConfig& cfg) {
    return std::min(min_score(positive_scores), cfg.learner.threshold_cap);
}

struct Key {
    int ctx;
    Placement p;
    friend auto operator<=>(const Key&, const Key&) = default;
};

/// Root template by linear SVM with hard negative mining over the contexts.
LearnResult train_root(const Model& shape, const std::vector<Context>& ctxs, const EngineConfig& cfg) {
    LearnResult res;
    Model m = shape;
    m.params = make_params(m.aog, m.layout, m.channels);
    const NodeId obj = m.aog.object_terminal();
    NodeId wrapper = kNoNode;
    for (const Edge& e : m.aog.node(m.aog.root()).children) wrapper = e.child;
    const double normalizer = cfg.learner.normalize_loss ? dataset_size(ctxs, cfg) : 1.0;
    res.normalizer = normalizer;

    auto crop = [&](const Context& c, const Placement& p) {
        return crop_window(c.pyramid.levels[static_cast<std::size_t>(p.level)],
                           {p.x, p.y, m.window_width(), m.window_height()});
    };

    SvmProblem prob;
    for (const Context& c : ctxs)
        for (const Placement& p : c.positive_nearest) {
            prob.x.push_back(crop(c, p));
            prob.y.push_back(1);
        }
    if (prob.x.empty()) throw std::runtime_error("no positive example has a usable placement");

    // Initial negatives: stored hard negatives plus an even spread of the pools.
    std::set<Key> in_cache;
    const std::size_t cap = static_cast<std::size_t>(cfg.learner.hard_negative_cap);
    std::size_t background_total = 0;
    for (const Context& c : ctxs) background_total += c.background.size();
    const std::size_t stride = std::max<std::size_t>(1, background_total / std::max<std::size_t>(1, cap / 2));
    for (std::size_t ci = 0; ci < ctxs.size(); ++ci) {
        const Context& c = ctxs[ci];
        for (const Placement& p : c.negative_nearest)
            if (in_cache.insert({int(ci), p}).second) {
                prob.x.push_back(crop(c, p));
                prob.y.push_back(-1);
            }
        for (std::size_t k = 0; k < c.background.size(); k += stride)
            if (in_cache.insert({int(ci), c.background[k]}).second) {
                prob.x.push_back(crop(c, c.background[k]));
                prob.y.push_back(-1);
            }
    }

    SvmOptions so;
    so.C = cfg.learner.C;
    so.normalizer = normalizer;
    const ParseOptions opts = context_options(m, cfg);
    for (int round = 0; round < std::max(cfg.learner.mining_rounds, 1); ++round) {
        const SvmModel svm = train_linear_svm(prob, so);
        m.params.appearance[static_cast<std::size_t>(obj)].assign(svm.w.begin(), svm.w.end());
        m.params.bias[static_cast<std::size_t>(wrapper)] = svm.bias;

        // Objective over the whole dataset and newly violating negatives.
        double reg = svm.bias * svm.bias;
        for (double v : svm.w) reg += v * v;
        double loss = 0.0;
        std::vector<std::tuple<double, int, Placement>> fresh;
        for (std::size_t ci = 0; ci < ctxs.size(); ++ci) {
            const Context& c = ctxs[ci];
            const ScoreMapPyramid maps = compute_score_maps(m, c.pyramid, opts);
            for (const Placement& p : c.positive_nearest) loss += std::max(0.0, 1.0 - root_score(m, maps, p));
            auto neg = [&](const Placement& p) {
                const double s = root_score(m, maps, p);
                loss += std::max(0.0, 1.0 + s);
                if (s > cfg.learner.hard_margin && !in_cache.count({int(ci), p})) fresh.emplace_back(s, int(ci), p);
            };
            for (const Placement& p : c.background) neg(p);
            for (const Placement& p : c.negative_nearest) neg(p);
        }
        res.report.svm_trace.push_back(0.5 * reg + cfg.learner.C / normalizer * loss);
        if (round + 1 >= cfg.learner.mining_rounds || fresh.empty()) break;
        std::sort(fresh.begin(), fresh.end(), [](const auto& a, const auto& b) {
            return std::get<0>(a) > std::get<0>(b) ||
                   (std::get<0>(a) == std::get<0>(b) && std::tie(std::get<1>(a), std::get<2>(a)) <
                                                            std::tie(std::get<1>(b), std::get<2>(b)));
        });
        if (fresh.size() > cap) fresh.resize(cap);
        for (const auto& [s, ci, p] : fresh) {
            in_cache.insert({ci, p});
            prob.x.push_back(crop(ctxs[static_cast<std::size_t>(ci)], p));
            prob.y.push_back(-1);
        }
    }

    Labels labels = relabel_and_mine(m, ctxs, cfg, true);
    m.threshold = detection_threshold(labels.scores, cfg);
    res.model = std::move(m);
    res.positives = std::move(labels.positives);
    res.negatives = std::move(labels.negatives);
    res.report.object_only = true;
    return res;
}

std::vector<double> node_merits(const Model& full, const std::vector<Context>& ctxs, const EngineConfig& cfg,
                                const Model& root_model) {
    const Aog& g = full.aog;
    const ParseOptions opts = context_options(full, cfg);
    const int offset = full.layout.part_level_offset;
    const int factor = full.layout.part_resolution;
    std::vector<std::vector<double>> pos(g.size()), neg(g.size());

    for (const Context& c : ctxs) {
        const ScoreMapPyramid maps = compute_score_maps(full, c.pyramid, opts);
        std::vector<Placement> negatives = c.negative_nearest;
        if (!c.background.empty()) {
            // Hardest pool windows under the root template.
            const ScoreMapPyramid rmaps = compute_score_maps(root_model, c.pyramid, opts);
            std::vector<std::pair<double, Placement>> ranked;
            for (const Placement& p : c.background) ranked.emplace_back(root_score(root_model, rmaps, p), p);
            const std::size_t keep = std::min(ranked.size(), static_cast<std::size_t>(cfg.learner.merit_pool));
            std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end(),
                              [](const auto& a, const auto& b) {
                                  return a.first > b.first || (a.first == b.first && a.second < b.second);
                              });
            for (std::size_t k = 0; k < keep; ++k) negatives.push_back(ranked[k].second);
        }
        auto record = [&](const Placement& p, std::vector<std::vector<double>>& into) {
            for (const AogNode& n : g.nodes()) {
                double s;
                if (g.is_object_level(n.id)) {
                    s = maps.map(n.id, p.level).value(p.x, p.y);
                } else {
                    const CellRect a = node_cells(g, full.layout, n.id);
                    const int pl = p.level - offset;
                    s = pl < 0 ? kNegInf : maps.map(n.id, pl).value(factor * p.x + a.x, factor * p.y + a.y);
                }
                into[static_cast<std::size_t>(n.id)].push_back(std::isfinite(s) ? s : -1e30);
            }
        };
        for (const Placement& p : c.positive_nearest) record(p, pos);
        for (const Placement& p : negatives) record(p, neg);
    }
    std::vector<double> merits(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) merits[i] = error_rate(pos[i], neg[i]);
    return merits;
}

}  // namespace

// ---------------------------------------------------------------------------
// Pipeline

namespace {

Model shape_model(const TrainingDataset& ds, const Box& reference, const EngineConfig& cfg, bool twice) {
    const int side = cfg.learner.grid_side > 0 ? cfg.learner.grid_side
                                               : grid_side_for_box(reference, cfg.learner.grid_side_cutoff);
    const GridSpec grid = grid_for_box(reference, side, cfg.learner.min_part, cfg.learner.overlap_ratio);
    const cv::Mat& f1 = ds.frame(ds.first_frame);
    Model m = make_object_model(grid, reference, cfg.features, channel_count(cfg.features, f1.channels()),
                                cfg.learner.cells_per_unit);
    m.layout = part_layout(cfg.learner.cells_per_unit, twice, cfg.features.interval);
    m.params = make_params(m.aog, m.layout, m.channels);
    return m;
}

}  // namespace

LearnResult train_root_model(const TrainingDataset& ds, std::span<const int> frames, const Box& reference,
                             const EngineConfig& cfg) {
    const Model shape = shape_model(ds, reference, cfg, false);
    const std::vector<Context> ctxs = build_contexts(ds, frames, shape, cfg);
    if (ctxs.empty()) throw std::runtime_error("no usable training frame");
    return train_root(shape, ctxs, cfg);
}

LearnResult learn_object_aog(const TrainingDataset& ds, std::span<const int> frames, const Box& reference,
                             const EngineConfig& cfg) {
    if (ds.positives.empty()) throw std::invalid_argument("dataset has no positives");
    const cv::Mat& f1 = ds.frame(ds.first_frame);
    Box first_box = ds.positives.front().box;
    for (const auto& p : ds.positives)
        if (p.frame == ds.first_frame) {
            first_box = p.box;
            break;
        }

    LearnResult fallback;
    bool have_fallback = false;
    std::string notes;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const bool twice = attempt == 1;
        const Model shape = shape_model(ds, reference, cfg, twice);
        const std::vector<Context> ctxs = build_contexts(ds, frames, shape, cfg);
        if (ctxs.empty()) {
            notes += twice ? " no contexts at twice resolution;" : " no usable contexts;";
            continue;
        }
        LearnResult root = train_root(shape, ctxs, cfg);
        if (!have_fallback) {
            fallback = root;
            have_fallback = true;
        }

        LearnResult res;
        res.normalizer = root.normalizer;
        res.report.svm_trace = root.report.svm_trace;
        res.report.twice_resolution = twice;

        Model full = shape;
        full.aog = build_full_aog(shape.aog.spec());
        const NodeId obj = root.model.aog.object_terminal();
        NodeId wrapper = root.model.aog.node(root.model.aog.root()).children.front().child;
        full.params = init_terminal_params(root.model.params.appearance[static_cast<std::size_t>(obj)],
                                           root.model.params.bias[static_cast<std::size_t>(wrapper)], full.aog,
                                           full.layout, full.channels, cfg.learner.initial_deformation);
        res.report.full_nodes = full.aog.size();
        res.report.merits = node_merits(full, ctxs, cfg, root.model);
        Model m = restrict_model(full, select_initial_branches(full.aog, res.report.merits, cfg.learner.epsilon));
        res.report.initial_nodes = m.aog.size();

        bool ok = true;
        for (int round = 0; round < cfg.learner.lsvm_rounds && ok; ++round) {
            const Labels labels = relabel_and_mine(m, ctxs, cfg, true);
            if (labels.positives.empty()) {
                ok = false;
                break;
            }
            res.report.lsvm_trace.push_back(lsvm_round(m, labels, cfg, res.normalizer));
        }
        if (!ok) {
            notes += " relabelling failed;";
            continue;
        }

        Labels labels = relabel_and_mine(m, ctxs, cfg, false);
        if (labels.trees.empty()) {
            notes += " relabelling failed;";
            continue;
        }
        m = restrict_model(m, majority_vote(m.aog, labels.trees, cfg.learner.vote_threshold));
        labels = relabel_and_mine(m, ctxs, cfg, true);
        if (labels.positives.empty()) {
            notes += " relabelling failed after pruning;";
            continue;
        }
        res.report.lsvm_trace.push_back(lsvm_round(m, labels, cfg, res.normalizer));
        labels = relabel_and_mine(m, ctxs, cfg, true);
        m.threshold = detection_threshold(labels.scores, cfg);
        res.report.final_nodes = m.aog.size();
        res.positives = std::move(labels.positives);
        res.negatives = std::move(labels.negatives);
        res.model = std::move(m);

        if (verify_model(res.model, f1, first_box, cfg)) {
            res.report.accepted = true;
            res.report.note = notes;
            return res;
        }
        notes += twice ? " rejected at twice resolution;" : " rejected at object resolution;";
    }
    if (!have_fallback) throw std::runtime_error("learning failed: no usable training data");
    fallback.report.accepted = verify_model(fallback.model, f1, first_box, cfg);
    fallback.report.object_only = true;
    fallback.report.note = notes + " using the object template only";
    fallback.report.full_nodes = fallback.report.initial_nodes = fallback.report.final_nodes = fallback.model.aog.size();
    return fallback;
}

bool verify_model(const Model& model, const cv::Mat& frame, const Box& box, const EngineConfig& cfg,
                  Detection* best) {
    const Box window = model.box_to_window(box);
    const int band = cfg.tracker.level_band;
    const FeaturePyramid pyr = window_pyramid(model, frame, cv::Rect(0, 0, frame.cols, frame.rows), window,
                                              band + model.layout.part_level_offset, band);
    if (pyr.empty()) return false;
    ParseOptions opts;
    opts.threshold = model.threshold;
    opts.nms_iou = cfg.parser.nms_iou;
    opts.n_best = 1;
    opts.radius = cfg.parser.radius;
    opts.min_level = model.layout.part_level_offset;
    const auto dets = parse(model, pyr, opts);
    if (dets.empty()) return false;
    if (best) *best = dets.front();
    return dets.front().score >= model.threshold && iou(model.window_to_box(dets.front().window), box) >= cfg.parser.nms_iou;
}

// ---------------------------------------------------------------------------

void OnlineLearner::reset(const LearnResult& learned) {
    examples_.clear();
    pinned_.clear();
    for (const auto& e : learned.positives) {
        examples_.push_back(e);
        pinned_.push_back(true);
    }
    for (const auto& e : learned.negatives) {
        examples_.push_back(e);
        pinned_.push_back(false);
    }
    negative_cap_ = std::max<std::size_t>(learned.negatives.size(), 200);
}

void OnlineLearner::add(LsvmExample example, bool keep_forever) {
    examples_.push_back(std::move(example));
    pinned_.push_back(keep_forever);
    std::size_t negatives = 0;
    for (const auto& e : examples_) negatives += e.label < 0;
    // Forget the oldest unpinned negatives beyond the cap.
    for (std::size_t i = 0; i < examples_.size() && negatives > negative_cap_;) {
        if (!pinned_[i] && examples_[i].label < 0) {
            examples_.erase(examples_.begin() + static_cast<std::ptrdiff_t>(i));
            pinned_.erase(pinned_.begin() + static_cast<std::ptrdiff_t>(i));
            --negatives;
        } else {
            ++i;
        }
    }
}

void OnlineLearner::update(Model& model, const EngineConfig& cfg) {
    if (examples_.empty()) return;
    const ParamLayout layout = param_layout(model);
    LbfgsOptions lo;
    lo.max_iterations = cfg.learner.update_iterations;
    lo.tolerance = cfg.learner.lbfgs_tolerance;
    lo.progress_tolerance = cfg.learner.lbfgs_progress;
    const double normalizer = cfg.learner.normalize_loss ? double(examples_.size()) : 1.0;
    const LbfgsResult r =
        minimize_lsvm(model, layout, flatten(model, layout), examples_, cfg.learner.C, normalizer, lo);
    unflatten(r.x, layout, model);
    double thr = std::numeric_limits<double>::infinity();
    for (const auto& e : examples_)
        if (e.label > 0) thr = std::min(thr, e.phi.dot(r.x));
    if (std::isfinite(thr)) model.threshold = std::min(thr, cfg.learner.threshold_cap);
}

}  // namespace aog
