#include "aogtrack/parser.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <tuple>

#include <cblas.h>

namespace aog {

namespace {

double dot(const float* a, const float* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += double(a[i]) * double(b[i]);
    return s;
}

double penalty(const std::array<double, 4>& t, int dx, int dy) {
    return t[0] * dx * dx + t[1] * dx + t[2] * dy * dy + t[3] * dy;
}

struct LevelPlan {
    int lo = 0;       // object levels [lo, hi]
    int hi = -1;
    int offset = 0;   // part level = object level - offset
    int factor = 1;   // part cells per object cell
};

LevelPlan plan_levels(const Model& model, const FeaturePyramid& pyramid, const ParseOptions& opts) {
    const int n = static_cast<int>(pyramid.levels.size());
    LevelPlan p;
    p.offset = model.layout.part_level_offset;
    p.factor = model.layout.part_resolution;
    if ((p.offset == 0) != (p.factor == 1))
        throw std::invalid_argument("part level offset and part resolution disagree");
    p.lo = std::max(opts.min_level, 0);
    p.hi = opts.max_level < 0 ? n - 1 : std::min(opts.max_level, n - 1);
    return p;
}

bool part_level_needed(const LevelPlan& p, int level) {
    const int l = level + p.offset;
    return l >= p.lo && l <= p.hi;
}

}  // namespace

// ---------------------------------------------------------------------------

ScoreMap score_terminal(const FeatureMap& level, std::span<const float> weights, int w_cells, int h_cells) {
    const std::size_t row = std::size_t(w_cells) * level.channels;
    if (weights.size() != row * h_cells) throw std::logic_error("template size does not match terminal extent");
    ScoreMap out(level.width - w_cells + 1, level.height - h_cells + 1, 0.0);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            double s = 0.0;
            for (int r = 0; r < h_cells; ++r) s += dot(level.cell(x, y + r), weights.data() + r * row, row);
            out.at(x, y) = s;
        }
    }
    return out;
}

std::vector<ScoreMap> score_terminals(const FeatureMap& level, std::span<const TerminalTemplate> templates) {
    const int ch = level.channels;
    std::size_t cols = 0;
    for (const auto& t : templates) {
        if (t.weights.size() != std::size_t(t.w_cells) * t.h_cells * ch)
            throw std::logic_error("template size does not match terminal extent");
        cols += std::size_t(t.w_cells) * t.h_cells;
    }
    std::vector<ScoreMap> out;
    out.reserve(templates.size());
    const std::size_t cells = std::size_t(level.width) * level.height;
    if (cols == 0 || cells == 0 || ch == 0) {
        for (const auto& t : templates) out.emplace_back(level.width - t.w_cells + 1, level.height - t.h_cells + 1, 0.0);
        return out;
    }

    // Every template cell against every level cell: R = F * W with F
    // (cells x ch) and W (ch x cols), then shifted sums per template.
    std::vector<double> f(level.data.begin(), level.data.end());
    std::vector<double> w(std::size_t(ch) * cols);
    std::size_t col = 0;
    for (const auto& t : templates)
        for (int c = 0; c < t.w_cells * t.h_cells; ++c, ++col)
            for (int k = 0; k < ch; ++k) w[std::size_t(k) * cols + col] = t.weights[std::size_t(c) * ch + k];
    std::vector<double> r(cells * cols);
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(cells), static_cast<int>(cols), ch, 1.0,
                f.data(), ch, w.data(), static_cast<int>(cols), 0.0, r.data(), static_cast<int>(cols));

    col = 0;
    for (const auto& t : templates) {
        ScoreMap m(level.width - t.w_cells + 1, level.height - t.h_cells + 1, 0.0);
        for (int v = 0; v < t.h_cells; ++v)
            for (int u = 0; u < t.w_cells; ++u, ++col)
                for (int y = 0; y < m.height; ++y) {
                    const double* src = &r[(std::size_t(y + v) * level.width + u) * cols + col];
                    double* dst = &m.at(0, y);
                    for (int x = 0; x < m.width; ++x) dst[x] += src[std::size_t(x) * cols];
                }
        out.push_back(std::move(m));
    }
    return out;
}

ScoreMap score_or(std::span<const ScoreMap* const> children, std::vector<std::int32_t>* argmax) {
    if (children.empty()) throw std::logic_error("Or-node without children");
    const ScoreMap& first = *children.front();
    ScoreMap out = first;
    if (argmax) argmax->assign(out.data.size(), 0);
    for (std::size_t c = 1; c < children.size(); ++c) {
        const ScoreMap& m = *children[c];
        if (m.width != out.width || m.height != out.height) throw std::logic_error("Or children maps misaligned");
        for (std::size_t i = 0; i < out.data.size(); ++i) {
            if (m.data[i] > out.data[i]) {
                out.data[i] = m.data[i];
                if (argmax) (*argmax)[i] = static_cast<std::int32_t>(c);
            }
        }
    }
    return out;
}

DeformedMap local_max(const ScoreMap& child, const std::array<double, 4>& theta, int radius) {
    if (radius < 0 || radius > 127) throw std::invalid_argument("deformation radius out of range");
    const int w = child.width;
    const int h = child.height;
    DeformedMap out;
    out.map = ScoreMap(w, h);
    out.dx.assign(std::size_t(w) * h, 0);
    out.dy.assign(std::size_t(w) * h, 0);

    ScoreMap tmp(w, h);
    std::vector<std::int8_t> bdx(std::size_t(w) * h, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double best = kNegInf;
            int arg = 0;
            for (int d = std::max(-radius, -x); d <= std::min(radius, w - 1 - x); ++d) {
                const double v = child.at(x + d, y) - (theta[0] * d * d + theta[1] * d);
                if (v > best) {
                    best = v;
                    arg = d;
                }
            }
            tmp.at(x, y) = best;
            bdx[std::size_t(y) * w + x] = static_cast<std::int8_t>(arg);
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double best = kNegInf;
            int arg = 0;
            for (int d = std::max(-radius, -y); d <= std::min(radius, h - 1 - y); ++d) {
                const double v = tmp.at(x, y + d) - (theta[2] * d * d + theta[3] * d);
                if (v > best) {
                    best = v;
                    arg = d;
                }
            }
            const std::size_t i = std::size_t(y) * w + x;
            out.map.data[i] = best;
            out.dy[i] = static_cast<std::int8_t>(arg);
            out.dx[i] = bdx[std::size_t(y + arg) * w + x];
        }
    }
    return out;
}

ScoreMap score_decomposition(std::span<const ShiftedMap> children, int width, int height) {
    ScoreMap out(width, height, 0.0);
    for (const ShiftedMap& c : children) {
        for (int y = 0; y < out.height; ++y)
            for (int x = 0; x < out.width; ++x) out.at(x, y) += c.map->value(x + c.ox, y + c.oy);
    }
    return out;
}

// ---------------------------------------------------------------------------

ScoreMapPyramid compute_score_maps(const Model& model, const FeaturePyramid& pyramid, const ParseOptions& opts) {
    const Aog& g = model.aog;
    if (pyramid.channels != model.channels) throw std::invalid_argument("pyramid channels do not match the model");
    const LevelPlan plan = plan_levels(model, pyramid, opts);
    const int nlev = static_cast<int>(pyramid.levels.size());

    ScoreMapPyramid sp;
    sp.min_object_level = plan.lo;
    sp.max_object_level = plan.hi;
    sp.maps.assign(g.size(), std::vector<ScoreMap>(static_cast<std::size_t>(nlev)));
    sp.dx.assign(g.size(), {});
    sp.dy.assign(g.size(), {});

    // Terminal maps, one batched correlation per level.
    for (int l = 0; l < nlev; ++l) {
        std::vector<NodeId> ids;
        std::vector<TerminalTemplate> templates;
        for (const AogNode& n : g.nodes()) {
            if (n.kind != NodeKind::Terminal) continue;
            const bool object = g.is_object_level(n.id);
            if (object ? (l < plan.lo || l > plan.hi) : !part_level_needed(plan, l)) continue;
            const CellRect ext = node_cells(g, model.layout, n.id);
            ids.push_back(n.id);
            templates.push_back({model.params.appearance[static_cast<std::size_t>(n.id)], ext.w, ext.h});
        }
        if (ids.empty()) continue;
        std::vector<ScoreMap> maps = score_terminals(pyramid.levels[static_cast<std::size_t>(l)], templates);
        for (std::size_t k = 0; k < ids.size(); ++k)
            sp.maps[static_cast<std::size_t>(ids[k])][static_cast<std::size_t>(l)] = std::move(maps[k]);
    }

    for (NodeId id : g.postorder()) {
        const AogNode& n = g.node(id);
        const auto i = static_cast<std::size_t>(id);
        const bool object = g.is_object_level(id);
        if (has_deformation(g, id)) {
            sp.dx[i].resize(static_cast<std::size_t>(nlev));
            sp.dy[i].resize(static_cast<std::size_t>(nlev));
        }
        const CellRect ext = node_cells(g, model.layout, id);

        for (int l = 0; l < nlev; ++l) {
            if (object ? (l < plan.lo || l > plan.hi) : !part_level_needed(plan, l)) continue;
            const FeatureMap& level = pyramid.levels[static_cast<std::size_t>(l)];
            ScoreMap& out = sp.maps[i][static_cast<std::size_t>(l)];

            if (id == g.root()) {
                const int ow = model.window_width();
                const int oh = model.window_height();
                out = ScoreMap(level.width - ow + 1, level.height - oh + 1);
                for (const Edge& e : n.children) {
                    const auto c = static_cast<std::size_t>(e.child);
                    const double b = model.params.bias[c];
                    if (g.is_object_level(e.child)) {
                        const ScoreMap& m = sp.maps[c][static_cast<std::size_t>(l)];
                        for (int y = 0; y < out.height; ++y)
                            for (int x = 0; x < out.width; ++x) out.at(x, y) = std::max(out.at(x, y), m.at(x, y) + b);
                    } else {
                        const int pl = l - plan.offset;
                        if (pl < 0) continue;
                        const ScoreMap& m = sp.maps[c][static_cast<std::size_t>(pl)];
                        for (int y = 0; y < out.height; ++y)
                            for (int x = 0; x < out.width; ++x)
                                out.at(x, y) = std::max(out.at(x, y), m.value(plan.factor * x, plan.factor * y) + b);
                    }
                }
                continue;
            }

            switch (n.kind) {
            case NodeKind::Terminal:
                break;
            case NodeKind::Or: {
                std::vector<const ScoreMap*> kids;
                for (const Edge& e : n.children) kids.push_back(&sp.maps[static_cast<std::size_t>(e.child)][std::size_t(l)]);
                out = score_or(kids);
                break;
            }
            case NodeKind::And: {
                const EdgeType t = n.and_type();
                const ScoreMap& first = sp.maps[static_cast<std::size_t>(n.children.front().child)][std::size_t(l)];
                if (t == EdgeType::Termination) {
                    out = first;
                } else if (t == EdgeType::Deformation) {
                    DeformedMap d = local_max(first, model.params.deformation[i], opts.radius);
                    out = std::move(d.map);
                    sp.dx[i][std::size_t(l)] = std::move(d.dx);
                    sp.dy[i][std::size_t(l)] = std::move(d.dy);
                } else {
                    std::vector<ShiftedMap> kids;
                    for (const Edge& e : n.children) {
                        const CellRect ce = node_cells(g, model.layout, e.child);
                        kids.push_back({&sp.maps[static_cast<std::size_t>(e.child)][std::size_t(l)], ce.x - ext.x,
                                        ce.y - ext.y});
                    }
                    out = score_decomposition(kids, level.width - ext.w + 1, level.height - ext.h + 1);
                }
                break;
            }
            }
        }
    }
    return sp;
}

ParseTree retrieve_parse_tree(const Model& model, const ScoreMapPyramid& maps, const Placement& root) {
    const Aog& g = model.aog;
    const int offset = model.layout.part_level_offset;
    const int factor = model.layout.part_resolution;
    const ScoreMap& rm = maps.map(g.root(), root.level);
    if (!rm.inside(root.x, root.y)) throw std::logic_error("root placement outside its score map");

    ParseTree tree;
    tree.score = rm.at(root.x, root.y);
    const Placement part_origin{root.level - offset, factor * root.x, factor * root.y};

    std::deque<std::pair<NodeId, Placement>> queue{{g.root(), root}};
    while (!queue.empty()) {
        auto [id, p] = queue.front();
        queue.pop_front();
        const AogNode& n = g.node(id);
        ParseNode pn;
        pn.node = id;
        pn.placement = p;

        auto child_placement = [&](NodeId c) {
            if (g.is_object_level(c)) return root;
            const CellRect ce = node_cells(g, model.layout, c);
            return Placement{part_origin.level, part_origin.x + ce.x, part_origin.y + ce.y};
        };

        if (n.kind == NodeKind::Or) {
            double best = kNegInf;
            for (const Edge& e : n.children) {
                const Placement cp = child_placement(e.child);
                if (cp.level < 0) continue;
                double v = maps.map(e.child, cp.level).value(cp.x, cp.y);
                if (id == g.root()) v += model.params.bias[static_cast<std::size_t>(e.child)];
                if (v > best) {
                    best = v;
                    pn.chosen = e.child;
                }
            }
            if (pn.chosen == kNoNode) throw std::logic_error("no valid child at placement");
            queue.emplace_back(pn.chosen, child_placement(pn.chosen));
        } else if (n.kind == NodeKind::And) {
            if (n.and_type() == EdgeType::Deformation) {
                const auto& dxs = maps.dx[static_cast<std::size_t>(id)][std::size_t(p.level)];
                const auto& dys = maps.dy[static_cast<std::size_t>(id)][std::size_t(p.level)];
                const int w = maps.map(id, p.level).width;
                const std::size_t k = std::size_t(p.y) * w + p.x;
                pn.dx = dxs[k];
                pn.dy = dys[k];
                queue.emplace_back(n.children.front().child, Placement{p.level, p.x + pn.dx, p.y + pn.dy});
            } else {
                for (const Edge& e : n.children) queue.emplace_back(e.child, child_placement(e.child));
            }
        }
        tree.nodes.push_back(pn);
    }
    return tree;
}

Box window_box(const Model& model, const PyramidGeometry& geometry, const Placement& root) {
    return geometry.cell_box(root, model.window_width(), model.window_height());
}

std::vector<Detection> nms(std::vector<Detection> detections, double iou_threshold) {
    auto key = [](const Detection& d) { return std::make_tuple(-d.score, d.window.x, d.window.y, d.window.w, d.window.h); };
    std::stable_sort(detections.begin(), detections.end(),
                     [&](const Detection& a, const Detection& b) { return key(a) < key(b); });
    std::vector<Detection> kept;
    for (auto& d : detections) {
        bool suppressed = false;
        for (const auto& k : kept) {
            if (iou(d.window, k.window) >= iou_threshold) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(std::move(d));
    }
    return kept;
}

std::vector<Detection> parse(const Model& model, const FeaturePyramid& pyramid, const ParseOptions& opts,
                             ScoreMapPyramid* keep_maps) {
    ScoreMapPyramid maps = compute_score_maps(model, pyramid, opts);
    const PyramidGeometry geometry = pyramid.geometry();

    struct Candidate {
        double score;
        Box window;
        Placement p;
    };
    std::vector<Candidate> cands;
    for (int l = maps.min_object_level; l <= maps.max_object_level; ++l) {
        const ScoreMap& m = maps.map(model.aog.root(), l);
        for (int y = 0; y < m.height; ++y)
            for (int x = 0; x < m.width; ++x) {
                const double s = m.at(x, y);
                if (std::isfinite(s) && s >= opts.threshold) cands.push_back({s, window_box(model, geometry, {l, x, y}), {l, x, y}});
            }
    }
    auto key = [](const Candidate& c) {
        return std::make_tuple(-c.score, c.window.x, c.window.y, c.window.w, c.window.h, c.p.level);
    };
    std::sort(cands.begin(), cands.end(), [&](const Candidate& a, const Candidate& b) { return key(a) < key(b); });

    std::vector<Candidate> kept;
    for (const auto& c : cands) {
        if (opts.n_best > 0 && kept.size() >= static_cast<std::size_t>(opts.n_best)) break;
        bool suppressed = false;
        for (const auto& k : kept) {
            if (iou(c.window, k.window) >= opts.nms_iou) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(c);
    }

    std::vector<Detection> out;
    out.reserve(kept.size());
    for (const auto& c : kept) {
        Detection d;
        d.window = c.window;
        d.score = c.score;
        d.tree = retrieve_parse_tree(model, maps, c.p);
        out.push_back(std::move(d));
    }
    if (keep_maps) *keep_maps = std::move(maps);
    return out;
}

// ---------------------------------------------------------------------------

double reconstruct_score(const Model& model, const FeaturePyramid& pyramid, const ParseTree& tree) {
    const Aog& g = model.aog;
    double s = 0.0;
    for (const ParseNode& pn : tree.nodes) {
        const AogNode& n = g.node(pn.node);
        const auto i = static_cast<std::size_t>(pn.node);
        if (n.kind == NodeKind::Terminal) {
            const CellRect ext = node_cells(g, model.layout, pn.node);
            const auto& level = pyramid.levels.at(static_cast<std::size_t>(pn.placement.level));
            const std::vector<float> f = crop_window(level, {pn.placement.x, pn.placement.y, ext.w, ext.h});
            s += dot(f.data(), model.params.appearance[i].data(), f.size());
        } else if (has_deformation(g, pn.node)) {
            s -= penalty(model.params.deformation[i], pn.dx, pn.dy);
        }
        if (pn.node == g.root()) s += model.params.bias[static_cast<std::size_t>(pn.chosen)];
    }
    return s;
}

double SparseFeature::dot(std::span<const double> theta) const {
    double s = 0.0;
    for (const Block& b : blocks)
        for (std::size_t j = 0; j < b.values.size(); ++j) s += theta[b.offset + j] * b.values[j];
    for (const auto& [k, v] : scalars) s += theta[k] * v;
    return s;
}

void SparseFeature::axpy(double scale, std::span<double> out) const {
    for (const Block& b : blocks)
        for (std::size_t j = 0; j < b.values.size(); ++j) out[b.offset + j] += scale * b.values[j];
    for (const auto& [k, v] : scalars) out[k] += scale * v;
}

double SparseFeature::squared_norm() const {
    // Blocks of one tree never overlap unless parts overlap; accumulate densely
    // per offset to stay exact in that case too.
    std::vector<std::pair<std::size_t, double>> entries;
    for (const Block& b : blocks)
        for (std::size_t j = 0; j < b.values.size(); ++j) entries.emplace_back(b.offset + j, b.values[j]);
    entries.insert(entries.end(), scalars.begin(), scalars.end());
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    double s = 0.0;
    for (std::size_t i = 0; i < entries.size();) {
        double v = 0.0;
        std::size_t j = i;
        for (; j < entries.size() && entries[j].first == entries[i].first; ++j) v += entries[j].second;
        s += v * v;
        i = j;
    }
    return s;
}

SparseFeature extract_feature(const Model& model, const ParamLayout& layout, const FeaturePyramid& pyramid,
                              const ParseTree& tree) {
    const Aog& g = model.aog;
    SparseFeature phi;
    for (const ParseNode& pn : tree.nodes) {
        const AogNode& n = g.node(pn.node);
        const auto i = static_cast<std::size_t>(pn.node);
        if (n.kind == NodeKind::Terminal) {
            const CellRect ext = node_cells(g, model.layout, pn.node);
            const auto& level = pyramid.levels.at(static_cast<std::size_t>(pn.placement.level));
            phi.blocks.push_back({layout.appearance[i], crop_window(level, {pn.placement.x, pn.placement.y, ext.w, ext.h})});
        } else if (has_deformation(g, pn.node)) {
            const auto f = deformation_feature(pn.dx, pn.dy);
            for (std::size_t j = 0; j < 4; ++j) phi.scalars.emplace_back(layout.deformation[i] + j, -f[j]);
        }
        if (pn.node == g.root()) phi.scalars.emplace_back(layout.bias[static_cast<std::size_t>(pn.chosen)], 1.0);
    }
    return phi;
}

}  // namespace aog
