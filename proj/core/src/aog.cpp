#include "aogtrack/aog.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <string>
#include <tuple>

namespace aog {

namespace {

void check_spec(const GridSpec& s) {
    if (s.width < 1 || s.height < 1)
        throw std::invalid_argument("grid must be at least 1x1 cells");
    if (s.min_part_width < 1 || s.min_part_width > s.width || s.min_part_height < 1 ||
        s.min_part_height > s.height)
        throw std::invalid_argument("minimal part size must fit inside the grid");
    if (!(s.overlap_ratio >= 0.0 && s.overlap_ratio < 1.0))
        throw std::invalid_argument("overlap ratio must lie in [0, 1)");
}

struct Cut {
    CutAxis axis;
    int pos;
    int overlap;
    GridRegion first;
    GridRegion second;
};

// All valid binary cuts of `r`, vertical cuts first, then horizontal; each
// cut position followed by its overlapped variants.
std::vector<Cut> valid_cuts(const GridRegion& r, const GridSpec& s) {
    std::vector<Cut> cuts;
    const int max_ox = static_cast<int>(std::floor(s.overlap_ratio * r.w));
    for (int c = s.min_part_width; c <= r.w - s.min_part_width; ++c) {
        for (int o = 0; o <= max_ox && c + o < r.w; ++o) {
            cuts.push_back({CutAxis::Vertical, c, o, {r.x, r.y, c + o, r.h},
                            {r.x + c, r.y, r.w - c, r.h}});
        }
    }
    const int max_oy = static_cast<int>(std::floor(s.overlap_ratio * r.h));
    for (int c = s.min_part_height; c <= r.h - s.min_part_height; ++c) {
        for (int o = 0; o <= max_oy && c + o < r.h; ++o) {
            cuts.push_back({CutAxis::Horizontal, c, o, {r.x, r.y, r.w, c + o},
                            {r.x, r.y + c, r.w, r.h - c}});
        }
    }
    return cuts;
}

}  // namespace

// ---------------------------------------------------------------------------

NodeId Aog::object_terminal() const {
    const GridRegion whole{0, 0, spec_.width, spec_.height};
    for (const auto& n : nodes_)
        if (n.kind == NodeKind::Terminal && n.region == whole) return n.id;
    return kNoNode;
}

bool Aog::is_object_level(NodeId id) const {
    const AogNode& n = node(id);
    if (id == root()) return true;
    const GridRegion whole{0, 0, spec_.width, spec_.height};
    if (n.region != whole) return false;
    if (n.kind == NodeKind::Terminal) return true;
    return n.kind == NodeKind::And && n.and_type() == EdgeType::Termination;
}

std::size_t Aog::count(NodeKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [&](const AogNode& n) { return n.kind == kind; }));
}

std::size_t Aog::decomposition_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const AogNode& n) {
        return n.kind == NodeKind::And && n.and_type() == EdgeType::Decomposition;
    }));
}

std::size_t Aog::part_terminal_count() const {
    const std::size_t t = count(NodeKind::Terminal);
    return object_terminal() == kNoNode ? t : t - 1;
}

std::vector<NodeId> Aog::postorder() const {
    std::vector<NodeId> order;
    if (nodes_.empty()) return order;
    order.reserve(nodes_.size());
    std::vector<std::uint8_t> state(nodes_.size(), 0);  // 0 new, 1 open, 2 done
    std::vector<std::pair<NodeId, std::size_t>> stack{{root(), 0}};
    state[0] = 1;
    while (!stack.empty()) {
        auto& [id, next] = stack.back();
        const auto& kids = nodes_[static_cast<std::size_t>(id)].children;
        if (next < kids.size()) {
            const NodeId c = kids[next++].child;
            if (state[static_cast<std::size_t>(c)] == 1)
                throw std::logic_error("AOG contains a cycle");
            if (state[static_cast<std::size_t>(c)] == 0) {
                state[static_cast<std::size_t>(c)] = 1;
                stack.emplace_back(c, 0);
            }
        } else {
            state[static_cast<std::size_t>(id)] = 2;
            order.push_back(id);
            stack.pop_back();
        }
    }
    return order;
}

std::vector<NodeId> Aog::bfs_order() const {
    std::vector<NodeId> order;
    if (nodes_.empty()) return order;
    std::vector<bool> seen(nodes_.size(), false);
    std::deque<NodeId> queue{root()};
    seen[0] = true;
    while (!queue.empty()) {
        const NodeId id = queue.front();
        queue.pop_front();
        order.push_back(id);
        for (const Edge& e : node(id).children) {
            if (!seen[static_cast<std::size_t>(e.child)]) {
                seen[static_cast<std::size_t>(e.child)] = true;
                queue.push_back(e.child);
            }
        }
    }
    return order;
}

void Aog::validate() const {
    auto fail = [](const std::string& what) { throw std::logic_error("invalid AOG: " + what); };
    if (nodes_.empty()) fail("empty graph");
    if (source_ids_.size() != nodes_.size()) fail("source id table size mismatch");
    const GridRegion whole{0, 0, spec_.width, spec_.height};
    const AogNode& r = nodes_.front();
    if (r.kind != NodeKind::Or || r.region != whole) fail("root must be an Or-node over the grid");

    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const AogNode& n = nodes_[i];
        if (n.id != static_cast<NodeId>(i)) fail("node ids must be dense");
        const GridRegion& g = n.region;
        if (g.x < 0 || g.y < 0 || g.w < 1 || g.h < 1 || g.x + g.w > spec_.width ||
            g.y + g.h > spec_.height)
            fail("region outside grid at node " + std::to_string(i));
        for (const Edge& e : n.children)
            if (e.child < 0 || static_cast<std::size_t>(e.child) >= nodes_.size())
                fail("dangling edge at node " + std::to_string(i));
        switch (n.kind) {
        case NodeKind::Terminal:
            if (!n.children.empty()) fail("terminal with children");
            if (g != whole && (g.w < spec_.min_part_width || g.h < spec_.min_part_height))
                fail("terminal below minimal part size");
            break;
        case NodeKind::Or: {
            if (n.children.empty()) fail("Or-node without children");
            int wrappers = 0;
            for (const Edge& e : n.children) {
                const AogNode& c = node(e.child);
                if (e.type != EdgeType::Switch || c.kind != NodeKind::And || c.region != g)
                    fail("Or-node child must be an And-node over the same region");
                if (c.and_type() != EdgeType::Decomposition) ++wrappers;
            }
            if (wrappers > 1) fail("Or-node with more than one terminal wrapper");
            break;
        }
        case NodeKind::And: {
            const EdgeType t = n.and_type();
            if (t == EdgeType::Decomposition) {
                if (n.children.size() != 2) fail("decomposition must have two children");
                for (const Edge& e : n.children) {
                    const AogNode& c = node(e.child);
                    if (e.type != t || c.kind != NodeKind::Or || !g.contains(c.region))
                        fail("decomposition child must be a contained Or-node");
                }
            } else if (t == EdgeType::Deformation || t == EdgeType::Termination) {
                if (n.children.size() != 1) fail("terminal wrapper must have one child");
                const AogNode& c = node(n.children[0].child);
                if (c.kind != NodeKind::Terminal || c.region != g) fail("wrapper must own its terminal");
                if ((t == EdgeType::Termination) != (g == whole))
                    fail("only the object terminal uses a Termination edge");
            } else {
                fail("And-node with switch edges");
            }
            break;
        }
        }
    }
    // postorder() throws on cycles; reachability follows from it covering all nodes.
    if (postorder().size() != nodes_.size()) fail("unreachable nodes");
}

// ---------------------------------------------------------------------------

Aog build_full_aog(const GridSpec& spec) {
    check_spec(spec);
    Aog g;
    g.spec_ = spec;

    std::map<GridRegion, NodeId> or_nodes;
    std::deque<NodeId> queue;

    auto add = [&](NodeKind kind, const GridRegion& region) {
        AogNode n;
        n.id = static_cast<NodeId>(g.nodes_.size());
        n.kind = kind;
        n.region = region;
        g.nodes_.push_back(n);
        queue.push_back(n.id);
        return n.id;
    };
    auto or_node = [&](const GridRegion& region) {
        auto it = or_nodes.find(region);
        if (it != or_nodes.end()) return it->second;
        const NodeId id = add(NodeKind::Or, region);
        or_nodes.emplace(region, id);
        return id;
    };

    const GridRegion whole{0, 0, spec.width, spec.height};
    or_node(whole);

    while (!queue.empty()) {
        const NodeId id = queue.front();
        queue.pop_front();
        const AogNode current = g.nodes_[static_cast<std::size_t>(id)];
        std::vector<Edge> edges;

        if (current.kind == NodeKind::Or) {
            edges.push_back({add(NodeKind::And, current.region), EdgeType::Switch});
            for (const Cut& c : valid_cuts(current.region, spec)) {
                const NodeId a = add(NodeKind::And, current.region);
                auto& an = g.nodes_[static_cast<std::size_t>(a)];
                an.axis = c.axis;
                an.cut = c.pos;
                an.overlap = c.overlap;
                edges.push_back({a, EdgeType::Switch});
            }
        } else if (current.kind == NodeKind::And) {
            if (current.axis == CutAxis::None) {
                const EdgeType t = current.region == whole ? EdgeType::Termination : EdgeType::Deformation;
                edges.push_back({add(NodeKind::Terminal, current.region), t});
            } else {
                const GridRegion& r = current.region;
                GridRegion a, b;
                if (current.axis == CutAxis::Vertical) {
                    a = {r.x, r.y, current.cut + current.overlap, r.h};
                    b = {r.x + current.cut, r.y, r.w - current.cut, r.h};
                } else {
                    a = {r.x, r.y, r.w, current.cut + current.overlap};
                    b = {r.x, r.y + current.cut, r.w, r.h - current.cut};
                }
                const NodeId oa = or_node(a);
                const NodeId ob = or_node(b);
                edges.push_back({oa, EdgeType::Decomposition});
                edges.push_back({ob, EdgeType::Decomposition});
            }
        }
        g.nodes_[static_cast<std::size_t>(id)].children = std::move(edges);
    }

    g.source_ids_.resize(g.nodes_.size());
    for (std::size_t i = 0; i < g.nodes_.size(); ++i) g.source_ids_[i] = static_cast<NodeId>(i);
    return g;
}

BigCount count_parse_trees(const Aog& aog) {
    std::vector<BigCount> count(aog.size());
    for (NodeId id : aog.postorder()) {
        const AogNode& n = aog.node(id);
        BigCount& c = count[static_cast<std::size_t>(id)];
        switch (n.kind) {
        case NodeKind::Terminal:
            c = 1;
            break;
        case NodeKind::Or:
            c = 0;
            for (const Edge& e : n.children) c += count[static_cast<std::size_t>(e.child)];
            break;
        case NodeKind::And:
            c = 1;
            for (const Edge& e : n.children) c *= count[static_cast<std::size_t>(e.child)];
            break;
        }
    }
    return aog.size() ? count[0] : BigCount(0);
}

std::optional<std::uint64_t> count_configurations(const Aog& aog, std::uint64_t budget) {
    if (count_parse_trees(aog) > budget) return std::nullopt;

    // A configuration is the sorted list of terminal regions. Deduplicating per
    // node gives the same final set as deduplicating whole-tree collapses.
    using Config = std::vector<GridRegion>;
    std::vector<std::set<Config>> configs(aog.size());
    for (NodeId id : aog.postorder()) {
        const AogNode& n = aog.node(id);
        auto& out = configs[static_cast<std::size_t>(id)];
        switch (n.kind) {
        case NodeKind::Terminal:
            out.insert(Config{n.region});
            break;
        case NodeKind::Or:
            for (const Edge& e : n.children) {
                const auto& in = configs[static_cast<std::size_t>(e.child)];
                out.insert(in.begin(), in.end());
            }
            break;
        case NodeKind::And: {
            std::set<Config> acc{Config{}};
            for (const Edge& e : n.children) {
                std::set<Config> next;
                for (const Config& left : acc) {
                    for (const Config& right : configs[static_cast<std::size_t>(e.child)]) {
                        Config merged = left;
                        merged.insert(merged.end(), right.begin(), right.end());
                        std::sort(merged.begin(), merged.end());
                        next.insert(std::move(merged));
                    }
                }
                acc = std::move(next);
            }
            out = std::move(acc);
            break;
        }
        }
    }
    if (configs.empty()) return 0;
    // The unsplit object is not a part configuration.
    const GridRegion whole{0, 0, aog.spec().width, aog.spec().height};
    return configs[0].size() - configs[0].count(Config{whole});
}

Aog extract_subgraph(const Aog& aog, const ChildSelection& kept) {
    if (aog.size() == 0) throw std::invalid_argument("cannot extract from an empty AOG");
    for (const auto& [or_id, children] : kept) {
        if (or_id < 0 || static_cast<std::size_t>(or_id) >= aog.size() ||
            aog.node(or_id).kind != NodeKind::Or)
            throw std::invalid_argument("selection key is not an Or-node: " + std::to_string(or_id));
        for (NodeId c : children) {
            const auto& edges = aog.node(or_id).children;
            if (std::none_of(edges.begin(), edges.end(), [&](const Edge& e) { return e.child == c; }))
                throw std::invalid_argument("selected node " + std::to_string(c) +
                                            " is not a child of Or-node " + std::to_string(or_id));
        }
    }

    auto keeps = [&](NodeId or_id, NodeId child) {
        auto it = kept.find(or_id);
        if (it == kept.end()) return true;
        return std::find(it->second.begin(), it->second.end(), child) != it->second.end();
    };

    std::vector<NodeId> new_id(aog.size(), kNoNode);
    std::vector<NodeId> order;
    std::deque<NodeId> queue{aog.root()};
    new_id[0] = 0;
    order.push_back(0);
    while (!queue.empty()) {
        const NodeId id = queue.front();
        queue.pop_front();
        const AogNode& n = aog.node(id);
        bool any = false;
        for (const Edge& e : n.children) {
            if (n.kind == NodeKind::Or && !keeps(id, e.child)) continue;
            any = true;
            if (new_id[static_cast<std::size_t>(e.child)] == kNoNode) {
                new_id[static_cast<std::size_t>(e.child)] = static_cast<NodeId>(order.size());
                order.push_back(e.child);
                queue.push_back(e.child);
            }
        }
        if (n.kind == NodeKind::Or && !any)
            throw std::invalid_argument("reachable Or-node " + std::to_string(id) + " keeps no children");
    }

    Aog out;
    out.spec_ = aog.spec();
    out.nodes_.reserve(order.size());
    out.source_ids_.reserve(order.size());
    for (NodeId old : order) {
        AogNode n = aog.node(old);
        n.id = new_id[static_cast<std::size_t>(old)];
        std::vector<Edge> edges;
        for (const Edge& e : n.children) {
            if (n.kind == NodeKind::Or && !keeps(old, e.child)) continue;
            edges.push_back({new_id[static_cast<std::size_t>(e.child)], e.type});
        }
        n.children = std::move(edges);
        out.nodes_.push_back(std::move(n));
        out.source_ids_.push_back(aog.source_id(old));
    }
    out.validate();
    return out;
}

// ---------------------------------------------------------------------------

const ParseNode* ParseTree::find(NodeId id) const {
    for (const auto& n : nodes)
        if (n.node == id) return &n;
    return nullptr;
}

std::vector<NodeId> ParseTree::terminals(const Aog& aog) const {
    std::vector<NodeId> out;
    for (const auto& n : nodes)
        if (aog.node(n.node).kind == NodeKind::Terminal) out.push_back(n.node);
    return out;
}

CellRect node_cells(const Aog& aog, const PartLayout& layout, NodeId id) {
    const int k = layout.cells_per_unit;
    if (aog.is_object_level(id)) return {0, 0, k * aog.spec().width, k * aog.spec().height};
    const GridRegion& r = aog.node(id).region;
    const int f = k * layout.part_resolution;
    return {f * r.x, f * r.y, f * r.w, f * r.h};
}

Box PyramidGeometry::cell_box(const Placement& p, int w_cells, int h_cells) const {
    const double s = levels.at(static_cast<std::size_t>(p.level)).scale;
    return {origin_x + p.x * s, origin_y + p.y * s, w_cells * s, h_cells * s};
}

Configuration collapse(const ParseTree& tree, const Aog& aog, const PartLayout& layout,
                       const Box& window, const PyramidGeometry& geometry) {
    Configuration c;
    c.boxes.push_back(window);
    const NodeId object = aog.object_terminal();
    for (const ParseNode& pn : tree.nodes) {
        const AogNode& n = aog.node(pn.node);
        if (n.kind != NodeKind::Terminal || pn.node == object) continue;
        const CellRect cells = node_cells(aog, layout, pn.node);
        const Placement& p = pn.placement;
        if (p.level < 0 || static_cast<std::size_t>(p.level) >= geometry.levels.size())
            throw std::logic_error("placement level outside pyramid");
        const LevelGeometry& lg = geometry.levels[static_cast<std::size_t>(p.level)];
        if (p.x < 0 || p.y < 0 || p.x + cells.w > lg.width || p.y + cells.h > lg.height)
            throw std::logic_error("placement outside pyramid level bounds");
        c.boxes.push_back(geometry.cell_box(p, cells.w, cells.h));
    }
    return c;
}

}  // namespace aog
