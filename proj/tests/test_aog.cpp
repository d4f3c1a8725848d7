#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "aogtrack/aog.hpp"
#include "aogtrack/aog_io.hpp"
#include "support/oracles.hpp"

using namespace aog;

namespace {

Aog full(int w, int h, int min_part = 1, double overlap = 0.0) {
    GridSpec s;
    s.width = w;
    s.height = h;
    s.min_part_width = s.min_part_height = min_part;
    s.overlap_ratio = overlap;
    return build_full_aog(s);
}

}  // namespace

TEST_CASE("full AOG node counts match the closed forms") {
    CHECK(full(3, 3).decomposition_count() == 48);
    CHECK(full(3, 3).part_terminal_count() == 35);
    CHECK(full(5, 5).decomposition_count() == 600);
    CHECK(full(5, 5).part_terminal_count() == 224);
    for (int w = 1; w <= 5; ++w)
        for (int h = 1; h <= 5; ++h) {
            CAPTURE(w);
            CAPTURE(h);
            const Aog g = full(w, h);
            CHECK(g.decomposition_count() == oracle::decomposition_nodes(w, h));
            CHECK(g.part_terminal_count() == oracle::part_terminals(w, h));
        }
}

TEST_CASE("1x1 grid is a single terminal under the root") {
    const Aog g = full(1, 1);
    CHECK(g.decomposition_count() == 0);
    CHECK(g.part_terminal_count() == 0);
    CHECK(count_parse_trees(g) == 1);
    CHECK(g.object_terminal() != kNoNode);
}

TEST_CASE("parse tree counts follow the split recursion") {
    CHECK(count_parse_trees(full(3, 3)) == 1241);
    for (int w = 1; w <= 4; ++w)
        for (int h = 1; h <= 4; ++h) CHECK(count_parse_trees(full(w, h)) == oracle::split_trees(w, h));
}

TEST_CASE("configuration count equals guillotine partitions minus the unsplit grid") {
    CHECK(oracle::guillotine_partitions(2, 2) == 8);
    CHECK(oracle::guillotine_partitions(3, 3) == 320);
    CHECK(oracle::guillotine_partitions(4, 4) == 68480);
    CHECK(oracle::guillotine_partitions(5, 5) == 76879360ull);
    CHECK(count_configurations(full(3, 3), 1u << 20) == std::optional<std::uint64_t>(319));
    for (int w = 1; w <= 3; ++w)
        for (int h = 1; h <= 4; ++h)
            CHECK(count_configurations(full(w, h), 1u << 20) == oracle::guillotine_partitions(w, h) - 1);
}

TEST_CASE("configuration count agrees with deduplicated tree enumeration") {
    const auto trees = oracle::enumerate_trees(3, 3);
    CHECK(trees.size() == 1241);
    std::set<std::vector<std::array<int, 4>>> distinct;
    for (auto t : trees) {
        std::sort(t.begin(), t.end());
        distinct.insert(t);
    }
    distinct.erase({{0, 0, 3, 3}});
    CHECK(distinct.size() == 319);
}

TEST_CASE("configuration enumeration respects the budget") {
    CHECK_FALSE(count_configurations(full(3, 3), 100).has_value());
}

TEST_CASE("invalid grid specifications are rejected") {
    CHECK_THROWS_AS(full(0, 3), std::invalid_argument);
    CHECK_THROWS_AS(full(3, 3, 4), std::invalid_argument);
    CHECK_THROWS_AS(full(3, 3, 1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(full(3, 3, 1, -0.1), std::invalid_argument);
}

TEST_CASE("minimum part size limits the cuts") {
    const Aog g = full(4, 4, 2);
    for (const AogNode& n : g.nodes()) {
        CHECK(n.region.w >= 2);
        CHECK(n.region.h >= 2);
    }
    // The whole grid has one cut per axis, each 2x4 or 4x2 half one more.
    CHECK(g.decomposition_count() == 2 + 2 + 2);
}

TEST_CASE("overlapping cuts add decompositions") {
    const Aog plain = full(4, 4);
    const Aog overlapped = full(4, 4, 1, 0.5);
    CHECK(overlapped.decomposition_count() > plain.decomposition_count());
    overlapped.validate();
}

TEST_CASE("structure invariants hold for random grids") {
    oracle::Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const int w = oracle::uniform_int(rng, 1, 5), h = oracle::uniform_int(rng, 1, 5);
        const Aog g = full(w, h);
        CHECK_NOTHROW(g.validate());
        const auto order = g.postorder();
        CHECK(order.size() == g.size());
        CHECK(order.back() == g.root());
        std::vector<int> position(g.size());
        for (std::size_t i = 0; i < order.size(); ++i) position[std::size_t(order[i])] = int(i);
        for (const AogNode& n : g.nodes()) {
            if (n.kind == NodeKind::Terminal) CHECK(n.children.empty());
            if (n.kind == NodeKind::Or) CHECK_FALSE(n.children.empty());
            for (const Edge& e : n.children) {
                CHECK(position[std::size_t(e.child)] < position[std::size_t(n.id)]);
                CHECK(n.region.contains(g.node(e.child).region));
            }
            if (n.kind == NodeKind::And && n.axis != CutAxis::None) {
                // The two halves tile the parent exactly.
                const GridRegion& a = g.node(n.children[0].child).region;
                const GridRegion& b = g.node(n.children[1].child).region;
                CHECK(a.area() + b.area() == n.region.area());
            }
        }
    }
}

TEST_CASE("extract_subgraph keeps everything with an empty selection") {
    const Aog g = full(3, 2);
    CHECK(extract_subgraph(g, {}) == g);
}

TEST_CASE("keeping only the object wrapper leaves one terminal") {
    const Aog g = full(3, 3);
    NodeId wrapper = kNoNode;
    for (const Edge& e : g.node(g.root()).children)
        if (g.is_object_level(e.child)) wrapper = e.child;
    const Aog sub = extract_subgraph(g, {{g.root(), {wrapper}}});
    CHECK(sub.count(NodeKind::Terminal) == 1);
    CHECK(sub.object_terminal() != kNoNode);
    CHECK(sub.source_id(sub.object_terminal()) == g.object_terminal());
    CHECK(count_parse_trees(sub) == 1);
}

TEST_CASE("random selections shrink the graph and keep the root") {
    oracle::Rng rng(5);
    const Aog g = full(3, 3);
    for (int trial = 0; trial < 20; ++trial) {
        ChildSelection sel;
        for (const AogNode& n : g.nodes()) {
            if (n.kind != NodeKind::Or) continue;
            std::vector<NodeId> kids;
            for (const Edge& e : n.children)
                if (oracle::uniform(rng, 0, 1) < 0.5) kids.push_back(e.child);
            if (kids.empty()) kids.push_back(n.children.front().child);
            sel[n.id] = kids;
        }
        const Aog sub = extract_subgraph(g, sel);
        CHECK(sub.size() <= g.size());
        CHECK(sub.node(sub.root()).region == g.node(g.root()).region);
        CHECK(count_parse_trees(sub) <= count_parse_trees(g));
        CHECK_NOTHROW(sub.validate());
    }
}

TEST_CASE("selections naming a non-child are rejected") {
    const Aog g = full(2, 2);
    CHECK_THROWS_AS(extract_subgraph(g, {{g.root(), {NodeId(g.size() - 1)}}}), std::invalid_argument);
    CHECK_THROWS_AS(extract_subgraph(g, {{g.root(), {}}}), std::invalid_argument);
}

TEST_CASE("structure serialisation round trips") {
    for (const Aog& g : {full(3, 3), full(4, 2, 1, 0.5), full(1, 1)}) {
        std::stringstream ss;
        serialize_aog_structure(g, ss);
        CHECK(deserialize_aog_structure(ss) == g);
    }
    std::stringstream bad("aog-structure 1\ngrid 2 2\n");
    CHECK_THROWS(deserialize_aog_structure(bad));
}

TEST_CASE("collapse maps placements to image boxes") {
    const Aog g = full(2, 2);
    const PartLayout layout{2, 0, 1};
    PyramidGeometry geo;
    geo.origin_x = 10;
    geo.origin_y = 20;
    geo.levels = {{4.0, 40, 40}, {8.0, 20, 20}};

    // Root, object wrapper and object terminal only.
    ParseTree object_only;
    const NodeId wrapper = g.node(g.root()).children.front().child;
    object_only.nodes = {{g.root(), {0, 3, 5}, wrapper}, {wrapper, {0, 3, 5}}, {g.object_terminal(), {0, 3, 5}}};
    const Box window = geo.cell_box({0, 3, 5}, 4, 4);
    CHECK(collapse(object_only, g, layout, window, geo).boxes == std::vector<Box>{window});

    // A vertical cut into two undisplaced halves tiles the window.
    NodeId cut = kNoNode;
    for (const Edge& e : g.node(g.root()).children)
        if (g.node(e.child).axis == CutAxis::Vertical) cut = e.child;
    REQUIRE(cut != kNoNode);
    const Placement root{1, 2, 2};
    ParseTree split;
    split.nodes.push_back({g.root(), root, cut});
    split.nodes.push_back({cut, root});
    for (const Edge& e : g.node(cut).children) {
        const AogNode& orn = g.node(e.child);
        NodeId def = kNoNode;
        for (const Edge& c : orn.children)
            if (g.node(c.child).axis == CutAxis::None) def = c.child;
        const NodeId term = g.node(def).children.front().child;
        const Placement p{1, root.x + 2 * orn.region.x, root.y + 2 * orn.region.y};
        split.nodes.push_back({e.child, p, def});
        split.nodes.push_back({def, p});
        split.nodes.push_back({term, p});
    }
    const Box win = geo.cell_box(root, 4, 4);
    const Configuration conf = collapse(split, g, layout, win, geo);
    REQUIRE(conf.boxes.size() == 3);
    CHECK(conf.boxes[1].area() + conf.boxes[2].area() == doctest::Approx(win.area()));
    CHECK(united(conf.boxes[1], conf.boxes[2]) == win);
    CHECK(conf.boxes[1].x == doctest::Approx(26.0));
    CHECK(conf.boxes[2].x == doctest::Approx(42.0));
    CHECK(intersection(conf.boxes[1], conf.boxes[2]).area() == 0.0);

    // Shifting a part terminal by (dx, dy) cells moves its box by (dx, dy) * scale.
    ParseTree shifted = split;
    ParseNode& term = shifted.nodes.back();
    term.placement.x += 2;
    term.placement.y -= 1;
    const Configuration moved = collapse(shifted, g, layout, win, geo);
    CHECK(moved.boxes[2].x == doctest::Approx(conf.boxes[2].x + 2 * 8.0));
    CHECK(moved.boxes[2].y == doctest::Approx(conf.boxes[2].y - 1 * 8.0));

    term.placement.x = 19;
    CHECK_THROWS_AS(collapse(shifted, g, layout, win, geo), std::logic_error);
}
