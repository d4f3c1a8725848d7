#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "aogtrack/geometry.hpp"

namespace aog {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

using BigCount = boost::multiprecision::cpp_int;

/// Sub-grid of the object grid, in grid units.
struct GridRegion {
    int x = 0;
    int y = 0;
    int w = 1;
    int h = 1;

    int area() const { return w * h; }
    bool contains(const GridRegion& o) const {
        return o.x >= x && o.y >= y && o.x + o.w <= x + w && o.y + o.h <= y + h;
    }
    friend auto operator<=>(const GridRegion&, const GridRegion&) = default;
};

enum class NodeKind : std::uint8_t { Or, And, Terminal };

enum class EdgeType : std::uint8_t {
    Switch,         // Or -> child
    Decomposition,  // And -> two Or-nodes
    Deformation,    // And -> part terminal, local displacement allowed
    Termination,    // And -> object terminal, no displacement
};

/// Which way a Decomposition And-node cuts its region.
enum class CutAxis : std::uint8_t {
    None,
    Vertical,    // left | right, cut position along x
    Horizontal,  // top / bottom, cut position along y
};

struct Edge {
    NodeId child = kNoNode;
    EdgeType type = EdgeType::Switch;
    friend bool operator==(const Edge&, const Edge&) = default;
};

struct AogNode {
    NodeId id = kNoNode;
    NodeKind kind = NodeKind::Or;
    GridRegion region;
    std::vector<Edge> children;

    // Decomposition And-nodes only.
    CutAxis axis = CutAxis::None;
    int cut = 0;      // offset of the cut from region origin, grid units
    int overlap = 0;  // cells by which the first child extends past the cut

    /// Edge type of an And-node's out-edges (Switch for Or and terminals).
    EdgeType and_type() const {
        return kind == NodeKind::And && !children.empty() ? children.front().type : EdgeType::Switch;
    }

    friend bool operator==(const AogNode&, const AogNode&) = default;
};

struct GridSpec {
    int width = 1;   // grid cells
    int height = 1;
    int min_part_width = 1;
    int min_part_height = 1;
    double overlap_ratio = 0.0;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Immutable And-Or graph over a cell grid. Node ids are dense and follow
/// BFS discovery order from the root Or-node (id 0).
class Aog {
public:
    Aog() = default;

    const GridSpec& spec() const { return spec_; }
    std::span<const AogNode> nodes() const { return nodes_; }
    const AogNode& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const { return nodes_.size(); }
    NodeId root() const { return nodes_.empty() ? kNoNode : 0; }

    /// Id this node had in the graph it was extracted from (itself for full graphs).
    NodeId source_id(NodeId id) const { return source_ids_.at(static_cast<std::size_t>(id)); }

    /// The terminal covering the whole grid, or kNoNode if it was pruned away.
    NodeId object_terminal() const;
    /// True for the root Or, the object terminal and its Termination wrapper.
    bool is_object_level(NodeId id) const;

    std::size_t count(NodeKind kind) const;
    std::size_t decomposition_count() const;
    /// Terminal count excluding the object-level terminal.
    std::size_t part_terminal_count() const;

    /// Children before parents; root last.
    std::vector<NodeId> postorder() const;
    /// Root first, breadth-first over children.
    std::vector<NodeId> bfs_order() const;

    /// Throws std::logic_error when a structural invariant is violated.
    void validate() const;

    friend bool operator==(const Aog&, const Aog&) = default;

private:
    friend Aog build_full_aog(const GridSpec&);
    friend Aog extract_subgraph(const Aog&, const std::map<NodeId, std::vector<NodeId>>&);
    friend Aog deserialize_aog_structure(std::istream&);

    GridSpec spec_;
    std::vector<AogNode> nodes_;
    std::vector<NodeId> source_ids_;
};

/// Full-structure AOG of all binary guillotine splits of the grid. Throws
/// std::invalid_argument for an invalid grid / minimum part size / overlap.
Aog build_full_aog(const GridSpec& spec);

/// Exact number of parse trees (Or: sum, And: product, terminal: 1).
BigCount count_parse_trees(const Aog& aog);

/// Number of distinct part configurations (sets of terminal regions) across
/// all parse trees, not counting the unsplit object on its own. std::nullopt
/// when the parse-tree count exceeds `budget`.
std::optional<std::uint64_t> count_configurations(const Aog& aog, std::uint64_t budget);

/// Per-Or kept children. Or-nodes absent from the map keep all their children.
using ChildSelection = std::map<NodeId, std::vector<NodeId>>;

/// Subgraph rooted at the same Or-node, keeping only the selected Or-branches.
/// Throws std::invalid_argument if a reachable Or-node would lose all children
/// or a selection names a node that is not a child.
Aog extract_subgraph(const Aog& aog, const ChildSelection& kept);

// ---------------------------------------------------------------------------
// Parse trees and configurations

/// Position in a feature pyramid: level and top-left cell.
struct Placement {
    int level = 0;
    int x = 0;
    int y = 0;
    friend auto operator<=>(const Placement&, const Placement&) = default;
};

struct ParseNode {
    NodeId node = kNoNode;
    Placement placement;         // anchor; displaced position for terminals
    NodeId chosen = kNoNode;     // Or-nodes: selected child
    int dx = 0;                  // Deformation And-nodes: chosen displacement
    int dy = 0;
};

/// Instantiation of an AOG, in BFS order from the root.
struct ParseTree {
    std::vector<ParseNode> nodes;
    double score = 0.0;

    const ParseNode* find(NodeId id) const;
    std::vector<NodeId> terminals(const Aog& aog) const;
};

/// Maps AOG grid regions to feature cells. A grid unit spans
/// `cells_per_unit` cells at the object level; parts may live
/// `part_level_offset` pyramid levels below the object at
/// `part_resolution` times its resolution (1 or 2).
struct PartLayout {
    int cells_per_unit = 1;
    int part_level_offset = 0;
    int part_resolution = 1;

    friend bool operator==(const PartLayout&, const PartLayout&) = default;
};

struct CellRect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;
    friend bool operator==(const CellRect&, const CellRect&) = default;
};

/// Anchor offset (relative to the object window origin at the node's own
/// resolution) and extent of a node in feature cells.
CellRect node_cells(const Aog& aog, const PartLayout& layout, NodeId id);

struct LevelGeometry {
    double scale = 1.0;  // image pixels per cell
    int width = 0;       // cells
    int height = 0;
};

struct PyramidGeometry {
    double origin_x = 0.0;  // image position of the pyramid's (0, 0) cell corner
    double origin_y = 0.0;
    std::vector<LevelGeometry> levels;

    Box cell_box(const Placement& p, int w_cells, int h_cells) const;
};

struct Configuration {
    std::vector<Box> boxes;  // object window first
};

/// Collapse a parse tree onto the image: the object window followed by one
/// box per part terminal. Throws std::logic_error if a placement lies outside
/// its pyramid level.
Configuration collapse(const ParseTree& tree, const Aog& aog, const PartLayout& layout,
                       const Box& window, const PyramidGeometry& geometry);

}  // namespace aog
