#include "aogtrack/aog_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace aog {

namespace {

char kind_char(NodeKind k) {
    switch (k) {
    case NodeKind::Or: return 'O';
    case NodeKind::And: return 'A';
    case NodeKind::Terminal: return 'T';
    }
    return '?';
}

char axis_char(CutAxis a) {
    switch (a) {
    case CutAxis::None: return 'N';
    case CutAxis::Vertical: return 'V';
    case CutAxis::Horizontal: return 'H';
    }
    return '?';
}

char edge_char(EdgeType t) {
    switch (t) {
    case EdgeType::Switch: return 'S';
    case EdgeType::Decomposition: return 'C';
    case EdgeType::Deformation: return 'D';
    case EdgeType::Termination: return 'T';
    }
    return '?';
}

[[noreturn]] void malformed(const std::string& what) {
    throw std::runtime_error("malformed AOG structure: " + what);
}

std::string hexfloat(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double parse_double(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') malformed("bad number '" + s + "'");
    return v;
}

void expect(std::istream& is, const std::string& token) {
    std::string t;
    if (!(is >> t) || t != token) malformed("expected '" + token + "', got '" + t + "'");
}

}  // namespace

void serialize_aog_structure(const Aog& aog, std::ostream& os) {
    const GridSpec& s = aog.spec();
    os << "aog-structure 1\n";
    os << "grid " << s.width << ' ' << s.height << " min-part " << s.min_part_width << ' '
       << s.min_part_height << " overlap " << hexfloat(s.overlap_ratio) << '\n';
    os << "nodes " << aog.size() << '\n';
    for (const AogNode& n : aog.nodes()) {
        os << n.id << ' ' << kind_char(n.kind) << ' ' << n.region.x << ' ' << n.region.y << ' '
           << n.region.w << ' ' << n.region.h << ' ' << axis_char(n.axis) << ' ' << n.cut << ' '
           << n.overlap << ' ' << aog.source_id(n.id) << ' ' << n.children.size();
        for (const Edge& e : n.children) os << ' ' << e.child << ':' << edge_char(e.type);
        os << '\n';
    }
    os << "end\n";
}

Aog deserialize_aog_structure(std::istream& is) {
    expect(is, "aog-structure");
    int version = 0;
    if (!(is >> version) || version != 1) malformed("unsupported version");

    Aog g;
    std::string overlap;
    expect(is, "grid");
    is >> g.spec_.width >> g.spec_.height;
    expect(is, "min-part");
    is >> g.spec_.min_part_width >> g.spec_.min_part_height;
    expect(is, "overlap");
    is >> overlap;
    if (!is) malformed("truncated header");
    g.spec_.overlap_ratio = parse_double(overlap);

    std::size_t count = 0;
    expect(is, "nodes");
    if (!(is >> count)) malformed("missing node count");
    g.nodes_.resize(count);
    g.source_ids_.resize(count);

    for (std::size_t i = 0; i < count; ++i) {
        AogNode& n = g.nodes_[i];
        char kind = 0, axis = 0;
        std::size_t k = 0;
        is >> n.id >> kind >> n.region.x >> n.region.y >> n.region.w >> n.region.h >> axis >> n.cut >>
            n.overlap >> g.source_ids_[i] >> k;
        if (!is) malformed("truncated node line " + std::to_string(i));
        switch (kind) {
        case 'O': n.kind = NodeKind::Or; break;
        case 'A': n.kind = NodeKind::And; break;
        case 'T': n.kind = NodeKind::Terminal; break;
        default: malformed("unknown node kind");
        }
        switch (axis) {
        case 'N': n.axis = CutAxis::None; break;
        case 'V': n.axis = CutAxis::Vertical; break;
        case 'H': n.axis = CutAxis::Horizontal; break;
        default: malformed("unknown cut axis");
        }
        for (std::size_t j = 0; j < k; ++j) {
            std::string tok;
            is >> tok;
            const auto colon = tok.find(':');
            if (colon == std::string::npos || colon + 2 != tok.size()) malformed("bad edge '" + tok + "'");
            Edge e;
            e.child = static_cast<NodeId>(std::stol(tok.substr(0, colon)));
            switch (tok[colon + 1]) {
            case 'S': e.type = EdgeType::Switch; break;
            case 'C': e.type = EdgeType::Decomposition; break;
            case 'D': e.type = EdgeType::Deformation; break;
            case 'T': e.type = EdgeType::Termination; break;
            default: malformed("unknown edge type");
            }
            n.children.push_back(e);
        }
    }
    expect(is, "end");
    g.validate();
    return g;
}

}  // namespace aog
