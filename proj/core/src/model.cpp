#include "aogtrack/model.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "aogtrack/aog_io.hpp"

namespace aog {

namespace {

std::string hexfloat(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double read_double(std::istream& is) {
    std::string s;
    if (!(is >> s)) throw std::runtime_error("model file truncated");
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw std::runtime_error("bad number in model file: " + s);
    return v;
}

void expect(std::istream& is, const char* token) {
    std::string t;
    if (!(is >> t) || t != token)
        throw std::runtime_error(std::string("model file: expected '") + token + "', got '" + t + "'");
}

template <class T>
void put(std::string& out, const T& v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

template <class T>
T get(const std::string& in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) throw std::runtime_error("model parameter blob truncated");
    T v;
    std::memcpy(&v, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

}  // namespace

Box Model::window_to_box(const Box& w) const {
    return Box::from_center(w.center_x(), w.center_y(), w.w * box_ratio_x, w.h * box_ratio_y);
}

Box Model::box_to_window(const Box& b) const {
    return Box::from_center(b.center_x(), b.center_y(), b.w / box_ratio_x, b.h / box_ratio_y);
}

bool has_deformation(const Aog& aog, NodeId id) {
    const AogNode& n = aog.node(id);
    return n.kind == NodeKind::And && n.and_type() == EdgeType::Deformation;
}

bool has_bias(const Aog& aog, NodeId id) {
    for (const Edge& e : aog.node(aog.root()).children)
        if (e.child == id) return true;
    return false;
}

void Model::validate() const {
    const std::size_t n = aog.size();
    if (params.appearance.size() != n || params.deformation.size() != n || params.bias.size() != n)
        throw std::logic_error("parameter tables do not match the AOG");
    for (const AogNode& node : aog.nodes()) {
        const auto i = static_cast<std::size_t>(node.id);
        if (node.kind == NodeKind::Terminal) {
            const CellRect c = node_cells(aog, layout, node.id);
            if (params.appearance[i].size() != std::size_t(c.w) * c.h * channels)
                throw std::logic_error("appearance weights do not match terminal " + std::to_string(node.id));
        } else if (!params.appearance[i].empty()) {
            throw std::logic_error("appearance weights on a non-terminal node");
        }
    }
    if (!(box_ratio_x > 0.0) || !(box_ratio_y > 0.0)) throw std::logic_error("box ratios must be positive");
}

ModelParams make_params(const Aog& aog, const PartLayout& layout, int channels,
                        const std::array<double, 4>& deformation) {
    ModelParams p;
    const std::size_t n = aog.size();
    p.appearance.resize(n);
    p.deformation.assign(n, {0.0, 0.0, 0.0, 0.0});
    p.bias.assign(n, 0.0);
    for (const AogNode& node : aog.nodes()) {
        const auto i = static_cast<std::size_t>(node.id);
        if (node.kind == NodeKind::Terminal) {
            const CellRect c = node_cells(aog, layout, node.id);
            p.appearance[i].assign(std::size_t(c.w) * c.h * channels, 0.0f);
        }
        if (has_deformation(aog, node.id)) p.deformation[i] = deformation;
    }
    return p;
}

void project_deformation(const Aog& aog, ModelParams& params) {
    for (const AogNode& n : aog.nodes()) {
        if (!has_deformation(aog, n.id)) continue;
        auto& d = params.deformation[static_cast<std::size_t>(n.id)];
        d[0] = std::max(d[0], kMinQuadratic);
        d[2] = std::max(d[2], kMinQuadratic);
    }
}

ParamLayout param_layout(const Model& model) {
    ParamLayout l;
    const std::size_t n = model.aog.size();
    l.appearance.assign(n, ParamLayout::npos);
    l.deformation.assign(n, ParamLayout::npos);
    l.bias.assign(n, ParamLayout::npos);
    for (const AogNode& node : model.aog.nodes()) {
        const auto i = static_cast<std::size_t>(node.id);
        if (node.kind == NodeKind::Terminal) {
            l.appearance[i] = l.size;
            l.size += model.params.appearance[i].size();
        }
    }
    for (const AogNode& node : model.aog.nodes()) {
        if (has_deformation(model.aog, node.id)) {
            l.deformation[static_cast<std::size_t>(node.id)] = l.size;
            l.size += 4;
        }
    }
    for (const AogNode& node : model.aog.nodes()) {
        if (has_bias(model.aog, node.id)) l.bias[static_cast<std::size_t>(node.id)] = l.size++;
    }
    return l;
}

std::vector<double> flatten(const Model& model, const ParamLayout& layout) {
    std::vector<double> theta(layout.size, 0.0);
    for (std::size_t i = 0; i < model.aog.size(); ++i) {
        if (layout.appearance[i] != ParamLayout::npos)
            std::copy(model.params.appearance[i].begin(), model.params.appearance[i].end(),
                      theta.begin() + static_cast<std::ptrdiff_t>(layout.appearance[i]));
        if (layout.deformation[i] != ParamLayout::npos)
            std::copy(model.params.deformation[i].begin(), model.params.deformation[i].end(),
                      theta.begin() + static_cast<std::ptrdiff_t>(layout.deformation[i]));
        if (layout.bias[i] != ParamLayout::npos) theta[layout.bias[i]] = model.params.bias[i];
    }
    return theta;
}

void unflatten(std::span<const double> theta, const ParamLayout& layout, Model& model) {
    if (theta.size() != layout.size) throw std::invalid_argument("parameter vector has the wrong length");
    for (std::size_t i = 0; i < model.aog.size(); ++i) {
        if (layout.appearance[i] != ParamLayout::npos) {
            auto& a = model.params.appearance[i];
            for (std::size_t j = 0; j < a.size(); ++j) a[j] = static_cast<float>(theta[layout.appearance[i] + j]);
        }
        if (layout.deformation[i] != ParamLayout::npos)
            for (std::size_t j = 0; j < 4; ++j) model.params.deformation[i][j] = theta[layout.deformation[i] + j];
        if (layout.bias[i] != ParamLayout::npos) model.params.bias[i] = theta[layout.bias[i]];
    }
}

void transfer_params(const Model& source, const Aog& target, ModelParams& into) {
    std::map<NodeId, NodeId> by_source;
    for (const AogNode& n : source.aog.nodes()) by_source[source.aog.source_id(n.id)] = n.id;
    for (const AogNode& n : target.nodes()) {
        const auto it = by_source.find(target.source_id(n.id));
        if (it == by_source.end()) continue;
        const auto i = static_cast<std::size_t>(n.id);
        const auto j = static_cast<std::size_t>(it->second);
        if (n.kind == NodeKind::Terminal && into.appearance[i].size() == source.params.appearance[j].size())
            into.appearance[i] = source.params.appearance[j];
        if (has_deformation(target, n.id) && has_deformation(source.aog, it->second))
            into.deformation[i] = source.params.deformation[j];
        if (has_bias(target, n.id) && has_bias(source.aog, it->second)) into.bias[i] = source.params.bias[j];
    }
}

Model restrict_model(const Model& model, const ChildSelection& kept) {
    Model out = model;
    out.aog = extract_subgraph(model.aog, kept);
    out.params = make_params(out.aog, out.layout, out.channels);
    transfer_params(model, out.aog, out.params);
    return out;
}

// ---------------------------------------------------------------------------

void save_model(const Model& model, std::ostream& os) {
    model.validate();
    const FeatureConfig& f = model.features;
    os << "aogtrack-model 1\n";
    os << "features cell " << f.cell_size << " interval " << f.interval << " hog " << f.hog << " lbp " << f.lbp
       << " color " << f.color << " channels " << model.channels << '\n';
    os << "layout " << model.layout.cells_per_unit << ' ' << model.layout.part_level_offset << ' '
       << model.layout.part_resolution << '\n';
    os << "threshold " << hexfloat(model.threshold) << '\n';
    os << "box-ratio " << hexfloat(model.box_ratio_x) << ' ' << hexfloat(model.box_ratio_y) << '\n';
    serialize_aog_structure(model.aog, os);

    std::string blob;
    for (const AogNode& n : model.aog.nodes()) {
        const auto i = static_cast<std::size_t>(n.id);
        const auto& a = model.params.appearance[i];
        put(blob, static_cast<std::int32_t>(n.id));
        put(blob, static_cast<std::uint32_t>(a.size()));
        for (float v : a) put(blob, v);
        for (double v : model.params.deformation[i]) put(blob, v);
        put(blob, model.params.bias[i]);
    }
    os << "params " << blob.size() << '\n';
    os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    os << "\nend\n";
    if (!os) throw std::runtime_error("failed to write model");
}

Model load_model(std::istream& is) {
    Model m;
    expect(is, "aogtrack-model");
    int version = 0;
    if (!(is >> version) || version != 1) throw std::runtime_error("unsupported model version");
    int hog = 0, lbp = 0, color = 0;
    expect(is, "features");
    expect(is, "cell");
    is >> m.features.cell_size;
    expect(is, "interval");
    is >> m.features.interval;
    expect(is, "hog");
    is >> hog;
    expect(is, "lbp");
    is >> lbp;
    expect(is, "color");
    is >> color;
    expect(is, "channels");
    is >> m.channels;
    m.features.hog = hog != 0;
    m.features.lbp = lbp != 0;
    m.features.color = color != 0;
    expect(is, "layout");
    is >> m.layout.cells_per_unit >> m.layout.part_level_offset >> m.layout.part_resolution;
    if (!is) throw std::runtime_error("model file: bad header");
    expect(is, "threshold");
    m.threshold = read_double(is);
    expect(is, "box-ratio");
    m.box_ratio_x = read_double(is);
    m.box_ratio_y = read_double(is);
    m.aog = deserialize_aog_structure(is);

    std::size_t nbytes = 0;
    expect(is, "params");
    if (!(is >> nbytes)) throw std::runtime_error("model file: missing blob size");
    is.get();  // newline
    std::string blob(nbytes, '\0');
    is.read(blob.data(), static_cast<std::streamsize>(nbytes));
    if (static_cast<std::size_t>(is.gcount()) != nbytes) throw std::runtime_error("model parameter blob truncated");
    expect(is, "end");

    const std::size_t n = m.aog.size();
    m.params.appearance.resize(n);
    m.params.deformation.resize(n);
    m.params.bias.resize(n);
    std::size_t pos = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto id = get<std::int32_t>(blob, pos);
        if (id < 0 || static_cast<std::size_t>(id) >= n) throw std::runtime_error("model blob: bad node id");
        const auto i = static_cast<std::size_t>(id);
        const auto len = get<std::uint32_t>(blob, pos);
        m.params.appearance[i].resize(len);
        for (auto& v : m.params.appearance[i]) v = get<float>(blob, pos);
        for (auto& v : m.params.deformation[i]) v = get<double>(blob, pos);
        m.params.bias[i] = get<double>(blob, pos);
    }
    if (pos != blob.size()) throw std::runtime_error("model blob has trailing bytes");
    m.validate();
    return m;
}

void save_model_file(const Model& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    save_model(model, os);
}

Model load_model_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    return load_model(is);
}

}  // namespace aog
