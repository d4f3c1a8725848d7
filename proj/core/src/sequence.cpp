#include "aogtrack/sequence.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <opencv2/imgcodecs.hpp>

namespace aog {

namespace fs = std::filesystem;

std::optional<SequenceFormat> parse_sequence_format(const std::string& name) {
    if (name == "tb") return SequenceFormat::Tb;
    if (name == "vot") return SequenceFormat::Vot;
    return std::nullopt;
}

cv::Mat Sequence::frame(std::size_t index) const {
    if (!images.empty()) return images.at(index);
    const fs::path& p = frame_paths.at(index);
    cv::Mat m = cv::imread(p.string(), cv::IMREAD_COLOR);
    if (m.empty()) throw std::runtime_error("cannot read image " + p.string());
    return m;
}

namespace {

std::vector<std::vector<double>> read_numbers(std::istream& is) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(is, line)) {
        for (char& c : line)
            if (c == ',' || c == '\t' || c == ';' || c == '\r') c = ' ';
        std::istringstream ls(line);
        std::vector<double> row;
        std::string tok;
        while (ls >> tok) {
            std::transform(tok.begin(), tok.end(), tok.begin(), [](unsigned char c) { return std::tolower(c); });
            if (tok == "nan") {
                row.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(tok, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != tok.size()) throw std::runtime_error("bad annotation value '" + tok + "'");
            row.push_back(v);
        }
        if (!row.empty()) rows.push_back(std::move(row));
    }
    return rows;
}

Box checked(Box b) {
    return b.valid() ? b : Box::invalid();
}

bool is_image(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".jpg" || ext == ".jpeg" || ext == ".png" || ext == ".bmp" || ext == ".ppm" || ext == ".pgm";
}

std::vector<fs::path> images_in(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && is_image(e.path())) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

Box polygon_box(std::span<const double> xy) {
    if (xy.size() < 2 || xy.size() % 2 != 0) throw std::invalid_argument("polygon needs an even number of values");
    double x0 = xy[0], x1 = xy[0], y0 = xy[1], y1 = xy[1];
    for (std::size_t i = 0; i < xy.size(); i += 2) {
        x0 = std::min(x0, xy[i]);
        x1 = std::max(x1, xy[i]);
        y0 = std::min(y0, xy[i + 1]);
        y1 = std::max(y1, xy[i + 1]);
    }
    return checked({x0, y0, x1 - x0, y1 - y0});
}

std::vector<Box> parse_tb_annotations(std::istream& is) {
    std::vector<Box> out;
    for (const auto& r : read_numbers(is)) {
        if (r.size() != 4) throw std::runtime_error("tb annotation lines need 4 values");
        out.push_back(checked({r[0] - 1.0, r[1] - 1.0, r[2], r[3]}));
    }
    return out;
}

std::vector<Box> parse_vot_annotations(std::istream& is) {
    std::vector<Box> out;
    for (const auto& r : read_numbers(is)) {
        if (r.size() == 8)
            out.push_back(polygon_box(r));
        else if (r.size() == 4)
            out.push_back(checked({r[0], r[1], r[2], r[3]}));
        else
            throw std::runtime_error("vot annotation lines need 4 or 8 values");
    }
    return out;
}

Sequence load_sequence(const fs::path& dir, SequenceFormat format) {
    if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
    Sequence s;
    s.name = dir.filename().string();
    if (s.name.empty()) s.name = dir.parent_path().filename().string();

    const fs::path sub = dir / (format == SequenceFormat::Tb ? "img" : "color");
    s.frame_paths = images_in(sub);
    if (s.frame_paths.empty()) s.frame_paths = images_in(dir);
    if (s.frame_paths.empty()) throw std::runtime_error("no frames in " + dir.string());

    fs::path ann;
    for (const char* name : {"groundtruth_rect.txt", "groundtruth.txt"})
        if (fs::exists(dir / name)) {
            ann = dir / name;
            break;
        }
    if (ann.empty()) throw std::runtime_error("no annotation file in " + dir.string());
    std::ifstream is(ann);
    s.ground_truth = format == SequenceFormat::Tb ? parse_tb_annotations(is) : parse_vot_annotations(is);
    if (s.ground_truth.size() != s.frame_paths.size())
        throw std::runtime_error(s.name + ": " + std::to_string(s.frame_paths.size()) + " frames but " +
                                 std::to_string(s.ground_truth.size()) + " annotations");
    if (s.ground_truth.size() < 2) throw std::runtime_error(s.name + ": need at least 2 frames");
    if (!s.ground_truth.front().valid()) throw std::runtime_error(s.name + ": first frame has no ground truth");

    std::ifstream attrs(dir / "attributes.txt");
    std::string tag;
    while (attrs >> tag) {
        tag.erase(std::remove(tag.begin(), tag.end(), ','), tag.end());
        if (!tag.empty()) s.attributes.insert(tag);
    }
    return s;
}

std::vector<fs::path> list_sequences(const fs::path& dataset, std::span<const std::string> only) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dataset)) throw std::runtime_error("not a directory: " + dataset.string());
    for (const auto& e : fs::directory_iterator(dataset)) {
        if (!e.is_directory()) continue;
        const std::string name = e.path().filename().string();
        if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
        if (fs::exists(e.path() / "groundtruth_rect.txt") || fs::exists(e.path() / "groundtruth.txt"))
            out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace aog
