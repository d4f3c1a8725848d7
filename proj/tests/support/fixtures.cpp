#include "fixtures.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <opencv2/imgproc.hpp>

#include "aogtrack/parser.hpp"

namespace fixtures {

cv::Mat noise_image(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> u(0, 255);
    cv::Mat coarse(std::max(2, h / 6), std::max(2, w / 6), CV_8UC3);
    for (int y = 0; y < coarse.rows; ++y)
        for (int x = 0; x < coarse.cols; ++x)
            coarse.at<cv::Vec3b>(y, x) = cv::Vec3b(uchar(u(rng)), uchar(u(rng)), uchar(u(rng)));
    cv::Mat out;
    cv::resize(coarse, out, cv::Size(w, h), 0, 0, cv::INTER_CUBIC);
    std::normal_distribution<double> g(0.0, 12.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            cv::Vec3b& p = out.at<cv::Vec3b>(y, x);
            for (int c = 0; c < 3; ++c) p[c] = cv::saturate_cast<uchar>(p[c] + g(rng));
        }
    return out;
}

cv::Mat translate(const cv::Mat& image, int dx, int dy) {
    const cv::Mat m = (cv::Mat_<double>(2, 3) << 1, 0, dx, 0, 1, dy);
    cv::Mat out;
    cv::warpAffine(image, out, m, image.size(), cv::INTER_NEAREST, cv::BORDER_REPLICATE);
    return out;
}

std::vector<aog::LsvmExample> random_examples(oracle::Rng& rng, const aog::Model& model, int count) {
    const aog::ParamLayout layout = aog::param_layout(model);
    const int f = model.layout.part_resolution;
    const int ow = model.window_width(), oh = model.window_height();
    std::vector<aog::LsvmExample> out;
    while (static_cast<int>(out.size()) < count) {
        const int w = ow + oracle::uniform_int(rng, 0, 4), h = oh + oracle::uniform_int(rng, 0, 4);
        const aog::FeaturePyramid pyr = oracle::random_pyramid(rng, {{f * w + 2, f * h + 2}, {w, h}}, model.channels);
        aog::ParseOptions opts;
        opts.min_level = model.layout.part_level_offset;
        opts.max_level = opts.min_level;
        const aog::ScoreMapPyramid maps = aog::compute_score_maps(model, pyr, opts);
        const aog::ScoreMap& root = maps.map(model.aog.root(), opts.min_level);
        const aog::Placement p{opts.min_level, oracle::uniform_int(rng, 0, root.width - 1),
                               oracle::uniform_int(rng, 0, root.height - 1)};
        if (!std::isfinite(root.at(p.x, p.y))) continue;
        const aog::ParseTree tree = aog::retrieve_parse_tree(model, maps, p);
        out.push_back({aog::extract_feature(model, layout, pyr, tree), oracle::uniform(rng, 0, 1) < 0.5 ? 1 : -1});
    }
    return out;
}

ParseInstance random_parse_instance(oracle::Rng& rng) {
    ParseInstance in;
    const int gw = oracle::uniform_int(rng, 1, 2), gh = oracle::uniform_int(rng, 1, 2);
    const int k = oracle::uniform_int(rng, 1, 2);
    const bool twice = oracle::uniform(rng, 0, 1) < 0.4;
    const int channels = oracle::uniform_int(rng, 1, 3);
    in.model = oracle::random_model(rng, gw, gh, channels, k, twice);
    in.radius = oracle::uniform_int(rng, 1, 3);
    const int ow = k * gw, oh = k * gh;
    const int w = ow + oracle::uniform_int(rng, 0, 5), h = oh + oracle::uniform_int(rng, 0, 5);
    std::vector<std::pair<int, int>> sizes;
    if (twice)
        sizes = {{2 * w + oracle::uniform_int(rng, -1, 2), 2 * h + oracle::uniform_int(rng, -1, 2)},
                 {w, h},
                 {std::max(ow, w - 1), std::max(oh, h - 1)}};
    else
        sizes = {{w + 2, h + 2}, {w, h}, {std::max(ow, w - 2), std::max(oh, h - 1)}};
    in.pyramid = oracle::random_pyramid(rng, sizes, channels);
    return in;
}

aog::TransitionCost DpInstance::cost() const {
    return [this](int a, int i, int b, int j) {
        if (next[std::size_t(a)] != b) throw std::logic_error("transition between non-consecutive valid frames");
        return edges[std::size_t(a)][std::size_t(i)][std::size_t(j)];
    };
}

DpInstance random_dp_instance(oracle::Rng& rng, int frames, int max_candidates) {
    DpInstance r;
    r.table.unary.resize(std::size_t(frames));
    for (auto& u : r.table.unary) {
        const int n = oracle::uniform(rng, 0, 1) < 0.2 ? 0 : oracle::uniform_int(rng, 1, max_candidates);
        for (int i = 0; i < n; ++i) u.push_back(oracle::uniform(rng, -5, 5));
    }
    r.next.assign(std::size_t(frames), -1);
    for (int f = 0; f < frames; ++f)
        for (int g = f + 1; g < frames; ++g)
            if (!r.table.unary[std::size_t(g)].empty()) {
                r.next[std::size_t(f)] = g;
                break;
            }
    const double inf_rate = oracle::uniform(rng, 0, 0.6);
    r.edges.resize(std::size_t(frames));
    for (int f = 0; f < frames; ++f) {
        const int g = r.next[std::size_t(f)];
        if (g < 0) continue;
        auto& e = r.edges[std::size_t(f)];
        e.assign(r.table.unary[std::size_t(f)].size(), std::vector<double>(r.table.unary[std::size_t(g)].size()));
        for (auto& row : e)
            for (double& v : row)
                v = oracle::uniform(rng, 0, 1) < inf_rate ? std::numeric_limits<double>::infinity()
                                                          : oracle::uniform(rng, 0, 4);
    }
    return r;
}

aog::Model object_only(const aog::Model& model) {
    aog::NodeId wrapper = aog::kNoNode;
    for (const aog::Edge& e : model.aog.node(model.aog.root()).children)
        if (model.aog.is_object_level(e.child)) wrapper = e.child;
    return aog::restrict_model(model, {{model.aog.root(), {wrapper}}});
}

std::filesystem::path temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("aogtrack_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace fixtures
