#include "aogtrack/median_flow.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <opencv2/imgproc.hpp>
#include <opencv2/video/tracking.hpp>

namespace aog {

namespace {

cv::Mat gray(const cv::Mat& m) {
    if (m.channels() == 1) return m;
    cv::Mat g;
    cv::cvtColor(m, g, m.channels() == 4 ? cv::COLOR_BGRA2GRAY : cv::COLOR_BGR2GRAY);
    return g;
}

double median(std::vector<double> v) {
    const std::size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    double m = v[n / 2];
    if (n % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + n / 2));
    return m;
}

}  // namespace

std::optional<FlowTransform> median_flow(const cv::Mat& prev, const cv::Mat& next, const Box& box,
                                         const MedianFlowOptions& opts) {
    if (prev.size() != next.size()) throw std::invalid_argument("median flow needs frames of equal size");
    const Box b = clip(box, prev.cols, prev.rows);
    if (!b.valid() || opts.grid < 2) return std::nullopt;

    std::vector<cv::Point2f> p0;
    for (int j = 0; j < opts.grid; ++j)
        for (int i = 0; i < opts.grid; ++i)
            p0.emplace_back(static_cast<float>(b.x + (i + 0.5) * b.w / opts.grid),
                            static_cast<float>(b.y + (j + 0.5) * b.h / opts.grid));

    const cv::Mat g0 = gray(prev);
    const cv::Mat g1 = gray(next);
    const cv::TermCriteria term(cv::TermCriteria::COUNT | cv::TermCriteria::EPS, 20, 0.03);
    const cv::Size win(opts.window, opts.window);
    std::vector<cv::Point2f> p1, pb;
    std::vector<unsigned char> st1, stb;
    std::vector<float> err;
    cv::calcOpticalFlowPyrLK(g0, g1, p0, p1, st1, err, win, opts.pyramid_levels, term);
    cv::calcOpticalFlowPyrLK(g1, g0, p1, pb, stb, err, win, opts.pyramid_levels, term);

    std::vector<double> fb(p0.size(), HUGE_VAL);
    std::vector<double> finite;
    for (std::size_t k = 0; k < p0.size(); ++k) {
        if (!st1[k] || !stb[k]) continue;
        fb[k] = std::hypot(p0[k].x - pb[k].x, p0[k].y - pb[k].y);
        finite.push_back(fb[k]);
    }
    if (finite.empty()) return std::nullopt;
    const double fb_median = median(finite);

    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < p0.size(); ++k)
        if (fb[k] <= fb_median && fb[k] <= opts.max_fb_error) keep.push_back(k);
    if (keep.size() < 2 || double(keep.size()) < opts.min_survivors * double(p0.size())) return std::nullopt;

    std::vector<double> dxs, dys, ratios;
    for (std::size_t k : keep) {
        dxs.push_back(p1[k].x - p0[k].x);
        dys.push_back(p1[k].y - p0[k].y);
    }
    for (std::size_t a = 0; a < keep.size(); ++a) {
        for (std::size_t c = a + 1; c < keep.size(); ++c) {
            const auto i = keep[a], j = keep[c];
            const double d0 = std::hypot(p0[i].x - p0[j].x, p0[i].y - p0[j].y);
            const double d1 = std::hypot(p1[i].x - p1[j].x, p1[i].y - p1[j].y);
            if (d0 > 1e-6) ratios.push_back(d1 / d0);
        }
    }
    FlowTransform t;
    t.dx = median(dxs);
    t.dy = median(dys);
    t.scale = ratios.empty() ? 1.0 : median(ratios);
    return t;
}

std::optional<Box> median_flow_predict(const cv::Mat& prev, const cv::Mat& next, const Box& box,
                                       const MedianFlowOptions& opts) {
    const auto t = median_flow(prev, next, box, opts);
    if (!t) return std::nullopt;
    return t->apply(box);
}

}  // namespace aog
