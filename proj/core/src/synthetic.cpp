#include "aogtrack/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <opencv2/imgproc.hpp>

namespace aog {

namespace {

/// Smooth colour noise: coarse random grid upsampled, plus fine grain.
cv::Mat noise_texture(int w, int h, int coarse, std::mt19937_64& rng, double lo, double hi, double grain) {
    std::uniform_real_distribution<double> u(lo, hi);
    cv::Mat small(std::max(2, h / coarse), std::max(2, w / coarse), CV_8UC3);
    for (int y = 0; y < small.rows; ++y)
        for (int x = 0; x < small.cols; ++x)
            small.at<cv::Vec3b>(y, x) = cv::Vec3b(cv::saturate_cast<uchar>(u(rng)), cv::saturate_cast<uchar>(u(rng)),
                                                  cv::saturate_cast<uchar>(u(rng)));
    cv::Mat out;
    cv::resize(small, out, cv::Size(w, h), 0, 0, cv::INTER_CUBIC);
    std::normal_distribution<double> g(0.0, grain);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            cv::Vec3b& p = out.at<cv::Vec3b>(y, x);
            const double n = g(rng);
            for (int c = 0; c < 3; ++c) p[c] = cv::saturate_cast<uchar>(p[c] + n);
        }
    return out;
}

/// High-contrast object pattern: coloured stripes, a ring and a dark border.
cv::Mat object_texture(int w, int h, std::mt19937_64& rng) {
    cv::Mat t(h, w, CV_8UC3, cv::Scalar(40, 200, 230));
    const int stripes = 6;
    for (int i = 0; i < stripes; i += 2)
        cv::rectangle(t, cv::Rect(i * w / stripes, 0, w / stripes, h), cv::Scalar(200, 60, 30), cv::FILLED);
    cv::circle(t, {w / 2, h / 2}, std::min(w, h) / 3, cv::Scalar(20, 20, 200), std::max(2, w / 16));
    cv::rectangle(t, cv::Rect(0, 0, w, h), cv::Scalar(10, 10, 10), std::max(2, w / 24));
    std::normal_distribution<double> g(0.0, 6.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            cv::Vec3b& p = t.at<cv::Vec3b>(y, x);
            for (int c = 0; c < 3; ++c) p[c] = cv::saturate_cast<uchar>(p[c] + g(rng));
        }
    return t;
}

/// The same object with its upper half repainted.
cv::Mat switched_texture(const cv::Mat& base, std::mt19937_64& rng) {
    cv::Mat t = base.clone();
    const int w = t.cols, rows = t.rows / 2;
    cv::Mat top = t(cv::Rect(0, 0, w, rows));
    top.setTo(cv::Scalar(150, 220, 90));
    for (int i = -1; i < 6; ++i) {
        const int x = i * w / 5;
        cv::line(top, {x, 0}, {x + w / 4, rows}, cv::Scalar(90, 30, 160), std::max(2, w / 20));
    }
    std::normal_distribution<double> g(0.0, 6.0);
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < w; ++x) {
            cv::Vec3b& p = t.at<cv::Vec3b>(y, x);
            for (int c = 0; c < 3; ++c) p[c] = cv::saturate_cast<uchar>(p[c] + g(rng));
        }
    return t;
}

void paste(cv::Mat& frame, const cv::Mat& texture, const Box& box) {
    const int w = std::max(1, static_cast<int>(std::lround(box.w)));
    const int h = std::max(1, static_cast<int>(std::lround(box.h)));
    cv::Mat scaled;
    cv::resize(texture, scaled, cv::Size(w, h), 0, 0, cv::INTER_AREA);
    const cv::Rect dst(static_cast<int>(std::lround(box.x)), static_cast<int>(std::lround(box.y)), w, h);
    const cv::Rect vis = dst & cv::Rect(0, 0, frame.cols, frame.rows);
    if (vis.empty()) return;
    scaled(cv::Rect(vis.x - dst.x, vis.y - dst.y, vis.width, vis.height)).copyTo(frame(vis));
}

bool within(int f, int a, int b) { return f >= a && f <= b; }

}  // namespace

Sequence make_synthetic_sequence(const SyntheticOptions& o) {
    std::mt19937_64 rng(o.seed);
    const cv::Mat background = noise_texture(o.width, o.height, 12, rng, 60, 190, 10.0);
    const cv::Mat base = object_texture(96, 80, rng);
    const cv::Mat panel_tex = noise_texture(o.width, o.height, 6, rng, 90, 140, 4.0);
    const cv::Mat changed = switched_texture(base, rng);

    // Velocities are bounded by max_speed; during the occlusion the object
    // moves fast enough to end up outside the search region.
    std::vector<double> cx(static_cast<std::size_t>(o.frames)), cy(cx.size()), sc(cx.size());
    double x = 0.3 * o.width, y = 0.5 * o.height;
    for (int f = 0; f < o.frames; ++f) {
        double vx, vy;
        if (within(f, o.occlusion_begin, o.occlusion_end + 1)) {
            vx = 0.9 * o.max_speed;
            vy = 0.0;
        } else {
            vx = 0.5 * o.max_speed * std::sin(2.0 * M_PI * f / 45.0);
            vy = 0.4 * o.max_speed * std::cos(2.0 * M_PI * f / 33.0);
        }
        if (f > 0) {
            x += vx;
            y += vy;
        }
        const double margin = 0.5 * o.object_width * (1.0 + o.scale_amplitude) + 4.0;
        x = std::clamp(x, margin, o.width - margin);
        y = std::clamp(y, margin, o.height - margin);
        cx[static_cast<std::size_t>(f)] = x;
        cy[static_cast<std::size_t>(f)] = y;
        sc[static_cast<std::size_t>(f)] = 1.0 + o.scale_amplitude * std::sin(2.0 * M_PI * f / 50.0);
    }

    // Panel covering every position the object takes while occluded.
    Box panel = Box::invalid();
    for (int f = o.occlusion_begin; f <= o.occlusion_end && f < o.frames; ++f) {
        const auto i = static_cast<std::size_t>(f);
        const Box b = Box::from_center(cx[i], cy[i], o.object_width * sc[i] + 16, o.object_height * sc[i] + 16);
        panel = panel.valid() ? united(panel, b) : b;
    }

    Sequence s;
    s.name = "synthetic";
    s.attributes = {"OCC", "SV", "OV", "FM"};
    for (int f = 0; f < o.frames; ++f) {
        const auto i = static_cast<std::size_t>(f);
        cv::Mat frame = background.clone();
        const Box box = Box::from_center(cx[i], cy[i], o.object_width * sc[i], o.object_height * sc[i]);
        const bool occluded = within(f, o.occlusion_begin, o.occlusion_end);
        const bool offscreen = within(f, o.offscreen_begin, o.offscreen_end);
        if (!offscreen) paste(frame, f >= o.texture_switch ? changed : base, box);
        if (occluded && panel.valid()) {
            const cv::Rect r = cv::Rect(static_cast<int>(std::floor(panel.x)), static_cast<int>(std::floor(panel.y)),
                                        static_cast<int>(std::ceil(panel.w)), static_cast<int>(std::ceil(panel.h))) &
                               cv::Rect(0, 0, o.width, o.height);
            panel_tex(r).copyTo(frame(r));
        }
        s.images.push_back(frame);
        s.ground_truth.push_back(occluded || offscreen ? Box::invalid() : box);
    }
    return s;
}

}  // namespace aog
