#include "aogtrack/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <opencv2/imgproc.hpp>

namespace aog {

namespace {

// Unit vectors of the 9 orientation bins over [0, pi).
constexpr float kUU[9] = {1.0000f, 0.9397f, 0.7660f, 0.5000f, 0.1736f, -0.1736f, -0.5000f, -0.7660f, -0.9397f};
constexpr float kVV[9] = {0.0000f, 0.3420f, 0.6428f, 0.8660f, 0.9848f, 0.9848f, 0.8660f, 0.6428f, 0.3420f};

cv::Mat to_gray(const cv::Mat& image) {
    if (image.channels() == 1) return image;
    cv::Mat gray;
    cv::cvtColor(image, gray, image.channels() == 4 ? cv::COLOR_BGRA2GRAY : cv::COLOR_BGR2GRAY);
    return gray;
}

void require_8bit(const cv::Mat& image) {
    if (image.empty()) throw std::invalid_argument("empty image");
    if (image.depth() != CV_8U) throw std::invalid_argument("features expect an 8-bit image");
}

std::array<int, 256> make_lbp_table() {
    std::array<int, 256> table{};
    int next = 0;
    for (unsigned code = 0; code < 256; ++code) {
        int transitions = 0;
        for (int b = 0; b < 8; ++b) {
            const unsigned cur = (code >> b) & 1u;
            const unsigned nxt = (code >> ((b + 1) % 8)) & 1u;
            transitions += cur != nxt;
        }
        table[code] = transitions <= 2 ? next++ : 58;
    }
    return table;
}

}  // namespace

int lbp_uniform_bin(unsigned code) {
    static const std::array<int, 256> table = make_lbp_table();
    return table[code & 0xffu];
}

int channel_count(const FeatureConfig& cfg, int image_channels) {
    int c = 0;
    if (cfg.hog) c += kHogChannels;
    if (cfg.lbp) c += kLbpChannels;
    if (cfg.color && image_channels >= 3) c += kColorChannels;
    return c;
}

FeatureMap hog_cells(const cv::Mat& image, int cell_size) {
    require_8bit(image);
    const int width = image.cols;
    const int height = image.rows;
    const int depth = image.channels();
    const int cw = width / cell_size;
    const int ch = height / cell_size;
    FeatureMap out(cw, ch, kHogChannels);
    if (cw == 0 || ch == 0) return out;

    std::vector<float> hist(std::size_t(cw) * ch * 18, 0.0f);
    const int vis_w = cw * cell_size;
    const int vis_h = ch * cell_size;

    for (int y = 0; y < vis_h; ++y) {
        const int ym = std::max(y - 1, 0);
        const int yp = std::min(y + 1, height - 1);
        const std::uint8_t* row = image.ptr<std::uint8_t>(y);
        const std::uint8_t* up = image.ptr<std::uint8_t>(ym);
        const std::uint8_t* down = image.ptr<std::uint8_t>(yp);
        for (int x = 0; x < vis_w; ++x) {
            const int xm = std::max(x - 1, 0);
            const int xp = std::min(x + 1, width - 1);
            float magnitude = 0.0f;
            float gx = 0.0f;
            float gy = 0.0f;
            for (int c = 0; c < depth; ++c) {
                const float dx = float(row[xp * depth + c]) - float(row[xm * depth + c]);
                const float dy = float(down[x * depth + c]) - float(up[x * depth + c]);
                const float m = dx * dx + dy * dy;
                if (m > magnitude) {
                    magnitude = m;
                    gx = dx;
                    gy = dy;
                }
            }
            if (magnitude == 0.0f) continue;

            int theta = 0;
            float best = 0.0f;
            for (int i = 0; i < 9; ++i) {
                const float dot = kUU[i] * gx + kVV[i] * gy;
                if (dot > best) {
                    best = dot;
                    theta = i;
                } else if (-dot > best) {
                    best = -dot;
                    theta = i + 9;
                }
            }

            // Bilinear vote into the four surrounding cells.
            const float fx = (x + 0.5f) / cell_size - 0.5f;
            const float fy = (y + 0.5f) / cell_size - 0.5f;
            const int ix = static_cast<int>(std::floor(fx));
            const int iy = static_cast<int>(std::floor(fy));
            const float vx0 = fx - ix;
            const float vy0 = fy - iy;
            const float vx1 = 1.0f - vx0;
            const float vy1 = 1.0f - vy0;
            magnitude = std::sqrt(magnitude);
            auto vote = [&](int cx, int cy, float w) {
                if (cx >= 0 && cy >= 0 && cx < cw && cy < ch)
                    hist[(std::size_t(cy) * cw + cx) * 18 + theta] += w * magnitude;
            };
            vote(ix, iy, vx1 * vy1);
            vote(ix + 1, iy, vx0 * vy1);
            vote(ix, iy + 1, vx1 * vy0);
            vote(ix + 1, iy + 1, vx0 * vy0);
        }
    }

    std::vector<float> norm(std::size_t(cw) * ch, 0.0f);
    for (int y = 0; y < ch; ++y) {
        for (int x = 0; x < cw; ++x) {
            const float* h = &hist[(std::size_t(y) * cw + x) * 18];
            float s = 0.0f;
            for (int i = 0; i < 9; ++i) s += (h[i] + h[i + 9]) * (h[i] + h[i + 9]);
            norm[std::size_t(y) * cw + x] = s;
        }
    }
    // Boundary blocks reuse the nearest cells.
    auto nrm = [&](int x, int y) {
        x = std::clamp(x, 0, cw - 1);
        y = std::clamp(y, 0, ch - 1);
        return norm[std::size_t(y) * cw + x];
    };

    constexpr float kEps = 1e-4f;
    for (int y = 0; y < ch; ++y) {
        for (int x = 0; x < cw; ++x) {
            const float n0 = 1.0f / std::sqrt(nrm(x - 1, y - 1) + nrm(x, y - 1) + nrm(x - 1, y) + nrm(x, y) + kEps);
            const float n1 = 1.0f / std::sqrt(nrm(x, y - 1) + nrm(x + 1, y - 1) + nrm(x, y) + nrm(x + 1, y) + kEps);
            const float n2 = 1.0f / std::sqrt(nrm(x - 1, y) + nrm(x, y) + nrm(x - 1, y + 1) + nrm(x, y + 1) + kEps);
            const float n3 = 1.0f / std::sqrt(nrm(x, y) + nrm(x + 1, y) + nrm(x, y + 1) + nrm(x + 1, y + 1) + kEps);
            const float* h = &hist[(std::size_t(y) * cw + x) * 18];
            float* f = out.cell(x, y);

            for (int i = 0; i < 9; ++i) {
                const float sum = h[i] + h[i + 9];
                const float h0 = std::min(sum * n0, 0.2f);
                const float h1 = std::min(sum * n1, 0.2f);
                const float h2 = std::min(sum * n2, 0.2f);
                const float h3 = std::min(sum * n3, 0.2f);
                f[18 + i] = 0.5f * (h0 + h1 + h2 + h3);
            }
            float t0 = 0.0f, t1 = 0.0f, t2 = 0.0f, t3 = 0.0f;
            for (int i = 0; i < 18; ++i) {
                const float h0 = std::min(h[i] * n0, 0.2f);
                const float h1 = std::min(h[i] * n1, 0.2f);
                const float h2 = std::min(h[i] * n2, 0.2f);
                const float h3 = std::min(h[i] * n3, 0.2f);
                f[i] = 0.5f * (h0 + h1 + h2 + h3);
                t0 += h0;
                t1 += h1;
                t2 += h2;
                t3 += h3;
            }
            f[27] = 0.2357f * t0;
            f[28] = 0.2357f * t1;
            f[29] = 0.2357f * t2;
            f[30] = 0.2357f * t3;
        }
    }
    return out;
}

FeatureMap lbp_cells(const cv::Mat& image, int cell_size) {
    require_8bit(image);
    const cv::Mat gray = to_gray(image);
    const int width = gray.cols;
    const int height = gray.rows;
    const int cw = width / cell_size;
    const int ch = height / cell_size;
    FeatureMap out(cw, ch, kLbpChannels);
    if (cw == 0 || ch == 0) return out;

    // Clockwise from the top-left neighbour.
    constexpr int kDx[8] = {-1, 0, 1, 1, 1, 0, -1, -1};
    constexpr int kDy[8] = {-1, -1, -1, 0, 1, 1, 1, 0};
    const float unit = 1.0f / float(cell_size * cell_size);

    for (int y = 0; y < ch * cell_size; ++y) {
        const std::uint8_t* rows[3] = {gray.ptr<std::uint8_t>(std::max(y - 1, 0)), gray.ptr<std::uint8_t>(y),
                                       gray.ptr<std::uint8_t>(std::min(y + 1, height - 1))};
        float* cells_row = out.cell(0, y / cell_size);
        for (int x = 0; x < cw * cell_size; ++x) {
            const std::uint8_t center = rows[1][x];
            unsigned code = 0;
            for (int b = 0; b < 8; ++b) {
                const int nx = std::clamp(x + kDx[b], 0, width - 1);
                if (rows[1 + kDy[b]][nx] > center) code |= 1u << b;
            }
            cells_row[(x / cell_size) * kLbpChannels + lbp_uniform_bin(code)] += unit;
        }
    }
    return out;
}

FeatureMap color_cells(const cv::Mat& image, int cell_size) {
    require_8bit(image);
    if (image.channels() < 3) throw std::invalid_argument("color histograms need a color image");
    const int depth = image.channels();
    const int cw = image.cols / cell_size;
    const int ch = image.rows / cell_size;
    FeatureMap out(cw, ch, kColorChannels);
    if (cw == 0 || ch == 0) return out;
    const float unit = 1.0f / float(cell_size * cell_size);

    for (int y = 0; y < ch * cell_size; ++y) {
        const std::uint8_t* row = image.ptr<std::uint8_t>(y);
        float* cells_row = out.cell(0, y / cell_size);
        for (int x = 0; x < cw * cell_size; ++x) {
            const std::uint8_t* px = row + x * depth;  // BGR
            const int bin = (px[2] >> 6) * 16 + (px[1] >> 6) * 4 + (px[0] >> 6);
            cells_row[(x / cell_size) * kColorChannels + bin] += unit;
        }
    }
    return out;
}

FeatureMap compute_features(const cv::Mat& image, const FeatureConfig& cfg) {
    require_8bit(image);
    std::vector<FeatureMap> parts;
    if (cfg.hog) parts.push_back(hog_cells(image, cfg.cell_size));
    if (cfg.lbp) parts.push_back(lbp_cells(image, cfg.cell_size));
    if (cfg.color && image.channels() >= 3) parts.push_back(color_cells(image, cfg.cell_size));
    if (parts.empty()) throw std::invalid_argument("feature configuration selects no features");
    if (parts.size() == 1) return std::move(parts.front());

    const int cw = parts.front().width;
    const int ch = parts.front().height;
    FeatureMap out(cw, ch, channel_count(cfg, image.channels()));
    for (int y = 0; y < ch; ++y) {
        for (int x = 0; x < cw; ++x) {
            float* dst = out.cell(x, y);
            for (const auto& p : parts) dst = std::copy_n(p.cell(x, y), p.channels, dst);
        }
    }
    return out;
}

FeaturePyramid build_pyramid(const cv::Mat& image, const FeatureConfig& cfg, const PyramidOptions& opts) {
    require_8bit(image);
    if (cfg.cell_size < 1 || cfg.interval < 1) throw std::invalid_argument("bad feature configuration");
    if (opts.base_scale <= 0.0) throw std::invalid_argument("pyramid base scale must be positive");
    const double w0 = image.cols * opts.base_scale;
    const double h0 = image.rows * opts.base_scale;
    if (std::lround(w0) < cfg.cell_size || std::lround(h0) < cfg.cell_size)
        throw std::invalid_argument("image smaller than one feature cell");

    FeaturePyramid pyr;
    pyr.interval = cfg.interval;
    pyr.cell_size = cfg.cell_size;
    pyr.channels = channel_count(cfg, image.channels());
    pyr.base_scale = opts.base_scale;
    pyr.origin_x = opts.origin_x;
    pyr.origin_y = opts.origin_y;

    for (int l = 0; opts.max_level < 0 || l <= opts.max_level; ++l) {
        const double factor = opts.base_scale * std::pow(2.0, -double(l) / cfg.interval);
        const int w = static_cast<int>(std::lround(image.cols * factor));
        const int h = static_cast<int>(std::lround(image.rows * factor));
        if (w / cfg.cell_size < opts.min_width_cells || h / cfg.cell_size < opts.min_height_cells) break;
        cv::Mat resized;
        if (w == image.cols && h == image.rows) {
            resized = image;
        } else {
            cv::resize(image, resized, cv::Size(w, h), 0, 0, factor < 1.0 ? cv::INTER_AREA : cv::INTER_LINEAR);
        }
        FeatureMap level = compute_features(resized, cfg);
        level.scale = cfg.cell_size / factor;
        pyr.levels.push_back(std::move(level));
    }
    return pyr;
}

PyramidGeometry FeaturePyramid::geometry() const {
    PyramidGeometry g;
    g.origin_x = origin_x;
    g.origin_y = origin_y;
    g.levels.reserve(levels.size());
    for (const auto& l : levels) g.levels.push_back({l.scale, l.width, l.height});
    return g;
}

std::array<double, 4> deformation_feature(int dx, int dy) {
    return {double(dx) * dx, double(dx), double(dy) * dy, double(dy)};
}

std::vector<float> crop_window(const FeatureMap& level, const CellRect& region) {
    if (region.x < 0 || region.y < 0 || region.w < 0 || region.h < 0 || region.x + region.w > level.width ||
        region.y + region.h > level.height)
        throw std::out_of_range("crop region outside feature map");
    std::vector<float> out;
    out.reserve(std::size_t(region.w) * region.h * level.channels);
    for (int y = region.y; y < region.y + region.h; ++y) {
        const float* row = level.cell(region.x, y);
        out.insert(out.end(), row, row + std::size_t(region.w) * level.channels);
    }
    return out;
}

}  // namespace aog
