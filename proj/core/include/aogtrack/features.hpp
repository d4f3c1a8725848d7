#pragma once

#include <array>
#include <span>
#include <vector>

#include <opencv2/core.hpp>

#include "aogtrack/aog.hpp"

namespace aog {

inline constexpr int kHogChannels = 31;
inline constexpr int kLbpChannels = 59;
inline constexpr int kColorChannels = 64;

struct FeatureConfig {
    int cell_size = 4;
    int interval = 6;
    bool hog = true;
    bool lbp = true;
    bool color = true;  // ignored for single-channel images

    friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

/// Channels produced for an image with `image_channels` channels.
int channel_count(const FeatureConfig& cfg, int image_channels);

/// Dense cell-grid feature tensor, row-major [y][x][channel].
struct FeatureMap {
    int width = 0;   // cells
    int height = 0;
    int channels = 0;
    double scale = 1.0;  // image pixels per cell in the pyramid's source image
    std::vector<float> data;

    FeatureMap() = default;
    FeatureMap(int w, int h, int c) : width(w), height(h), channels(c), data(std::size_t(w) * h * c, 0.0f) {}

    bool empty() const { return width == 0 || height == 0; }
    float* cell(int x, int y) { return data.data() + (std::size_t(y) * width + x) * channels; }
    const float* cell(int x, int y) const { return data.data() + (std::size_t(y) * width + x) * channels; }
    std::span<const float> cell_span(int x, int y) const { return {cell(x, y), std::size_t(channels)}; }
};

struct PyramidOptions {
    double base_scale = 1.0;   // resize factor applied to the input at level 0
    double origin_x = 0.0;     // position of the input image inside the frame
    double origin_y = 0.0;
    int max_level = -1;        // last level to compute, -1 for as many as fit
    int min_width_cells = 1;   // a level must fit one template of this size
    int min_height_cells = 1;
};

/// Levels are finest first; level l is the input resized by
/// base_scale * 2^(-l / interval).
struct FeaturePyramid {
    std::vector<FeatureMap> levels;
    int interval = 6;
    int cell_size = 4;
    int channels = 0;
    double base_scale = 1.0;
    double origin_x = 0.0;
    double origin_y = 0.0;

    bool empty() const { return levels.empty(); }
    PyramidGeometry geometry() const;
};

/// 31-dimensional HOG per cell: 18 contrast-sensitive and 9 insensitive
/// orientation channels plus 4 block-energy channels, truncated at 0.2.
FeatureMap hog_cells(const cv::Mat& image, int cell_size);

/// Uniform LBP (8 neighbours, radius 1), 59-bin L1-normalised histograms.
/// Bin 0 holds the all-zero pattern, bin 58 every non-uniform pattern.
FeatureMap lbp_cells(const cv::Mat& image, int cell_size);

/// Joint RGB histogram with 4 bins per channel, L1-normalised. Expects a
/// 3-channel BGR image.
FeatureMap color_cells(const cv::Mat& image, int cell_size);

/// Channel-concatenated features of one image (HOG, then LBP, then color).
FeatureMap compute_features(const cv::Mat& image, const FeatureConfig& cfg);

/// Throws std::invalid_argument if the image is smaller than one cell.
FeaturePyramid build_pyramid(const cv::Mat& image, const FeatureConfig& cfg,
                             const PyramidOptions& opts = {});

/// [dx^2, dx, dy^2, dy]
std::array<double, 4> deformation_feature(int dx, int dy);

/// Row-major concatenation of the cells in `region` (length w*h*channels).
std::vector<float> crop_window(const FeatureMap& level, const CellRect& region);

/// Uniform-pattern index for an 8-bit LBP code (0..58).
int lbp_uniform_bin(unsigned code);

}  // namespace aog
