#pragma once

#include <optional>

#include <opencv2/core.hpp>

#include "aogtrack/geometry.hpp"

namespace aog {

struct MedianFlowOptions {
    int grid = 10;                  // points per side
    int window = 15;                // Lucas-Kanade window size
    int pyramid_levels = 3;
    double max_fb_error = 2.0;      // absolute forward-backward bound, pixels
    double min_survivors = 0.5;     // fraction of grid points
};

/// Box motion between two frames: translation of the centre and a scale
/// factor applied about the centre.
struct FlowTransform {
    double dx = 0.0;
    double dy = 0.0;
    double scale = 1.0;

    Box apply(const Box& b) const {
        return Box::from_center(b.center_x() + dx, b.center_y() + dy, b.w * scale, b.h * scale);
    }
    /// this, then next
    FlowTransform then(const FlowTransform& next) const {
        return {dx + next.dx, dy + next.dy, scale * next.scale};
    }
};

/// Forward-backward validated median flow of a point grid inside `box`.
/// std::nullopt when fewer than min_survivors of the points survive.
std::optional<FlowTransform> median_flow(const cv::Mat& prev, const cv::Mat& next, const Box& box,
                                         const MedianFlowOptions& opts = {});

/// Predicted box in `next`, or std::nullopt on failure.
std::optional<Box> median_flow_predict(const cv::Mat& prev, const cv::Mat& next, const Box& box,
                                       const MedianFlowOptions& opts = {});

}  // namespace aog
