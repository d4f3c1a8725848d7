#pragma once

#include <cmath>
#include <limits>
#include <ostream>

namespace aog {

/// Axis-aligned rectangle in image (pixel) coordinates. (x, y) is the
/// top-left corner; the box covers [x, x + w) x [y, y + h).
struct Box {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double right() const { return x + w; }
    double bottom() const { return y + h; }
    double center_x() const { return x + 0.5 * w; }
    double center_y() const { return y + 0.5 * h; }
    double area() const { return w > 0.0 && h > 0.0 ? w * h : 0.0; }

    bool valid() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h) &&
               w > 0.0 && h > 0.0;
    }

    static Box invalid() {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        return {nan, nan, nan, nan};
    }

    static Box from_center(double cx, double cy, double w, double h) {
        return {cx - 0.5 * w, cy - 0.5 * h, w, h};
    }

    friend bool operator==(const Box&, const Box&) = default;
};

std::ostream& operator<<(std::ostream& os, const Box& b);

Box intersection(const Box& a, const Box& b);

/// Intersection over union. Zero when either box is invalid.
double iou(const Box& a, const Box& b);

/// Euclidean distance between box centers; +inf when either box is invalid.
double center_distance(const Box& a, const Box& b);

/// Clip to [0, width) x [0, height). May return an empty (invalid) box.
Box clip(const Box& b, double width, double height);

/// Smallest box containing both.
Box united(const Box& a, const Box& b);

/// Scale about the center.
Box scaled(const Box& b, double factor);

}  // namespace aog
