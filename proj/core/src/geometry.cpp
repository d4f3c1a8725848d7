#include "aogtrack/geometry.hpp"

#include <algorithm>

namespace aog {

std::ostream& operator<<(std::ostream& os, const Box& b) {
    return os << '(' << b.x << ',' << b.y << ',' << b.w << ',' << b.h << ')';
}

Box intersection(const Box& a, const Box& b) {
    const double x0 = std::max(a.x, b.x);
    const double y0 = std::max(a.y, b.y);
    const double x1 = std::min(a.right(), b.right());
    const double y1 = std::min(a.bottom(), b.bottom());
    return {x0, y0, x1 - x0, y1 - y0};
}

double iou(const Box& a, const Box& b) {
    if (!a.valid() || !b.valid()) return 0.0;
    const double inter = intersection(a, b).area();
    if (inter <= 0.0) return 0.0;
    return inter / (a.area() + b.area() - inter);
}

double center_distance(const Box& a, const Box& b) {
    if (!a.valid() || !b.valid()) return std::numeric_limits<double>::infinity();
    return std::hypot(a.center_x() - b.center_x(), a.center_y() - b.center_y());
}

Box clip(const Box& b, double width, double height) {
    return intersection(b, Box{0.0, 0.0, width, height});
}

Box united(const Box& a, const Box& b) {
    if (!a.valid()) return b;
    if (!b.valid()) return a;
    const double x0 = std::min(a.x, b.x);
    const double y0 = std::min(a.y, b.y);
    return {x0, y0, std::max(a.right(), b.right()) - x0, std::max(a.bottom(), b.bottom()) - y0};
}

Box scaled(const Box& b, double factor) {
    return Box::from_center(b.center_x(), b.center_y(), b.w * factor, b.h * factor);
}

}  // namespace aog
