#include <doctest.h>

#include <cmath>

#include "aogtrack/geometry.hpp"
#include "support/oracles.hpp"

using namespace aog;

namespace {

/// Overlap by rasterising both boxes on a fine integer grid.
double raster_iou(const Box& a, const Box& b) {
    long inter = 0, uni = 0;
    for (int y = 0; y < 200; ++y)
        for (int x = 0; x < 200; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            const bool in_a = px >= a.x && px < a.right() && py >= a.y && py < a.bottom();
            const bool in_b = px >= b.x && px < b.right() && py >= b.y && py < b.bottom();
            inter += in_a && in_b;
            uni += in_a || in_b;
        }
    return uni == 0 ? 0.0 : double(inter) / double(uni);
}

}  // namespace

TEST_CASE("iou of simple boxes") {
    const Box a{0, 0, 10, 10};
    CHECK(iou(a, a) == 1.0);
    CHECK(iou(a, Box{10, 0, 10, 10}) == 0.0);
    CHECK(iou(a, Box{5, 0, 10, 10}) == doctest::Approx(50.0 / 150.0));
    CHECK(iou(a, Box{2, 2, 5, 5}) == doctest::Approx(25.0 / 100.0));
    CHECK(iou(a, Box::invalid()) == 0.0);
    CHECK(iou(Box{0, 0, 0, 5}, a) == 0.0);
}

TEST_CASE("iou agrees with rasterised overlap on integer boxes") {
    oracle::Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const Box a{double(oracle::uniform_int(rng, 0, 100)), double(oracle::uniform_int(rng, 0, 100)),
                    double(oracle::uniform_int(rng, 1, 90)), double(oracle::uniform_int(rng, 1, 90))};
        const Box b{double(oracle::uniform_int(rng, 0, 100)), double(oracle::uniform_int(rng, 0, 100)),
                    double(oracle::uniform_int(rng, 1, 90)), double(oracle::uniform_int(rng, 1, 90))};
        CHECK(iou(a, b) == doctest::Approx(raster_iou(a, b)).epsilon(1e-12));
        CHECK(iou(a, b) == iou(b, a));
        CHECK(iou(a, b) >= 0.0);
        CHECK(iou(a, b) <= 1.0);
    }
}

TEST_CASE("centre distance") {
    CHECK(center_distance(Box{0, 0, 10, 10}, Box{3, 4, 10, 10}) == doctest::Approx(5.0));
    CHECK(std::isinf(center_distance(Box{0, 0, 10, 10}, Box::invalid())));
}

TEST_CASE("clip, union and scaling") {
    CHECK(clip(Box{-5, -5, 20, 20}, 10, 10) == Box{0, 0, 10, 10});
    CHECK_FALSE(clip(Box{20, 20, 5, 5}, 10, 10).valid());
    CHECK(united(Box{0, 0, 2, 2}, Box{5, 5, 1, 1}) == Box{0, 0, 6, 6});
    CHECK(united(Box::invalid(), Box{1, 1, 1, 1}) == Box{1, 1, 1, 1});
    const Box s = scaled(Box{10, 10, 20, 10}, 2.0);
    CHECK(s == Box{0, 5, 40, 20});
    CHECK(Box::from_center(5, 5, 4, 2) == Box{3, 4, 4, 2});
    CHECK_FALSE(Box::invalid().valid());
}
