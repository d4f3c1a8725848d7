#pragma once

#include <cstdint>

#include "aogtrack/sequence.hpp"

namespace aog {

/// Textured rectangle on a textured background. Frame ranges are inclusive.
struct SyntheticOptions {
    int frames = 100;
    int width = 320;
    int height = 240;
    std::uint64_t seed = 7;
    double object_width = 48.0;
    double object_height = 40.0;
    double max_speed = 8.0;        // pixels per frame
    double scale_amplitude = 0.2;
    int occlusion_begin = 40;      // an opaque panel hides the object
    int occlusion_end = 50;
    int offscreen_begin = 70;      // the object is not drawn
    int offscreen_end = 75;
    int texture_switch = 60;       // part of the object texture changes from here on
};

/// Ground truth is Box::invalid() on frames where the object is not visible.
Sequence make_synthetic_sequence(const SyntheticOptions& opts = {});

}  // namespace aog
