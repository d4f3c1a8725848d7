#include <doctest.h>

#include <cmath>
#include <numeric>

#include "aogtrack/synthetic.hpp"
#include "aogtrack/tracker.hpp"
#include "support/fixtures.hpp"

using namespace aog;

namespace {

double two_pass_std(const std::vector<double>& xs) {
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / double(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / double(xs.size()));
}

}  // namespace

TEST_CASE("running statistics match a two-pass computation") {
    oracle::Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        TrackabilityStats s;
        std::vector<double> xs;
        const int n = oracle::uniform_int(rng, 2, 200);
        const double offset = oracle::uniform(rng, -1e3, 1e3);
        for (int i = 0; i < n; ++i) {
            xs.push_back(offset + oracle::uniform(rng, -5, 5));
            s.add(xs.back());
        }
        CHECK(s.count() == std::size_t(n));
        CHECK(s.mean() == doctest::Approx(std::accumulate(xs.begin(), xs.end(), 0.0) / n).epsilon(1e-12));
        CHECK(s.stddev() == doctest::Approx(two_pass_std(xs)).epsilon(1e-9));
    }
}

TEST_CASE("intrackable fires below mean minus three sigma") {
    TrackabilityStats s;
    CHECK_FALSE(s.intrackable(-1e9, 3.0));
    s.add(50.0);
    CHECK_FALSE(s.intrackable(-1e9, 3.0));   // needs two samples
    s.reset();
    for (int i = 0; i < 50; ++i) s.add(i % 2 ? 51.0 : 49.0);
    CHECK(s.mean() == doctest::Approx(50.0));
    CHECK(s.stddev() == doctest::Approx(1.0));
    CHECK(s.intrackable(40.0, 3.0));
    CHECK(s.intrackable(46.9, 3.0));
    CHECK_FALSE(s.intrackable(47.0, 3.0));
    CHECK_FALSE(s.intrackable(60.0, 3.0));
}

TEST_CASE("a constant stream is never intrackable") {
    TrackabilityStats s;
    for (int i = 0; i < 100; ++i) {
        CHECK_FALSE(s.intrackable(2.5, 3.0));
        s.add(2.5);
    }
    CHECK(s.stddev() == 0.0);
}

TEST_CASE("trackability subtracts the finite map mean") {
    ScoreMap m(2, 2);
    m.data = {1.0, 3.0, kNegInf, 5.0};
    CHECK(trackability(m, 10.0) == doctest::Approx(7.0));
    CHECK(trackability(ScoreMap(2, 2), 4.0) == 0.0);   // nothing finite to compare against
}

TEST_CASE("motion gate") {
    const Box a{0, 0, 10, 10};
    CHECK(motion_cost(a, std::nullopt, 0.3) == 0.0);
    CHECK(motion_cost(a, Box{1, 0, 10, 10}, 0.3) == 0.0);
    CHECK(std::isinf(motion_cost(a, Box{8, 0, 10, 10}, 0.3)));
}

TEST_CASE("ROI is a clipped square around the box") {
    CHECK(compute_roi(Box{40, 40, 20, 10}, 200, 200, 3.0) == Box{20, 15, 60, 60});
    CHECK(compute_roi(Box{0, 0, 20, 10}, 200, 200, 3.0) == Box{0, 0, 40, 35});
}

TEST_CASE("median flow recovers a translation") {
    const cv::Mat a = fixtures::noise_image(160, 120, 9);
    const cv::Mat b = fixtures::translate(a, 5, 3);
    const Box box{50, 40, 40, 30};
    const auto t = median_flow(a, b, box);
    REQUIRE(t.has_value());
    CHECK(std::abs(t->dx - 5.0) <= 1.0);
    CHECK(std::abs(t->dy - 3.0) <= 1.0);
    CHECK(std::abs(t->scale - 1.0) <= 0.05);
    const auto p = median_flow_predict(a, b, box);
    REQUIRE(p.has_value());
    CHECK(iou(*p, Box{55, 43, 40, 30}) > 0.85);

    const auto same = median_flow(a, a, box);
    REQUIRE(same.has_value());
    CHECK(std::abs(same->dx) < 1e-3);
    CHECK(std::abs(same->dy) < 1e-3);
    CHECK(same->scale == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("median flow fails between unrelated frames") {
    const cv::Mat a = fixtures::noise_image(160, 120, 10);
    const cv::Mat b = fixtures::noise_image(160, 120, 11);
    CHECK_FALSE(median_flow(a, b, Box{50, 40, 40, 30}).has_value());
}

TEST_CASE("flow transforms compose") {
    const FlowTransform a{1, 2, 2.0}, b{3, -1, 0.5};
    const FlowTransform c = a.then(b);
    const Box box{0, 0, 10, 10};
    const Box direct = b.apply(a.apply(box));
    CHECK(c.apply(box).x == doctest::Approx(direct.x));
    CHECK(c.apply(box).w == doctest::Approx(direct.w));
}

TEST_CASE("tracker follows a moving textured object") {
    SyntheticOptions o;
    o.frames = 12;
    o.occlusion_begin = o.occlusion_end = 1000;
    o.offscreen_begin = o.offscreen_end = 1000;
    o.texture_switch = 1000;
    o.max_speed = 4.0;
    const Sequence seq = make_synthetic_sequence(o);
    AogTracker tracker;
    CHECK_THROWS_AS(tracker.init(seq.frame(0), Box{-50, -50, 20, 20}), std::invalid_argument);
    tracker.init(seq.frame(0), seq.ground_truth[0]);
    for (std::size_t f = 1; f < seq.size(); ++f) {
        const FrameResult r = tracker.track(seq.frame(f));
        CHECK(r.frame == int(f));
    }
    const auto results = tracker.finish();
    REQUIRE(results.size() == seq.size());
    double sum = 0.0;
    for (std::size_t f = 0; f < seq.size(); ++f) sum += iou(results[f].box, seq.ground_truth[f]);
    CHECK(sum / double(seq.size()) >= 0.6);
    CHECK(results.front().box == seq.ground_truth.front());
}
