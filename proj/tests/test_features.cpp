#include <doctest.h>

#include <bitset>
#include <cmath>
#include <numeric>

#include <opencv2/imgproc.hpp>

#include "aogtrack/features.hpp"
#include "support/fixtures.hpp"

using namespace aog;

namespace {

int transitions(unsigned code) {
    int t = 0;
    for (int b = 0; b < 8; ++b) t += ((code >> b) & 1u) != ((code >> ((b + 1) % 8)) & 1u);
    return t;
}

double cell_sum(const FeatureMap& m, int x, int y, int from, int count) {
    const float* c = m.cell(x, y);
    return std::accumulate(c + from, c + from + count, 0.0);
}

}  // namespace

TEST_CASE("channel counts") {
    const FeatureConfig cfg;
    CHECK(channel_count(cfg, 3) == 31 + 59 + 64);
    CHECK(channel_count(cfg, 1) == 31 + 59);
    FeatureConfig hog_only;
    hog_only.lbp = hog_only.color = false;
    CHECK(channel_count(hog_only, 3) == 31);
}

TEST_CASE("uniform LBP table has 58 uniform codes in code order") {
    int next = 0;
    for (unsigned code = 0; code < 256; ++code) {
        if (transitions(code) <= 2)
            CHECK(lbp_uniform_bin(code) == next++);
        else
            CHECK(lbp_uniform_bin(code) == 58);
    }
    CHECK(next == 58);
    CHECK(lbp_uniform_bin(0) == 0);
    CHECK(lbp_uniform_bin(0xff) == 57);
}

TEST_CASE("LBP histograms are L1 normalised") {
    const cv::Mat img = fixtures::noise_image(64, 48, 1);
    const FeatureMap m = lbp_cells(img, 4);
    CHECK(m.width == 16);
    CHECK(m.height == 12);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) CHECK(cell_sum(m, x, y, 0, kLbpChannels) == doctest::Approx(1.0));
}

TEST_CASE("LBP of a flat image is the all-zero pattern") {
    const cv::Mat img(32, 32, CV_8UC1, cv::Scalar(90));
    const FeatureMap m = lbp_cells(img, 4);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) CHECK(m.cell(x, y)[0] == doctest::Approx(1.0));
}

TEST_CASE("LBP of a pixel checkerboard splits between the zero and non-uniform bins") {
    cv::Mat img(32, 32, CV_8UC1);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) img.at<uchar>(y, x) = (x + y) % 2 ? 200 : 40;
    const FeatureMap m = lbp_cells(img, 4);
    // Bright centres see no brighter neighbour (code 0). Dark centres see
    // the four edge neighbours brighter, which alternates around the ring.
    for (int y = 1; y < m.height - 1; ++y)
        for (int x = 1; x < m.width - 1; ++x) {
            CHECK(m.cell(x, y)[0] == doctest::Approx(0.5));
            CHECK(m.cell(x, y)[58] == doctest::Approx(0.5));
        }
}

TEST_CASE("colour histogram of a flat image") {
    const cv::Mat img(16, 16, CV_8UC3, cv::Scalar(10, 100, 250));  // BGR
    const FeatureMap m = color_cells(img, 4);
    const int bin = (250 >> 6) * 16 + (100 >> 6) * 4 + (10 >> 6);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            CHECK(m.cell(x, y)[bin] == doctest::Approx(1.0));
            CHECK(cell_sum(m, x, y, 0, kColorChannels) == doctest::Approx(1.0));
        }
    CHECK_THROWS_AS(color_cells(cv::Mat(16, 16, CV_8UC1, cv::Scalar(0)), 4), std::invalid_argument);
}

TEST_CASE("HOG is zero on a flat image and bounded otherwise") {
    const FeatureMap flat = hog_cells(cv::Mat(32, 32, CV_8UC3, cv::Scalar(7, 7, 7)), 4);
    for (float v : flat.data) CHECK(v == 0.0f);

    const FeatureMap m = hog_cells(fixtures::noise_image(64, 64, 2), 4);
    for (float v : m.data) {
        CHECK(v >= 0.0f);
        CHECK(v <= 0.4f + 1e-6f);
    }
}

TEST_CASE("HOG of a vertical edge votes for the horizontal gradient") {
    cv::Mat img(32, 32, CV_8UC1, cv::Scalar(0));
    img(cv::Rect(16, 0, 16, 32)).setTo(255);
    const FeatureMap m = hog_cells(img, 4);
    // Cells straddling the edge: the contrast-insensitive bin 0 dominates.
    const float* c = m.cell(3, 4);
    int best = 0;
    for (int i = 0; i < 9; ++i)
        if (c[18 + i] > c[18 + best]) best = i;
    CHECK(best == 0);
    CHECK(c[18] > 0.0f);
    CHECK(c[0] > c[9]);   // dark-to-bright along +x
}

TEST_CASE("compute_features concatenates in HOG, LBP, colour order") {
    const cv::Mat img = fixtures::noise_image(40, 32, 3);
    const FeatureConfig cfg;
    const FeatureMap all = compute_features(img, cfg);
    const FeatureMap hog = hog_cells(img, 4), lbp = lbp_cells(img, 4), col = color_cells(img, 4);
    REQUIRE(all.channels == 154);
    for (int y = 0; y < all.height; ++y)
        for (int x = 0; x < all.width; ++x) {
            CHECK(all.cell(x, y)[5] == hog.cell(x, y)[5]);
            CHECK(all.cell(x, y)[31 + 7] == lbp.cell(x, y)[7]);
            CHECK(all.cell(x, y)[90 + 11] == col.cell(x, y)[11]);
        }
    FeatureConfig none;
    none.hog = none.lbp = none.color = false;
    CHECK_THROWS_AS(compute_features(img, none), std::invalid_argument);
}

TEST_CASE("pyramid levels halve every interval") {
    const cv::Mat img = fixtures::noise_image(128, 96, 4);
    FeatureConfig cfg;
    cfg.interval = 4;
    const FeaturePyramid p = build_pyramid(img, cfg);
    REQUIRE(p.levels.size() > 8);
    CHECK(p.levels[0].width == 32);
    CHECK(p.levels[4].width == 16);
    CHECK(p.levels[8].width == 8);
    for (std::size_t l = 0; l < p.levels.size(); ++l)
        CHECK(p.levels[l].scale == doctest::Approx(4.0 * std::pow(2.0, double(l) / 4)));

    PyramidOptions opts;
    opts.base_scale = 2.0;
    opts.max_level = 2;
    opts.origin_x = 5;
    const FeaturePyramid up = build_pyramid(img, cfg, opts);
    CHECK(up.levels.size() == 3);
    CHECK(up.levels[0].width == 64);
    CHECK(up.levels[0].scale == doctest::Approx(2.0));
    const PyramidGeometry g = up.geometry();
    CHECK(g.cell_box({0, 1, 2}, 3, 4) == Box{5 + 2.0, 4.0, 6.0, 8.0});

    CHECK_THROWS_AS(build_pyramid(cv::Mat(2, 2, CV_8UC3, cv::Scalar(0)), cfg), std::invalid_argument);
    CHECK_THROWS_AS(build_pyramid(cv::Mat(), cfg), std::invalid_argument);
}

TEST_CASE("crop_window is row-major over cells") {
    FeatureMap m(4, 3, 2);
    for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = float(i);
    const std::vector<float> c = crop_window(m, {1, 1, 2, 2});
    const std::vector<float> expected{10, 11, 12, 13, 18, 19, 20, 21};
    CHECK(c == expected);
    CHECK_THROWS_AS(crop_window(m, {3, 0, 2, 1}), std::out_of_range);
}

TEST_CASE("deformation feature") {
    CHECK(deformation_feature(2, -3) == std::array<double, 4>{4, 2, 9, -3});
}
