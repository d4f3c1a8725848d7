#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include <opencv2/imgproc.hpp>

#include "aogtrack/aog.hpp"
#include "aogtrack/features.hpp"
#include "aogtrack/lbfgs.hpp"
#include "aogtrack/learner.hpp"
#include "aogtrack/parser.hpp"
#include "aogtrack/temporal_dp.hpp"

using namespace aog;

namespace {

cv::Mat noise_frame(int w, int h, unsigned seed) {
    cv::Mat coarse(h / 8, w / 8, CV_8UC3);
    cv::RNG rng(seed);
    rng.fill(coarse, cv::RNG::UNIFORM, 0, 256);
    cv::Mat out;
    cv::resize(coarse, out, cv::Size(w, h), 0, 0, cv::INTER_CUBIC);
    return out;
}

Model random_full_model(int side, int channels, unsigned seed) {
    Model m;
    m.aog = build_full_aog(GridSpec{side, side});
    m.layout = part_layout(2, false, m.features.interval);
    m.channels = channels;
    m.params = make_params(m.aog, m.layout, channels);
    std::mt19937 rng(seed);
    std::normal_distribution<float> g(0.0f, 0.1f);
    for (auto& w : m.params.appearance)
        for (float& v : w) v = g(rng);
    return m;
}

}  // namespace

static void BM_BuildFullAog(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(build_full_aog(GridSpec{side, side}));
}
BENCHMARK(BM_BuildFullAog)->Arg(3)->Arg(4)->Arg(5)->Unit(benchmark::kMicrosecond);

static void BM_FeaturePyramid(benchmark::State& state) {
    const cv::Mat frame = noise_frame(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)) * 3 / 4, 1);
    const FeatureConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(build_pyramid(frame, cfg));
}
BENCHMARK(BM_FeaturePyramid)->Arg(160)->Arg(320)->Unit(benchmark::kMillisecond);

static void BM_ParseFullAog(benchmark::State& state) {
    const FeatureConfig cfg;
    const cv::Mat frame = noise_frame(160, 120, 2);
    const FeaturePyramid pyramid = build_pyramid(frame, cfg);
    const Model model = random_full_model(static_cast<int>(state.range(0)), channel_count(cfg, 3), 3);
    ParseOptions opts;
    opts.max_level = 0;
    for (auto _ : state) benchmark::DoNotOptimize(parse(model, pyramid, opts));
}
BENCHMARK(BM_ParseFullAog)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_LocalMax(benchmark::State& state) {
    ScoreMap m(64, 64);
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : m.data) v = u(rng);
    const int radius = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(local_max(m, {0.01, 0.0, 0.01, 0.0}, radius));
}
BENCHMARK(BM_LocalMax)->Arg(1)->Arg(3)->Arg(5);

static void BM_TemporalDp(benchmark::State& state) {
    const int frames = 6, candidates = static_cast<int>(state.range(0));
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    DpTable table;
    table.unary.assign(frames, std::vector<double>(std::size_t(candidates)));
    for (auto& f : table.unary)
        for (double& v : f) v = u(rng);
    const TransitionCost cost = [](int, int i, int, int j) { return (i + j) % 3 == 0 ? INFINITY : 0.0; };
    for (auto _ : state) benchmark::DoNotOptimize(temporal_dp(table, cost));
}
BENCHMARK(BM_TemporalDp)->Arg(10)->Arg(50);

static void BM_LbfgsQuadratic(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const Objective f = [](std::span<const double> x, std::span<double> g) {
        double v = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double a = 1.0 + double(i % 17);
            v += 0.5 * a * (x[i] - 1.0) * (x[i] - 1.0);
            g[i] = a * (x[i] - 1.0);
        }
        return v;
    };
    for (auto _ : state) benchmark::DoNotOptimize(lbfgs_minimize(f, std::vector<double>(n, 0.0)));
}
BENCHMARK(BM_LbfgsQuadratic)->Arg(1000)->Arg(20000)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
