// Acceptance checks: one PASS/FAIL line per criterion. With --strict the
// exit status is non-zero when a required criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <opencv2/imgcodecs.hpp>

#include "aogtrack/aog.hpp"
#include "aogtrack/config.hpp"
#include "aogtrack/evaluation.hpp"
#include "aogtrack/learner.hpp"
#include "aogtrack/linear_svm.hpp"
#include "aogtrack/parser.hpp"
#include "aogtrack/report.hpp"
#include "aogtrack/session.hpp"
#include "aogtrack/synthetic.hpp"
#include "aogtrack/temporal_dp.hpp"
#include "aogtrack/tracker.hpp"
#include "support/fixtures.hpp"

using namespace aog;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
    void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

bool close(double a, double b, double eps) {
    if (std::isinf(a) || std::isinf(b)) return a == b;
    return std::abs(a - b) <= eps * std::max({1.0, std::abs(a), std::abs(b)});
}

// ---------------------------------------------------------------------------

Outcome structural_counts() {
    Outcome o;
    const Aog a3 = build_full_aog({3, 3});
    const Aog a5 = build_full_aog({5, 5});
    o.require(a3.decomposition_count() == 48, "3x3 decompositions " + std::to_string(a3.decomposition_count()));
    o.require(a3.part_terminal_count() == 35, "3x3 terminals " + std::to_string(a3.part_terminal_count()));
    o.require(a5.decomposition_count() == 600, "5x5 decompositions " + std::to_string(a5.decomposition_count()));
    o.require(a5.part_terminal_count() == 224, "5x5 terminals " + std::to_string(a5.part_terminal_count()));
    o.note("3x3 48/35, 5x5 600/224");
    return o;
}

Outcome configuration_count() {
    Outcome o;
    const Aog a3 = build_full_aog({3, 3});
    const BigCount trees = count_parse_trees(a3);
    o.require(trees == 1241 && oracle::split_trees(3, 3) == 1241, "parse trees " + trees.str());
    const auto configs = count_configurations(a3, 1'000'000);
    o.require(configs && *configs == 319, "configurations");
    o.require(oracle::guillotine_partitions(3, 3) - 1 == 319, "guillotine oracle");
    if (configs) o.note(std::to_string(*configs) + " configurations from " + trees.str() + " trees");
    return o;
}

Outcome parse_optimality() {
    Outcome o;
    oracle::Rng rng(3001);
    int compared = 0, worst_trial = -1;
    double worst = 0.0;
    for (int trial = 0; trial < 150; ++trial) {
        const auto in = fixtures::random_parse_instance(rng);
        const double expected = oracle::exhaustive_best(in.model, in.pyramid, in.radius);
        ParseOptions opts;
        opts.radius = in.radius;
        opts.n_best = 1;
        const auto dets = parse(in.model, in.pyramid, opts);
        if (!std::isfinite(expected)) {
            o.require(dets.empty(), "detections without any valid placement");
            continue;
        }
        ++compared;
        const double got = dets.empty() ? -INFINITY : dets.front().score;
        const double err = std::abs(got - expected);
        if (!(err <= 1e-6)) o.require(false, "trial " + std::to_string(trial) + " off by " + fmt("%.3g", err));
        if (err > worst) {
            worst = err;
            worst_trial = trial;
        }
    }
    (void)worst_trial;
    o.require(compared >= 100, "only " + std::to_string(compared) + " instances");
    o.note(std::to_string(compared) + " instances, max error " + fmt("%.2g", worst));
    return o;
}

Outcome local_max_exact() {
    Outcome o;
    oracle::Rng rng(3002);
    int maps = 0;
    for (int trial = 0; trial < 120; ++trial) {
        const int w = oracle::uniform_int(rng, 1, 16), h = oracle::uniform_int(rng, 1, 16);
        ScoreMap child(w, h);
        for (double& v : child.data) v = oracle::uniform(rng, -3, 3);
        if (trial % 4 == 0) child.data[std::size_t(oracle::uniform_int(rng, 0, w * h - 1))] = kNegInf;
        const std::array<double, 4> theta{oracle::uniform(rng, 0.01, 1), oracle::uniform(rng, -1, 1),
                                          oracle::uniform(rng, 0.01, 1), oracle::uniform(rng, -1, 1)};
        const int radius = 1 + trial % 3;
        const DeformedMap fast = local_max(child, theta, radius);
        const ScoreMap slow = oracle::naive_local_max(child, theta, radius);
        bool same = true;
        for (std::size_t i = 0; i < slow.data.size(); ++i) same &= close(fast.map.data[i], slow.data[i], 1e-12);
        o.require(same, "map " + std::to_string(trial) + " differs");
        ++maps;
    }
    o.note(std::to_string(maps) + " maps, R in {1,2,3}");
    return o;
}

Outcome temporal_optimality() {
    Outcome o;
    oracle::Rng rng(3003);
    int finite = 0, infinite = 0, invalid_frames = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto r = fixtures::random_dp_instance(rng, 5, 10);
        for (const auto& u : r.table.unary) invalid_frames += u.empty();
        const TransitionCost cost = r.cost();
        const double expected = oracle::brute_force_energy(r.table, cost);
        const DpResult got = temporal_dp(r.table, cost);
        if (std::isinf(expected)) {
            bool any = false;
            for (const auto& u : r.table.unary) any |= !u.empty();
            if (any) {
                ++infinite;
                o.require(got.low_confidence, "missing low-confidence flag");
            }
            continue;
        }
        ++finite;
        o.require(close(got.energy, expected, 1e-12) && close(oracle::path_energy(r.table, cost, got.choice), expected, 1e-12),
                  "table " + std::to_string(trial) + " energy");
    }
    o.require(finite >= 100, "only " + std::to_string(finite) + " finite tables");
    o.note(std::to_string(finite) + " tables vs brute force, " + std::to_string(infinite) + " all-infinite, " +
           std::to_string(invalid_frames) + " invalid frames");
    return o;
}

Outcome lsvm_correctness() {
    Outcome o;
    oracle::Rng rng(3004);
    // Gradient against central differences.
    double worst = 0.0;
    for (int point = 0; point < 20; ++point) {
        const Model m = oracle::random_model(rng, oracle::uniform_int(rng, 1, 2), oracle::uniform_int(rng, 1, 2), 2, 1,
                                             point % 2 == 1);
        const ParamLayout layout = param_layout(m);
        const auto examples = fixtures::random_examples(rng, m, 8);
        std::vector<double> theta(layout.size);
        for (double& v : theta) v = oracle::uniform(rng, -0.5, 0.5);
        std::vector<double> grad(layout.size);
        lsvm_objective(theta, examples, 10.0, 8.0, grad);
        double num = 0.0, den = 0.0;
        std::vector<double> probe = theta;
        for (std::size_t i = 0; i < layout.size; ++i) {
            const double h = 1e-6;
            probe[i] = theta[i] + h;
            const double up = lsvm_objective(probe, examples, 10.0, 8.0);
            probe[i] = theta[i] - h;
            const double down = lsvm_objective(probe, examples, 10.0, 8.0);
            probe[i] = theta[i];
            const double fd = (up - down) / (2 * h);
            num += (fd - grad[i]) * (fd - grad[i]);
            den += grad[i] * grad[i];
        }
        worst = std::max(worst, std::sqrt(num) / std::max(std::sqrt(den), 1e-12));
    }
    o.require(worst <= 1e-4, "gradient relative error " + fmt("%.2g", worst));

    // Objective trace over warm-started rounds.
    {
        const Model m = oracle::random_model(rng, 2, 2, 3, 1, false);
        const ParamLayout layout = param_layout(m);
        const auto examples = fixtures::random_examples(rng, m, 30);
        LbfgsOptions lo;
        lo.max_iterations = 3;
        std::vector<double> theta = flatten(m, layout);
        double last = lsvm_objective(theta, examples, 10.0, 30.0);
        bool monotone = true;
        for (int round = 0; round < 10; ++round) {
            const LbfgsResult r = minimize_lsvm(m, layout, theta, examples, 10.0, 30.0, lo);
            monotone &= r.value <= last + 1e-12;
            last = r.value;
            theta = r.x;
        }
        o.require(monotone, "objective trace increased");
    }

    // Degenerate single-terminal AOG against the plain linear SVM.
    double gap = 0.0;
    {
        const Model m = fixtures::object_only(oracle::random_model(rng, 1, 1, 4, 1, false));
        const ParamLayout layout = param_layout(m);
        const auto examples = fixtures::random_examples(rng, m, 40);
        std::size_t bias = 0;
        for (std::size_t b : layout.bias)
            if (b != ParamLayout::npos) bias = b;
        SvmProblem p;
        for (const auto& e : examples) {
            std::vector<double> x(layout.size, 0.0);
            e.phi.axpy(1.0, x);
            std::vector<float> xf;
            for (std::size_t i = 0; i < x.size(); ++i)
                if (i != bias) xf.push_back(float(x[i]));
            p.x.push_back(std::move(xf));
            p.y.push_back(e.label);
        }
        SvmOptions so;
        so.C = 5.0;
        so.tolerance = 1e-10;
        so.max_passes = 100000;
        const SvmModel svm = train_linear_svm(p, so);
        LbfgsOptions lo;
        lo.max_iterations = 5000;
        lo.tolerance = 1e-12;
        const LbfgsResult r =
            minimize_lsvm(m, layout, std::vector<double>(layout.size, 0.0), examples, 5.0, 40.0, lo);
        gap = std::abs(r.value - svm.objective);
        o.require(gap <= 1e-3 * std::max(1.0, svm.objective), "linear SVM gap " + fmt("%.3g", gap));
    }
    o.note("gradient rel err " + fmt("%.1e", worst) + ", SVM gap " + fmt("%.1e", gap));
    return o;
}

Outcome synthetic_tracking() {
    Outcome o;
    const SyntheticOptions so;
    const Sequence seq = make_synthetic_sequence(so);
    AogTracker tracker;
    tracker.init(seq.frame(0), seq.ground_truth[0]);
    std::vector<FrameResult> online{FrameResult{}};
    for (std::size_t f = 1; f < seq.size(); ++f) online.push_back(tracker.track(seq.frame(f)));
    const auto results = tracker.finish();

    double sum = 0.0;
    int visible = 0;
    for (std::size_t f = 0; f < seq.size(); ++f) {
        if (!seq.ground_truth[f].valid()) continue;
        ++visible;
        if (results[f].valid) sum += iou(results[f].box, seq.ground_truth[f]);
    }
    const double mean_iou = visible ? sum / visible : 0.0;
    o.require(mean_iou >= 0.6, "mean IoU " + fmt("%.3f", mean_iou));

    // The object comes back after the occlusion and after leaving the frame.
    auto fallback_near = [&](int from, int to) {
        for (int f = from; f <= to && f < int(online.size()); ++f)
            if (online[std::size_t(f)].whole_frame) return f;
        return -1;
    };
    const int after_occlusion = fallback_near(so.occlusion_end + 1, so.occlusion_end + 5);
    const int after_offscreen = fallback_near(so.offscreen_end + 1, so.offscreen_end + 5);
    o.require(after_occlusion >= 0 || after_offscreen >= 0, "no whole-frame fallback at reappearance");

    std::string relearns;
    bool at_switch = false;
    for (const auto& r : results)
        if (r.relearned) {
            relearns += (relearns.empty() ? "" : ",") + std::to_string(r.frame);
            at_switch |= r.frame >= so.texture_switch && r.frame < so.offscreen_begin;
        }
    o.require(at_switch, "no structure re-learn between the texture switch and the off-screen stretch");
    o.note("mean IoU " + fmt("%.3f", mean_iou) + ", whole-frame at " + std::to_string(after_occlusion) + "/" +
           std::to_string(after_offscreen) + ", relearned after frames [" + relearns + "]");
    return o;
}

/// Reports its initial box on every frame.
class StaticSession : public TrackerSession {
public:
    void init(const cv::Mat&, const Box& box) override {
        box_ = box;
        frames_ = 1;
    }
    Box track(const cv::Mat&) override {
        ++frames_;
        return box_;
    }
    std::vector<Box> finish() override { return std::vector<Box>(frames_, box_); }

private:
    Box box_;
    std::size_t frames_ = 0;
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

Outcome protocol_metrics() {
    Outcome o;
    const std::vector<Box> truth{{0, 0, 10, 10}, {0, 0, 10, 10}, {0, 0, 10, 10}, {0, 0, 10, 10}};
    const std::vector<Box> pred{{0, 0, 10, 10}, {5, 0, 10, 10}, Box::invalid(), {2, 0, 10, 10}};
    // Overlaps 1, 1/3, 0, 2/3; centre distances 0, 5, inf, 2.
    const Curve s = success_curve(pred, truth);
    std::vector<double> expected_s(21);
    for (int i = 0; i <= 20; ++i) expected_s[std::size_t(i)] = i == 0 ? 1.0 : i <= 6 ? 0.75 : i <= 13 ? 0.5 : 0.25;
    o.require(s.rates == expected_s, "success rates");
    o.require(s.summary == (1.0 + 6 * 0.75 + 7 * 0.5 + 7 * 0.25) / 21.0, "success AUC");
    const Curve p = precision_curve(pred, truth);
    bool prec_ok = p.rates.size() == 51;
    for (int d = 0; prec_ok && d <= 50; ++d)
        prec_ok = p.rates[std::size_t(d)] == (d < 2 ? 0.25 : d < 5 ? 0.5 : 0.75);
    o.require(prec_ok && p.summary == 0.75, "precision curve");

    Sequence seq;
    seq.name = "static";
    seq.attributes = {"OCC"};
    for (int f = 0; f < 40; ++f) {
        seq.images.emplace_back(24, 24, CV_8UC3, cv::Scalar(0));
        seq.ground_truth.push_back({1.0 + 0.25 * f, 2, 8, 8});
    }
    const TrackerFactory factory = [] { return std::make_unique<StaticSession>(); };
    const EvalRun sre = run_sre(seq, factory);
    const EvalRun tre = run_tre(seq, factory);
    o.require(sre.variants.size() == 12, "SRE variants " + std::to_string(sre.variants.size()));
    o.require(tre.variants.size() == 20, "TRE variants " + std::to_string(tre.variants.size()));

    const std::vector<RunSummary> runs{summarize(run_ope(seq, factory), seq), summarize(sre, seq), summarize(tre, seq)};
    const ReportInfo info{engine_version(), config_hash(EngineConfig{}), config_to_json(EngineConfig{})};
    const auto d1 = fixtures::temp_dir("accept_report_a"), d2 = fixtures::temp_dir("accept_report_b");
    const auto f1 = emit_report(runs, d1, info);
    const auto f2 = emit_report(runs, d2, info);
    bool identical = f1 == f2;
    for (const auto& f : f1) identical &= slurp(d1 / f) == slurp(d2 / f);
    o.require(identical, "reports differ");
    o.note("SRE " + std::to_string(sre.variants.size()) + ", TRE " + std::to_string(tre.variants.size()) + ", " +
           std::to_string(f1.size()) + " identical report files");
    return o;
}

void write_tb(const Sequence& seq, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "img");
    std::ofstream gt(dir / "groundtruth_rect.txt");
    for (std::size_t i = 0; i < seq.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "%04zu.png", i + 1);
        cv::imwrite((dir / "img" / name).string(), seq.images[i]);
        const Box& b = seq.ground_truth[i];
        if (b.valid())
            gt << b.x + 1 << ',' << b.y + 1 << ',' << b.w << ',' << b.h << '\n';
        else
            gt << "NaN,NaN,NaN,NaN\n";
    }
}

Outcome tb_sequences() {
    Outcome o;
    const auto root = fixtures::temp_dir("accept_tb");
    for (std::uint64_t seed : {11u, 12u}) {
        SyntheticOptions so;
        so.frames = 30;
        so.seed = seed;
        so.occlusion_begin = 12;
        so.occlusion_end = 14;
        so.offscreen_begin = so.offscreen_end = 1000;
        so.texture_switch = 20;
        write_tb(make_synthetic_sequence(so), root / ("synthetic-" + std::to_string(seed)));
    }
    std::vector<RunSummary> runs;
    for (const auto& dir : list_sequences(root)) {
        const Sequence seq = load_sequence(dir, SequenceFormat::Tb);
        runs.push_back(summarize(run_ope(seq, aog_tracker_factory(EngineConfig{})), seq));
        o.require(runs.back().success.rates.size() == 21 && runs.back().precision.rates.size() == 51,
                  seq.name + " curves");
        o.note(seq.name + " AUC " + fmt("%.3f", runs.back().success.summary));
    }
    o.require(runs.size() == 2, "sequences loaded");
    const auto files = emit_report(runs, root / "report", {engine_version(), 0, ""});
    o.require(std::filesystem::exists(root / "report" / "plots.svg"), "plots");
    (void)files;
    return o;
}

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;   // <= 0: no limit
    bool required;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    bool strict = false;
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--strict") == 0)
            strict = true;
        else if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc)
            only.push_back(std::atoi(argv[++i]));
        else {
            std::fprintf(stderr, "usage: %s [--strict] [--only N]...\n", argv[0]);
            return 2;
        }
    }

    const std::vector<Criterion> criteria{
        {1, "structural counts", 1.0, true, structural_counts},
        {2, "configuration count", 10.0, true, configuration_count},
        {3, "spatial DP optimality", 60.0, true, parse_optimality},
        {4, "deformation local max", 0.0, true, local_max_exact},
        {5, "temporal DP optimality", 0.0, true, temporal_optimality},
        {6, "latent SVM", 0.0, true, lsvm_correctness},
        {7, "synthetic tracking", 300.0, true, synthetic_tracking},
        {8, "protocols and metrics", 0.0, true, protocol_metrics},
        {9, "TB-format OPE", 0.0, false, tb_sequences},
    };

    int required_failures = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_seconds > 0 && secs > c.budget_seconds)
            out.require(false, "took " + fmt("%.1f", secs) + " s, budget " + fmt("%.0f", c.budget_seconds) + " s");
        std::printf("%s %d %s%s (%.2f s): %s\n", out.pass ? "PASS" : "FAIL", c.id, c.name,
                    c.required ? "" : " [optional]", secs, out.detail.c_str());
        std::fflush(stdout);
        if (!out.pass && c.required) ++required_failures;
    }
    return strict && required_failures > 0 ? 1 : 0;
}
