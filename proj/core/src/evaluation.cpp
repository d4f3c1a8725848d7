#include "aogtrack/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace aog {

const char* protocol_name(Protocol p) {
    switch (p) {
    case Protocol::Ope: return "ope";
    case Protocol::Sre: return "sre";
    case Protocol::Tre: return "tre";
    case Protocol::Vot: return "vot";
    }
    return "?";
}

std::optional<Protocol> parse_protocol(const std::string& name) {
    for (Protocol p : {Protocol::Ope, Protocol::Sre, Protocol::Tre, Protocol::Vot})
        if (name == protocol_name(p)) return p;
    return std::nullopt;
}

namespace {

constexpr int kSuccessSteps = 20;
constexpr int kPrecisionMax = 50;

Curve success_from(const std::vector<double>& overlaps) {
    Curve c;
    for (int i = 0; i <= kSuccessSteps; ++i) {
        const double tau = double(i) / kSuccessSteps;
        std::size_t hit = 0;
        for (double o : overlaps) hit += o >= tau;
        c.thresholds.push_back(tau);
        c.rates.push_back(overlaps.empty() ? 0.0 : double(hit) / double(overlaps.size()));
    }
    double sum = 0.0;
    for (double r : c.rates) sum += r;
    c.summary = sum / double(c.rates.size());
    return c;
}

Curve precision_from(const std::vector<double>& distances) {
    Curve c;
    for (int d = 0; d <= kPrecisionMax; ++d) {
        std::size_t hit = 0;
        for (double e : distances) hit += e <= d;
        c.thresholds.push_back(d);
        c.rates.push_back(distances.empty() ? 0.0 : double(hit) / double(distances.size()));
    }
    c.summary = c.rates[20];
    return c;
}

void collect(std::span<const Box> predicted, std::span<const Box> truth, std::vector<double>* overlaps,
             std::vector<double>* distances) {
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!truth[i].valid()) continue;
        const Box p = i < predicted.size() ? predicted[i] : Box::invalid();
        if (overlaps) overlaps->push_back(p.valid() ? iou(p, truth[i]) : 0.0);
        if (distances) distances->push_back(p.valid() ? center_distance(p, truth[i]) : HUGE_VAL);
    }
}

std::span<const Box> truth_from(const Sequence& seq, int start) {
    return std::span<const Box>(seq.ground_truth).subspan(static_cast<std::size_t>(start));
}

template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < n;) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

EvalRun run_all(const Sequence& seq, const TrackerFactory& factory, Protocol protocol,
                std::vector<std::tuple<std::string, int, Box>> jobs, int threads) {
    EvalRun run;
    run.sequence = seq.name;
    run.protocol = protocol;
    run.variants.resize(jobs.size());
    parallel_for(jobs.size(), threads, [&](std::size_t i) {
        auto& [name, start, init] = jobs[i];
        run.variants[i] = run_variant(seq, factory, name, start, init);
    });
    return run;
}

}  // namespace

Curve success_curve(std::span<const Box> predicted, std::span<const Box> truth) {
    std::vector<double> o;
    collect(predicted, truth, &o, nullptr);
    return success_from(o);
}

Curve precision_curve(std::span<const Box> predicted, std::span<const Box> truth) {
    std::vector<double> d;
    collect(predicted, truth, nullptr, &d);
    return precision_from(d);
}

Curve success_curve(const EvalRun& run, const Sequence& seq) {
    std::vector<double> o;
    for (const Variant& v : run.variants) collect(v.predicted, truth_from(seq, v.start), &o, nullptr);
    return success_from(o);
}

Curve precision_curve(const EvalRun& run, const Sequence& seq) {
    std::vector<double> d;
    for (const Variant& v : run.variants) collect(v.predicted, truth_from(seq, v.start), nullptr, &d);
    return precision_from(d);
}

std::vector<int> tre_starts(int frames, int count) {
    std::vector<int> out;
    for (int i = 0; i < count; ++i) {
        const int s = static_cast<int>(static_cast<long long>(i) * frames / count);
        if (out.empty() || out.back() != s) out.push_back(s);
    }
    return out;
}

std::vector<std::pair<std::string, Box>> sre_inits(const Box& b) {
    static const char* names[] = {"shift-nw", "shift-n", "shift-ne", "shift-w", "shift-e", "shift-sw", "shift-s",
                                  "shift-se"};
    std::vector<std::pair<std::string, Box>> out;
    int k = 0;
    for (int sy = -1; sy <= 1; ++sy)
        for (int sx = -1; sx <= 1; ++sx) {
            if (sx == 0 && sy == 0) continue;
            out.emplace_back(names[k++], Box{b.x + 0.1 * sx * b.w, b.y + 0.1 * sy * b.h, b.w, b.h});
        }
    for (double s : {0.8, 0.9, 1.1, 1.2}) {
        char name[32];
        std::snprintf(name, sizeof name, "scale-%.1f", s);
        out.emplace_back(name, scaled(b, s));
    }
    return out;
}

Variant run_variant(const Sequence& seq, const TrackerFactory& factory, std::string name, int start, const Box& init) {
    const auto t0 = std::chrono::steady_clock::now();
    Variant v;
    v.name = std::move(name);
    v.start = start;
    v.init = init;
    auto tracker = factory();
    const cv::Mat first = seq.frame(static_cast<std::size_t>(start));
    tracker->init(first, clip(init, first.cols, first.rows));
    for (std::size_t i = static_cast<std::size_t>(start) + 1; i < seq.size(); ++i) tracker->track(seq.frame(i));
    v.predicted = tracker->finish();
    v.predicted.resize(seq.size() - static_cast<std::size_t>(start), Box::invalid());
    v.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return v;
}

EvalRun run_ope(const Sequence& seq, const TrackerFactory& factory, int threads) {
    return run_all(seq, factory, Protocol::Ope, {{"ope", 0, seq.ground_truth.at(0)}}, threads);
}

EvalRun run_tre(const Sequence& seq, const TrackerFactory& factory, int threads) {
    std::vector<std::tuple<std::string, int, Box>> jobs;
    std::vector<std::string> warnings;
    for (int s : tre_starts(static_cast<int>(seq.size()))) {
        const Box& b = seq.ground_truth.at(static_cast<std::size_t>(s));
        if (!b.valid() || s + 1 >= static_cast<int>(seq.size())) {
            warnings.push_back("tre start " + std::to_string(s) + " skipped: no ground truth");
            continue;
        }
        jobs.emplace_back("start-" + std::to_string(s), s, b);
    }
    EvalRun run = run_all(seq, factory, Protocol::Tre, std::move(jobs), threads);
    run.warnings = std::move(warnings);
    return run;
}

EvalRun run_sre(const Sequence& seq, const TrackerFactory& factory, int threads) {
    std::vector<std::tuple<std::string, int, Box>> jobs;
    for (auto& [name, box] : sre_inits(seq.ground_truth.at(0))) jobs.emplace_back(name, 0, box);
    return run_all(seq, factory, Protocol::Sre, std::move(jobs), threads);
}

VotResult run_vot(const Sequence& seq, const TrackerFactory& factory, const VotOptions& opts) {
    VotResult r;
    r.predicted.assign(seq.size(), Box::invalid());
    double sum = 0.0;
    std::size_t f = 0;
    while (f < seq.size()) {
        const Box& gt = seq.ground_truth[f];
        if (!gt.valid()) {
            ++f;
            continue;
        }
        auto tracker = factory();
        const cv::Mat first = seq.frame(f);
        tracker->init(first, clip(gt, first.cols, first.rows));
        r.predicted[f] = gt;
        const std::size_t init = f;
        std::size_t next = seq.size();
        for (std::size_t i = f + 1; i < seq.size(); ++i) {
            const Box p = tracker->track(seq.frame(i));
            r.predicted[i] = p;
            const Box& truth = seq.ground_truth[i];
            if (!truth.valid()) continue;
            const double o = p.valid() ? iou(p, truth) : 0.0;
            if (o <= 0.0) {
                ++r.failures;
                r.predicted[i] = Box::invalid();
                next = i + static_cast<std::size_t>(opts.skip);
                break;
            }
            if (i - init >= static_cast<std::size_t>(opts.burn_in)) {
                sum += o;
                ++r.counted_frames;
            }
        }
        f = next;
    }
    r.accuracy = r.counted_frames ? sum / r.counted_frames : 0.0;
    return r;
}

}  // namespace aog
