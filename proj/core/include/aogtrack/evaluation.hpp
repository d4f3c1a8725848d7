#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "aogtrack/geometry.hpp"
#include "aogtrack/sequence.hpp"

namespace aog {

enum class Protocol { Ope, Sre, Tre, Vot };

const char* protocol_name(Protocol p);
std::optional<Protocol> parse_protocol(const std::string& name);

/// Streaming tracker interface used by the protocols.
class TrackerSession {
public:
    virtual ~TrackerSession() = default;
    virtual void init(const cv::Mat& frame, const Box& box) = 0;
    /// Online estimate for the next frame; invalid boxes mean "not found".
    virtual Box track(const cv::Mat& frame) = 0;
    /// Final trajectory from the init frame on (may revise online estimates).
    virtual std::vector<Box> finish() = 0;
};

using TrackerFactory = std::function<std::unique_ptr<TrackerSession>()>;

struct Variant {
    std::string name;
    int start = 0;                // first frame (init frame)
    Box init;
    std::vector<Box> predicted;   // one per frame from `start` to the end
    double seconds = 0.0;
};

struct EvalRun {
    std::string sequence;
    Protocol protocol = Protocol::Ope;
    std::vector<Variant> variants;
    std::vector<std::string> warnings;
};

struct Curve {
    std::vector<double> thresholds;
    std::vector<double> rates;
    double summary = 0.0;   // AUC for success, precision at 20 px for precision
};

/// Success rate (fraction with IoU >= tau) for tau = 0, 0.05, ..., 1 over
/// frames whose ground truth is valid; invalid predictions count as IoU 0.
/// summary = mean of the 21 rates.
Curve success_curve(std::span<const Box> predicted, std::span<const Box> truth);
/// Fraction with centre distance <= d for d = 0, 1, ..., 50 px; invalid
/// predictions are infinitely far. summary = rate at 20 px.
Curve precision_curve(std::span<const Box> predicted, std::span<const Box> truth);

/// Curves pooled over every frame of every variant.
Curve success_curve(const EvalRun& run, const Sequence& seq);
Curve precision_curve(const EvalRun& run, const Sequence& seq);

/// floor(i * n / count) for i < count, deduplicated.
std::vector<int> tre_starts(int frames, int count = 20);

/// Eight centre shifts by 10% of width/height, then scalings 0.8, 0.9, 1.1, 1.2.
std::vector<std::pair<std::string, Box>> sre_inits(const Box& truth);

/// Runs one variant: init at `start` with `init`, then tracks to the end.
Variant run_variant(const Sequence& seq, const TrackerFactory& factory, std::string name, int start, const Box& init);

EvalRun run_ope(const Sequence& seq, const TrackerFactory& factory, int threads = 1);
EvalRun run_tre(const Sequence& seq, const TrackerFactory& factory, int threads = 1);
EvalRun run_sre(const Sequence& seq, const TrackerFactory& factory, int threads = 1);

struct VotOptions {
    int skip = 5;      // frames skipped after a failure before re-initialising
    int burn_in = 10;  // frames after each (re)initialisation left out of accuracy
};

struct VotResult {
    double accuracy = 0.0;       // mean IoU over counted frames
    int failures = 0;
    int counted_frames = 0;
    std::vector<Box> predicted;  // per frame; invalid while skipped
};

VotResult run_vot(const Sequence& seq, const TrackerFactory& factory, const VotOptions& opts = {});

}  // namespace aog
