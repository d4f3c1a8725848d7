#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "aogtrack/evaluation.hpp"
#include "aogtrack/tracker.hpp"

namespace aog {

/// Metrics of one protocol run on one sequence.
struct RunSummary {
    std::string sequence;
    Protocol protocol = Protocol::Ope;
    std::set<std::string> attributes;
    std::size_t variants = 0;
    Curve success;
    Curve precision;
    std::optional<VotResult> vot;
    double seconds = 0.0;
    std::vector<std::string> warnings;
};

RunSummary summarize(const EvalRun& run, const Sequence& seq);
RunSummary summarize(const VotResult& vot, const Sequence& seq, double seconds);

struct ReportInfo {
    std::string version;
    std::uint64_t config_hash = 0;
    std::string config_json;
};

/// Per-run CSV: one row per curve point, then the summary rows.
std::string run_csv(const RunSummary& run);
/// Per-sequence rows followed by per-attribute mean rows.
std::string aggregate_csv(std::span<const RunSummary> runs);
/// Success and precision plots side by side.
std::string plot_svg(std::span<const RunSummary> runs);
std::string manifest_json(std::span<const RunSummary> runs, const ReportInfo& info,
                          std::span<const std::string> files);

/// Writes <seq>_<protocol>.csv per run, plus aggregate.csv for two or more
/// runs, plots.svg and manifest.json. Returns the written file names.
std::vector<std::string> emit_report(std::span<const RunSummary> runs, const std::filesystem::path& out_dir,
                                     const ReportInfo& info);

/// "frame_index,x,y,w,h,score,valid,searched_whole_frame,trackability" rows.
std::string tracking_csv(std::span<const FrameResult> results);

/// Draws the object box (and part boxes) onto a copy of the frame.
cv::Mat render_result(const cv::Mat& frame, const FrameResult& result);

}  // namespace aog
