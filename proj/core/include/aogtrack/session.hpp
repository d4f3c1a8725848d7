#pragma once

#include <memory>
#include <vector>

#include "aogtrack/evaluation.hpp"
#include "aogtrack/tracker.hpp"

namespace aog {

/// AogTracker behind the protocol interface.
class AogTrackerSession : public TrackerSession {
public:
    explicit AogTrackerSession(EngineConfig cfg) : tracker_(std::move(cfg)) {}

    void init(const cv::Mat& frame, const Box& box) override { tracker_.init(frame, box); }

    Box track(const cv::Mat& frame) override {
        const FrameResult r = tracker_.track(frame);
        return r.valid ? r.box : Box::invalid();
    }

    std::vector<Box> finish() override {
        std::vector<Box> out;
        for (const FrameResult& r : tracker_.finish()) out.push_back(r.valid ? r.box : Box::invalid());
        return out;
    }

    const AogTracker& tracker() const { return tracker_; }

private:
    AogTracker tracker_;
};

inline TrackerFactory aog_tracker_factory(const EngineConfig& cfg) {
    return [cfg] { return std::make_unique<AogTrackerSession>(cfg); };
}

}  // namespace aog
