#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include <opencv2/core.hpp>

#include "aogtrack/geometry.hpp"

namespace aog {

struct LabeledBox {
    int frame = 0;
    Box box;
};

/// Online training data. Frames are kept by index; the first frame is never
/// evicted and serves as the exhaustive negative pool.
struct TrainingDataset {
    int first_frame = 0;
    std::map<int, cv::Mat> frames;
    std::vector<LabeledBox> positives;
    std::vector<LabeledBox> negatives;   // hard negatives collected while tracking
    std::vector<int> pool_frames;        // frames mined over the whole image

    const cv::Mat& frame(int index) const;
    /// Frames holding a positive, ascending.
    std::vector<int> positive_frames() const;
    /// Drop frames (and their examples) outside `keep`; the first frame stays.
    void retain(std::span<const int> keep);
};

/// The box plus its eight shifts by +-d pixels; shifted boxes that leave the
/// frame are dropped. Throws std::invalid_argument if `box` is not inside the
/// frame.
TrainingDataset init_dataset(const cv::Mat& frame, const Box& box, double d, int frame_index = 0);

/// Adds the tracking result as a positive and every candidate not suppressed
/// by it (IoU < nms_iou) as a hard negative. No-op when `result` is empty.
void update_dataset(TrainingDataset& ds, int frame_index, const cv::Mat& frame, const std::optional<Box>& result,
                    std::span<const Box> candidates, double nms_iou);

/// First `first` frames, then the rest newest first, at most `cap` in total.
std::vector<int> select_training_frames(std::span<const int> valid_frames, int cap, int first);

}  // namespace aog
