#include "aogtrack/dataset.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace aog {

namespace {

bool inside(const Box& b, const cv::Mat& frame) {
    constexpr double eps = 1e-9;
    return b.valid() && b.x >= -eps && b.y >= -eps && b.right() <= frame.cols + eps && b.bottom() <= frame.rows + eps;
}

}  // namespace

const cv::Mat& TrainingDataset::frame(int index) const {
    const auto it = frames.find(index);
    if (it == frames.end()) throw std::out_of_range("frame " + std::to_string(index) + " not in the dataset");
    return it->second;
}

std::vector<int> TrainingDataset::positive_frames() const {
    std::set<int> s;
    for (const auto& p : positives) s.insert(p.frame);
    return {s.begin(), s.end()};
}

void TrainingDataset::retain(std::span<const int> keep) {
    std::set<int> k(keep.begin(), keep.end());
    k.insert(first_frame);
    for (auto it = frames.begin(); it != frames.end();) it = k.count(it->first) ? std::next(it) : frames.erase(it);
    auto gone = [&](const LabeledBox& b) { return !k.count(b.frame); };
    positives.erase(std::remove_if(positives.begin(), positives.end(), gone), positives.end());
    negatives.erase(std::remove_if(negatives.begin(), negatives.end(), gone), negatives.end());
}

TrainingDataset init_dataset(const cv::Mat& frame, const Box& box, double d, int frame_index) {
    if (frame.empty()) throw std::invalid_argument("empty first frame");
    if (!inside(box, frame)) throw std::invalid_argument("initial box must lie inside the frame");
    TrainingDataset ds;
    ds.first_frame = frame_index;
    ds.frames.emplace(frame_index, frame);
    ds.pool_frames.push_back(frame_index);
    ds.positives.push_back({frame_index, box});
    for (int sy = -1; sy <= 1; ++sy) {
        for (int sx = -1; sx <= 1; ++sx) {
            if (sx == 0 && sy == 0) continue;
            const Box s{box.x + sx * d, box.y + sy * d, box.w, box.h};
            if (inside(s, frame)) ds.positives.push_back({frame_index, s});
        }
    }
    return ds;
}

void update_dataset(TrainingDataset& ds, int frame_index, const cv::Mat& frame, const std::optional<Box>& result,
                    std::span<const Box> candidates, double nms_iou) {
    if (!result || !result->valid()) return;
    ds.frames[frame_index] = frame;
    ds.positives.push_back({frame_index, *result});
    for (const Box& c : candidates)
        if (iou(c, *result) < nms_iou) ds.negatives.push_back({frame_index, c});
}

std::vector<int> select_training_frames(std::span<const int> valid_frames, int cap, int first) {
    std::vector<int> v(valid_frames.begin(), valid_frames.end());
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    std::vector<int> out;
    const std::size_t c = static_cast<std::size_t>(std::max(cap, 0));
    const std::size_t head = std::min({static_cast<std::size_t>(std::max(first, 0)), v.size(), c});
    out.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(head));
    for (std::size_t i = v.size(); i-- > head && out.size() < c;) out.push_back(v[i]);
    return out;
}

}  // namespace aog
