#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "aogtrack/geometry.hpp"

namespace aog {

enum class SequenceFormat { Tb, Vot };

std::optional<SequenceFormat> parse_sequence_format(const std::string& name);

/// Frames come from image files or, for generated data, from memory. Ground
/// truth is 0-based; absent boxes are Box::invalid().
struct Sequence {
    std::string name;
    std::vector<std::filesystem::path> frame_paths;
    std::vector<cv::Mat> images;
    std::vector<Box> ground_truth;
    std::set<std::string> attributes;

    std::size_t size() const { return images.empty() ? frame_paths.size() : images.size(); }
    /// Throws std::runtime_error when the image cannot be read.
    cv::Mat frame(std::size_t index) const;
};

/// One box per line, "x,y,w,h" separated by commas, tabs or spaces, 1-based.
std::vector<Box> parse_tb_annotations(std::istream& is);
/// One 8-number polygon (or a plain 4-number box) per line, 0-based.
std::vector<Box> parse_vot_annotations(std::istream& is);
/// Smallest axis-aligned box enclosing the polygon's vertices.
Box polygon_box(std::span<const double> xy);

/// Reads a sequence directory. Images are taken from `img/` (tb) or `color/`
/// (vot) when present, otherwise from the directory itself, in file-name
/// order. Annotations: groundtruth_rect.txt or groundtruth.txt. Optional
/// attributes.txt lists tags. Throws std::runtime_error on missing data or
/// when frame and annotation counts differ.
Sequence load_sequence(const std::filesystem::path& dir, SequenceFormat format);

/// Sub-directories of `dataset` holding a sequence, by name; `only` (if not
/// empty) restricts the selection.
std::vector<std::filesystem::path> list_sequences(const std::filesystem::path& dataset,
                                                  std::span<const std::string> only = {});

}  // namespace aog
