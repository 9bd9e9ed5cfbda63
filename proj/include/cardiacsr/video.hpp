#pragma once

#include "phase.hpp"

#include <Eigen/Core>
#include <array>
#include <optional>
#include <vector>

namespace cardiacsr {

// Row-major H x W grayscale frame.
using Image = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct VideoClip
{
  std::vector<Image> frames;
  FrameIndex tStart = 0;                       // absolute index of frames[0] in the source video
  std::optional<std::array<double, 2>> spacing; // mm per pixel (row, col)
  double intensityMin = 0.0;
  double intensityMax = 0.0;

  FrameIndex frameCount() const { return static_cast<FrameIndex>(frames.size()); }
  int height() const { return frames.empty() ? 0 : static_cast<int>(frames.front().rows()); }
  int width() const { return frames.empty() ? 0 : static_cast<int>(frames.front().cols()); }

  // Recomputes intensityMin/Max from the frames.
  void updateRange();
  // Frame count >= 1, equal frame sizes of at least minSize, finite intensities.
  void validate(int minSize = 8) const;
};

// Axis-aligned box on the HR grid.
struct RoiBox
{
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;

  bool operator==(RoiBox const &) const = default;
};

double iou(RoiBox const &a, RoiBox const &b);

} // namespace cardiacsr
