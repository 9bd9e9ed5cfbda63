#include "cardiacsr/video.hpp"
#include "cardiacsr/error.hpp"

#include <algorithm>
#include <limits>

namespace cardiacsr {

void VideoClip::updateRange()
{
  intensityMin = std::numeric_limits<double>::infinity();
  intensityMax = -std::numeric_limits<double>::infinity();
  for (auto const &f : frames) {
    intensityMin = std::min(intensityMin, f.minCoeff());
    intensityMax = std::max(intensityMax, f.maxCoeff());
  }
}

void VideoClip::validate(int minSize) const
{
  if (frames.empty()) { fail<ShapeError>("video clip has no frames"); }
  int const h = height();
  int const w = width();
  if (h < minSize || w < minSize) { fail<ShapeError>("frame size {}x{} below minimum {}", h, w, minSize); }
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].rows() != h || frames[t].cols() != w) {
      fail<ShapeError>("frame {} is {}x{}, expected {}x{}", t, frames[t].rows(), frames[t].cols(), h, w);
    }
    if (!frames[t].isFinite().all()) { fail<DataError>("frame {} contains non-finite intensities", t); }
  }
}

double iou(RoiBox const &a, RoiBox const &b)
{
  int const top = std::max(a.top, b.top);
  int const left = std::max(a.left, b.left);
  int const bottom = std::min(a.top + a.height, b.top + b.height);
  int const right = std::min(a.left + a.width, b.left + b.width);
  double const inter = static_cast<double>(std::max(0, bottom - top)) * std::max(0, right - left);
  double const uni = static_cast<double>(a.height) * a.width + static_cast<double>(b.height) * b.width - inter;
  return uni > 0 ? inter / uni : 0.0;
}

} // namespace cardiacsr
