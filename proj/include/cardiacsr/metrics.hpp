#pragma once

#include "video.hpp"

#include <optional>
#include <string>

namespace cardiacsr {

inline constexpr double kPsnrCap = 100.0;

// 10 log10(range^2 / MSE), capped at kPsnrCap (also returned for MSE == 0).
double psnr(Image const &a, Image const &b, double dataRange = 1.0);
// MSE pooled over every pixel of every frame.
double psnr(VideoClip const &a, VideoClip const &b, double dataRange = 1.0);

struct SsimOptions
{
  int window = 11;
  double sigma = 1.5;
  double dataRange = 1.0;
};

// Mean SSIM over all fully-contained Gaussian windows, K1 = 0.01, K2 = 0.03.
double ssim(Image const &a, Image const &b, SsimOptions const &opts = {});

struct RoiOptions
{
  double percentile = 0.95;
  int dilation = 8;
};

/*
 * Heart localisation from motion: per-pixel temporal variance, threshold at the given
 * percentile, largest 4-connected component above it, bounding box dilated and clamped.
 * Without any component the centred half-size box is returned.
 */
RoiBox detectHeartRoi(VideoClip const &clip, RoiOptions const &opts = {});

struct MetricReport
{
  std::string videoId;
  double psnr = 0.0;
  double ssim = 0.0;
  double cardiacPsnr = 0.0;
  double cardiacSsim = 0.0;
  RoiBox roi;
};

Image crop(Image const &img, RoiBox const &box);

// Frame-averaged global and ROI scores. The ROI is detected on hr unless roiOverride is set.
MetricReport cardiacMetrics(VideoClip const &sr,
                            VideoClip const &hr,
                            std::optional<RoiBox> roiOverride = std::nullopt,
                            SsimOptions const &opts = {});

} // namespace cardiacsr
