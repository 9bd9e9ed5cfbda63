#pragma once

#include "video.hpp"

namespace cardiacsr {

struct DegradeConfig
{
  int scale = 4;
  // Fraction of each frequency axis kept by the k-space low-pass. 0 selects 1/scale.
  double cutoffFraction = 0.0;

  double effectiveCutoff() const { return cutoffFraction > 0.0 ? cutoffFraction : 1.0 / scale; }
  void validate() const;
};

/*
 * k-space truncation: forward 2-D DFT, zero every coefficient whose signed frequency
 * index f along either axis has |f| > cutoff * N / 2, inverse DFT, real part.
 * cutoff = 1 keeps every coefficient, including the Nyquist row/column.
 */
Image lowpassFilter(Image const &frame, double cutoffFraction);

// Keys cubic convolution (a = -0.5), pixel-centre aligned, edge-replicating. No anti-aliasing.
Image bicubicResize(Image const &frame, int outH, int outW);

// Low-pass every frame, then bicubic-downsample by cfg.scale.
VideoClip degradeClip(VideoClip const &clip, DegradeConfig const &cfg);

// Bicubic upsampling of every frame by scale; the interpolation baseline.
VideoClip bicubicUpscale(VideoClip const &clip, int scale);

} // namespace cardiacsr
