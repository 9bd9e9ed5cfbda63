#include "cardiacsr/degrade.hpp"
#include "cardiacsr/error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fftw3.h>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace cardiacsr {

namespace {

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex gPlannerMutex;

struct FftwBuffer
{
  explicit FftwBuffer(std::size_t n)
    : data{static_cast<fftw_complex *>(fftw_malloc(sizeof(fftw_complex) * n))}
  {
    if (data == nullptr) { throw std::bad_alloc(); }
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(FftwBuffer const &) = delete;
  FftwBuffer &operator=(FftwBuffer const &) = delete;

  fftw_complex *data;
};

struct FftwPlan
{
  FftwPlan(int rows, int cols, fftw_complex *buf, int sign)
  {
    std::lock_guard lock(gPlannerMutex);
    plan = fftw_plan_dft_2d(rows, cols, buf, buf, sign, FFTW_ESTIMATE);
  }
  ~FftwPlan()
  {
    std::lock_guard lock(gPlannerMutex);
    fftw_destroy_plan(plan);
  }
  FftwPlan(FftwPlan const &) = delete;
  FftwPlan &operator=(FftwPlan const &) = delete;

  fftw_plan plan;
};

bool keepFrequency(int k, int n, double cutoff)
{
  int const f = k <= n / 2 ? k : k - n;
  return std::abs(f) <= cutoff * n / 2.0 + 1e-9;
}

double cubicWeight(double x)
{
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) { return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0; }
  if (x < 2.0) { return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a; }
  return 0.0;
}

struct Tap
{
  std::array<int, 4> index;
  std::array<double, 4> weight;
};

std::vector<Tap> resizeTaps(int in, int out)
{
  std::vector<Tap> taps(static_cast<std::size_t>(out));
  double const ratio = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double const src = (o + 0.5) * ratio - 0.5;
    int const base = static_cast<int>(std::floor(src));
    double const frac = src - base;
    for (int k = 0; k < 4; ++k) {
      taps[o].index[k] = std::clamp(base - 1 + k, 0, in - 1);
      taps[o].weight[k] = cubicWeight(frac - (k - 1));
    }
  }
  return taps;
}

} // namespace

void DegradeConfig::validate() const
{
  if (scale < 2 || scale > 4) { fail<ConfigError>("scale must be 2, 3 or 4 (got {})", scale); }
  if (cutoffFraction < 0.0 || cutoffFraction > 1.0) {
    fail<ConfigError>("cutoff fraction must lie in (0, 1] (got {})", cutoffFraction);
  }
}

Image lowpassFilter(Image const &frame, double cutoffFraction)
{
  if (!(cutoffFraction > 0.0 && cutoffFraction <= 1.0)) {
    fail<ConfigError>("cutoff fraction must lie in (0, 1] (got {})", cutoffFraction);
  }
  if (!frame.isFinite().all()) { fail<DataError>("low-pass input contains non-finite values"); }
  int const rows = static_cast<int>(frame.rows());
  int const cols = static_cast<int>(frame.cols());
  std::size_t const n = static_cast<std::size_t>(rows) * cols;

  FftwBuffer buf(n);
  FftwPlan forward(rows, cols, buf.data, FFTW_FORWARD);
  FftwPlan inverse(rows, cols, buf.data, FFTW_BACKWARD);
  for (std::size_t i = 0; i < n; ++i) {
    buf.data[i][0] = frame.data()[i];
    buf.data[i][1] = 0.0;
  }
  fftw_execute(forward.plan);
  for (int ky = 0; ky < rows; ++ky) {
    bool const keepRow = keepFrequency(ky, rows, cutoffFraction);
    for (int kx = 0; kx < cols; ++kx) {
      if (!keepRow || !keepFrequency(kx, cols, cutoffFraction)) {
        auto &c = buf.data[static_cast<std::size_t>(ky) * cols + kx];
        c[0] = 0.0;
        c[1] = 0.0;
      }
    }
  }
  fftw_execute(inverse.plan);

  Image out(rows, cols);
  double const norm = 1.0 / static_cast<double>(n);
  double maxImag = 0.0;
  double maxReal = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.data()[i] = buf.data[i][0] * norm;
    maxImag = std::max(maxImag, std::abs(buf.data[i][1] * norm));
    maxReal = std::max(maxReal, std::abs(out.data()[i]));
  }
  if (maxImag > 1e-10 * std::max(1.0, maxReal)) {
    throw std::logic_error("low-pass filter left an imaginary residue above 1e-10");
  }
  return out;
}

Image bicubicResize(Image const &frame, int outH, int outW)
{
  if (outH < 1 || outW < 1) { fail<ShapeError>("bicubic output size must be positive (got {}x{})", outH, outW); }
  int const inH = static_cast<int>(frame.rows());
  int const inW = static_cast<int>(frame.cols());
  auto const colTaps = resizeTaps(inW, outW);
  auto const rowTaps = resizeTaps(inH, outH);

  Image horizontal(inH, outW);
  for (int y = 0; y < inH; ++y) {
    for (int x = 0; x < outW; ++x) {
      Tap const &t = colTaps[x];
      double v = 0.0;
      for (int k = 0; k < 4; ++k) {
        v += t.weight[k] * frame(y, t.index[k]);
      }
      horizontal(y, x) = v;
    }
  }
  Image out(outH, outW);
  for (int y = 0; y < outH; ++y) {
    Tap const &t = rowTaps[y];
    for (int x = 0; x < outW; ++x) {
      double v = 0.0;
      for (int k = 0; k < 4; ++k) {
        v += t.weight[k] * horizontal(t.index[k], x);
      }
      out(y, x) = v;
    }
  }
  return out;
}

VideoClip degradeClip(VideoClip const &clip, DegradeConfig const &cfg)
{
  cfg.validate();
  clip.validate(1);
  int const r = cfg.scale;
  if (clip.height() % r != 0) { fail<ShapeError>("height {} not divisible by scale {}", clip.height(), r); }
  if (clip.width() % r != 0) { fail<ShapeError>("width {} not divisible by scale {}", clip.width(), r); }
  VideoClip out;
  out.tStart = clip.tStart;
  if (clip.spacing) { out.spacing = std::array<double, 2>{(*clip.spacing)[0] * r, (*clip.spacing)[1] * r}; }
  out.frames.reserve(clip.frames.size());
  double const cutoff = cfg.effectiveCutoff();
  for (auto const &f : clip.frames) {
    out.frames.push_back(bicubicResize(lowpassFilter(f, cutoff), clip.height() / r, clip.width() / r));
  }
  out.updateRange();
  return out;
}

VideoClip bicubicUpscale(VideoClip const &clip, int scale)
{
  VideoClip out;
  out.tStart = clip.tStart;
  if (clip.spacing) { out.spacing = std::array<double, 2>{(*clip.spacing)[0] / scale, (*clip.spacing)[1] / scale}; }
  out.frames.reserve(clip.frames.size());
  for (auto const &f : clip.frames) {
    out.frames.push_back(bicubicResize(f, static_cast<int>(f.rows()) * scale, static_cast<int>(f.cols()) * scale));
  }
  out.updateRange();
  return out;
}

} // namespace cardiacsr
