#include "cardiacsr/metrics.hpp"
#include "cardiacsr/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace cardiacsr {

namespace {

void requireSameShape(Image const &a, Image const &b, char const *what)
{
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    fail<ShapeError>("{}: {}x{} vs {}x{}", what, a.rows(), a.cols(), b.rows(), b.cols());
  }
}

double psnrFromMse(double mse, double dataRange)
{
  if (dataRange <= 0.0) { fail<ConfigError>("data range must be positive (got {})", dataRange); }
  if (mse <= 0.0) { return kPsnrCap; }
  return std::min(kPsnrCap, 10.0 * std::log10(dataRange * dataRange / mse));
}

// Separable 'valid' Gaussian filtering.
Image filterValid(Image const &img, std::vector<double> const &kernel)
{
  auto const k = static_cast<Eigen::Index>(kernel.size());
  Eigen::Index const outH = img.rows() - k + 1;
  Eigen::Index const outW = img.cols() - k + 1;
  Image tmp(img.rows(), outW);
  for (Eigen::Index y = 0; y < img.rows(); ++y) {
    for (Eigen::Index x = 0; x < outW; ++x) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < k; ++i) {
        s += kernel[i] * img(y, x + i);
      }
      tmp(y, x) = s;
    }
  }
  Image out(outH, outW);
  for (Eigen::Index y = 0; y < outH; ++y) {
    for (Eigen::Index x = 0; x < outW; ++x) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < k; ++i) {
        s += kernel[i] * tmp(y + i, x);
      }
      out(y, x) = s;
    }
  }
  return out;
}

} // namespace

double psnr(Image const &a, Image const &b, double dataRange)
{
  requireSameShape(a, b, "psnr");
  return psnrFromMse((a - b).square().mean(), dataRange);
}

double psnr(VideoClip const &a, VideoClip const &b, double dataRange)
{
  if (a.frames.size() != b.frames.size()) {
    fail<ShapeError>("psnr: {} frames vs {}", a.frames.size(), b.frames.size());
  }
  double sum = 0.0;
  double count = 0.0;
  for (std::size_t t = 0; t < a.frames.size(); ++t) {
    requireSameShape(a.frames[t], b.frames[t], "psnr");
    sum += (a.frames[t] - b.frames[t]).square().sum();
    count += static_cast<double>(a.frames[t].size());
  }
  return psnrFromMse(count > 0 ? sum / count : 0.0, dataRange);
}

double ssim(Image const &a, Image const &b, SsimOptions const &opts)
{
  requireSameShape(a, b, "ssim");
  if (a.rows() < opts.window || a.cols() < opts.window) {
    fail<ShapeError>("ssim: image {}x{} smaller than window {}", a.rows(), a.cols(), opts.window);
  }
  std::vector<double> kernel(static_cast<std::size_t>(opts.window));
  double const centre = (opts.window - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < opts.window; ++i) {
    kernel[i] = std::exp(-(i - centre) * (i - centre) / (2.0 * opts.sigma * opts.sigma));
    total += kernel[i];
  }
  for (double &k : kernel) {
    k /= total;
  }
  double const c1 = (0.01 * opts.dataRange) * (0.01 * opts.dataRange);
  double const c2 = (0.03 * opts.dataRange) * (0.03 * opts.dataRange);

  Image const muA = filterValid(a, kernel);
  Image const muB = filterValid(b, kernel);
  Image const varA = filterValid(a * a, kernel) - muA * muA;
  Image const varB = filterValid(b * b, kernel) - muB * muB;
  Image const cov = filterValid(a * b, kernel) - muA * muB;
  Image const map =
    ((2.0 * muA * muB + c1) * (2.0 * cov + c2)) / ((muA * muA + muB * muB + c1) * (varA + varB + c2));
  return map.mean();
}

RoiBox detectHeartRoi(VideoClip const &clip, RoiOptions const &opts)
{
  if (clip.frameCount() < 4) { fail<DataError>("ROI detection needs at least 4 frames (got {})", clip.frameCount()); }
  clip.validate(16);
  int const h = clip.height();
  int const w = clip.width();

  Image mean = Image::Zero(h, w);
  for (auto const &f : clip.frames) {
    mean += f;
  }
  mean /= static_cast<double>(clip.frameCount());
  Image variance = Image::Zero(h, w);
  for (auto const &f : clip.frames) {
    variance += (f - mean).square();
  }
  variance /= static_cast<double>(clip.frameCount());

  std::vector<double> sorted(variance.data(), variance.data() + variance.size());
  auto const nth = static_cast<std::size_t>(std::floor(opts.percentile * static_cast<double>(sorted.size() - 1)));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(nth), sorted.end());
  double const threshold = sorted[nth];

  // Largest 4-connected component of {variance > threshold}; ties on size keep the first in raster order.
  std::vector<int> label(static_cast<std::size_t>(h) * w, -1);
  std::vector<int> stack;
  int bestSize = 0;
  RoiBox best;
  int next = 0;
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      std::size_t const start = static_cast<std::size_t>(y0) * w + x0;
      if (label[start] >= 0 || !(variance(y0, x0) > threshold)) { continue; }
      int size = 0;
      int top = y0, bottom = y0, left = x0, right = x0;
      label[start] = next;
      stack.assign(1, static_cast<int>(start));
      while (!stack.empty()) {
        int const idx = stack.back();
        stack.pop_back();
        int const y = idx / w;
        int const x = idx % w;
        ++size;
        top = std::min(top, y);
        bottom = std::max(bottom, y);
        left = std::min(left, x);
        right = std::max(right, x);
        constexpr int dy[4] = {-1, 1, 0, 0};
        constexpr int dx[4] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
          int const ny = y + dy[k];
          int const nx = x + dx[k];
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) { continue; }
          std::size_t const n = static_cast<std::size_t>(ny) * w + nx;
          if (label[n] < 0 && variance(ny, nx) > threshold) {
            label[n] = next;
            stack.push_back(static_cast<int>(n));
          }
        }
      }
      if (size > bestSize) {
        bestSize = size;
        best = RoiBox{.top = top, .left = left, .height = bottom - top + 1, .width = right - left + 1};
      }
      ++next;
    }
  }

  if (bestSize == 0) { return RoiBox{.top = h / 4, .left = w / 4, .height = h / 2, .width = w / 2}; }
  int const top = std::max(0, best.top - opts.dilation);
  int const left = std::max(0, best.left - opts.dilation);
  int const bottom = std::min(h, best.top + best.height + opts.dilation);
  int const right = std::min(w, best.left + best.width + opts.dilation);
  return RoiBox{.top = top, .left = left, .height = bottom - top, .width = right - left};
}

Image crop(Image const &img, RoiBox const &box)
{
  if (box.top < 0 || box.left < 0 || box.height < 1 || box.width < 1 || box.top + box.height > img.rows() ||
      box.left + box.width > img.cols()) {
    fail<ShapeError>("ROI ({}, {}, {}x{}) outside {}x{} frame", box.top, box.left, box.height, box.width, img.rows(),
                     img.cols());
  }
  return img.block(box.top, box.left, box.height, box.width);
}

MetricReport cardiacMetrics(VideoClip const &sr, VideoClip const &hr, std::optional<RoiBox> roiOverride,
                            SsimOptions const &opts)
{
  if (sr.frames.size() != hr.frames.size()) {
    fail<ShapeError>("cardiac metrics: {} SR frames vs {} HR frames", sr.frames.size(), hr.frames.size());
  }
  MetricReport report;
  report.roi = roiOverride ? *roiOverride : detectHeartRoi(hr);
  for (std::size_t t = 0; t < hr.frames.size(); ++t) {
    Image const &s = sr.frames[t];
    Image const &h = hr.frames[t];
    report.psnr += psnr(s, h, opts.dataRange);
    report.ssim += ssim(s, h, opts);
    Image const sc = crop(s, report.roi);
    Image const hc = crop(h, report.roi);
    report.cardiacPsnr += psnr(sc, hc, opts.dataRange);
    report.cardiacSsim += ssim(sc, hc, opts);
  }
  double const n = static_cast<double>(hr.frames.size());
  report.psnr /= n;
  report.ssim /= n;
  report.cardiacPsnr /= n;
  report.cardiacSsim /= n;
  return report;
}

} // namespace cardiacsr
