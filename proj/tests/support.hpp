#pragma once

#include "cardiacsr/loss.hpp"
#include "cardiacsr/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace cardiacsr::testing {

inline nn::Tensor randomTensor(nn::Shape s, std::uint64_t seed, double lo = 0.0, double hi = 1.0)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<nn::Real> u(static_cast<nn::Real>(lo), static_cast<nn::Real>(hi));
  nn::Tensor t(s);
  for (auto &v : t.values()) {
    v = u(rng);
  }
  return t;
}

// Random LR batch with warm frames for the config's warm-up count (at least `warm`).
inline ClipBatch randomBatch(int batch, int frames, int h, int w, int warm, std::uint64_t seed)
{
  ClipBatch b;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(-1.0, 1.0);
  for (int t = 0; t < frames; ++t) {
    b.frames.push_back(randomTensor({batch, 1, h, w}, rng()));
    std::vector<double> row;
    for (int i = 0; i < batch; ++i) {
      row.push_back(phase(rng));
    }
    b.phases.push_back(row);
  }
  for (int i = 0; i < warm; ++i) {
    b.warmBefore.push_back(randomTensor({batch, 1, h, w}, rng()));
    b.warmAfter.push_back(randomTensor({batch, 1, h, w}, rng()));
  }
  return b;
}

inline std::vector<nn::Tensor> constantTargets(int batch, int frames, int h, int w, double value)
{
  return std::vector<nn::Tensor>(static_cast<std::size_t>(frames), nn::Tensor({batch, 1, h, w}, static_cast<nn::Real>(value)));
}

inline double maxAbsDiff(nn::Tensor const &a, nn::Tensor const &b)
{
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    m = std::max(m, static_cast<double>(std::abs(a.data()[i] - b.data()[i])));
  }
  return m;
}

struct GradCheckResult
{
  double worstRelative = 0.0;
  int checked = 0;
};

/*
 * Central differences of the total loss against backward() for `perTensor` random
 * elements of every parameter tensor. Targets sit far above any output so every
 * L1 term is linear. Relative error uses max(|a|, |n|, floor). Meaningful at 1e-3
 * only with double-precision tensors; float rounding swamps small gradients.
 */
inline GradCheckResult gradientCheck(PhaseAwareVsr &model,
                                     ClipBatch const &batch,
                                     std::vector<nn::Tensor> const &targets,
                                     int perTensor,
                                     double h,
                                     double floor,
                                     std::uint64_t seed)
{
  for (auto const &p : model.parameters()) {
    p.node().grad = nn::Tensor();
  }
  TotalLoss const loss = totalLoss(model.forward(batch), targets);
  nn::backward(loss.objective);
  auto evalLoss = [&] {
    nn::NoGradGuard guard;
    return totalLoss(model.forward(batch), targets).report.total;
  };
  std::mt19937_64 rng(seed);
  GradCheckResult result;
  for (auto const &p : model.parameters()) {
    nn::Tensor const analytic = p.grad();
    std::uniform_int_distribution<std::size_t> pick(0, p.value().numel() - 1);
    for (int k = 0; k < perTensor; ++k) {
      std::size_t const i = pick(rng);
      nn::Real &w = p.node().value.data()[i];
      nn::Real const original = w;
      w = original + static_cast<nn::Real>(h);
      double const plusStep = static_cast<double>(w) - original;
      double const up = evalLoss();
      w = original - static_cast<nn::Real>(h);
      double const minusStep = original - static_cast<double>(w);
      double const down = evalLoss();
      w = original;
      double const numeric = (up - down) / (plusStep + minusStep);
      double const a = analytic.data()[i];
      double const rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      result.worstRelative = std::max(result.worstRelative, rel);
      ++result.checked;
    }
  }
  return result;
}

} // namespace cardiacsr::testing
