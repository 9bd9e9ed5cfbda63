#pragma once

#include "support.hpp"

#include <string>

namespace cardiacsr::testing {

// The C = 8 audit network: every mechanism on, one refinement stage, x2.
inline ModelConfig gradcheckConfig(int warmupN)
{
  ModelConfig cfg;
  cfg.scale = 2;
  cfg.channels = 8;
  cfg.hidden = 8;
  cfg.extractBlocks = 1;
  cfg.warmupN = warmupN;
  cfg.omega = 1;
  cfg.fusionHalfwidth = 1;
  cfg.initSeed = 17;
  return cfg;
}

// Worst relative error over every parameter tensor, without warm-up.
inline GradCheckResult gradcheckAllTensors()
{
  PhaseAwareVsr model(gradcheckConfig(0));
  ClipBatch const batch = randomBatch(1, 3, 5, 5, 0, 14);
  return gradientCheck(model, batch, constantTargets(1, 3, 10, 10, 4.0), 6, 1e-6, 1e-8, 15);
}

/*
 * With warm-up on, the primed state is a constant of the step (computed without a graph),
 * so only tensors that do not feed the warm frames can be compared against differences:
 * the fusion and up-sampling convolutions.
 */
inline GradCheckResult gradcheckDownstreamOfWarmup()
{
  PhaseAwareVsr model(gradcheckConfig(2));
  ClipBatch const batch = randomBatch(1, 3, 5, 5, 2, 16);
  auto const targets = constantTargets(1, 3, 10, 10, 4.0);
  for (auto const &p : model.parameters()) {
    p.node().grad = nn::Tensor();
  }
  TotalLoss const loss = totalLoss(model.forward(batch), targets);
  nn::backward(loss.objective);
  GradCheckResult result;
  std::mt19937_64 rng(17);
  for (auto const &p : model.parameters()) {
    std::string const &name = p.node().name;
    if (name.rfind("fusion.", 0) != 0 && name.rfind("up.", 0) != 0) { continue; }
    std::uniform_int_distribution<std::size_t> pick(0, p.value().numel() - 1);
    for (int k = 0; k < 6; ++k) {
      std::size_t const i = pick(rng);
      nn::Real &w = p.node().value.data()[i];
      nn::Real const original = w;
      auto evalAt = [&](nn::Real v) {
        w = v;
        nn::NoGradGuard guard;
        return totalLoss(model.forward(batch), targets).report.total;
      };
      double const numeric = (evalAt(original + 1e-6) - evalAt(original - 1e-6)) / 2e-6;
      w = original;
      double const a = p.grad().data()[i];
      result.worstRelative =
        std::max(result.worstRelative, std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8}));
      ++result.checked;
    }
  }
  return result;
}

} // namespace cardiacsr::testing
