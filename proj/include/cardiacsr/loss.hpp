#pragma once

#include "autograd.hpp"
#include "model.hpp"
#include "video.hpp"

#include <json.hpp>
#include <vector>

namespace cardiacsr {

enum struct L1Reduction
{
  PixelSum,  // ||.||_1 per frame, averaged over frames only
  PixelMean, // additionally divided by the pixel count
};

// (1 / T) sum_t sum_pixels |pred_t - target_t|
double stageL1(VideoClip const &pred, VideoClip const &target, L1Reduction reduction = L1Reduction::PixelSum);

struct StageLoss
{
  double main = 0.0;
  double auxF = 0.0;
  double auxB = 0.0;
};

struct LossReport
{
  std::vector<StageLoss> perStage;
  double total = 0.0;

  nlohmann::json toJson() const;
};

// Differentiable form over batched frames; also averages over the batch dimension.
nn::Var stageL1(std::vector<nn::Var> const &pred,
                std::vector<nn::Tensor> const &target,
                L1Reduction reduction = L1Reduction::PixelSum);

struct TotalLoss
{
  nn::Var objective; // differentiable sum of every term
  LossReport report; // the same terms in double precision
};

TotalLoss totalLoss(StagedOutput const &out,
                    std::vector<nn::Tensor> const &target,
                    L1Reduction reduction = L1Reduction::PixelSum);

// Clip-level report for already materialised outputs, [stage] of clips.
LossReport totalLoss(std::vector<VideoClip> const &sr,
                     std::vector<VideoClip> const &auxF,
                     std::vector<VideoClip> const &auxB,
                     VideoClip const &target,
                     L1Reduction reduction = L1Reduction::PixelSum);

} // namespace cardiacsr
