#include "cardiacsr/loss.hpp"
#include "cardiacsr/error.hpp"

#include <cmath>

namespace cardiacsr {

namespace {

double tensorL1(nn::Tensor const &pred, nn::Tensor const &target)
{
  double s = 0.0;
  auto const p = pred.values();
  auto const t = target.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    s += std::abs(static_cast<double>(p[i]) - static_cast<double>(t[i]));
  }
  return s;
}

double termValue(std::vector<nn::Var> const &pred, std::vector<nn::Tensor> const &target, L1Reduction reduction)
{
  double s = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    s += tensorL1(pred[t].value(), target[t]);
  }
  nn::Shape const shape = target.front().shape();
  double norm = static_cast<double>(pred.size()) * shape.n;
  if (reduction == L1Reduction::PixelMean) { norm *= static_cast<double>(shape.c) * shape.plane(); }
  return s / norm;
}

void checkTerm(std::vector<nn::Var> const &pred, std::vector<nn::Tensor> const &target)
{
  if (pred.empty() || pred.size() != target.size()) {
    fail<ShapeError>("loss term has {} predicted frames for {} targets", pred.size(), target.size());
  }
  for (std::size_t t = 0; t < pred.size(); ++t) {
    if (!(pred[t].shape() == target[t].shape())) {
      fail<ShapeError>("frame {}: prediction {} vs target {}", t, pred[t].shape().str(), target[t].shape().str());
    }
  }
}

} // namespace

double stageL1(VideoClip const &pred, VideoClip const &target, L1Reduction reduction)
{
  if (pred.frames.empty() || pred.frames.size() != target.frames.size()) {
    fail<ShapeError>("stage L1: {} predicted frames vs {} targets", pred.frames.size(), target.frames.size());
  }
  double s = 0.0;
  for (std::size_t t = 0; t < pred.frames.size(); ++t) {
    auto const &p = pred.frames[t];
    auto const &g = target.frames[t];
    if (p.rows() != g.rows() || p.cols() != g.cols()) {
      fail<ShapeError>("stage L1 frame {}: {}x{} vs {}x{}", t, p.rows(), p.cols(), g.rows(), g.cols());
    }
    double frame = (p - g).abs().sum();
    if (reduction == L1Reduction::PixelMean) { frame /= static_cast<double>(p.size()); }
    s += frame;
  }
  return s / static_cast<double>(pred.frames.size());
}

nn::Var stageL1(std::vector<nn::Var> const &pred, std::vector<nn::Tensor> const &target, L1Reduction reduction)
{
  checkTerm(pred, target);
  std::vector<nn::Var> sums;
  sums.reserve(pred.size());
  for (std::size_t t = 0; t < pred.size(); ++t) {
    sums.push_back(nn::l1Sum(pred[t], target[t]));
  }
  nn::Shape const shape = target.front().shape();
  double norm = static_cast<double>(pred.size()) * shape.n;
  if (reduction == L1Reduction::PixelMean) { norm *= static_cast<double>(shape.c) * shape.plane(); }
  return nn::scale(nn::addScalars(sums), static_cast<nn::Real>(1.0 / norm));
}

TotalLoss totalLoss(StagedOutput const &out, std::vector<nn::Tensor> const &target, L1Reduction reduction)
{
  std::size_t const stages = out.sr.size();
  if (stages == 0 || out.auxF.size() != stages || out.auxB.size() != stages) {
    fail<ShapeError>("staged output has {} main, {} forward-aux and {} backward-aux stages", out.sr.size(),
                     out.auxF.size(), out.auxB.size());
  }
  TotalLoss result;
  std::vector<nn::Var> terms;
  for (std::size_t w = 0; w < stages; ++w) {
    for (auto const *seq : {&out.sr[w], &out.auxF[w], &out.auxB[w]}) {
      checkTerm(*seq, target);
      terms.push_back(stageL1(*seq, target, reduction));
    }
    result.report.perStage.push_back(StageLoss{.main = termValue(out.sr[w], target, reduction),
                                               .auxF = termValue(out.auxF[w], target, reduction),
                                               .auxB = termValue(out.auxB[w], target, reduction)});
  }
  for (auto const &s : result.report.perStage) {
    result.report.total += s.main + s.auxF + s.auxB;
  }
  result.objective = nn::addScalars(terms);
  return result;
}

LossReport totalLoss(std::vector<VideoClip> const &sr,
                     std::vector<VideoClip> const &auxF,
                     std::vector<VideoClip> const &auxB,
                     VideoClip const &target,
                     L1Reduction reduction)
{
  if (sr.empty() || auxF.size() != sr.size() || auxB.size() != sr.size()) {
    fail<ShapeError>("staged output has {} main, {} forward-aux and {} backward-aux stages", sr.size(), auxF.size(),
                     auxB.size());
  }
  LossReport report;
  for (std::size_t w = 0; w < sr.size(); ++w) {
    report.perStage.push_back(StageLoss{.main = stageL1(sr[w], target, reduction),
                                        .auxF = stageL1(auxF[w], target, reduction),
                                        .auxB = stageL1(auxB[w], target, reduction)});
    report.total += report.perStage.back().main + report.perStage.back().auxF + report.perStage.back().auxB;
  }
  return report;
}

nlohmann::json LossReport::toJson() const
{
  nlohmann::json stages = nlohmann::json::array();
  for (auto const &s : perStage) {
    stages.push_back({{"main", s.main}, {"aux_f", s.auxF}, {"aux_b", s.auxB}});
  }
  return {{"per_stage", stages}, {"total", total}};
}

} // namespace cardiacsr
