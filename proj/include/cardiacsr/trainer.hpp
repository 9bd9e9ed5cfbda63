#pragma once

#include "dataio.hpp"
#include "loss.hpp"
#include "metrics.hpp"
#include "model.hpp"

#include <filesystem>
#include <functional>
#include <json.hpp>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace cardiacsr {

struct TrainConfig
{
  double lr = 1e-4;
  int batchSize = 16;
  int maxSteps = 1000;
  std::uint64_t seed = 0;
  int evalEvery = 0; // 0 disables periodic validation
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double gradClip = 0.0; // global-norm clip, 0 = off
  int clipLength = 7;
  int crop = 32;
  L1Reduction reduction = L1Reduction::PixelSum;

  void validate() const;
  nlohmann::json toJson() const;
};

class Adam
{
public:
  Adam(std::vector<nn::Var> params, TrainConfig const &cfg);

  void zeroGrad();
  void step();
  std::int64_t steps() const { return t_; }

private:
  std::vector<nn::Var> params_;
  std::vector<nn::Tensor> m_;
  std::vector<nn::Tensor> v_;
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
};

struct Dataset
{
  std::vector<PairedVideo> train;
  std::vector<PairedVideo> val;
  std::vector<PairedVideo> test;

  std::vector<PairedVideo> const &split(Split s) const;
};

std::vector<PairedVideo> loadSplit(std::filesystem::path const &root, Split split, DegradeConfig const &cfg);
Dataset loadDataset(std::filesystem::path const &root, DegradeConfig const &cfg);

// LR video to SR video in sliding clips of clipLength, each with cyclic warm-up frames.
struct SuperResolved
{
  VideoClip sr;
  double seconds = 0.0;
  std::vector<double> clipSeconds;
};
SuperResolved superResolve(PhaseAwareVsr const &model,
                           VideoClip const &lr,
                           CardiacCycleSpec const &cycle,
                           int clipLength = 7,
                           bool wrap = true);

struct EvalRow
{
  std::string videoId;
  int scale = 0;
  MetricReport model;
  MetricReport bicubic;
  double fps = 0.0;
  std::size_t params = 0;
  int omega = 0;   // refinement stages actually run
  int warmupN = 0; // warm-up frames actually used

  nlohmann::json toJson() const;
};

struct EvalSummary
{
  std::vector<EvalRow> rows;
  MetricReport meanModel;
  MetricReport meanBicubic;
  nlohmann::json budget; // training budget behind the weights, copied into the summary when set

  nlohmann::json summaryJson() const;
  // One record per row followed by the summary record.
  void write(std::ostream &os) const;
};

EvalSummary evaluate(PhaseAwareVsr const &model, std::vector<PairedVideo> const &videos, int clipLength = 7);
EvalSummary evaluateCheckpoint(std::filesystem::path const &checkpoint,
                               std::filesystem::path const &dataRoot,
                               Split split,
                               int scale,
                               int clipLength = 7);

struct TrainOutputs
{
  std::ostream *log = nullptr;                 // one JSON record per step
  std::optional<std::filesystem::path> checkpoint;
};

struct TrainResult
{
  PhaseAwareVsr model;
  std::vector<LossReport> losses; // per step
  std::optional<double> bestValCardiacPsnr;
  int bestStep = 0;
};

// The network is initialised from trainCfg.seed; sampling order is determined by it alone.
TrainResult train(ModelConfig modelCfg,
                  TrainConfig const &trainCfg,
                  std::vector<PairedVideo> const &trainSet,
                  std::vector<PairedVideo> const &valSet = {},
                  TrainOutputs const &outputs = {});

// One optimisation step's worth of work without the update; exposed for gradient audits.
struct StepResult
{
  TotalLoss loss;
  StagedOutput output;
};
StepResult lossAndGradients(PhaseAwareVsr const &model, std::span<TrainingExample const> batch, L1Reduction reduction);

struct AblationRow
{
  std::string label;
  ModelConfig config;
  std::size_t params = 0;
  double cardiacPsnr = 0.0;
  double cardiacSsim = 0.0;
  bool finite = true;
  nlohmann::json budget; // training config shared by every row

  nlohmann::json toJson() const;
};

// Cumulative toggles: none, +memory, +updated memory, +bidirection, +phase fusion, +residual of residual.
std::vector<std::pair<std::string, ModelConfig>> ablationConfigs(ModelConfig const &base);
std::vector<AblationRow> ablationSweep(ModelConfig const &base,
                                       TrainConfig const &trainCfg,
                                       Dataset const &data,
                                       Split evalSplit = Split::Test);

struct BenchRecord
{
  std::size_t params = 0;
  double fps = 0.0;
  int omega = 0;
  int scale = 0;

  nlohmann::json toJson() const;
};

// Exact trainable-parameter count and median frames/second over trials forward passes.
BenchRecord countParamsAndFps(PhaseAwareVsr const &model, int frames, int height, int width, int trials = 5);
BenchRecord countParamsAndFps(ModelConfig const &cfg, int frames, int height, int width, int trials = 5);

} // namespace cardiacsr
