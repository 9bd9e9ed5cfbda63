#pragma once

#include "autograd.hpp"
#include "dataio.hpp"

#include <filesystem>
#include <json.hpp>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace cardiacsr {

// Table-2 style switches. Each disables one mechanism of the network.
struct Ablation
{
  bool memory = true;             // recurrent state carried across frames
  bool warmup = true;             // state primed on n neighbouring frames
  bool bidirectional = true;      // separate backward recurrence
  bool phaseFusion = true;        // phase code channels in the fusion input
  bool residualOfResidual = true; // omega refinement stages
};

struct ModelConfig
{
  int scale = 4;
  int channels = 64;
  int extractBlocks = 5;
  int hidden = 64;
  int warmupN = 6;
  int omega = 2;
  int fusionHalfwidth = 2;
  Ablation ablation;
  std::uint64_t initSeed = 0;

  void validate() const;
  int stages() const { return ablation.residualOfResidual ? omega : 0; }
  int activeWarmup() const { return ablation.memory && ablation.warmup ? warmupN : 0; }
  int fusionWindow() const { return 2 * fusionHalfwidth + 1; }

  nlohmann::json toJson() const;
  static ModelConfig fromJson(nlohmann::json const &j);
};

// One network input: B clips of T LR frames, their phase codes and warm-up frames.
struct ClipBatch
{
  std::vector<nn::Tensor> frames;          // T entries of (B, 1, h, w)
  std::vector<std::vector<double>> phases; // [t][b]
  std::vector<nn::Tensor> warmBefore;      // n entries, oldest first
  std::vector<nn::Tensor> warmAfter;       // n entries, nearest first

  int batch() const { return frames.empty() ? 0 : frames.front().shape().n; }
  int length() const { return static_cast<int>(frames.size()); }
};

nn::Tensor toTensor(std::vector<Image const *> const &images);
Image toImage(nn::Tensor const &t, int n = 0);

ClipBatch makeBatch(std::span<TrainingExample const> examples);
// HR targets per frame, (B, 1, rh, rw).
std::vector<nn::Tensor> makeTargets(std::span<TrainingExample const> examples);

using FeatureSeq = std::vector<nn::Var>; // T entries of (B, C, h, w)

struct SubnetOutput
{
  FeatureSeq forward;  // H_F
  FeatureSeq backward; // H_B (aliases H_F when unidirectional)
  FeatureSeq fused;    // H_P
};

// sr/auxF/auxB indexed [stage][t]; each entry (B, 1, rh, rw).
struct StagedOutput
{
  std::vector<std::vector<nn::Var>> sr;
  std::vector<std::vector<nn::Var>> auxF;
  std::vector<std::vector<nn::Var>> auxB;
};

class Conv2d
{
public:
  Conv2d() = default;
  Conv2d(std::string const &name, int in, int out, int kernel, std::mt19937_64 &rng, nn::Real gain = 1.f);

  nn::Var operator()(nn::Var const &x) const { return nn::conv2d(x, weight, bias); }

  nn::Var weight;
  nn::Var bias;
};

struct LstmState
{
  nn::Var h;
  nn::Var c;
};

class ConvLstmCell
{
public:
  ConvLstmCell() = default;
  ConvLstmCell(std::string const &name, int inputChannels, int hidden, std::mt19937_64 &rng);

  LstmState zeroState(int batch, int height, int width) const;
  LstmState step(nn::Var const &x, LstmState const &state) const;

  Conv2d gates;
  int hidden = 0;
};

class PhaseAwareVsr
{
public:
  explicit PhaseAwareVsr(ModelConfig cfg);
  // Parameters are shared handles; copying would alias weights.
  PhaseAwareVsr(PhaseAwareVsr const &) = delete;
  PhaseAwareVsr &operator=(PhaseAwareVsr const &) = delete;
  PhaseAwareVsr(PhaseAwareVsr &&) = default;
  PhaseAwareVsr &operator=(PhaseAwareVsr &&) = default;

  ModelConfig const &config() const { return cfg_; }
  // Overrides stages/warm-up/fusion toggles that do not change the parameter set.
  void setConfig(ModelConfig const &cfg);

  std::vector<nn::Var> const &parameters() const { return params_; }
  std::size_t parameterCount() const;
  nn::Var const &parameter(std::string const &name) const;
  std::map<std::string, nn::Tensor> stateDict() const;
  // Copies weights in; every name and shape must match this network.
  void loadStateDict(std::map<std::string, nn::Tensor> const &weights);

  FeatureSeq extractFeatures(std::vector<nn::Tensor> const &frames) const;
  // Runs the recurrence over warm frames without recording gradients.
  LstmState warmupMemory(ConvLstmCell const &cell, LstmState state, FeatureSeq const &warm) const;
  SubnetOutput runSubnetwork(FeatureSeq const &L,
                             std::vector<std::vector<double>> const &phases,
                             FeatureSeq const &warmBefore,
                             FeatureSeq const &warmAfter) const;
  FeatureSeq phaseFusion(FeatureSeq const &hf, FeatureSeq const &hb, std::vector<std::vector<double>> const &phases) const;
  // L + Net_sub(L) with shared weights.
  FeatureSeq refineFeatures(FeatureSeq const &L,
                            std::vector<std::vector<double>> const &phases,
                            FeatureSeq const &warmBefore,
                            FeatureSeq const &warmAfter) const;
  nn::Var upsample(nn::Var const &features) const;
  StagedOutput forward(ClipBatch const &batch) const;

  ConvLstmCell const &forwardCell() const { return lstmF_; }
  ConvLstmCell const &backwardCell() const { return lstmB_; }

private:
  nn::Var featureExtract(nn::Var const &frame) const;
  nn::Var fuseWindow(FeatureSeq const &hf, FeatureSeq const &hb, std::vector<std::vector<double>> const &phases, int t) const;
  Conv2d makeConv(std::string const &name, int in, int out, int kernel, std::mt19937_64 &rng, nn::Real gain);

  ModelConfig cfg_;
  Conv2d feIn_;
  std::vector<std::pair<Conv2d, Conv2d>> feBlocks_;
  ConvLstmCell lstmF_;
  ConvLstmCell lstmB_;
  Conv2d fuse1_;
  Conv2d fuse2_;
  std::vector<Conv2d> up_;
  std::vector<nn::Var> params_;
};

// Closed-form parameter count of the network a config builds.
std::size_t analyticParameterCount(ModelConfig const &cfg);

struct Checkpoint
{
  ModelConfig config;
  std::map<std::string, nn::Tensor> weights;
  nlohmann::json meta;
};

/*
 * Binary container: "CSRCKPT\0", uint32 version, uint64 json length, json {config, meta},
 * uint64 tensor count, then per tensor uint32 name length, name, 4 x int32 shape, float32 data.
 * All integers little-endian.
 */
void saveCheckpoint(std::filesystem::path const &path, PhaseAwareVsr const &model, nlohmann::json const &meta = {});
Checkpoint readCheckpoint(std::filesystem::path const &path);
PhaseAwareVsr loadModel(Checkpoint const &ckpt);

} // namespace cardiacsr
