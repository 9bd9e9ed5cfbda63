#include "cardiacsr/trainer.hpp"
#include "cardiacsr/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace cardiacsr {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

void TrainConfig::validate() const
{
  if (!(lr > 0.0)) { fail<ConfigError>("learning rate must be positive (got {})", lr); }
  if (batchSize < 1) { fail<ConfigError>("batch size must be >= 1 (got {})", batchSize); }
  if (maxSteps < 0) { fail<ConfigError>("max steps must be >= 0 (got {})", maxSteps); }
  if (evalEvery < 0) { fail<ConfigError>("eval interval must be >= 0 (got {})", evalEvery); }
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    fail<ConfigError>("Adam betas must lie in [0, 1) (got {}, {})", beta1, beta2);
  }
  if (!(eps > 0.0)) { fail<ConfigError>("Adam epsilon must be positive (got {})", eps); }
  if (gradClip < 0.0) { fail<ConfigError>("gradient clip must be >= 0 (got {})", gradClip); }
  if (clipLength < 1) { fail<ConfigError>("clip length must be >= 1 (got {})", clipLength); }
  if (crop < 8) { fail<ConfigError>("crop must be >= 8 (got {})", crop); }
}

json TrainConfig::toJson() const
{
  return json{{"lr", lr},
              {"batch_size", batchSize},
              {"max_steps", maxSteps},
              {"seed", seed},
              {"eval_every", evalEvery},
              {"beta1", beta1},
              {"beta2", beta2},
              {"eps", eps},
              {"grad_clip", gradClip},
              {"clip_length", clipLength},
              {"crop", crop},
              {"l1_reduction", reduction == L1Reduction::PixelSum ? "sum" : "mean"}};
}

Adam::Adam(std::vector<nn::Var> params, TrainConfig const &cfg)
  : params_{std::move(params)}
  , lr_{cfg.lr}
  , beta1_{cfg.beta1}
  , beta2_{cfg.beta2}
  , eps_{cfg.eps}
{
  for (auto const &p : params_) {
    m_.emplace_back(p.shape(), 0.f);
    v_.emplace_back(p.shape(), 0.f);
  }
}

void Adam::zeroGrad()
{
  for (auto const &p : params_) {
    p.node().gradBuffer().fill(0.f);
  }
}

void Adam::step()
{
  ++t_;
  double const c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double const c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    nn::Node &node = params_[i].node();
    auto w = node.value.values();
    auto const g = node.gradBuffer().values();
    auto m = m_[i].values();
    auto v = v_[i].values();
    for (std::size_t k = 0; k < w.size(); ++k) {
      double const gk = g[k];
      m[k] = static_cast<nn::Real>(beta1_ * m[k] + (1.0 - beta1_) * gk);
      v[k] = static_cast<nn::Real>(beta2_ * v[k] + (1.0 - beta2_) * gk * gk);
      double const mh = m[k] / c1;
      double const vh = v[k] / c2;
      w[k] = static_cast<nn::Real>(w[k] - lr_ * mh / (std::sqrt(vh) + eps_));
    }
  }
}

std::vector<PairedVideo> const &Dataset::split(Split s) const
{
  switch (s) {
  case Split::Train: return train;
  case Split::Val: return val;
  case Split::Test: return test;
  }
  return train;
}

std::vector<PairedVideo> loadSplit(std::filesystem::path const &root, Split split, DegradeConfig const &cfg)
{
  std::vector<PairedVideo> out;
  for (auto const &path : listSplit(root, split)) {
    auto [clip, ann] = loadVideo(path);
    out.push_back(makePaired(std::move(clip), std::move(ann), cfg));
  }
  return out;
}

Dataset loadDataset(std::filesystem::path const &root, DegradeConfig const &cfg)
{
  if (!std::filesystem::is_directory(root)) { fail<DataError>("dataset root {} does not exist", root.string()); }
  return Dataset{.train = loadSplit(root, Split::Train, cfg),
                 .val = loadSplit(root, Split::Val, cfg),
                 .test = loadSplit(root, Split::Test, cfg)};
}

SuperResolved superResolve(PhaseAwareVsr const &model, VideoClip const &lr, CardiacCycleSpec const &cycle, int clipLength,
                           bool wrap)
{
  lr.validate();
  cycle.validate();
  if (clipLength < 1) { fail<ConfigError>("clip length must be >= 1 (got {})", clipLength); }
  ModelConfig const &cfg = model.config();
  FrameIndex const total = lr.frameCount();
  FrameIndex const len = std::min<FrameIndex>(clipLength, total);
  int const n = cfg.activeWarmup();
  nn::NoGradGuard guard;

  SuperResolved result;
  result.sr.tStart = lr.tStart;
  if (lr.spacing) {
    result.sr.spacing = std::array<double, 2>{(*lr.spacing)[0] / cfg.scale, (*lr.spacing)[1] / cfg.scale};
  }
  auto const begin = Clock::now();
  FrameIndex produced = 0;
  while (produced < total) {
    auto const clipBegin = Clock::now();
    // The final window is shifted back so every window is full length.
    FrameIndex const start = std::min(produced, total - len);
    TrainingExample ex;
    ex.lr = framesAt(lr, start, len, false);
    ex.phases = phaseSequence(cycle, lr.tStart + start, len);
    ex.warmBefore = framesAt(lr, start - n, n, wrap);
    ex.warmAfter = framesAt(lr, start + len, n, wrap);
    ClipBatch const batch = makeBatch(std::span<TrainingExample const>(&ex, 1));
    StagedOutput const out = model.forward(batch);
    auto const &finalStage = out.sr.back();
    for (FrameIndex t = produced - start; t < len; ++t) {
      result.sr.frames.push_back(toImage(finalStage[static_cast<std::size_t>(t)].value()));
    }
    produced = start + len;
    result.clipSeconds.push_back(std::chrono::duration<double>(Clock::now() - clipBegin).count());
  }
  result.seconds = std::chrono::duration<double>(Clock::now() - begin).count();
  result.sr.updateRange();
  return result;
}

namespace {

json metricsJson(MetricReport const &m, std::string const &prefix)
{
  return json{{prefix + "psnr", m.psnr},
              {prefix + "ssim", m.ssim},
              {prefix + "cardiac_psnr", m.cardiacPsnr},
              {prefix + "cardiac_ssim", m.cardiacSsim}};
}

} // namespace

json EvalRow::toJson() const
{
  json j{{"video_id", videoId},
         {"scale", scale},
         {"roi", {model.roi.top, model.roi.left, model.roi.height, model.roi.width}},
         {"normalization", "per-video min-max"},
         {"roi_method", "temporal-variance p95, largest 4-connected component, 8px dilation"},
         {"fps", fps},
         {"params", params},
         {"omega", omega},
         {"warmup_n", warmupN}};
  j.update(metricsJson(model, ""));
  j.update(metricsJson(bicubic, "bicubic_"));
  return j;
}

json EvalSummary::summaryJson() const
{
  json j{{"summary", true}, {"clips", rows.size()}};
  j.update(metricsJson(meanModel, ""));
  j.update(metricsJson(meanBicubic, "bicubic_"));
  if (!rows.empty()) {
    double fps = 0.0;
    for (auto const &r : rows) {
      fps += r.fps;
    }
    j["fps"] = fps / static_cast<double>(rows.size());
    j["params"] = rows.front().params;
    j["scale"] = rows.front().scale;
    j["omega"] = rows.front().omega;
    j["warmup_n"] = rows.front().warmupN;
  }
  if (!budget.is_null()) { j["budget"] = budget; }
  return j;
}

void EvalSummary::write(std::ostream &os) const
{
  for (auto const &r : rows) {
    os << r.toJson().dump() << "\n";
  }
  os << summaryJson().dump() << "\n";
}

EvalSummary evaluate(PhaseAwareVsr const &model, std::vector<PairedVideo> const &videos, int clipLength)
{
  EvalSummary summary;
  for (auto const &v : videos) {
    if (v.scale != model.config().scale) {
      fail<ConfigError>("video {} is degraded at x{}, model expects x{}", v.ann.videoId, v.scale, model.config().scale);
    }
    SuperResolved const sr = superResolve(model, v.lr, v.ann.cycle, clipLength);
    EvalRow row;
    row.videoId = v.ann.videoId;
    row.scale = v.scale;
    row.model = cardiacMetrics(sr.sr, v.hr);
    row.model.videoId = v.ann.videoId;
    row.bicubic = cardiacMetrics(bicubicUpscale(v.lr, v.scale), v.hr, row.model.roi);
    row.bicubic.videoId = v.ann.videoId;
    row.fps = sr.seconds > 0 ? static_cast<double>(v.lr.frameCount()) / sr.seconds : 0.0;
    row.params = model.parameterCount();
    row.omega = model.config().stages();
    row.warmupN = model.config().activeWarmup();
    summary.rows.push_back(std::move(row));
  }
  if (!summary.rows.empty()) {
    double const n = static_cast<double>(summary.rows.size());
    for (auto const &r : summary.rows) {
      for (auto [dst, src] : {std::pair{&summary.meanModel, &r.model}, std::pair{&summary.meanBicubic, &r.bicubic}}) {
        dst->psnr += src->psnr;
        dst->ssim += src->ssim;
        dst->cardiacPsnr += src->cardiacPsnr;
        dst->cardiacSsim += src->cardiacSsim;
      }
    }
    for (auto *m : {&summary.meanModel, &summary.meanBicubic}) {
      m->psnr /= n;
      m->ssim /= n;
      m->cardiacPsnr /= n;
      m->cardiacSsim /= n;
    }
  }
  return summary;
}

EvalSummary evaluateCheckpoint(std::filesystem::path const &checkpoint, std::filesystem::path const &dataRoot, Split split,
                               int scale, int clipLength)
{
  Checkpoint const ckpt = readCheckpoint(checkpoint);
  if (ckpt.config.scale != scale) {
    fail<ConfigError>("checkpoint was trained for x{}, evaluation requested x{}", ckpt.config.scale, scale);
  }
  PhaseAwareVsr const model = loadModel(ckpt);
  DegradeConfig dcfg{.scale = scale, .cutoffFraction = ckpt.meta.value("cutoff_fraction", 0.0)};
  EvalSummary summary = evaluate(model, loadSplit(dataRoot, split, dcfg), clipLength);
  if (ckpt.meta.contains("train")) { summary.budget = ckpt.meta.at("train"); }
  return summary;
}

namespace {

// Graph tensors are freed and reallocated every step; keep them in the heap instead of
// round-tripping through mmap.
void retainFreedMemory()
{
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
}

std::string firstNonFiniteOutput(StagedOutput const &out)
{
  for (std::size_t w = 0; w < out.sr.size(); ++w) {
    for (auto [name, seq] : {std::pair{"sr", &out.sr[w]}, std::pair{"aux_f", &out.auxF[w]}, std::pair{"aux_b", &out.auxB[w]}}) {
      for (std::size_t t = 0; t < seq->size(); ++t) {
        if (!(*seq)[t].value().allFinite()) { return fmt::format("{}[stage {}][frame {}]", name, w, t); }
      }
    }
  }
  return "loss accumulator";
}

void clipGradients(std::vector<nn::Var> const &params, double maxNorm)
{
  double sq = 0.0;
  for (auto const &p : params) {
    for (nn::Real g : p.node().gradBuffer().values()) {
      sq += static_cast<double>(g) * g;
    }
  }
  double const norm = std::sqrt(sq);
  if (norm <= maxNorm) { return; }
  auto const factor = static_cast<nn::Real>(maxNorm / norm);
  for (auto const &p : params) {
    for (nn::Real &g : p.node().gradBuffer().values()) {
      g *= factor;
    }
  }
}

} // namespace

StepResult lossAndGradients(PhaseAwareVsr const &model, std::span<TrainingExample const> batch, L1Reduction reduction)
{
  ClipBatch const input = makeBatch(batch);
  auto const targets = makeTargets(batch);
  StepResult r;
  r.output = model.forward(input);
  r.loss = totalLoss(r.output, targets, reduction);
  if (!std::isfinite(r.loss.report.total)) {
    fail<DataError>("non-finite loss; first non-finite tensor: {}", firstNonFiniteOutput(r.output));
  }
  for (auto const &p : model.parameters()) {
    p.node().gradBuffer().fill(0.f);
  }
  nn::backward(r.loss.objective);
  for (auto const &p : model.parameters()) {
    if (!p.node().gradBuffer().allFinite()) {
      fail<DataError>("non-finite gradient; first non-finite tensor: {}.grad", p.node().name);
    }
  }
  return r;
}

TrainResult train(ModelConfig modelCfg, TrainConfig const &trainCfg, std::vector<PairedVideo> const &trainSet,
                  std::vector<PairedVideo> const &valSet, TrainOutputs const &outputs)
{
  trainCfg.validate();
  if (trainSet.empty()) { fail<DataError>("training needs at least one video"); }
  for (auto const &v : trainSet) {
    v.ann.cycle.validate();
    if (v.scale != modelCfg.scale) {
      fail<ConfigError>("video {} is degraded at x{}, model expects x{}", v.ann.videoId, v.scale, modelCfg.scale);
    }
  }
  retainFreedMemory();
  modelCfg.initSeed = trainCfg.seed;
  TrainResult result{.model = PhaseAwareVsr(modelCfg), .losses = {}, .bestValCardiacPsnr = {}, .bestStep = 0};
  PhaseAwareVsr &model = result.model;
  Adam adam(model.parameters(), trainCfg);

  std::mt19937_64 rng(trainCfg.seed);
  std::uniform_int_distribution<std::size_t> pickVideo(0, trainSet.size() - 1);
  SampleOptions const sampling{.clipLength = trainCfg.clipLength,
                               .crop = trainCfg.crop,
                               .warmupN = modelCfg.activeWarmup(),
                               .wrap = true};

  std::map<std::string, nn::Tensor> bestWeights;
  auto validate = [&](int step) {
    if (valSet.empty()) { return; }
    double const score = evaluate(model, valSet, trainCfg.clipLength).meanModel.cardiacPsnr;
    if (outputs.log) { *outputs.log << json{{"step", step}, {"val_cardiac_psnr", score}}.dump() << "\n"; }
    if (!result.bestValCardiacPsnr || score > *result.bestValCardiacPsnr) {
      result.bestValCardiacPsnr = score;
      result.bestStep = step;
      bestWeights = model.stateDict();
    }
  };

  if (trainCfg.evalEvery > 0) { validate(0); }
  for (int step = 0; step < trainCfg.maxSteps; ++step) {
    std::vector<TrainingExample> batch;
    batch.reserve(static_cast<std::size_t>(trainCfg.batchSize));
    for (int b = 0; b < trainCfg.batchSize; ++b) {
      batch.push_back(sampleTrainingExample(trainSet[pickVideo(rng)], sampling, rng));
    }
    StepResult const r = lossAndGradients(model, batch, trainCfg.reduction);
    if (trainCfg.gradClip > 0.0) { clipGradients(model.parameters(), trainCfg.gradClip); }
    adam.step();
    result.losses.push_back(r.loss.report);
    if (outputs.log) { *outputs.log << json{{"step", step}, {"loss", r.loss.report.toJson()}}.dump() << "\n"; }
    if (trainCfg.evalEvery > 0 && (step + 1) % trainCfg.evalEvery == 0) { validate(step + 1); }
  }
  if (trainCfg.evalEvery > 0 && trainCfg.maxSteps % trainCfg.evalEvery != 0) { validate(trainCfg.maxSteps); }
  if (!bestWeights.empty()) { model.loadStateDict(bestWeights); }

  if (outputs.checkpoint) {
    json meta{{"train", trainCfg.toJson()}, {"steps", trainCfg.maxSteps}, {"best_step", result.bestStep}};
    if (result.bestValCardiacPsnr) { meta["best_val_cardiac_psnr"] = *result.bestValCardiacPsnr; }
    saveCheckpoint(*outputs.checkpoint, model, meta);
  }
  return result;
}

json AblationRow::toJson() const
{
  auto const &a = config.ablation;
  return json{{"row", label},
              {"memory", a.memory},
              {"updated_memory", a.memory && a.warmup},
              {"bidirection", a.bidirectional},
              {"phase_fusion", a.phaseFusion},
              {"residual_of_residual", a.residualOfResidual},
              {"warmup_n", config.activeWarmup()},
              {"omega", config.stages()},
              {"params", params},
              {"cardiac_psnr", cardiacPsnr},
              {"cardiac_ssim", cardiacSsim},
              {"finite", finite},
              {"budget", budget}};
}

std::vector<std::pair<std::string, ModelConfig>> ablationConfigs(ModelConfig const &base)
{
  ModelConfig c = base;
  c.ablation = Ablation{.memory = false,
                        .warmup = false,
                        .bidirectional = false,
                        .phaseFusion = false,
                        .residualOfResidual = false};
  std::vector<std::pair<std::string, ModelConfig>> rows;
  rows.emplace_back("baseline", c);
  c.ablation.memory = true;
  rows.emplace_back("+memory", c);
  c.ablation.warmup = true;
  rows.emplace_back("+updated_memory", c);
  c.ablation.bidirectional = true;
  rows.emplace_back("+bidirection", c);
  c.ablation.phaseFusion = true;
  rows.emplace_back("+phase_fusion", c);
  c.ablation.residualOfResidual = true;
  rows.emplace_back("+residual_of_residual", c);
  return rows;
}

std::vector<AblationRow> ablationSweep(ModelConfig const &base, TrainConfig const &trainCfg, Dataset const &data,
                                       Split evalSplit)
{
  if (data.split(evalSplit).empty()) { fail<DataError>("ablation needs at least one {} video", toString(evalSplit)); }
  std::vector<AblationRow> rows;
  for (auto const &[label, cfg] : ablationConfigs(base)) {
    AblationRow row;
    row.label = label;
    row.config = cfg;
    row.budget = trainCfg.toJson();
    row.config.initSeed = trainCfg.seed;
    TrainResult const trained = train(cfg, trainCfg, data.train, data.val);
    row.params = trained.model.parameterCount();
    EvalSummary const s = evaluate(trained.model, data.split(evalSplit), trainCfg.clipLength);
    row.cardiacPsnr = s.meanModel.cardiacPsnr;
    row.cardiacSsim = s.meanModel.cardiacSsim;
    row.finite = std::isfinite(row.cardiacPsnr) && std::isfinite(row.cardiacSsim);
    for (auto const &l : trained.losses) {
      row.finite = row.finite && std::isfinite(l.total);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json BenchRecord::toJson() const { return json{{"params", params}, {"fps", fps}, {"omega", omega}, {"scale", scale}}; }

BenchRecord countParamsAndFps(PhaseAwareVsr const &model, int frames, int height, int width, int trials)
{
  if (trials < 3) { fail<ConfigError>("benchmark needs at least 3 trials (got {})", trials); }
  if (frames < 1 || height < 1 || width < 1) { fail<ShapeError>("benchmark input {}x{}x{} is empty", frames, height, width); }
  ModelConfig const &cfg = model.config();
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<nn::Real> unit(0.f, 1.f);
  ClipBatch batch;
  auto randomFrame = [&] {
    nn::Tensor t(nn::Shape{1, 1, height, width});
    for (nn::Real &v : t.values()) {
      v = unit(rng);
    }
    return t;
  };
  for (int t = 0; t < frames; ++t) {
    batch.frames.push_back(randomFrame());
    batch.phases.push_back({std::cos(2.0 * 3.141592653589793 * t / frames)});
  }
  for (int k = 0; k < cfg.activeWarmup(); ++k) {
    batch.warmBefore.push_back(randomFrame());
    batch.warmAfter.push_back(randomFrame());
  }
  nn::NoGradGuard guard;
  std::vector<double> seconds;
  for (int i = 0; i < trials; ++i) {
    auto const begin = Clock::now();
    StagedOutput const out = model.forward(batch);
    seconds.push_back(std::chrono::duration<double>(Clock::now() - begin).count());
  }
  std::nth_element(seconds.begin(), seconds.begin() + trials / 2, seconds.end());
  double const median = seconds[static_cast<std::size_t>(trials / 2)];
  return BenchRecord{.params = model.parameterCount(),
                     .fps = median > 0 ? frames / median : 0.0,
                     .omega = cfg.stages(),
                     .scale = cfg.scale};
}

BenchRecord countParamsAndFps(ModelConfig const &cfg, int frames, int height, int width, int trials)
{
  PhaseAwareVsr const model(cfg);
  return countParamsAndFps(model, frames, height, width, trials);
}

} // namespace cardiacsr
