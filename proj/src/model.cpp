#include "cardiacsr/model.hpp"
#include "cardiacsr/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>

namespace cardiacsr {

using nn::Real;
using nn::Shape;
using nn::Tensor;
using nn::Var;
using json = nlohmann::json;

namespace {

constexpr Real kSlope = 0.1f;
constexpr char kMagic[8] = {'C', 'S', 'R', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;

std::size_t convParams(int in, int out, int k) { return static_cast<std::size_t>(out) * in * k * k + out; }

} // namespace

void ModelConfig::validate() const
{
  if (scale < 2 || scale > 4) { fail<ConfigError>("scale must be 2, 3 or 4 (got {})", scale); }
  if (channels < 1) { fail<ConfigError>("channels must be positive (got {})", channels); }
  if (extractBlocks < 0) { fail<ConfigError>("extract blocks must be >= 0 (got {})", extractBlocks); }
  if (hidden != channels) {
    fail<ConfigError>("recurrent hidden width {} must equal feature channels {} for the additive skips", hidden, channels);
  }
  if (warmupN < 0) { fail<ConfigError>("warm-up count n must be >= 0 (got {})", warmupN); }
  if (omega < 0) { fail<ConfigError>("refinement stages must be >= 0 (got {})", omega); }
  if (fusionHalfwidth < 0) { fail<ConfigError>("fusion half-width must be >= 0 (got {})", fusionHalfwidth); }
}

json ModelConfig::toJson() const
{
  return json{{"scale", scale},
              {"channels", channels},
              {"extract_blocks", extractBlocks},
              {"hidden", hidden},
              {"warmup_n", warmupN},
              {"omega", omega},
              {"fusion_halfwidth", fusionHalfwidth},
              {"init_seed", initSeed},
              {"ablation",
               {{"memory", ablation.memory},
                {"warmup", ablation.warmup},
                {"bidirectional", ablation.bidirectional},
                {"phase_fusion", ablation.phaseFusion},
                {"residual_of_residual", ablation.residualOfResidual}}}};
}

ModelConfig ModelConfig::fromJson(json const &j)
{
  try {
    ModelConfig c;
    c.scale = j.at("scale").get<int>();
    c.channels = j.at("channels").get<int>();
    c.extractBlocks = j.at("extract_blocks").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.warmupN = j.at("warmup_n").get<int>();
    c.omega = j.at("omega").get<int>();
    c.fusionHalfwidth = j.at("fusion_halfwidth").get<int>();
    c.initSeed = j.value("init_seed", std::uint64_t{0});
    auto const &a = j.at("ablation");
    c.ablation.memory = a.at("memory").get<bool>();
    c.ablation.warmup = a.at("warmup").get<bool>();
    c.ablation.bidirectional = a.at("bidirectional").get<bool>();
    c.ablation.phaseFusion = a.at("phase_fusion").get<bool>();
    c.ablation.residualOfResidual = a.at("residual_of_residual").get<bool>();
    c.validate();
    return c;
  } catch (json::exception const &e) {
    fail<SchemaError>("model config: {}", e.what());
  }
}

Tensor toTensor(std::vector<Image const *> const &images)
{
  if (images.empty()) { fail<ShapeError>("toTensor: no images"); }
  int const h = static_cast<int>(images.front()->rows());
  int const w = static_cast<int>(images.front()->cols());
  Tensor t(Shape{static_cast<int>(images.size()), 1, h, w});
  for (std::size_t b = 0; b < images.size(); ++b) {
    Image const &img = *images[b];
    if (img.rows() != h || img.cols() != w) { fail<ShapeError>("toTensor: mixed image sizes in batch"); }
    Real *dst = t.plane(static_cast<int>(b), 0);
    for (Eigen::Index i = 0; i < img.size(); ++i) {
      dst[i] = static_cast<Real>(img.data()[i]);
    }
  }
  return t;
}

Image toImage(Tensor const &t, int n)
{
  Shape const s = t.shape();
  Image img(s.h, s.w);
  Real const *src = t.plane(n, 0);
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    img.data()[i] = src[i];
  }
  return img;
}

namespace {

std::vector<Tensor> stackFrames(std::span<TrainingExample const> examples, VideoClip TrainingExample::*member)
{
  auto const frames = (examples.front().*member).frames.size();
  std::vector<Tensor> out;
  out.reserve(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    std::vector<Image const *> imgs;
    for (auto const &ex : examples) {
      auto const &clip = ex.*member;
      if (clip.frames.size() != frames) { fail<ShapeError>("batch mixes clips of {} and {} frames", frames, clip.frames.size()); }
      imgs.push_back(&clip.frames[t]);
    }
    out.push_back(toTensor(imgs));
  }
  return out;
}

} // namespace

ClipBatch makeBatch(std::span<TrainingExample const> examples)
{
  if (examples.empty()) { fail<ShapeError>("empty batch"); }
  ClipBatch batch;
  batch.frames = stackFrames(examples, &TrainingExample::lr);
  batch.warmBefore = stackFrames(examples, &TrainingExample::warmBefore);
  batch.warmAfter = stackFrames(examples, &TrainingExample::warmAfter);
  batch.phases.assign(batch.frames.size(), std::vector<double>(examples.size()));
  for (std::size_t b = 0; b < examples.size(); ++b) {
    if (examples[b].phases.values.size() != batch.frames.size()) {
      fail<ShapeError>("example {} has {} phase values for {} frames", b, examples[b].phases.values.size(),
                       batch.frames.size());
    }
    for (std::size_t t = 0; t < batch.frames.size(); ++t) {
      batch.phases[t][b] = examples[b].phases.values[t];
    }
  }
  return batch;
}

std::vector<Tensor> makeTargets(std::span<TrainingExample const> examples)
{
  if (examples.empty()) { fail<ShapeError>("empty batch"); }
  return stackFrames(examples, &TrainingExample::hr);
}

Conv2d::Conv2d(std::string const &name, int in, int out, int kernel, std::mt19937_64 &rng, Real gain)
{
  Real const bound = gain * std::sqrt(3.f / static_cast<Real>(in * kernel * kernel));
  std::uniform_real_distribution<Real> dist(-bound, bound);
  Tensor w(Shape{out, in, kernel, kernel});
  for (Real &v : w.values()) {
    v = dist(rng);
  }
  weight = nn::parameter(name + ".weight", std::move(w));
  bias = nn::parameter(name + ".bias", Tensor(Shape{1, out, 1, 1}, 0.f));
}

ConvLstmCell::ConvLstmCell(std::string const &name, int inputChannels, int hiddenWidth, std::mt19937_64 &rng)
  : gates(name + ".gates", inputChannels + hiddenWidth, 4 * hiddenWidth, 3, rng)
  , hidden{hiddenWidth}
{
  // Gate order: input, forget, output, candidate. Forget bias starts at 1.
  Real *b = gates.bias.node().value.data();
  std::fill(b + hidden, b + 2 * hidden, 1.f);
}

LstmState ConvLstmCell::zeroState(int batch, int height, int width) const
{
  Tensor z(Shape{batch, hidden, height, width}, 0.f);
  return {nn::constant(z), nn::constant(z)};
}

LstmState ConvLstmCell::step(Var const &x, LstmState const &state) const
{
  Var const g = gates(nn::concatChannels({x, state.h}));
  Var const i = nn::sigmoid(nn::sliceChannels(g, 0, hidden));
  Var const f = nn::sigmoid(nn::sliceChannels(g, hidden, hidden));
  Var const o = nn::sigmoid(nn::sliceChannels(g, 2 * hidden, hidden));
  Var const cand = nn::tanh(nn::sliceChannels(g, 3 * hidden, hidden));
  Var const c = nn::add(nn::mul(f, state.c), nn::mul(i, cand));
  Var const h = nn::mul(o, nn::tanh(c));
  return {h, c};
}

Conv2d PhaseAwareVsr::makeConv(std::string const &name, int in, int out, int kernel, std::mt19937_64 &rng, Real gain)
{
  Conv2d conv(name, in, out, kernel, rng, gain);
  params_.push_back(conv.weight);
  params_.push_back(conv.bias);
  return conv;
}

PhaseAwareVsr::PhaseAwareVsr(ModelConfig cfg)
  : cfg_{std::move(cfg)}
{
  cfg_.validate();
  std::mt19937_64 rng(cfg_.initSeed);
  int const C = cfg_.channels;
  Real const reluGain = std::sqrt(2.f);

  feIn_ = makeConv("fe.in", 1, C, 3, rng, 1.f);
  for (int b = 0; b < cfg_.extractBlocks; ++b) {
    auto const prefix = fmt::format("fe.block{}", b);
    Conv2d first = makeConv(prefix + ".conv1", C, C, 3, rng, reluGain);
    Conv2d second = makeConv(prefix + ".conv2", C, C, 3, rng, 0.5f);
    feBlocks_.emplace_back(std::move(first), std::move(second));
  }

  lstmF_ = ConvLstmCell("lstm_f", C, cfg_.hidden, rng);
  params_.push_back(lstmF_.gates.weight);
  params_.push_back(lstmF_.gates.bias);
  if (cfg_.ablation.bidirectional) {
    lstmB_ = ConvLstmCell("lstm_b", C, cfg_.hidden, rng);
    params_.push_back(lstmB_.gates.weight);
    params_.push_back(lstmB_.gates.bias);
  }

  int const window = cfg_.fusionWindow();
  int const fuseIn = 2 * window * cfg_.hidden + (cfg_.ablation.phaseFusion ? window : 0);
  fuse1_ = makeConv("fusion.in", fuseIn, C, 3, rng, reluGain);
  // Small output scale keeps early refinements close to the identity.
  fuse2_ = makeConv("fusion.out", C, C, 3, rng, 0.1f);

  if (cfg_.scale == 4) {
    up_.push_back(makeConv("up.conv0", C, 4 * C, 3, rng, 1.f));
    up_.push_back(makeConv("up.conv1", C, 4, 3, rng, reluGain));
  } else {
    up_.push_back(makeConv("up.conv0", C, cfg_.scale * cfg_.scale, 3, rng, 1.f));
  }
}

void PhaseAwareVsr::setConfig(ModelConfig const &cfg)
{
  cfg.validate();
  if (cfg.scale != cfg_.scale || cfg.channels != cfg_.channels || cfg.extractBlocks != cfg_.extractBlocks ||
      cfg.hidden != cfg_.hidden || cfg.fusionHalfwidth != cfg_.fusionHalfwidth ||
      cfg.ablation.bidirectional != cfg_.ablation.bidirectional ||
      cfg.ablation.phaseFusion != cfg_.ablation.phaseFusion) {
    fail<ConfigError>("config change alters the parameter set; rebuild the network instead");
  }
  cfg_ = cfg;
}

std::size_t PhaseAwareVsr::parameterCount() const
{
  std::size_t n = 0;
  for (auto const &p : params_) {
    n += p.value().numel();
  }
  return n;
}

Var const &PhaseAwareVsr::parameter(std::string const &name) const
{
  for (auto const &p : params_) {
    if (p.node().name == name) { return p; }
  }
  fail<ConfigError>("no parameter named `{}`", name);
}

std::map<std::string, Tensor> PhaseAwareVsr::stateDict() const
{
  std::map<std::string, Tensor> out;
  for (auto const &p : params_) {
    out.emplace(p.node().name, p.value());
  }
  return out;
}

void PhaseAwareVsr::loadStateDict(std::map<std::string, Tensor> const &weights)
{
  if (weights.size() != params_.size()) {
    fail<ConfigError>("checkpoint holds {} tensors, network expects {}", weights.size(), params_.size());
  }
  for (auto const &p : params_) {
    auto const it = weights.find(p.node().name);
    if (it == weights.end()) { fail<ConfigError>("checkpoint lacks tensor `{}`", p.node().name); }
    if (!(it->second.shape() == p.shape())) {
      fail<ConfigError>("tensor `{}` has shape {}, network expects {}", p.node().name, it->second.shape().str(),
                        p.shape().str());
    }
    p.node().value = it->second;
  }
}

Var PhaseAwareVsr::featureExtract(Var const &frame) const
{
  Var x = feIn_(frame);
  for (auto const &[first, second] : feBlocks_) {
    x = nn::add(x, second(nn::leakyRelu(first(x), kSlope)));
  }
  return x;
}

FeatureSeq PhaseAwareVsr::extractFeatures(std::vector<Tensor> const &frames) const
{
  FeatureSeq out;
  out.reserve(frames.size());
  for (auto const &f : frames) {
    out.push_back(featureExtract(nn::constant(f)));
  }
  return out;
}

LstmState PhaseAwareVsr::warmupMemory(ConvLstmCell const &cell, LstmState state, FeatureSeq const &warm) const
{
  nn::NoGradGuard guard;
  for (auto const &x : warm) {
    state = cell.step(nn::detach(x), state);
  }
  return {nn::detach(state.h), nn::detach(state.c)};
}

Var PhaseAwareVsr::fuseWindow(FeatureSeq const &hf, FeatureSeq const &hb, std::vector<std::vector<double>> const &phases,
                              int t) const
{
  int const T = static_cast<int>(hf.size());
  int const N = cfg_.fusionHalfwidth;
  std::vector<Var> parts;
  parts.reserve(static_cast<std::size_t>(3 * cfg_.fusionWindow()));
  for (int d = -N; d <= N; ++d) {
    parts.push_back(hf[std::clamp(t + d, 0, T - 1)]);
  }
  for (int d = -N; d <= N; ++d) {
    parts.push_back(hb[std::clamp(t + d, 0, T - 1)]);
  }
  if (cfg_.ablation.phaseFusion) {
    Shape s = hf.front().shape();
    s.c = 1;
    for (int d = -N; d <= N; ++d) {
      auto const &p = phases[std::clamp(t + d, 0, T - 1)];
      Tensor map(s);
      for (int b = 0; b < s.n; ++b) {
        std::fill(map.plane(b, 0), map.plane(b, 0) + s.plane(), static_cast<Real>(p[b]));
      }
      parts.push_back(nn::constant(std::move(map)));
    }
  }
  return fuse2_(nn::leakyRelu(fuse1_(nn::concatChannels(parts)), kSlope));
}

FeatureSeq PhaseAwareVsr::phaseFusion(FeatureSeq const &hf, FeatureSeq const &hb,
                                      std::vector<std::vector<double>> const &phases) const
{
  if (hf.empty()) { fail<ShapeError>("phase fusion needs at least one frame"); }
  if (hb.size() != hf.size() || phases.size() != hf.size()) {
    fail<ShapeError>("phase fusion: {} forward, {} backward features and {} phase rows", hf.size(), hb.size(),
                     phases.size());
  }
  FeatureSeq out;
  out.reserve(hf.size());
  for (int t = 0; t < static_cast<int>(hf.size()); ++t) {
    out.push_back(fuseWindow(hf, hb, phases, t));
  }
  return out;
}

SubnetOutput PhaseAwareVsr::runSubnetwork(FeatureSeq const &L, std::vector<std::vector<double>> const &phases,
                                          FeatureSeq const &warmBefore, FeatureSeq const &warmAfter) const
{
  if (L.empty()) { fail<ShapeError>("subnetwork needs at least one frame"); }
  if (phases.size() != L.size()) { fail<ShapeError>("{} phase rows for {} frames", phases.size(), L.size()); }
  Shape const s = L.front().shape();
  int const T = static_cast<int>(L.size());
  bool const warm = cfg_.activeWarmup() > 0;
  SubnetOutput out;

  out.forward.resize(L.size());
  LstmState state = lstmF_.zeroState(s.n, s.h, s.w);
  if (warm) { state = warmupMemory(lstmF_, state, warmBefore); }
  for (int t = 0; t < T; ++t) {
    if (!cfg_.ablation.memory) { state = lstmF_.zeroState(s.n, s.h, s.w); }
    state = lstmF_.step(L[t], state);
    out.forward[t] = state.h;
  }

  if (cfg_.ablation.bidirectional) {
    out.backward.resize(L.size());
    state = lstmB_.zeroState(s.n, s.h, s.w);
    if (warm) {
      FeatureSeq const farthestFirst(warmAfter.rbegin(), warmAfter.rend());
      state = warmupMemory(lstmB_, state, farthestFirst);
    }
    for (int t = T - 1; t >= 0; --t) {
      if (!cfg_.ablation.memory) { state = lstmB_.zeroState(s.n, s.h, s.w); }
      state = lstmB_.step(L[t], state);
      out.backward[t] = state.h;
    }
  } else {
    out.backward = out.forward;
  }

  out.fused = phaseFusion(out.forward, out.backward, phases);
  return out;
}

FeatureSeq PhaseAwareVsr::refineFeatures(FeatureSeq const &L, std::vector<std::vector<double>> const &phases,
                                         FeatureSeq const &warmBefore, FeatureSeq const &warmAfter) const
{
  SubnetOutput const sub = runSubnetwork(L, phases, warmBefore, warmAfter);
  FeatureSeq out;
  out.reserve(L.size());
  for (std::size_t t = 0; t < L.size(); ++t) {
    out.push_back(nn::add(L[t], sub.fused[t]));
  }
  return out;
}

Var PhaseAwareVsr::upsample(Var const &features) const
{
  if (cfg_.scale == 4) {
    Var x = nn::pixelShuffle(up_[0](features), 2);
    return nn::pixelShuffle(up_[1](nn::leakyRelu(x, kSlope)), 2);
  }
  return nn::pixelShuffle(up_[0](features), cfg_.scale);
}

StagedOutput PhaseAwareVsr::forward(ClipBatch const &batch) const
{
  int const T = batch.length();
  if (T < 1) { fail<ShapeError>("forward needs at least one frame"); }
  if (static_cast<int>(batch.phases.size()) != T) {
    fail<ShapeError>("{} phase rows for {} frames", batch.phases.size(), T);
  }
  int const n = cfg_.activeWarmup();
  FeatureSeq warmBefore;
  FeatureSeq warmAfter;
  if (n > 0) {
    if (static_cast<int>(batch.warmBefore.size()) < n || static_cast<int>(batch.warmAfter.size()) < n) {
      fail<ShapeError>("warm-up needs {} frames each side, batch has {} / {}", n, batch.warmBefore.size(),
                       batch.warmAfter.size());
    }
    nn::NoGradGuard guard;
    // Keep the n frames adjacent to the clip.
    std::vector<Tensor> const before(batch.warmBefore.end() - n, batch.warmBefore.end());
    std::vector<Tensor> const after(batch.warmAfter.begin(), batch.warmAfter.begin() + n);
    warmBefore = extractFeatures(before);
    warmAfter = extractFeatures(after);
  }

  FeatureSeq L = extractFeatures(batch.frames);
  int const stages = cfg_.stages();
  StagedOutput out;
  out.sr.resize(stages + 1);
  out.auxF.resize(stages + 1);
  out.auxB.resize(stages + 1);
  for (int w = 0; w <= stages; ++w) {
    SubnetOutput const sub = runSubnetwork(L, batch.phases, warmBefore, warmAfter);
    FeatureSeq next(L.size());
    for (int t = 0; t < T; ++t) {
      next[t] = nn::add(L[t], sub.fused[t]);
      out.sr[w].push_back(upsample(next[t]));
      out.auxF[w].push_back(upsample(nn::add(sub.forward[t], L[t])));
      out.auxB[w].push_back(upsample(nn::add(sub.backward[t], L[t])));
    }
    L = std::move(next);
  }
  return out;
}

std::size_t analyticParameterCount(ModelConfig const &cfg)
{
  int const C = cfg.channels;
  std::size_t n = convParams(1, C, 3) + 2 * static_cast<std::size_t>(cfg.extractBlocks) * convParams(C, C, 3);
  std::size_t const lstm = convParams(C + cfg.hidden, 4 * cfg.hidden, 3);
  n += cfg.ablation.bidirectional ? 2 * lstm : lstm;
  int const window = 2 * cfg.fusionHalfwidth + 1;
  n += convParams(2 * window * cfg.hidden + (cfg.ablation.phaseFusion ? window : 0), C, 3) + convParams(C, C, 3);
  if (cfg.scale == 4) {
    n += convParams(C, 4 * C, 3) + convParams(C, 4, 3);
  } else {
    n += convParams(C, cfg.scale * cfg.scale, 3);
  }
  return n;
}

namespace {

template <typename T>
void putLe(std::ostream &os, T v)
{
  auto const bits = std::bit_cast<std::make_unsigned_t<T>>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    os.put(static_cast<char>((bits >> (8 * i)) & 0xFFu));
  }
}

template <typename T>
T getLe(std::istream &is, std::filesystem::path const &path)
{
  std::make_unsigned_t<T> bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    int const c = is.get();
    if (c == EOF) { fail<SchemaError>("{}: truncated checkpoint", path.string()); }
    bits |= static_cast<std::make_unsigned_t<T>>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return std::bit_cast<T>(bits);
}

} // namespace

void saveCheckpoint(std::filesystem::path const &path, PhaseAwareVsr const &model, json const &meta)
{
  if (path.has_parent_path()) { std::filesystem::create_directories(path.parent_path()); }
  auto const tmp = std::filesystem::path(path.string() + ".partial");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) { fail<DataError>("cannot write checkpoint {}", path.string()); }
    os.write(kMagic, sizeof(kMagic));
    putLe<std::uint32_t>(os, kCheckpointVersion);
    std::string const header = json{{"config", model.config().toJson()}, {"meta", meta}}.dump();
    putLe<std::uint64_t>(os, header.size());
    os.write(header.data(), static_cast<std::streamsize>(header.size()));
    auto const weights = model.stateDict();
    putLe<std::uint64_t>(os, weights.size());
    for (auto const &[name, t] : weights) {
      putLe<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
      os.write(name.data(), static_cast<std::streamsize>(name.size()));
      Shape const s = t.shape();
      for (int d : {s.n, s.c, s.h, s.w}) {
        putLe<std::int32_t>(os, d);
      }
      for (Real v : t.values()) {
        putLe<std::uint32_t>(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      }
    }
    if (!os) { fail<DataError>("short write to checkpoint {}", path.string()); }
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint readCheckpoint(std::filesystem::path const &path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is) { fail<DataError>("cannot open checkpoint {}", path.string()); }
  char magic[8] = {};
  is.read(magic, sizeof(magic));
  if (!is || !std::equal(std::begin(magic), std::end(magic), std::begin(kMagic))) {
    fail<SchemaError>("{}: not a checkpoint file", path.string());
  }
  auto const version = getLe<std::uint32_t>(is, path);
  if (version != kCheckpointVersion) { fail<SchemaError>("{}: unsupported checkpoint version {}", path.string(), version); }
  auto const headerLen = getLe<std::uint64_t>(is, path);
  if (headerLen > (1u << 24)) { fail<SchemaError>("{}: implausible header length", path.string()); }
  std::string header(headerLen, '\0');
  is.read(header.data(), static_cast<std::streamsize>(headerLen));
  Checkpoint ckpt;
  try {
    auto const j = json::parse(header);
    ckpt.config = ModelConfig::fromJson(j.at("config"));
    ckpt.meta = j.value("meta", json::object());
  } catch (json::exception const &e) {
    fail<SchemaError>("{}: bad checkpoint header: {}", path.string(), e.what());
  }
  auto const count = getLe<std::uint64_t>(is, path);
  for (std::uint64_t i = 0; i < count; ++i) {
    auto const nameLen = getLe<std::uint32_t>(is, path);
    if (nameLen > 4096) { fail<SchemaError>("{}: implausible tensor name length", path.string()); }
    std::string name(nameLen, '\0');
    is.read(name.data(), nameLen);
    Shape s;
    s.n = getLe<std::int32_t>(is, path);
    s.c = getLe<std::int32_t>(is, path);
    s.h = getLe<std::int32_t>(is, path);
    s.w = getLe<std::int32_t>(is, path);
    if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1 || s.numel() > (std::size_t{1} << 30)) {
      fail<SchemaError>("{}: tensor `{}` has invalid shape {}", path.string(), name, s.str());
    }
    Tensor t(s);
    for (Real &v : t.values()) {
      v = std::bit_cast<float>(getLe<std::uint32_t>(is, path));
    }
    ckpt.weights.emplace(std::move(name), std::move(t));
  }
  return ckpt;
}

PhaseAwareVsr loadModel(Checkpoint const &ckpt)
{
  PhaseAwareVsr model(ckpt.config);
  model.loadStateDict(ckpt.weights);
  return model;
}

} // namespace cardiacsr
