// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits non-zero on any FAIL.
#include "cardiacsr/dataio.hpp"
#include "cardiacsr/degrade.hpp"
#include "cardiacsr/loss.hpp"
#include "cardiacsr/metrics.hpp"
#include "cardiacsr/model.hpp"
#include "cardiacsr/phase.hpp"
#include "cardiacsr/trainer.hpp"
#include "cli.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <random>
#include <set>
#include <sstream>

using namespace cardiacsr;
using namespace cardiacsr::testing;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double secondsSince(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict
{
  std::vector<std::string> failures;
  std::vector<std::string> facts;

  void expect(bool ok, std::string what)
  {
    if (!ok) { failures.push_back(std::move(what)); }
  }
  void fact(std::string what) { facts.push_back(std::move(what)); }
};

std::string joined(std::vector<std::string> const &parts)
{
  std::string s;
  for (auto const &p : parts) {
    s += (s.empty() ? "" : "; ") + p;
  }
  return s;
}

// Copy of every verdict line, kept next to the reports.
std::ofstream *gVerdictFile = nullptr;

// limit <= 0 means the criterion has no runtime bound.
bool emit(std::string const &id, std::string const &title, Verdict v, double seconds, double limit)
{
  if (limit > 0) { v.expect(seconds < limit, fmt::format("runtime {:.2f} s exceeds {} s", seconds, limit)); }
  bool const ok = v.failures.empty();
  std::string const timing = limit > 0 ? fmt::format("{:.2f} s < {} s", seconds, limit) : fmt::format("{:.1f} s", seconds);
  std::string const line = fmt::format("{} {} {} [{}]: {}\n", ok ? "PASS" : "FAIL", id, title, timing,
                                       ok ? joined(v.facts) : joined(v.failures) + " | " + joined(v.facts));
  std::cout << line << std::flush;
  if (gVerdictFile) { *gVerdictFile << line << std::flush; }
  return ok;
}

Image randomImage(int h, int w, unsigned seed)
{
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(h, w);
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    img.data()[i] = u(rng);
  }
  return img;
}

VideoClip clipOf(std::vector<Image> frames)
{
  VideoClip c;
  c.frames = std::move(frames);
  return c;
}

// ---------------------------------------------------------------- 1

Verdict phaseSuite()
{
  Verdict v;
  double const tol = 1e-12;
  double const pi = std::numbers::pi;
  double worstPeriod = 0, worstAnchor = 0, worstBranch = 0, worstFormula = 0;
  bool monotone = true;
  for (auto const &s : {CardiacCycleSpec{0, 10, 30}, CardiacCycleSpec{3, 11, 25}, CardiacCycleSpec{20, 5, 30},
                        CardiacCycleSpec{0, 1, 2}, CardiacCycleSpec{5, 24, 30}, CardiacCycleSpec{7, 8, 9}}) {
    for (FrameIndex t = -3 * s.tCycle; t < 3 * s.tCycle; ++t) {
      worstPeriod = std::max(worstPeriod, std::abs(phaseAt(t + s.tCycle, s) - phaseAt(t, s)));
    }
    for (FrameIndex k = -1; k <= 1; ++k) {
      worstAnchor = std::max(worstAnchor, std::abs(phaseAt(s.es + k * s.tCycle, s) + 1.0));
      worstAnchor = std::max(worstAnchor, std::abs(phaseAt(s.ed + (k + 1) * s.tCycle, s) - 1.0));
    }
    // Branch expressions evaluated at the two junctions, with ES and ED placed after ED on the unrolled axis.
    FrameIndex const sys = s.systoleLength();
    double const systolicAtEs = std::cos(pi * double(sys) / double(sys));
    double const diastolicAtEs = std::cos(pi * (1.0 + 0.0 / double(s.tCycle - sys)));
    double const diastolicAtWrap = std::cos(pi * (1.0 + double(s.tCycle - sys) / double(s.tCycle - sys)));
    double const systolicAtEd = std::cos(0.0);
    worstBranch = std::max({worstBranch, std::abs(systolicAtEs - diastolicAtEs), std::abs(diastolicAtWrap - systolicAtEd),
                            std::abs(phaseAt(s.es, s) - systolicAtEs), std::abs(phaseAt(s.ed, s) - diastolicAtWrap)});
    if (s.ed < s.es) {
      for (FrameIndex t = s.ed + 1; t <= s.ed + s.tCycle; ++t) {
        worstFormula = std::max(worstFormula, std::abs(phaseAt(t, s) - literalPhase(t, s.ed, s.es, s.tCycle)));
      }
    }
    auto const seq = phaseSequence(s, s.ed + 1, s.tCycle);
    for (FrameIndex i = 1; i < s.tCycle; ++i) {
      bool const falling = i < sys;
      if (falling ? !(seq.values[i] < seq.values[i - 1]) : !(seq.values[i] > seq.values[i - 1])) { monotone = false; }
    }
  }
  v.expect(worstPeriod <= tol, fmt::format("periodicity error {:.3g}", worstPeriod));
  v.expect(worstAnchor <= tol, fmt::format("anchor error {:.3g}", worstAnchor));
  v.expect(worstBranch <= tol, fmt::format("branch mismatch {:.3g}", worstBranch));
  v.expect(worstFormula <= tol, fmt::format("formula error {:.3g}", worstFormula));
  v.expect(monotone, "systole not falling or diastole not rising");
  v.fact(fmt::format("max |P(t+T)-P(t)| {:.1e}, max anchor error {:.1e}, branch gap {:.1e}, formula error {:.1e}, monotone {}",
                     worstPeriod, worstAnchor, worstBranch, worstFormula, monotone));
  return v;
}

// ---------------------------------------------------------------- 2

Verdict degradationSuite()
{
  Verdict v;
  double worstIdentity = 0.0;
  for (auto [h, w] : {std::pair{16, 16}, std::pair{15, 20}, std::pair{9, 7}, std::pair{64, 48}}) {
    Image const img = randomImage(h, w, static_cast<unsigned>(h * w));
    worstIdentity = std::max(worstIdentity, (lowpassFilter(img, 1.0) - img).abs().maxCoeff());
  }
  v.expect(worstIdentity <= 1e-12, fmt::format("cutoff-1 filter changes the frame by {:.3g}", worstIdentity));

  double worstRatio = 0.0;
  for (auto [h, w] : {std::pair{16, 16}, std::pair{12, 20}}) {
    for (double cutoff : {0.25, 1.0 / 3.0, 0.5}) {
      Image const out = lowpassFilter(randomImage(h, w, 11), cutoff);
      auto const spectrum = directDft(out);
      double total = 0.0;
      double outOfBand = 0.0;
      for (int u = 0; u < h; ++u) {
        for (int x = 0; x < w; ++x) {
          double const e = std::norm(spectrum[static_cast<std::size_t>(u * w + x)]);
          total += e;
          if (std::abs(signedFrequency(u, h)) > cutoff * h / 2.0 || std::abs(signedFrequency(x, w)) > cutoff * w / 2.0) {
            outOfBand += e;
          }
        }
      }
      worstRatio = std::max(worstRatio, outOfBand / total);
    }
  }
  v.expect(worstRatio <= 1e-10, fmt::format("out-of-band energy fraction {:.3g}", worstRatio));

  double worstBicubic = 0.0;
  Image const src = randomImage(12, 20, 9);
  for (auto [oh, ow] : {std::pair{3, 5}, std::pair{4, 5}, std::pair{6, 10}, std::pair{36, 60}, std::pair{48, 80}}) {
    worstBicubic = std::max(worstBicubic, (bicubicResize(src, oh, ow) - bicubicOracle(src, oh, ow)).abs().maxCoeff());
  }
  v.expect(worstBicubic <= 1e-6, fmt::format("bicubic deviates from the oracle by {:.3g}", worstBicubic));

  auto const [hr, ann] = generatePhantom(8, 1, 96, 96, 0, 3, 21);
  bool deterministic = true;
  for (int r : {2, 3, 4}) {
    VideoClip const a = degradeClip(hr, DegradeConfig{.scale = r});
    VideoClip const b = degradeClip(hr, DegradeConfig{.scale = r});
    for (std::size_t t = 0; t < a.frames.size(); ++t) {
      deterministic = deterministic && (a.frames[t] - b.frames[t]).abs().maxCoeff() == 0.0;
    }
  }
  v.expect(deterministic, "repeated degradation differs");
  v.fact(fmt::format("identity {:.1e}, out-of-band fraction {:.1e}, bicubic vs oracle {:.1e}, bitwise deterministic {}",
                     worstIdentity, worstRatio, worstBicubic, deterministic));
  return v;
}

// ---------------------------------------------------------------- 3

ModelConfig smallConfig(int scale)
{
  ModelConfig cfg;
  cfg.scale = scale;
  cfg.channels = 8;
  cfg.hidden = 8;
  cfg.extractBlocks = 1;
  cfg.warmupN = 2;
  cfg.omega = 2;
  cfg.fusionHalfwidth = 1;
  cfg.initSeed = 5;
  return cfg;
}

Verdict modelSuite(std::string const &auditCommand)
{
  Verdict v;
  bool shapes = true;
  for (int r : {2, 3, 4}) {
    PhaseAwareVsr const model(smallConfig(r));
    StagedOutput const out = model.forward(randomBatch(2, 3, 5, 7, 2, 1));
    std::size_t const stages = static_cast<std::size_t>(model.config().stages()) + 1;
    shapes = shapes && out.sr.size() == stages && out.auxF.size() == stages && out.auxB.size() == stages;
    for (auto const *group : {&out.sr, &out.auxF, &out.auxB}) {
      for (auto const &stage : *group) {
        shapes = shapes && stage.size() == 3;
        for (auto const &frame : stage) {
          shapes = shapes && frame.shape() == nn::Shape{2, 1, 5 * r, 7 * r} && frame.value().allFinite();
        }
      }
    }
  }
  v.expect(shapes, "output shape contract violated");

  std::set<std::size_t> counts;
  ModelConfig cfg = smallConfig(4);
  for (int omega : {0, 1, 2, 5}) {
    for (int n : {0, 2, 6}) {
      cfg.omega = omega;
      cfg.warmupN = n;
      counts.insert(PhaseAwareVsr(cfg).parameterCount());
    }
  }
  v.expect(counts.size() == 1, fmt::format("{} distinct parameter counts across omega and n", counts.size()));

  PhaseAwareVsr zeroed(smallConfig(4));
  for (auto const &p : zeroed.parameters()) {
    std::string const &name = p.node().name;
    if (name.rfind("lstm_", 0) == 0 || name.rfind("fusion.", 0) == 0) { p.node().value.fill(0); }
  }
  ClipBatch const batch = randomBatch(1, 3, 6, 6, 2, 3);
  StagedOutput const out = zeroed.forward(batch);
  FeatureSeq const features = zeroed.extractFeatures(batch.frames);
  double worstReduction = 0.0;
  for (std::size_t t = 0; t < 3; ++t) {
    nn::Tensor const expected = zeroed.upsample(features[t]).value();
    for (auto const &stage : out.sr) {
      worstReduction = std::max(worstReduction, maxAbsDiff(stage[t].value(), expected));
    }
  }
  v.expect(worstReduction <= 1e-6, fmt::format("zero subnetwork deviates from upsampled features by {:.3g}", worstReduction));

  PhaseAwareVsr fresh(smallConfig(4));
  nn::backward(totalLoss(fresh.forward(randomBatch(2, 3, 6, 6, 2, 13)), constantTargets(2, 3, 24, 24, 0.5)).objective);
  std::vector<std::string> silent;
  for (auto const &p : fresh.parameters()) {
    double norm = 0.0;
    bool finite = p.grad().numel() == p.value().numel();
    for (std::size_t i = 0; finite && i < p.grad().numel(); ++i) {
      finite = std::isfinite(p.grad().data()[i]);
      norm += std::abs(p.grad().data()[i]);
    }
    if (!finite || norm == 0.0) { silent.push_back(p.node().name); }
  }
  v.expect(silent.empty(), fmt::format("no gradient at step 0 for {}", joined(silent)));

  double worstAll = -1, worstWarm = -1;
  int checkedAll = 0, checkedWarm = 0;
  if (FILE *pipe = popen(auditCommand.c_str(), "r")) {
    if (std::fscanf(pipe, "%lf %d %lf %d", &worstAll, &checkedAll, &worstWarm, &checkedWarm) != 4) { worstAll = -1; }
    pclose(pipe);
  }
  v.expect(worstAll >= 0 && checkedAll > 0, "gradient audit did not report");
  v.expect(worstAll <= 1e-3, fmt::format("finite-difference relative error {:.3g} over all tensors", worstAll));
  v.expect(worstWarm <= 1e-3, fmt::format("finite-difference relative error {:.3g} with warm-up", worstWarm));

  v.fact(fmt::format("shapes r=2,3,4 ok {}, params {} for every (omega, n), zero-subnetwork gap {:.1e}, "
                     "tensors without gradient {}, C=8 gradient check {:.2e} over {} weights ({:.2e} over {} with warm-up)",
                     shapes, *counts.begin(), worstReduction, silent.size(), worstAll, checkedAll, worstWarm, checkedWarm));
  return v;
}

// ---------------------------------------------------------------- 4

Verdict lossSuite()
{
  Verdict v;
  auto random = [](int frames, int h, int w, unsigned seed) {
    std::vector<Image> f;
    for (int t = 0; t < frames; ++t) {
      f.push_back(randomImage(h, w, seed + static_cast<unsigned>(t)));
    }
    return clipOf(f);
  };
  VideoClip const target = random(3, 8, 8, 1);
  v.expect(stageL1(target, target) == 0.0, "stage loss non-zero at perfect prediction");
  v.expect(totalLoss({target, target, target}, {target, target, target}, {target, target, target}, target).total == 0.0,
           "total loss non-zero at perfect prediction");

  Image p(2, 2), t(2, 2);
  p << 0.25, 0.5, 0.75, 1.0;
  t << 0.0, 1.0, 1.0, 0.5;
  double const example = stageL1(clipOf({p}), clipOf({t}));
  v.expect(example == 1.5, fmt::format("2x2 example gives {} instead of 1.5", example));

  std::vector<VideoClip> sr, af, ab;
  for (unsigned w = 0; w < 3; ++w) {
    sr.push_back(random(3, 8, 8, 10 + 10 * w));
    af.push_back(random(3, 8, 8, 40 + 10 * w));
    ab.push_back(random(3, 8, 8, 70 + 10 * w));
  }
  LossReport const rep = totalLoss(sr, af, ab, target);
  double terms = 0.0;
  for (std::size_t w = 0; w < 3; ++w) {
    terms += stageL1(sr[w], target) + stageL1(af[w], target) + stageL1(ab[w], target);
  }
  double const accounting = std::abs(rep.total - terms) / terms;
  v.expect(rep.perStage.size() == 3 && accounting <= 1e-12,
           fmt::format("{} stage terms for omega = 2, sum mismatch {:.3g}", rep.perStage.size(), accounting));

  auto scaled = [&](std::vector<VideoClip> const &clips, double a) {
    std::vector<VideoClip> out = clips;
    for (auto &c : out) {
      for (std::size_t i = 0; i < c.frames.size(); ++i) {
        c.frames[i] = target.frames[i] + a * (c.frames[i] - target.frames[i]);
      }
    }
    return out;
  };
  double worstHomogeneity = 0.0;
  for (double a : {0.5, 2.0, 3.0}) {
    double const l = totalLoss(scaled(sr, a), scaled(af, a), scaled(ab, a), target).total;
    worstHomogeneity = std::max(worstHomogeneity, std::abs(l - a * rep.total) / (a * rep.total));
  }
  v.expect(worstHomogeneity <= 1e-12, fmt::format("homogeneity error {:.3g}", worstHomogeneity));
  v.fact(fmt::format("perfect prediction 0, 2x2 example {}, omega=2 terms {} with relative sum error {:.1e}, "
                     "homogeneity error {:.1e}",
                     example, 3 * rep.perStage.size(), accounting, worstHomogeneity));
  return v;
}

// ---------------------------------------------------------------- 5

Verdict metricsSuite()
{
  Verdict v;
  Image const a = randomImage(32, 32, 1);
  double const offsetPsnr = psnr(a, a + 0.1);
  v.expect(std::abs(offsetPsnr - 20.0) <= 1e-9, fmt::format("constant 0.1 offset gives {:.12f} dB", offsetPsnr));

  Image const b = (a + 0.2 * randomImage(32, 32, 2)).min(1.0);
  double const identity = std::abs(ssim(a, a) - 1.0);
  double const symmetry = std::abs(ssim(a, b) - ssim(b, a));
  double const oracle = std::abs(ssim(a, b) - oracleSsim(a, b));
  v.expect(identity <= 1e-12, fmt::format("SSIM(x, x) differs from 1 by {:.3g}", identity));
  v.expect(symmetry <= 1e-12, fmt::format("SSIM asymmetry {:.3g}", symmetry));
  v.expect(oracle <= 1e-6, fmt::format("SSIM deviates from the direct oracle by {:.3g}", oracle));

  auto const [hr, ann] = generatePhantom(12, 2, 64, 64, 0, 4, 9);
  VideoClip noisy = hr;
  std::mt19937 rng(1);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (auto &f : noisy.frames) {
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      f.data()[i] += noise(rng);
    }
  }
  MetricReport const full = cardiacMetrics(noisy, hr, RoiBox{0, 0, 64, 64});
  double const reduction = std::max(std::abs(full.cardiacPsnr - full.psnr), std::abs(full.cardiacSsim - full.ssim));
  v.expect(reduction <= 1e-12, fmt::format("full-frame ROI differs from global scores by {:.3g}", reduction));

  double worstIou = 1.0;
  for (auto [size, seed, dy, dx] : {std::tuple{96, 3, 0, 0}, std::tuple{128, 5, 9, -7}, std::tuple{128, 8, -12, 4}}) {
    auto const [video, truth] = generatePhantom(30, 1, size, size, 0, 10, static_cast<std::uint64_t>(seed),
                                                PhantomOptions{.offsetY = dy, .offsetX = dx});
    worstIou = std::min(worstIou, iou(detectHeartRoi(video), *truth.roi));
  }
  v.expect(worstIou >= 0.5, fmt::format("ROI IoU {:.3f} below 0.5", worstIou));

  auto const [base, baseAnn] = generatePhantom(12, 2, 128, 128, 0, 4, 3);
  auto const [moved, movedAnn] = generatePhantom(12, 2, 128, 128, 0, 4, 3, PhantomOptions{.offsetY = 10, .offsetX = 10});
  RoiBox const r0 = detectHeartRoi(base);
  RoiBox const r1 = detectHeartRoi(moved);
  bool const equivariant = r1.top == r0.top + 10 && r1.left == r0.left + 10 && r1.height == r0.height && r1.width == r0.width;
  v.expect(equivariant, "ROI does not follow a (+10, +10) translation");
  v.fact(fmt::format("offset PSNR {:.10f} dB, SSIM identity {:.1e} symmetry {:.1e} oracle {:.1e}, full-ROI gap {:.1e}, "
                     "min ROI IoU {:.3f}, translation equivariant {}",
                     offsetPsnr, identity, symmetry, oracle, reduction, worstIou, equivariant));
  return v;
}

// ---------------------------------------------------------------- 6 and 7

struct Budget
{
  int steps = 1500;
  int ablationSteps = 100;
  int overfitSteps = 200;
};

int runCli(std::vector<std::string> const &args, fs::path const &logFile)
{
  std::ostringstream out, err;
  int const code = cardiacsr::cli::run(args, out, err);
  std::ofstream log(logFile, std::ios::app);
  log << "$ cardiacsr";
  for (auto const &a : args) {
    log << " " << a;
  }
  log << "\n" << out.str() << err.str() << "exit " << code << "\n";
  return code;
}

json summaryOf(fs::path const &report)
{
  json last;
  std::ifstream in(report);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) { last = json::parse(line); }
  }
  if (!last.contains("summary")) { throw std::runtime_error("no summary record in " + report.string()); }
  return last;
}

std::vector<std::string> modelFlags(int warmupN, int omega)
{
  return {"--scale", "4", "--channels", "8", "--extract-blocks", "2", "--warmup-n", std::to_string(warmupN),
          "--omega", std::to_string(omega)};
}

std::vector<std::string> trainFlags(int steps)
{
  return {"--steps", std::to_string(steps), "--seed", "1", "--lr", "5e-3", "--batch-size", "4", "--crop", "16"};
}

std::vector<std::string> concat(std::vector<std::vector<std::string>> parts)
{
  std::vector<std::string> all;
  for (auto &p : parts) {
    all.insert(all.end(), p.begin(), p.end());
  }
  return all;
}

struct RunResult
{
  bool ok = false;
  json summary;
};

// Trains and evaluates one (n, omega) configuration on the shared dataset.
RunResult trainAndEvaluate(fs::path const &work, std::string const &tag, int warmupN, int omega, int steps)
{
  fs::path const log = work / "commands.log";
  fs::path const ckpt = work / (tag + ".ckpt");
  fs::path const report = work / "reports" / (tag + ".jsonl");
  RunResult r;
  if (runCli(concat({{"train", "--data", (work / "data").string(), "--out", ckpt.string(), "--log",
                   (work / (tag + "_train.jsonl")).string()},
                  modelFlags(warmupN, omega), trainFlags(steps)}),
          log) != 0) {
    return r;
  }
  if (runCli({"eval", "--ckpt", ckpt.string(), "--data", (work / "data").string(), "--split", "test", "--report", report.string()},
          log) != 0) {
    return r;
  }
  r.summary = summaryOf(report);
  r.ok = true;
  return r;
}

Verdict overfitSuite(Budget const &budget)
{
  Verdict v;
  // One 8-frame heartbeat at 64x64 (16x16 LR) sampled whole: every sample is the same clip.
  auto [hr, ann] = generatePhantom(8, 1, 64, 64, 0, 3, 31);
  std::vector<PairedVideo> const one{makePaired(hr, ann, DegradeConfig{.scale = 4})};
  ModelConfig cfg;
  cfg.scale = 4;
  cfg.channels = 8;
  cfg.hidden = 8;
  cfg.extractBlocks = 2;
  TrainConfig tc;
  tc.maxSteps = budget.overfitSteps;
  tc.lr = 5e-3;
  tc.batchSize = 1;
  tc.crop = 16;
  tc.clipLength = 8;
  tc.seed = 1;
  TrainResult const r = train(cfg, tc, one);
  double const first = r.losses.front().total;
  double const last = r.losses.back().total;
  v.expect(std::isfinite(last) && last <= 0.5 * first, fmt::format("loss {:.4g} -> {:.4g} is not halved", first, last));
  v.fact(fmt::format("{}-step single-clip loss {:.4g} -> {:.4g} (ratio {:.3f})", budget.overfitSteps, first, last, last / first));
  return v;
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Acceptance run"};
  fs::path work = fs::temp_directory_path() / "cardiacsr_acceptance";
  std::string audit = GRADCHECK_AUDIT;
  Budget budget;
  app.add_option("--workdir", work, "Scratch directory, wiped first")->capture_default_str();
  app.add_option("--gradcheck-audit", audit, "Double-precision gradient audit executable")->capture_default_str();
  app.add_option("--steps", budget.steps, "Training steps per end-to-end run")->capture_default_str();
  app.add_option("--ablation-steps", budget.ablationSteps, "Training steps per ablation row")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  fs::remove_all(work);
  fs::create_directories(work / "reports");
  std::ofstream verdicts(work / "acceptance.txt");
  gVerdictFile = &verdicts;
  bool all = true;
  auto timed = [&](std::string const &id, std::string const &title, double limit, auto &&suite) {
    auto const t0 = Clock::now();
    Verdict v;
    try {
      v = suite();
    } catch (std::exception const &e) {
      v.expect(false, std::string("exception: ") + e.what());
    }
    all = emit(id, title, std::move(v), secondsSince(t0), limit) && all;
  };

  timed("1", "phase code", 1.0, phaseSuite);
  timed("2", "degradation", 10.0, degradationSuite);
  timed("3", "model invariants", 120.0, [&] { return modelSuite(audit); });
  timed("4", "loss", 5.0, lossSuite);
  timed("5", "metrics", 30.0, metricsSuite);

  fs::path const log = work / "commands.log";
  int const generated = runCli({"phantom-gen", "--out", (work / "data").string(), "--train", "4", "--val", "1", "--test", "1",
                             "--frames-per-cycle", "30", "--cycles", "1", "--size", "128", "--ed", "0", "--es", "10", "--seed",
                             "7"},
                            log);

  timed("6a", "single-clip overfit", 0.0, [&] { return overfitSuite(budget); });

  // Main run (n = 6, omega = 2) shared by (b) and both arms of (c).
  RunResult main, noWarmup, noRefinement;
  timed("6b", "trained model vs bicubic", 0.0, [&] {
    Verdict v;
    v.expect(generated == 0, "phantom generation failed");
    main = trainAndEvaluate(work, "main_n6_omega2", 6, 2, budget.steps);
    v.expect(main.ok, "main run failed, see commands.log");
    if (!main.ok) { return v; }
    double const model = main.summary.at("cardiac_psnr");
    double const bicubic = main.summary.at("bicubic_cardiac_psnr");
    v.expect(model - bicubic >= 1.0, fmt::format("gain {:.3f} dB below 1 dB", model - bicubic));
    v.fact(fmt::format("CardiacPSNR {:.3f} vs bicubic {:.3f} (+{:.3f} dB), CardiacSSIM {:.4f} vs {:.4f}, C=8, {} steps",
                       model, bicubic, model - bicubic, main.summary.at("cardiac_ssim").get<double>(),
                       main.summary.at("bicubic_cardiac_ssim").get<double>(), budget.steps));
    return v;
  });

  // The pass/fail comparison is between the sweep end points; the middle points only fill the figures.
  timed("6c", "warm-up and refinement trends", 0.0, [&] {
    Verdict v;
    v.expect(main.ok, "main run unavailable");
    noWarmup = trainAndEvaluate(work, "sweep_n0_omega2", 0, 2, budget.steps);
    RunResult const midWarmup = trainAndEvaluate(work, "sweep_n3_omega2", 3, 2, budget.steps);
    noRefinement = trainAndEvaluate(work, "sweep_n6_omega0", 6, 0, budget.steps);
    RunResult const midRefinement = trainAndEvaluate(work, "sweep_n6_omega1", 6, 1, budget.steps);
    v.expect(noWarmup.ok && midWarmup.ok && noRefinement.ok && midRefinement.ok, "sweep run failed, see commands.log");
    if (!(main.ok && noWarmup.ok && midWarmup.ok && noRefinement.ok && midRefinement.ok)) { return v; }
    double const m = main.summary.at("cardiac_psnr");
    double const n0 = noWarmup.summary.at("cardiac_psnr");
    double const n3 = midWarmup.summary.at("cardiac_psnr");
    double const o0 = noRefinement.summary.at("cardiac_psnr");
    double const o1 = midRefinement.summary.at("cardiac_psnr");
    v.expect(m >= n0 - 0.05, fmt::format("n=6 {:.3f} dB below n=0 {:.3f} dB beyond 0.05 dB", m, n0));
    v.expect(m >= o0 - 0.05, fmt::format("omega=2 {:.3f} dB below omega=0 {:.3f} dB beyond 0.05 dB", m, o0));
    v.fact(fmt::format("n=0 {:.3f}, n=3 {:.3f}, n=6 {:.3f} ({:+.3f} dB end to end); omega=0 {:.3f}, omega=1 {:.3f}, "
                       "omega=2 {:.3f} ({:+.3f} dB end to end)",
                       n0, n3, m, m - n0, o0, o1, m, m - o0));
    return v;
  });

  timed("6d", "ablation table", 0.0, [&] {
    Verdict v;
    fs::path const report = work / "reports" / "ablation.jsonl";
    int const code = runCli(concat({{"ablate", "--data", (work / "data").string(), "--split", "test", "--report", report.string()},
                                 modelFlags(6, 2), trainFlags(budget.ablationSteps)}),
                         log);
    v.expect(code == 0, fmt::format("ablate exited with {}", code));
    std::vector<std::string> labels;
    bool finite = true;
    std::ifstream in(report);
    for (std::string line; std::getline(in, line);) {
      json const row = json::parse(line);
      labels.push_back(row.at("row"));
      finite = finite && row.at("finite").get<bool>() && std::isfinite(row.at("cardiac_psnr").get<double>());
    }
    std::vector<std::string> const expected{"baseline",     "+memory",       "+updated_memory",
                                            "+bidirection", "+phase_fusion", "+residual_of_residual"};
    v.expect(labels == expected, fmt::format("rows [{}]", joined(labels)));
    v.expect(finite, "numerical failure in a row");
    v.fact(fmt::format("{} rows, all finite {}, {} steps per row", labels.size(), finite, budget.ablationSteps));
    return v;
  });

  timed("7", "bench and figures", 0.0, [&] {
    Verdict v;
    v.expect(main.ok, "main checkpoint unavailable");
    if (!main.ok) { return v; }
    fs::path const ckpt = work / "main_n6_omega2.ckpt";
    std::vector<json> records;
    for (int omega : {2, 0}) {
      fs::path const report = work / "reports" / fmt::format("bench_omega{}.jsonl", omega);
      int const code = runCli({"bench", "--ckpt", ckpt.string(), "--omega", std::to_string(omega), "--frames", "7", "--height",
                            "32", "--width", "32", "--trials", "3", "--report", report.string()},
                           log);
      v.expect(code == 0, fmt::format("bench omega={} exited with {}", omega, code));
      if (code != 0) { return v; }
      std::ifstream in(report);
      std::string line;
      std::getline(in, line);
      records.push_back(json::parse(line));
    }
    std::size_t const p2 = records[0].at("params");
    std::size_t const p0 = records[1].at("params");
    v.expect(records[0].at("omega") == 2 && records[1].at("omega") == 0, "bench records carry the wrong omega");
    v.expect(p2 == p0, fmt::format("params(omega=2) {} != params(omega=0) {}", p2, p0));

    std::vector<std::string> args{"plot", "--out", (work / "figures").string()};
    for (auto const &entry : fs::directory_iterator(work / "reports")) {
      args.push_back("--report");
      args.push_back(entry.path().string());
    }
    v.expect(runCli(args, log) == 0, "plot failed, see commands.log");
    std::vector<std::string> drawn;
    for (std::string const name : {"sweep_warmup_n.svg", "sweep_omega.svg"}) {
      std::ifstream in(work / "figures" / name);
      std::stringstream text;
      text << in.rdbuf();
      std::string const svg = text.str();
      std::size_t points = 0;
      for (std::size_t at = svg.find("<circle"); at != std::string::npos; at = svg.find("<circle", at + 1)) {
        ++points;
      }
      v.expect(points >= 3, fmt::format("{} has {} points", name, points));
      drawn.push_back(fmt::format("{} ({} points)", name, points));
    }
    v.fact(fmt::format("params(omega=2) = params(omega=0) = {}, fps {:.1f} vs {:.1f}; figures {}", p2,
                       records[0].at("fps").get<double>(), records[1].at("fps").get<double>(), joined(drawn)));
    return v;
  });

  std::string const overall = all ? "ALL PASS\n" : "SOME CRITERIA FAILED\n";
  std::cout << overall;
  verdicts << overall;
  return all ? 0 : 1;
}
