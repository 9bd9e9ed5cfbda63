#include "cli.hpp"

#include "cardiacsr/dataio.hpp"
#include "cardiacsr/error.hpp"
#include "cardiacsr/plot.hpp"
#include "cardiacsr/trainer.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <random>
#include <sstream>

namespace cardiacsr::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct ModelFlags
{
  int scale = 4;
  int channels = 64;
  int extractBlocks = 5;
  int warmupN = 6;
  int omega = 2;
  int fusionHalfwidth = 2;
  bool noMemory = false;
  bool noWarmup = false;
  bool noBidirectional = false;
  bool noPhaseFusion = false;
  bool noResidualOfResidual = false;

  void add(CLI::App &app)
  {
    app.add_option("--scale", scale, "Upscaling factor r")->capture_default_str();
    app.add_option("--channels", channels, "Feature channels C (also the recurrent width)")->capture_default_str();
    app.add_option("--extract-blocks", extractBlocks, "Residual blocks in the feature extractor")->capture_default_str();
    app.add_option("--warmup-n", warmupN, "Warm-up frames n on each side")->capture_default_str();
    app.add_option("--omega", omega, "Refinement stages")->capture_default_str();
    app.add_option("--fusion-halfwidth", fusionHalfwidth, "Phase fusion half-width N")->capture_default_str();
    app.add_flag("--no-memory", noMemory, "Reset recurrent state every frame");
    app.add_flag("--no-warmup", noWarmup, "Start recurrences from zero state");
    app.add_flag("--no-bidirectional", noBidirectional, "Forward recurrence only");
    app.add_flag("--no-phase-fusion", noPhaseFusion, "Drop phase code channels from fusion");
    app.add_flag("--no-residual-of-residual", noResidualOfResidual, "Single refinement pass");
  }

  ModelConfig config() const
  {
    ModelConfig c;
    c.scale = scale;
    c.channels = channels;
    c.hidden = channels;
    c.extractBlocks = extractBlocks;
    c.warmupN = warmupN;
    c.omega = omega;
    c.fusionHalfwidth = fusionHalfwidth;
    c.ablation = Ablation{.memory = !noMemory,
                          .warmup = !noWarmup,
                          .bidirectional = !noBidirectional,
                          .phaseFusion = !noPhaseFusion,
                          .residualOfResidual = !noResidualOfResidual};
    c.validate();
    return c;
  }
};

struct TrainFlags
{
  TrainConfig cfg;
  std::string l1 = "sum";

  void add(CLI::App &app)
  {
    app.add_option("--steps", cfg.maxSteps, "Optimisation steps")->capture_default_str();
    app.add_option("--seed", cfg.seed, "Seed for initialisation and sampling")->capture_default_str();
    app.add_option("--lr", cfg.lr, "Learning rate")->capture_default_str();
    app.add_option("--batch-size", cfg.batchSize, "Clips per step")->capture_default_str();
    app.add_option("--clip-length", cfg.clipLength, "Frames per training clip")->capture_default_str();
    app.add_option("--crop", cfg.crop, "LR crop side")->capture_default_str();
    app.add_option("--eval-every", cfg.evalEvery, "Validate every k steps, 0 = never")->capture_default_str();
    app.add_option("--grad-clip", cfg.gradClip, "Global gradient-norm clip, 0 = off")->capture_default_str();
    app.add_option("--l1", l1, "Per-frame L1 reduction")->check(CLI::IsMember({"sum", "mean"}))->capture_default_str();
  }

  TrainConfig config() const
  {
    TrainConfig c = cfg;
    c.reduction = l1 == "mean" ? L1Reduction::PixelMean : L1Reduction::PixelSum;
    c.validate();
    return c;
  }
};

std::string joinLines(std::vector<json> const &records)
{
  std::string s;
  for (auto const &r : records) {
    s += r.dump() + "\n";
  }
  return s;
}

void requireDirectory(fs::path const &p)
{
  if (!fs::is_directory(p)) { fail<DataError>("data directory {} does not exist", p.string()); }
}

} // namespace

int run(std::vector<std::string> const &args, std::ostream &out, std::ostream &err)
{
  CLI::App app{"Phase-aware cine cardiac MRI video super-resolution"};
  app.set_config("--config", "", "TOML/INI file whose keys mirror the long flags");
  app.require_subcommand(1);

  // phantom-gen
  auto *phantom = app.add_subcommand("phantom-gen", "Write a synthetic beating-heart dataset");
  fs::path phantomOut;
  int nTrain = 4, nVal = 1, nTest = 1, frames = 30, cycles = 1, size = 128, ed = 0, es = 10;
  std::uint64_t phantomSeed = 0;
  int maxOffset = -1;
  phantom->add_option("--out", phantomOut, "Dataset root")->required();
  phantom->add_option("--train", nTrain, "Training videos")->capture_default_str();
  phantom->add_option("--val", nVal, "Validation videos")->capture_default_str();
  phantom->add_option("--test", nTest, "Test videos")->capture_default_str();
  phantom->add_option("--frames-per-cycle", frames, "Frames per heartbeat")->capture_default_str();
  phantom->add_option("--cycles", cycles, "Heartbeats per video")->capture_default_str();
  phantom->add_option("--size", size, "Frame side in HR pixels")->capture_default_str();
  phantom->add_option("--ed", ed, "End-diastole frame")->capture_default_str();
  phantom->add_option("--es", es, "End-systole frame")->capture_default_str();
  phantom->add_option("--seed", phantomSeed, "Base seed")->capture_default_str();
  phantom->add_option("--max-offset", maxOffset, "Largest heart translation in pixels, default size/8");

  // degrade
  auto *degrade = app.add_subcommand("degrade", "Produce the LR counterpart of one HR video");
  fs::path degradeIn, degradeOut;
  DegradeConfig degradeCfg;
  degrade->add_option("--in", degradeIn, "HR .vol with sidecar annotation")->required();
  degrade->add_option("--out", degradeOut, "LR .vol to write")->required();
  degrade->add_option("--scale", degradeCfg.scale, "Downscaling factor")->capture_default_str();
  degrade->add_option("--cutoff", degradeCfg.cutoffFraction, "Kept frequency fraction, 0 = 1/scale")->capture_default_str();

  // train
  auto *trainCmd = app.add_subcommand("train", "Train a model on <data>/train");
  ModelFlags trainModel;
  TrainFlags trainFlags;
  fs::path trainData, trainOut, trainLog;
  trainModel.add(*trainCmd);
  trainFlags.add(*trainCmd);
  trainCmd->add_option("--data", trainData, "Dataset root")->required();
  trainCmd->add_option("--out", trainOut, "Checkpoint to write")->required();
  trainCmd->add_option("--log", trainLog, "JSON-lines training log");

  // eval
  auto *evalCmd = app.add_subcommand("eval", "Evaluate a checkpoint against bicubic");
  fs::path evalCkpt, evalData, evalReport;
  std::string evalSplit = "test";
  int evalScale = 0, evalClip = 7;
  evalCmd->add_option("--ckpt", evalCkpt, "Checkpoint")->required();
  evalCmd->add_option("--data", evalData, "Dataset root")->required();
  evalCmd->add_option("--split", evalSplit, "train, val or test")->capture_default_str();
  evalCmd->add_option("--scale", evalScale, "Expected scale, 0 = the checkpoint's");
  evalCmd->add_option("--clip-length", evalClip, "Sliding window length")->capture_default_str();
  evalCmd->add_option("--report", evalReport, "JSON-lines report to write");

  // infer
  auto *inferCmd = app.add_subcommand("infer", "Super-resolve one LR video");
  fs::path inferCkpt, inferVideo, inferOut;
  int inferClip = 7;
  inferCmd->add_option("--ckpt", inferCkpt, "Checkpoint")->required();
  inferCmd->add_option("--video", inferVideo, "LR .vol with sidecar annotation")->required();
  inferCmd->add_option("--out", inferOut, "SR .vol to write")->required();
  inferCmd->add_option("--clip-length", inferClip, "Sliding window length")->capture_default_str();

  // ablate
  auto *ablateCmd = app.add_subcommand("ablate", "Train and score the cumulative ablation rows");
  ModelFlags ablateModel;
  TrainFlags ablateFlags;
  fs::path ablateData, ablateReport;
  std::string ablateSplit = "test";
  ablateModel.add(*ablateCmd);
  ablateFlags.add(*ablateCmd);
  ablateCmd->add_option("--data", ablateData, "Dataset root")->required();
  ablateCmd->add_option("--split", ablateSplit, "Split to score")->capture_default_str();
  ablateCmd->add_option("--report", ablateReport, "JSON-lines table to write");

  // bench
  auto *benchCmd = app.add_subcommand("bench", "Parameter count and frames per second");
  fs::path benchCkpt, benchReport;
  ModelFlags benchModel;
  std::optional<int> benchOmega;
  int benchFrames = 7, benchH = 32, benchW = 32, benchTrials = 5;
  benchModel.add(*benchCmd);
  benchCmd->get_option("--omega")->description("Refinement stages (overrides the checkpoint when given)");
  benchCmd->add_option("--ckpt", benchCkpt, "Checkpoint; model flags are used without one");
  benchCmd->add_option("--frames", benchFrames, "Frames per forward pass")->capture_default_str();
  benchCmd->add_option("--height", benchH, "LR height")->capture_default_str();
  benchCmd->add_option("--width", benchW, "LR width")->capture_default_str();
  benchCmd->add_option("--trials", benchTrials, "Timed passes, median reported")->capture_default_str();
  benchCmd->add_option("--report", benchReport, "Append-free JSON-lines record to write");

  // plot
  auto *plotCmd = app.add_subcommand("plot", "Draw sweep and efficiency figures from reports");
  std::vector<fs::path> plotReportsIn;
  fs::path plotOut = "figures";
  plotCmd->add_option("--report", plotReportsIn, "Report files")->required();
  plotCmd->add_option("--out", plotOut, "Figure directory")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (CLI::ParseError const &e) {
    int const code = app.exit(e, out, err);
    return code == 0 ? 0 : exitCodeFor(ErrorKind::Config);
  }

  try {
    if (phantom->parsed()) {
      if (maxOffset < 0) { maxOffset = size / 8; }
      std::mt19937_64 rng(phantomSeed);
      std::uniform_int_distribution<int> offset(-maxOffset, maxOffset);
      CardiacCycleSpec{.ed = ed, .es = es, .tCycle = frames}.validate();
      int written = 0;
      for (auto [split, count] : {std::pair{Split::Train, nTrain}, std::pair{Split::Val, nVal}, std::pair{Split::Test, nTest}}) {
        for (int i = 0; i < count; ++i) {
          std::string const id = fmt::format("phantom_{}_{:03d}", toString(split), i);
          PhantomOptions const opts{.offsetY = offset(rng), .offsetX = offset(rng), .videoId = id, .split = split};
          auto const [video, ann] = generatePhantom(frames, cycles, size, size, ed, es, rng(), opts);
          saveVideo(phantomOut / toString(split) / (id + ".vol"), video, ann);
          ++written;
        }
      }
      out << fmt::format("wrote {} phantom videos to {}\n", written, phantomOut.string());
    } else if (degrade->parsed()) {
      degradeCfg.validate();
      auto [video, ann] = loadVideo(degradeIn);
      VideoClip const lr = degradeClip(video, degradeCfg);
      ann.extra["scale"] = std::to_string(degradeCfg.scale);
      saveVideo(degradeOut, lr, ann);
      out << fmt::format("{}: {}x{} -> {}x{}\n", ann.videoId, video.height(), video.width(), lr.height(), lr.width());
    } else if (trainCmd->parsed()) {
      ModelConfig const mcfg = trainModel.config();
      TrainConfig const tcfg = trainFlags.config();
      requireDirectory(trainData);
      Dataset const data = loadDataset(trainData, DegradeConfig{.scale = mcfg.scale});
      std::ostringstream log;
      TrainResult const r = train(mcfg, tcfg, data.train, data.val, TrainOutputs{.log = &log, .checkpoint = trainOut});
      if (!trainLog.empty()) { writeTextAtomically(trainLog, log.str()); }
      out << fmt::format("trained {} steps, final loss {:.6g}, {} parameters -> {}\n", tcfg.maxSteps,
                         r.losses.empty() ? 0.0 : r.losses.back().total, r.model.parameterCount(), trainOut.string());
    } else if (evalCmd->parsed()) {
      requireDirectory(evalData);
      int const scale = evalScale > 0 ? evalScale : readCheckpoint(evalCkpt).config.scale;
      EvalSummary const s = evaluateCheckpoint(evalCkpt, evalData, parseSplit(evalSplit), scale, evalClip);
      if (s.rows.empty()) { fail<DataError>("no videos in {}/{}", evalData.string(), evalSplit); }
      std::ostringstream report;
      s.write(report);
      if (!evalReport.empty()) { writeTextAtomically(evalReport, report.str()); }
      out << report.str();
    } else if (inferCmd->parsed()) {
      Checkpoint const ckpt = readCheckpoint(inferCkpt);
      PhaseAwareVsr const model = loadModel(ckpt);
      auto [lr, ann] = loadVideo(inferVideo, false);
      SuperResolved const sr = superResolve(model, lr, ann.cycle, inferClip);
      for (std::size_t i = 0; i < sr.clipSeconds.size(); ++i) {
        out << fmt::format("clip {}: {:.4f} s\n", i, sr.clipSeconds[i]);
      }
      ann.extra["scale"] = std::to_string(model.config().scale);
      saveVideo(inferOut, sr.sr, ann);
      out << fmt::format("{}: {}x{} -> {}x{}, {} frames in {:.3f} s\n", ann.videoId, lr.height(), lr.width(), sr.sr.height(),
                         sr.sr.width(), sr.sr.frameCount(), sr.seconds);
    } else if (ablateCmd->parsed()) {
      ModelConfig const mcfg = ablateModel.config();
      TrainConfig const tcfg = ablateFlags.config();
      Split const split = parseSplit(ablateSplit);
      requireDirectory(ablateData);
      Dataset const data = loadDataset(ablateData, DegradeConfig{.scale = mcfg.scale});
      std::vector<json> records;
      for (auto const &row : ablationSweep(mcfg, tcfg, data, split)) {
        records.push_back(row.toJson());
      }
      if (!ablateReport.empty()) { writeTextAtomically(ablateReport, joinLines(records)); }
      out << joinLines(records);
    } else if (benchCmd->parsed()) {
      if (benchCmd->count("--omega") > 0) { benchOmega = benchModel.omega; }
      BenchRecord rec;
      if (!benchCkpt.empty()) {
        PhaseAwareVsr model = loadModel(readCheckpoint(benchCkpt));
        if (benchOmega) {
          ModelConfig cfg = model.config();
          cfg.omega = *benchOmega;
          model.setConfig(cfg);
        }
        rec = countParamsAndFps(model, benchFrames, benchH, benchW, benchTrials);
      } else {
        rec = countParamsAndFps(benchModel.config(), benchFrames, benchH, benchW, benchTrials);
      }
      std::string const line = rec.toJson().dump() + "\n";
      if (!benchReport.empty()) { writeTextAtomically(benchReport, line); }
      out << line;
    } else if (plotCmd->parsed()) {
      for (auto const &p : plotReports(plotReportsIn, plotOut)) {
        out << p.string() << "\n";
      }
    }
  } catch (Error const &e) {
    err << e.what() << "\n";
    return e.exitCode();
  } catch (fs::filesystem_error const &e) {
    err << "data error: " << e.what() << "\n";
    return exitCodeFor(ErrorKind::Data);
  }
  return 0;
}

} // namespace cardiacsr::cli
