#include "cardiacsr/dataio.hpp"
#include "cardiacsr/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cardiacsr {

namespace fs = std::filesystem;

namespace {

void putU64(std::ostream &os, std::uint64_t v)
{
  std::array<char, 8> bytes;
  for (int i = 0; i < 8; ++i) {
    bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  }
  os.write(bytes.data(), bytes.size());
}

std::uint64_t getU64(unsigned char const *p)
{
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  }
  return v;
}

std::string trim(std::string const &s)
{
  auto const b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) { return {}; }
  auto const e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

long long parseInteger(std::string const &key, std::string const &value, fs::path const &path)
{
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (std::exception const &) {
    used = 0;
  }
  if (used == 0 || used != value.size()) {
    fail<SchemaError>("{}: key `{}` must be an integer (got `{}`)", path.string(), key, value);
  }
  return v;
}

// splitmix64 finaliser; used for the phantom's position-keyed texture.
std::uint64_t mix64(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double coverage(double distance, double radius) { return std::clamp(radius - distance + 0.5, 0.0, 1.0); }

} // namespace

std::uint64_t stableHash(std::string const &s)
{
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void writeTextAtomically(fs::path const &path, std::string const &text)
{
  if (path.has_parent_path()) { fs::create_directories(path.parent_path()); }
  fs::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) { fail<DataError>("cannot open {} for writing", tmp.string()); }
    os << text;
    if (!os) { fail<DataError>("short write to {}", tmp.string()); }
  }
  fs::rename(tmp, path);
}

std::string toString(Split s)
{
  switch (s) {
  case Split::Train: return "train";
  case Split::Val: return "val";
  case Split::Test: return "test";
  }
  return "train";
}

Split parseSplit(std::string const &s)
{
  if (s == "train") { return Split::Train; }
  if (s == "val") { return Split::Val; }
  if (s == "test") { return Split::Test; }
  fail<ConfigError>("unknown split `{}` (expected train, val or test)", s);
}

void writeVolume(fs::path const &path, VideoClip const &clip)
{
  clip.validate(1);
  if (path.has_parent_path()) { fs::create_directories(path.parent_path()); }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) { fail<DataError>("cannot open {} for writing", path.string()); }
  putU64(os, static_cast<std::uint64_t>(clip.frameCount()));
  putU64(os, static_cast<std::uint64_t>(clip.height()));
  putU64(os, static_cast<std::uint64_t>(clip.width()));
  std::vector<char> bytes(static_cast<std::size_t>(clip.height()) * clip.width() * 4);
  for (auto const &f : clip.frames) {
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      auto const bits = std::bit_cast<std::uint32_t>(static_cast<float>(f.data()[i]));
      for (int b = 0; b < 4; ++b) {
        bytes[static_cast<std::size_t>(i) * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xFFu);
      }
    }
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  if (!os) { fail<DataError>("short write to {}", path.string()); }
}

VideoClip readVolume(fs::path const &path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is) { fail<DataError>("cannot open volume {}", path.string()); }
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (bytes.size() < 24) { fail<SchemaError>("{}: truncated header", path.string()); }
  std::uint64_t const T = getU64(bytes.data());
  std::uint64_t const H = getU64(bytes.data() + 8);
  std::uint64_t const W = getU64(bytes.data() + 16);
  if (T == 0 || H == 0 || W == 0 || T > (1u << 20) || H > (1u << 16) || W > (1u << 16)) {
    fail<SchemaError>("{}: implausible dims T={} H={} W={}", path.string(), T, H, W);
  }
  if (bytes.size() != 24 + T * H * W * 4) {
    fail<SchemaError>("{}: payload is {} bytes, header implies {}", path.string(), bytes.size() - 24, T * H * W * 4);
  }
  VideoClip clip;
  clip.frames.reserve(T);
  unsigned char const *p = bytes.data() + 24;
  for (std::uint64_t t = 0; t < T; ++t) {
    Image f(static_cast<Eigen::Index>(H), static_cast<Eigen::Index>(W));
    for (Eigen::Index i = 0; i < f.size(); ++i, p += 4) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        bits |= static_cast<std::uint32_t>(p[b]) << (8 * b);
      }
      f.data()[i] = std::bit_cast<float>(bits);
    }
    clip.frames.push_back(std::move(f));
  }
  return clip;
}

void writeAnnotation(fs::path const &path, AnnotationRecord const &ann)
{
  if (path.has_parent_path()) { fs::create_directories(path.parent_path()); }
  std::ofstream os(path, std::ios::trunc);
  if (!os) { fail<DataError>("cannot open {} for writing", path.string()); }
  os << "ed=" << ann.cycle.ed << "\n";
  os << "es=" << ann.cycle.es << "\n";
  os << "t_cycle=" << ann.cycle.tCycle << "\n";
  os << "video_id=" << ann.videoId << "\n";
  os << "split=" << toString(ann.split) << "\n";
  if (ann.roi) {
    os << "roi_top=" << ann.roi->top << "\nroi_left=" << ann.roi->left << "\nroi_height=" << ann.roi->height
       << "\nroi_width=" << ann.roi->width << "\n";
  }
  for (auto const &[k, v] : ann.extra) {
    os << k << "=" << v << "\n";
  }
}

AnnotationRecord readAnnotation(fs::path const &path)
{
  std::ifstream is(path);
  if (!is) { fail<SchemaError>("missing annotation record {}", path.string()); }
  std::map<std::string, std::string> kv;
  std::string line;
  int lineNo = 0;
  while (std::getline(is, line)) {
    ++lineNo;
    line = trim(line);
    if (line.empty() || line[0] == '#') { continue; }
    auto const eq = line.find('=');
    if (eq == std::string::npos) { fail<SchemaError>("{}:{}: expected key=value", path.string(), lineNo); }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  for (char const *key : {"ed", "es", "t_cycle"}) {
    if (!kv.contains(key)) { fail<SchemaError>("{}: missing required key `{}`", path.string(), key); }
  }
  AnnotationRecord ann;
  ann.cycle.ed = parseInteger("ed", kv["ed"], path);
  ann.cycle.es = parseInteger("es", kv["es"], path);
  ann.cycle.tCycle = parseInteger("t_cycle", kv["t_cycle"], path);
  try {
    ann.cycle.validate();
  } catch (ConfigError const &e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  ann.videoId = kv.contains("video_id") ? kv["video_id"] : path.stem().string();
  if (kv.contains("split")) {
    try {
      ann.split = parseSplit(kv["split"]);
    } catch (ConfigError const &e) {
      throw SchemaError(path.string() + ": " + e.what());
    }
  } else if (auto const dir = path.parent_path().filename().string(); dir == "val" || dir == "test") {
    ann.split = parseSplit(dir);
  }
  std::array<char const *, 4> const roiKeys{"roi_top", "roi_left", "roi_height", "roi_width"};
  if (std::all_of(roiKeys.begin(), roiKeys.end(), [&](char const *k) { return kv.contains(k); })) {
    ann.roi = RoiBox{.top = static_cast<int>(parseInteger("roi_top", kv["roi_top"], path)),
                     .left = static_cast<int>(parseInteger("roi_left", kv["roi_left"], path)),
                     .height = static_cast<int>(parseInteger("roi_height", kv["roi_height"], path)),
                     .width = static_cast<int>(parseInteger("roi_width", kv["roi_width"], path))};
  }
  for (auto const &[k, v] : kv) {
    bool const known = k == "ed" || k == "es" || k == "t_cycle" || k == "video_id" || k == "split" ||
                       std::find_if(roiKeys.begin(), roiKeys.end(), [&](char const *r) { return k == r; }) != roiKeys.end();
    if (!known) { ann.extra[k] = v; }
  }
  return ann;
}

fs::path annotationPathFor(fs::path const &volumePath)
{
  fs::path p = volumePath;
  return p.replace_extension(".ann");
}

void normalizeMinMax(VideoClip &clip)
{
  clip.updateRange();
  double const lo = clip.intensityMin;
  double const range = clip.intensityMax - lo;
  for (auto &f : clip.frames) {
    if (range > 0.0) {
      f = (f - lo) / range;
    } else {
      f.setZero();
    }
  }
  clip.updateRange();
}

std::pair<VideoClip, AnnotationRecord> loadVideo(fs::path const &volumePath, bool normalize)
{
  AnnotationRecord ann = readAnnotation(annotationPathFor(volumePath));
  VideoClip clip = readVolume(volumePath);
  for (std::size_t t = 0; t < clip.frames.size(); ++t) {
    if (!clip.frames[t].isFinite().all()) {
      fail<DataError>("{}: frame {} contains NaN or infinite pixels", volumePath.string(), t);
    }
  }
  if (normalize) {
    normalizeMinMax(clip);
  } else {
    clip.updateRange();
  }
  return {std::move(clip), std::move(ann)};
}

void saveVideo(fs::path const &volumePath, VideoClip const &clip, AnnotationRecord const &ann)
{
  writeVolume(volumePath, clip);
  writeAnnotation(annotationPathFor(volumePath), ann);
}

std::vector<fs::path> listSplit(fs::path const &root, Split split)
{
  std::vector<fs::path> out;
  fs::path const dir = root / toString(split);
  if (!fs::is_directory(dir)) { return out; }
  for (auto const &entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".vol") { out.push_back(entry.path()); }
  }
  std::sort(out.begin(), out.end());
  return out;
}

PairedVideo makePaired(VideoClip hr, AnnotationRecord ann, DegradeConfig const &cfg)
{
  PairedVideo p;
  p.lr = degradeClip(hr, cfg);
  p.hr = std::move(hr);
  p.ann = std::move(ann);
  p.scale = cfg.scale;
  return p;
}

VideoClip framesAt(VideoClip const &video, FrameIndex first, FrameIndex count, bool wrap)
{
  FrameIndex const n = video.frameCount();
  VideoClip out;
  out.tStart = video.tStart + first;
  out.spacing = video.spacing;
  out.frames.reserve(static_cast<std::size_t>(std::max<FrameIndex>(count, 0)));
  for (FrameIndex i = 0; i < count; ++i) {
    FrameIndex idx = first + i;
    if (idx < 0 || idx >= n) {
      if (!wrap) {
        fail<DataError>("frame {} outside video of {} frames and cyclic wrap is disabled", idx, n);
      }
      idx = ((idx % n) + n) % n;
    }
    out.frames.push_back(video.frames[static_cast<std::size_t>(idx)]);
  }
  if (!out.frames.empty()) { out.updateRange(); }
  return out;
}

namespace {

VideoClip cropClip(VideoClip const &clip, int top, int left, int size)
{
  VideoClip out;
  out.tStart = clip.tStart;
  out.spacing = clip.spacing;
  out.frames.reserve(clip.frames.size());
  for (auto const &f : clip.frames) {
    out.frames.push_back(f.block(top, left, size, size));
  }
  if (!out.frames.empty()) { out.updateRange(); }
  return out;
}

} // namespace

TrainingExample sampleTrainingExample(PairedVideo const &video, SampleOptions const &opts, std::mt19937_64 &rng)
{
  int const r = video.scale;
  FrameIndex const frames = video.lr.frameCount();
  if (opts.clipLength < 1) { fail<ConfigError>("clip length must be >= 1 (got {})", opts.clipLength); }
  if (frames < opts.clipLength) {
    fail<ShapeError>("video {} has {} frames, clip needs {}", video.ann.videoId, frames, opts.clipLength);
  }
  if (video.lr.height() < opts.crop || video.lr.width() < opts.crop) {
    fail<ShapeError>("video {} is {}x{} at LR, crop needs {}", video.ann.videoId, video.lr.height(), video.lr.width(),
                     opts.crop);
  }
  std::uniform_int_distribution<FrameIndex> pickT(0, frames - opts.clipLength);
  std::uniform_int_distribution<int> pickY(0, video.lr.height() - opts.crop);
  std::uniform_int_distribution<int> pickX(0, video.lr.width() - opts.crop);
  FrameIndex const t0 = pickT(rng);
  int const top = pickY(rng);
  int const left = pickX(rng);

  TrainingExample ex;
  ex.cropTop = top;
  ex.cropLeft = left;
  ex.lr = cropClip(framesAt(video.lr, t0, opts.clipLength, false), top, left, opts.crop);
  ex.hr = cropClip(framesAt(video.hr, t0, opts.clipLength, false), top * r, left * r, opts.crop * r);
  ex.phases = phaseSequence(video.ann.cycle, video.lr.tStart + t0, opts.clipLength);
  if (opts.warmupN > 0) {
    ex.warmBefore = cropClip(framesAt(video.lr, t0 - opts.warmupN, opts.warmupN, opts.wrap), top, left, opts.crop);
    ex.warmAfter = cropClip(framesAt(video.lr, t0 + opts.clipLength, opts.warmupN, opts.wrap), top, left, opts.crop);
  }
  return ex;
}

TrainingExample sampleTrainingExample(PairedVideo const &video, SampleOptions const &opts, std::uint64_t seed)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stableHash(video.ann.videoId)),
                    static_cast<std::uint32_t>(stableHash(video.ann.videoId) >> 32)};
  std::mt19937_64 rng(seq);
  return sampleTrainingExample(video, opts, rng);
}

std::pair<VideoClip, AnnotationRecord> generatePhantom(FrameIndex tCycle,
                                                       int nCycles,
                                                       int height,
                                                       int width,
                                                       FrameIndex ed,
                                                       FrameIndex es,
                                                       std::uint64_t seed,
                                                       PhantomOptions const &opts)
{
  if (height < 32 || width < 32) { fail<ConfigError>("phantom frames must be at least 32x32 (got {}x{})", height, width); }
  if (tCycle < 8) { fail<ConfigError>("phantom t_cycle must be >= 8 (got {})", tCycle); }
  if (nCycles < 1) { fail<ConfigError>("phantom needs at least one cycle (got {})", nCycles); }
  CardiacCycleSpec const cycle{.ed = ed, .es = es, .tCycle = tCycle};
  cycle.validate();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double const side = std::min(height, width);
  int const jitter = static_cast<int>(side / 16);
  std::uniform_int_distribution<int> pickJitter(-jitter, jitter);
  int const cy = height / 2 + pickJitter(rng) + opts.offsetY;
  int const cx = width / 2 + pickJitter(rng) + opts.offsetX;
  double const radiusMid = side * (0.13 + 0.02 * unit(rng));
  double const amplitude = side * (0.04 + 0.01 * unit(rng));
  double const wall = side * 0.055;
  double const blood = 0.85 + 0.1 * unit(rng);
  double const myocardium = 0.25 + 0.1 * unit(rng);
  double const tissue = 0.45 + 0.05 * unit(rng);
  double const papillaryAngle = 2.0 * 3.141592653589793 * unit(rng);
  std::uint64_t const textureKey = mix64(seed ^ 0x5eedull);

  auto texture = [&](int y, int x) {
    auto const key = mix64(textureKey ^ mix64(static_cast<std::uint64_t>(y - cy) * 0x10001ull +
                                             static_cast<std::uint64_t>(x - cx)));
    return static_cast<double>(key >> 11) * 0x1.0p-53;
  };

  VideoClip clip;
  double maxOuter = 0.0;
  FrameIndex const total = tCycle * nCycles;
  clip.frames.reserve(static_cast<std::size_t>(total));
  // Render one cycle, then repeat it so periodicity is exact.
  for (FrameIndex t = 0; t < tCycle; ++t) {
    double const phase = phaseAt(t, cycle);
    double const inner = radiusMid + amplitude * phase;
    double const outer = inner + wall * (1.0 - 0.35 * phase);
    maxOuter = std::max(maxOuter, outer);
    double const dotRadius = side * 0.022;
    double const dotDistance = 0.6 * inner;
    std::array<std::array<double, 2>, 2> dots;
    for (int k = 0; k < 2; ++k) {
      double const a = papillaryAngle + k * 0.9;
      dots[k] = {cy + dotDistance * std::sin(a), cx + dotDistance * std::cos(a)};
    }
    Image f(height, width);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        double const dy = y - cy;
        double const dx = x - cx;
        double const ey = dy / (0.42 * height);
        double const ex = dx / (0.46 * width);
        double const body = coverage(std::sqrt(ey * ey + ex * ex) * 0.44 * side, 0.44 * side);
        double const tex = texture(y, x);
        double v = 0.04 + 0.04 * tex;
        v += body * (tissue + 0.06 * (tex - 0.5) - v);
        double const d = std::sqrt(dy * dy + dx * dx);
        v += coverage(d, outer) * (myocardium - v);
        v += coverage(d, inner) * (blood - v);
        for (auto const &c : dots) {
          double const dd = std::hypot(y - c[0], x - c[1]);
          v += coverage(dd, dotRadius) * (myocardium + 0.05 - v);
        }
        f(y, x) = std::clamp(v, 0.0, 1.0);
      }
    }
    clip.frames.push_back(std::move(f));
  }
  for (FrameIndex t = tCycle; t < total; ++t) {
    clip.frames.push_back(clip.frames[static_cast<std::size_t>(t % tCycle)]);
  }
  clip.updateRange();

  int const half = static_cast<int>(std::ceil(maxOuter)) + 1;
  int const top = std::max(0, cy - half);
  int const left = std::max(0, cx - half);
  int const bottom = std::min(height, cy + half + 1);
  int const right = std::min(width, cx + half + 1);

  AnnotationRecord ann;
  ann.cycle = cycle;
  ann.videoId = opts.videoId;
  ann.split = opts.split;
  ann.roi = RoiBox{.top = top, .left = left, .height = bottom - top, .width = right - left};
  ann.extra["source"] = "phantom";
  return {std::move(clip), std::move(ann)};
}

} // namespace cardiacsr
