#pragma once

#include "degrade.hpp"
#include "phase.hpp"
#include "video.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace cardiacsr {

enum struct Split
{
  Train,
  Val,
  Test,
};

std::string toString(Split s);
Split parseSplit(std::string const &s);

struct AnnotationRecord
{
  CardiacCycleSpec cycle;
  std::string videoId;
  Split split = Split::Train;
  std::optional<RoiBox> roi;                 // ground-truth heart box, when known
  std::map<std::string, std::string> extra;  // unrecognised keys, preserved on write
};

/*
 * On-disk layout, one pair per video under <root>/<split>/:
 *   <id>.vol  little-endian: uint64 T, uint64 H, uint64 W, then T*H*W float32, frame-major, row-major
 *   <id>.ann  text lines key=value; ed, es, t_cycle required
 */
void writeVolume(std::filesystem::path const &path, VideoClip const &clip);
VideoClip readVolume(std::filesystem::path const &path);
void writeAnnotation(std::filesystem::path const &path, AnnotationRecord const &ann);
AnnotationRecord readAnnotation(std::filesystem::path const &path);

std::filesystem::path annotationPathFor(std::filesystem::path const &volumePath);

// Per-video min-max normalisation to [0, 1]; a constant video maps to zeros.
void normalizeMinMax(VideoClip &clip);

// Reads <id>.vol and its sidecar, validates the annotation and, by default, normalises intensities.
std::pair<VideoClip, AnnotationRecord> loadVideo(std::filesystem::path const &volumePath, bool normalize = true);
void saveVideo(std::filesystem::path const &volumePath, VideoClip const &clip, AnnotationRecord const &ann);

// Sorted .vol paths under <root>/<split>/; empty when the split directory is missing.
std::vector<std::filesystem::path> listSplit(std::filesystem::path const &root, Split split);

// HR video with its degraded LR counterpart.
struct PairedVideo
{
  VideoClip hr;
  VideoClip lr;
  AnnotationRecord ann;
  int scale = 4;
};

PairedVideo makePaired(VideoClip hr, AnnotationRecord ann, DegradeConfig const &cfg);

struct SampleOptions
{
  int clipLength = 7;
  int crop = 32;   // LR crop side
  int warmupN = 0; // LR frames fetched before and after the clip for recurrent warm-up
  bool wrap = true;
};

struct TrainingExample
{
  VideoClip lr;
  VideoClip hr;
  PhaseCodeSequence phases;
  VideoClip warmBefore; // frames t0-n .. t0-1, oldest first
  VideoClip warmAfter;  // frames t0+T .. t0+T+n-1, nearest first
  int cropTop = 0;      // LR grid
  int cropLeft = 0;
};

// Frames of clip at absolute indices [first, first + count), wrapping cyclically over the video
// length when wrap is set. Out-of-range indices without wrap raise DataError.
VideoClip framesAt(VideoClip const &video, FrameIndex first, FrameIndex count, bool wrap);

TrainingExample sampleTrainingExample(PairedVideo const &video, SampleOptions const &opts, std::mt19937_64 &rng);
// Seeded variant: reproducible from (video id, seed).
TrainingExample sampleTrainingExample(PairedVideo const &video, SampleOptions const &opts, std::uint64_t seed);

struct PhantomOptions
{
  int offsetY = 0; // integer translation of the whole heart, HR pixels
  int offsetX = 0;
  std::string videoId = "phantom";
  Split split = Split::Train;
};

/*
 * Synthetic short-axis cine: a bright blood pool inside a darker myocardial ring whose
 * inner radius is an affine function of the phase code (largest at ED, smallest at ES),
 * two papillary dots that follow the wall, and a static high-frequency tissue texture
 * drawn from seed. Intensities lie in [0, 1]. The annotation carries the ground-truth box.
 */
std::pair<VideoClip, AnnotationRecord> generatePhantom(FrameIndex tCycle,
                                                       int nCycles,
                                                       int height,
                                                       int width,
                                                       FrameIndex ed,
                                                       FrameIndex es,
                                                       std::uint64_t seed,
                                                       PhantomOptions const &opts = {});

// Writes to <path>.partial and renames, so readers never see a half-written file.
void writeTextAtomically(std::filesystem::path const &path, std::string const &text);

// Stable 64-bit FNV-1a hash; std::hash is not stable across implementations.
std::uint64_t stableHash(std::string const &s);

} // namespace cardiacsr
