#pragma once

#include <cstdint>
#include <vector>

namespace cardiacsr {

using FrameIndex = std::int64_t;

// One heartbeat: end-diastole and end-systole frame indices within a cycle of tCycle frames.
struct CardiacCycleSpec
{
  FrameIndex ed = 0;
  FrameIndex es = 1;
  FrameIndex tCycle = 2;

  // Throws ConfigError naming the violated invariant.
  void validate() const;
  // Frames from ED to ES, cycle-relative. Always in [1, tCycle - 1] for a valid spec.
  FrameIndex systoleLength() const;
};

struct PhaseCodeSequence
{
  std::vector<double> values;
  CardiacCycleSpec spec;
};

/*
 * Periodic cosine phase code. Systole (ED, ES] maps to the falling half period [1, -1],
 * diastole (ES, ED + T] to the rising half period [-1, 1]. Any non-negative or negative
 * frame index is accepted; it is reduced modulo tCycle relative to ED first.
 */
double phaseAt(FrameIndex t, CardiacCycleSpec const &spec);

PhaseCodeSequence phaseSequence(CardiacCycleSpec const &spec, FrameIndex tStart, FrameIndex length);

} // namespace cardiacsr
