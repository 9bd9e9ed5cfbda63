#include "cardiacsr/phase.hpp"
#include "cardiacsr/error.hpp"

#include <cmath>
#include <numbers>

namespace cardiacsr {

namespace {
FrameIndex positiveMod(FrameIndex a, FrameIndex m) { return ((a % m) + m) % m; }
} // namespace

void CardiacCycleSpec::validate() const
{
  if (tCycle < 2) { fail<ConfigError>("t_cycle must be >= 2 (got {})", tCycle); }
  if (ed < 0 || ed >= tCycle) { fail<ConfigError>("ed must satisfy 0 <= ed < t_cycle (ed={}, t_cycle={})", ed, tCycle); }
  if (es < 0 || es >= tCycle) { fail<ConfigError>("es must satisfy 0 <= es < t_cycle (es={}, t_cycle={})", es, tCycle); }
  if (ed == es) { fail<ConfigError>("ed and es must differ (both {})", ed); }
}

FrameIndex CardiacCycleSpec::systoleLength() const { return positiveMod(es - ed, tCycle); }

double phaseAt(FrameIndex t, CardiacCycleSpec const &spec)
{
  spec.validate();
  FrameIndex const T = spec.tCycle;
  FrameIndex const systole = spec.systoleLength();
  FrameIndex const offset = positiveMod(t - spec.ed, T); // cycle-relative position, ED at 0
  double const pi = std::numbers::pi;
  if (offset > 0 && offset <= systole) {
    return std::cos(pi * static_cast<double>(offset) / static_cast<double>(systole));
  }
  FrameIndex const sinceEs = positiveMod(offset - systole, T);
  return std::cos(pi * (1.0 + static_cast<double>(sinceEs) / static_cast<double>(T - systole)));
}

PhaseCodeSequence phaseSequence(CardiacCycleSpec const &spec, FrameIndex tStart, FrameIndex length)
{
  spec.validate();
  if (length < 1) { fail<ConfigError>("phase sequence length must be >= 1 (got {})", length); }
  PhaseCodeSequence seq{.values = {}, .spec = spec};
  seq.values.reserve(static_cast<std::size_t>(length));
  for (FrameIndex i = 0; i < length; ++i) {
    seq.values.push_back(phaseAt(tStart + i, spec));
  }
  return seq;
}

} // namespace cardiacsr
