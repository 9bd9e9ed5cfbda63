// Prints the worst relative gradient error of the double-precision audit network.
#include "gradcheck.hpp"

#include <cstdio>

int main()
{
  auto const all = cardiacsr::testing::gradcheckAllTensors();
  auto const warm = cardiacsr::testing::gradcheckDownstreamOfWarmup();
  std::printf("%.6e %d %.6e %d\n", all.worstRelative, all.checked, warm.worstRelative, warm.checked);
  return 0;
}
