#include "gradcheck.hpp"

#include <catch_amalgamated.hpp>

using namespace cardiacsr::testing;

TEST_CASE("backward agrees with central differences on every tensor", "[gradcheck]")
{
  auto const r = gradcheckAllTensors();
  INFO("worst relative error " << r.worstRelative << " over " << r.checked << " weights");
  CHECK(r.checked > 0);
  CHECK(r.worstRelative <= 1e-3);
}

TEST_CASE("backward agrees with central differences past a warmed memory", "[gradcheck]")
{
  auto const r = gradcheckDownstreamOfWarmup();
  INFO("worst relative error " << r.worstRelative << " over " << r.checked << " weights");
  CHECK(r.checked > 0);
  CHECK(r.worstRelative <= 1e-3);
}
