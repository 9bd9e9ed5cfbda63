#include "cardiacsr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace cardiacsr::nn {

std::string Shape::str() const { return fmt::format("({}, {}, {}, {})", n, c, h, w); }

Tensor::Tensor(Shape shape, Real fill)
  : shape_{shape}
  , data_(shape.numel(), fill)
{
}

void Tensor::fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::allFinite() const
{
  return std::all_of(data_.begin(), data_.end(), [](Real v) { return std::isfinite(v); });
}

} // namespace cardiacsr::nn
