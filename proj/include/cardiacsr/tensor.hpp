#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cardiacsr::nn {

// Element type of every tensor. Double precision is a build option used for gradient audits.
#ifdef CARDIACSR_DOUBLE_TENSORS
using Real = double;
#else
using Real = float;
#endif

// Storage aligned to the widest SIMD packet, so vectorised reductions split identically on every run.
using Buffer = std::vector<Real, Eigen::aligned_allocator<Real>>;

// NCHW extents. Convolution weights reuse it as (out, in, kh, kw).
struct Shape
{
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t numel() const
  {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) * static_cast<std::size_t>(h) *
           static_cast<std::size_t>(w);
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * static_cast<std::size_t>(w); }
  bool operator==(Shape const &) const = default;
  std::string str() const;
};

class Tensor
{
public:
  Tensor() = default;
  explicit Tensor(Shape shape, Real fill = 0.f);

  Shape const &shape() const { return shape_; }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Real *data() { return data_.data(); }
  Real const *data() const { return data_.data(); }
  std::span<Real> values() { return data_; }
  std::span<Real const> values() const { return data_; }

  Real &operator()(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  Real operator()(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }

  // Pointer to the contiguous H*W plane of (n, c).
  Real *plane(int n, int c) { return data_.data() + index(n, c, 0, 0); }
  Real const *plane(int n, int c) const { return data_.data() + index(n, c, 0, 0); }

  void fill(Real v);
  bool allFinite() const;

private:
  std::size_t index(int n, int c, int y, int x) const
  {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }

  Shape shape_{0, 0, 0, 0};
  Buffer data_;
};

} // namespace cardiacsr::nn
