#include "cardiacsr/autograd.hpp"
#include "cardiacsr/error.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_set>

namespace cardiacsr::nn {

namespace {

thread_local bool gGradEnabled = true;

using RowMajorMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMajorMatrix>;
using ConstMatrixMap = Eigen::Map<RowMajorMatrix const>;

Var makeResult(Tensor value, std::vector<Var> const &inputs, std::function<void(Node &)> bw)
{
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  bool const track = gGradEnabled && std::any_of(inputs.begin(), inputs.end(), [](Var const &v) {
                       return v.requiresGrad();
                     });
  if (track) {
    node->requiresGrad = true;
    node->inputs.reserve(inputs.size());
    for (auto const &v : inputs) {
      node->inputs.push_back(v.ptr());
    }
    node->backward = std::move(bw);
  }
  return Var{std::move(node)};
}

void requireSame(Shape const &a, Shape const &b, char const *op)
{
  if (!(a == b)) { fail<ShapeError>("{}: shape mismatch {} vs {}", op, a.str(), b.str()); }
}

template <typename F>
Var unary(Var const &x, F &&f, std::function<void(Node &)> bw)
{
  Tensor out(x.shape());
  auto src = x.value().values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = f(src[i]);
  }
  return makeResult(std::move(out), {x}, std::move(bw));
}

// Rows ordered (channel, ky, kx); columns are output pixels.
void im2col(Real const *src, int channels, int h, int w, int k, Real *cols)
{
  int const pad = k / 2;
  std::size_t const hw = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < channels; ++c) {
    Real const *plane = src + c * hw;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        Real *row = cols + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * hw;
        int const dx = kx - pad;
        int const xBegin = std::max(0, -dx);
        int const xEnd = std::min(w, w - dx);
        for (int y = 0; y < h; ++y) {
          Real *dstRow = row + static_cast<std::size_t>(y) * w;
          int const sy = y + ky - pad;
          if (sy < 0 || sy >= h || xBegin >= xEnd) {
            std::fill(dstRow, dstRow + w, 0.f);
            continue;
          }
          std::fill(dstRow, dstRow + xBegin, 0.f);
          std::memcpy(dstRow + xBegin, plane + static_cast<std::size_t>(sy) * w + xBegin + dx,
                      sizeof(Real) * static_cast<std::size_t>(xEnd - xBegin));
          std::fill(dstRow + xEnd, dstRow + w, 0.f);
        }
      }
    }
  }
}

void col2imAccumulate(Real const *cols, int channels, int h, int w, int k, Real *dst)
{
  int const pad = k / 2;
  std::size_t const hw = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < channels; ++c) {
    Real *plane = dst + c * hw;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        Real const *row = cols + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * hw;
        int const dx = kx - pad;
        int const xBegin = std::max(0, -dx);
        int const xEnd = std::min(w, w - dx);
        for (int y = 0; y < h; ++y) {
          int const sy = y + ky - pad;
          if (sy < 0 || sy >= h) { continue; }
          Real const *srcRow = row + static_cast<std::size_t>(y) * w;
          Real *dstRow = plane + static_cast<std::size_t>(sy) * w + dx;
          for (int x = xBegin; x < xEnd; ++x) {
            dstRow[x] += srcRow[x];
          }
        }
      }
    }
  }
}

Buffer &scratch()
{
  thread_local Buffer buffer;
  return buffer;
}

} // namespace

Tensor &Node::gradBuffer()
{
  if (grad.empty() || !(grad.shape() == value.shape())) { grad = Tensor(value.shape(), 0.f); }
  return grad;
}

Var constant(Tensor value)
{
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var{std::move(node)};
}

Var parameter(std::string name, Tensor value)
{
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requiresGrad = true;
  node->name = std::move(name);
  return Var{std::move(node)};
}

Var detach(Var const &v) { return constant(v.value()); }

bool gradEnabled() { return gGradEnabled; }

NoGradGuard::NoGradGuard()
  : previous_{gGradEnabled}
{
  gGradEnabled = false;
}

NoGradGuard::~NoGradGuard() { gGradEnabled = previous_; }

void backward(Var const &root)
{
  if (root.value().numel() != 1) { fail<ShapeError>("backward: root must be scalar, got {}", root.shape().str()); }
  if (!root.requiresGrad()) { return; }

  // Iterative post-order DFS gives a topological order (inputs before consumers).
  std::vector<Node *> order;
  std::unordered_set<Node *> visited;
  std::vector<std::pair<Node *, std::size_t>> stack{{&root.node(), 0}};
  visited.insert(&root.node());
  while (!stack.empty()) {
    auto &[node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node *child = node->inputs[next++].get();
      if (child->requiresGrad && visited.insert(child).second) { stack.emplace_back(child, 0); }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node().gradBuffer().fill(1.f);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node *node = *it;
    if (node->backward && !node->grad.empty()) { node->backward(*node); }
  }
}

Var conv2d(Var const &x, Var const &weight, Var const &bias)
{
  Shape const xs = x.shape();
  Shape const ws = weight.shape();
  if (ws.c != xs.c) { fail<ShapeError>("conv2d: input has {} channels, weight expects {}", xs.c, ws.c); }
  if (ws.h != ws.w || ws.h % 2 == 0) { fail<ShapeError>("conv2d: kernel must be square and odd, got {}", ws.str()); }
  if (!(bias.shape() == Shape{1, ws.n, 1, 1})) { fail<ShapeError>("conv2d: bias shape {}", bias.shape().str()); }

  int const k = ws.h;
  int const cout = ws.n;
  int const patch = xs.c * k * k;
  int const hw = xs.h * xs.w;
  Tensor out(Shape{xs.n, cout, xs.h, xs.w});
  auto &cols = scratch();
  cols.resize(static_cast<std::size_t>(patch) * hw);
  ConstMatrixMap W(weight.value().data(), cout, patch);
  ConstMatrixMap colsMat(cols.data(), patch, hw);
  for (int n = 0; n < xs.n; ++n) {
    im2col(x.value().plane(n, 0), xs.c, xs.h, xs.w, k, cols.data());
    MatrixMap o(out.plane(n, 0), cout, hw);
    o.noalias() = W * colsMat;
    for (int c = 0; c < cout; ++c) {
      o.row(c).array() += bias.value().data()[c];
    }
  }

  return makeResult(std::move(out), {x, weight, bias}, [k, cout, patch, hw](Node &self) {
    Node &xn = *self.inputs[0];
    Node &wn = *self.inputs[1];
    Node &bn = *self.inputs[2];
    Shape const s = xn.value.shape();
    auto &buf = scratch();
    buf.resize(static_cast<std::size_t>(patch) * hw);
    ConstMatrixMap W(wn.value.data(), cout, patch);
    for (int n = 0; n < s.n; ++n) {
      ConstMatrixMap g(self.grad.plane(n, 0), cout, hw);
      if (bn.requiresGrad) {
        Real *db = bn.gradBuffer().data();
        for (int c = 0; c < cout; ++c) {
          db[c] += g.row(c).sum();
        }
      }
      if (wn.requiresGrad) {
        im2col(xn.value.plane(n, 0), s.c, s.h, s.w, k, buf.data());
        MatrixMap dW(wn.gradBuffer().data(), cout, patch);
        dW.noalias() += g * ConstMatrixMap(buf.data(), patch, hw).transpose();
      }
      if (xn.requiresGrad) {
        MatrixMap dcols(buf.data(), patch, hw);
        dcols.noalias() = W.transpose() * g;
        col2imAccumulate(buf.data(), s.c, s.h, s.w, k, xn.gradBuffer().plane(n, 0));
      }
    }
  });
}

Var add(Var const &a, Var const &b)
{
  requireSame(a.shape(), b.shape(), "add");
  Tensor out(a.shape());
  auto pa = a.value().values();
  auto pb = b.value().values();
  auto po = out.values();
  for (std::size_t i = 0; i < po.size(); ++i) {
    po[i] = pa[i] + pb[i];
  }
  return makeResult(std::move(out), {a, b}, [](Node &self) {
    auto g = self.grad.values();
    for (auto const &in : self.inputs) {
      if (!in->requiresGrad) { continue; }
      auto d = in->gradBuffer().values();
      for (std::size_t i = 0; i < g.size(); ++i) {
        d[i] += g[i];
      }
    }
  });
}

Var mul(Var const &a, Var const &b)
{
  requireSame(a.shape(), b.shape(), "mul");
  Tensor out(a.shape());
  auto pa = a.value().values();
  auto pb = b.value().values();
  auto po = out.values();
  for (std::size_t i = 0; i < po.size(); ++i) {
    po[i] = pa[i] * pb[i];
  }
  return makeResult(std::move(out), {a, b}, [](Node &self) {
    auto g = self.grad.values();
    Node &an = *self.inputs[0];
    Node &bn = *self.inputs[1];
    if (an.requiresGrad) {
      auto d = an.gradBuffer().values();
      auto o = bn.value.values();
      for (std::size_t i = 0; i < g.size(); ++i) {
        d[i] += g[i] * o[i];
      }
    }
    if (bn.requiresGrad) {
      auto d = bn.gradBuffer().values();
      auto o = an.value.values();
      for (std::size_t i = 0; i < g.size(); ++i) {
        d[i] += g[i] * o[i];
      }
    }
  });
}

Var sigmoid(Var const &x)
{
  return unary(x, [](Real v) { return 1.f / (1.f + std::exp(-v)); }, [](Node &self) {
    Node &in = *self.inputs[0];
    if (!in.requiresGrad) { return; }
    auto g = self.grad.values();
    auto y = self.value.values();
    auto d = in.gradBuffer().values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      d[i] += g[i] * y[i] * (1.f - y[i]);
    }
  });
}

Var tanh(Var const &x)
{
  return unary(x, [](Real v) { return std::tanh(v); }, [](Node &self) {
    Node &in = *self.inputs[0];
    if (!in.requiresGrad) { return; }
    auto g = self.grad.values();
    auto y = self.value.values();
    auto d = in.gradBuffer().values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      d[i] += g[i] * (1.f - y[i] * y[i]);
    }
  });
}

Var leakyRelu(Var const &x, Real slope)
{
  return unary(x, [slope](Real v) { return v > 0.f ? v : slope * v; }, [slope](Node &self) {
    Node &in = *self.inputs[0];
    if (!in.requiresGrad) { return; }
    auto g = self.grad.values();
    auto xv = in.value.values();
    auto d = in.gradBuffer().values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      d[i] += xv[i] > 0.f ? g[i] : slope * g[i];
    }
  });
}

Var concatChannels(std::vector<Var> const &parts)
{
  if (parts.empty()) { fail<ShapeError>("concatChannels: no inputs"); }
  Shape s = parts.front().shape();
  int channels = 0;
  for (auto const &p : parts) {
    Shape const ps = p.shape();
    if (ps.n != s.n || ps.h != s.h || ps.w != s.w) {
      fail<ShapeError>("concatChannels: {} incompatible with {}", ps.str(), s.str());
    }
    channels += ps.c;
  }
  s.c = channels;
  Tensor out(s);
  std::size_t const plane = s.plane();
  for (int n = 0; n < s.n; ++n) {
    int offset = 0;
    for (auto const &p : parts) {
      int const pc = p.shape().c;
      std::memcpy(out.plane(n, offset), p.value().plane(n, 0), sizeof(Real) * plane * pc);
      offset += pc;
    }
  }
  return makeResult(std::move(out), parts, [plane](Node &self) {
    Shape const s = self.value.shape();
    for (int n = 0; n < s.n; ++n) {
      int offset = 0;
      for (auto const &in : self.inputs) {
        int const pc = in->value.shape().c;
        if (in->requiresGrad) {
          Real *d = in->gradBuffer().plane(n, 0);
          Real const *g = self.grad.plane(n, offset);
          for (std::size_t i = 0; i < plane * pc; ++i) {
            d[i] += g[i];
          }
        }
        offset += pc;
      }
    }
  });
}

Var sliceChannels(Var const &x, int begin, int count)
{
  Shape const xs = x.shape();
  if (begin < 0 || count < 1 || begin + count > xs.c) {
    fail<ShapeError>("sliceChannels: [{}, {}) outside {} channels", begin, begin + count, xs.c);
  }
  Shape s = xs;
  s.c = count;
  Tensor out(s);
  std::size_t const len = s.plane() * count;
  for (int n = 0; n < s.n; ++n) {
    std::memcpy(out.plane(n, 0), x.value().plane(n, begin), sizeof(Real) * len);
  }
  return makeResult(std::move(out), {x}, [begin, len](Node &self) {
    Node &in = *self.inputs[0];
    for (int n = 0; n < self.value.shape().n; ++n) {
      Real *d = in.gradBuffer().plane(n, begin);
      Real const *g = self.grad.plane(n, 0);
      for (std::size_t i = 0; i < len; ++i) {
        d[i] += g[i];
      }
    }
  });
}

Var pixelShuffle(Var const &x, int r)
{
  Shape const xs = x.shape();
  if (r < 1 || xs.c % (r * r) != 0) { fail<ShapeError>("pixelShuffle: {} channels not divisible by {}", xs.c, r * r); }
  Shape const os{xs.n, xs.c / (r * r), xs.h * r, xs.w * r};
  Tensor out(os);
  for (int n = 0; n < xs.n; ++n) {
    for (int c = 0; c < os.c; ++c) {
      for (int i = 0; i < r; ++i) {
        for (int j = 0; j < r; ++j) {
          Real const *src = x.value().plane(n, c * r * r + i * r + j);
          for (int y = 0; y < xs.h; ++y) {
            for (int xx = 0; xx < xs.w; ++xx) {
              out(n, c, y * r + i, xx * r + j) = src[y * xs.w + xx];
            }
          }
        }
      }
    }
  }
  return makeResult(std::move(out), {x}, [r](Node &self) {
    Node &in = *self.inputs[0];
    Shape const is = in.value.shape();
    Tensor &d = in.gradBuffer();
    int const oc = is.c / (r * r);
    for (int n = 0; n < is.n; ++n) {
      for (int c = 0; c < oc; ++c) {
        for (int i = 0; i < r; ++i) {
          for (int j = 0; j < r; ++j) {
            Real *dst = d.plane(n, c * r * r + i * r + j);
            for (int y = 0; y < is.h; ++y) {
              for (int xx = 0; xx < is.w; ++xx) {
                dst[y * is.w + xx] += self.grad(n, c, y * r + i, xx * r + j);
              }
            }
          }
        }
      }
    }
  });
}

Var l1Sum(Var const &pred, Tensor const &target)
{
  requireSame(pred.shape(), target.shape(), "l1Sum");
  auto p = pred.value().values();
  auto t = target.values();
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    total += std::abs(static_cast<double>(p[i]) - static_cast<double>(t[i]));
  }
  Tensor out(Shape{1, 1, 1, 1}, static_cast<Real>(total));
  return makeResult(std::move(out), {pred}, [target](Node &self) {
    Node &in = *self.inputs[0];
    Real const g = self.grad.data()[0];
    auto pv = in.value.values();
    auto tv = target.values();
    auto d = in.gradBuffer().values();
    for (std::size_t i = 0; i < d.size(); ++i) {
      Real const diff = pv[i] - tv[i];
      d[i] += diff > 0.f ? g : (diff < 0.f ? -g : 0.f);
    }
  });
}

Var sumAll(Var const &x)
{
  double total = 0.0;
  for (Real v : x.value().values()) {
    total += v;
  }
  Tensor out(Shape{1, 1, 1, 1}, static_cast<Real>(total));
  return makeResult(std::move(out), {x}, [](Node &self) {
    Node &in = *self.inputs[0];
    Real const g = self.grad.data()[0];
    for (Real &d : in.gradBuffer().values()) {
      d += g;
    }
  });
}

Var addScalars(std::vector<Var> const &terms)
{
  double total = 0.0;
  for (auto const &t : terms) {
    if (t.value().numel() != 1) { fail<ShapeError>("addScalars: term of shape {}", t.shape().str()); }
    total += t.value().data()[0];
  }
  Tensor out(Shape{1, 1, 1, 1}, static_cast<Real>(total));
  return makeResult(std::move(out), terms, [](Node &self) {
    Real const g = self.grad.data()[0];
    for (auto const &in : self.inputs) {
      if (in->requiresGrad) { in->gradBuffer().data()[0] += g; }
    }
  });
}

Var scale(Var const &x, Real factor)
{
  return unary(x, [factor](Real v) { return v * factor; }, [factor](Node &self) {
    Node &in = *self.inputs[0];
    if (!in.requiresGrad) { return; }
    auto g = self.grad.values();
    auto d = in.gradBuffer().values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      d[i] += g[i] * factor;
    }
  });
}

} // namespace cardiacsr::nn
