#include "autograd.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "error.hpp"

namespace aosr::ag {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

Var make(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                    [](const Var& v) { return v && v->requires_grad; });
  if (node->requires_grad) {
    node->inputs = std::move(inputs);
    node->backward_fn = std::move(fn);
  }
  return node;
}

bool wants(const Var& v) { return v && v->requires_grad; }

void require_same(const Shape& a, const Shape& b, const char* op) {
  if (!(a == b))
    fail(ErrorCode::ShapeMismatch,
         std::string(op) + ": shape " + a.str() + " vs " + b.str());
}

// Rows are (ci, ky, kx), columns are output pixels.
void im2col(const Tensor& x, int n, int k, int dil, RowMat& cols) {
  const Shape& s = x.shape();
  const int half = k / 2;
  cols.resize(static_cast<Eigen::Index>(s.c) * k * k,
              static_cast<Eigen::Index>(s.plane()));
  for (int ci = 0; ci < s.c; ++ci) {
    const double* src = x.plane(n, ci);
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* row = cols.data() + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * s.plane();
        const int dy = (ky - half) * dil;
        const int dx = (kx - half) * dil;
        const int x_lo = std::clamp(-dx, 0, s.w);
        const int x_hi = std::clamp(s.w - dx, 0, s.w);
        for (int y = 0; y < s.h; ++y) {
          double* dst = row + static_cast<std::size_t>(y) * s.w;
          const int sy = y + dy;
          if (sy < 0 || sy >= s.h || x_lo >= x_hi) {
            std::fill(dst, dst + s.w, 0.0);
            continue;
          }
          std::fill(dst, dst + x_lo, 0.0);
          const double* srow = src + static_cast<std::size_t>(sy) * s.w;
          std::copy(srow + x_lo + dx, srow + x_hi + dx, dst + x_lo);
          std::fill(dst + x_hi, dst + s.w, 0.0);
        }
      }
    }
  }
}

void col2im_add(const RowMat& cols, int n, int k, int dil, Tensor& dx) {
  const Shape& s = dx.shape();
  const int half = k / 2;
  for (int ci = 0; ci < s.c; ++ci) {
    double* dst = dx.plane(n, ci);
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* row = cols.data() + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * s.plane();
        const int dy = (ky - half) * dil;
        const int ddx = (kx - half) * dil;
        const int x_lo = std::clamp(-ddx, 0, s.w);
        const int x_hi = std::clamp(s.w - ddx, 0, s.w);
        for (int y = 0; y < s.h; ++y) {
          const int sy = y + dy;
          if (sy < 0 || sy >= s.h) continue;
          const double* g = row + static_cast<std::size_t>(y) * s.w;
          double* drow = dst + static_cast<std::size_t>(sy) * s.w;
          for (int xx = x_lo; xx < x_hi; ++xx) drow[xx + ddx] += g[xx];
        }
      }
    }
  }
}

Var scalar_node(double v, std::vector<Var> inputs, std::function<void(Node&)> fn) {
  return make(Tensor(Shape{1, 1, 1, 1}, v), std::move(inputs), std::move(fn));
}

}  // namespace

Tensor& Node::grad_buffer() {
  if (grad.empty()) grad = Tensor(value.shape(), 0.0);
  return grad;
}

Var constant(Tensor t) {
  auto node = std::make_shared<Node>();
  node->value = std::move(t);
  return node;
}

Var parameter(Tensor t) {
  auto node = std::make_shared<Node>();
  node->value = std::move(t);
  node->requires_grad = true;
  return node;
}

void backward(const Var& root) {
  if (root->value.numel() != 1)
    fail(ErrorCode::ShapeMismatch, "backward needs a scalar root");
  if (!root->requires_grad) return;

  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child && child->requires_grad && seen.insert(child).second)
        stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
}

Var conv2d(const Var& x, const Var& weight, const Var& bias, int dilation) {
  const Shape xs = x->value.shape();
  const Shape ws = weight->value.shape();
  if (ws.c != xs.c || ws.h != ws.w || ws.h % 2 == 0)
    fail(ErrorCode::ShapeMismatch,
         "conv2d: kernel " + ws.str() + " incompatible with input " + xs.str());
  if (bias && bias->value.numel() != static_cast<std::size_t>(ws.n))
    fail(ErrorCode::ShapeMismatch, "conv2d: bias size");
  const int k = ws.h;
  const Eigen::Index K = static_cast<Eigen::Index>(xs.c) * k * k;
  const Eigen::Index HW = static_cast<Eigen::Index>(xs.plane());

  Tensor out(Shape{xs.n, ws.n, xs.h, xs.w});
  ConstMapMat W(weight->value.data(), ws.n, K);
  RowMat cols;
  for (int n = 0; n < xs.n; ++n) {
    MapMat o(out.plane(n, 0), ws.n, HW);
    if (k == 1) {
      o.noalias() = W * ConstMapMat(x->value.plane(n, 0), K, HW);
    } else {
      im2col(x->value, n, k, dilation, cols);
      o.noalias() = W * cols;
    }
    if (bias)
      for (int co = 0; co < ws.n; ++co) o.row(co).array() += bias->value[co];
  }

  return make(std::move(out), {x, weight, bias}, [k, dilation, K, HW](Node& self) {
    const Var& x = self.inputs[0];
    const Var& weight = self.inputs[1];
    const Var& bias = self.inputs[2];
    const Shape xs = x->value.shape();
    const int cout = weight->value.shape().n;
    ConstMapMat W(weight->value.data(), cout, K);
    RowMat cols;
    RowMat dcols;
    for (int n = 0; n < xs.n; ++n) {
      ConstMapMat g(self.grad.plane(n, 0), cout, HW);
      if (wants(weight)) {
        MapMat dW(weight->grad_buffer().data(), cout, K);
        if (k == 1) {
          dW.noalias() += g * ConstMapMat(x->value.plane(n, 0), K, HW).transpose();
        } else {
          im2col(x->value, n, k, dilation, cols);
          dW.noalias() += g * cols.transpose();
        }
      }
      if (wants(bias)) {
        Tensor& db = bias->grad_buffer();
        for (int co = 0; co < cout; ++co) db[co] += g.row(co).sum();
      }
      if (wants(x)) {
        if (k == 1) {
          MapMat dx(x->grad_buffer().plane(n, 0), K, HW);
          dx.noalias() += W.transpose() * g;
        } else {
          dcols.noalias() = W.transpose() * g;
          col2im_add(dcols, n, k, dilation, x->grad_buffer());
        }
      }
    }
  });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  const Shape s = x->value.shape();
  const std::size_t hw = s.plane();
  Tensor out(s);
  // Normalized values and inverse deviations are kept for the backward pass.
  auto xhat = std::make_shared<Tensor>(s);
  auto inv_std = std::make_shared<std::vector<double>>(static_cast<std::size_t>(s.n) * hw);
  for (int n = 0; n < s.n; ++n) {
    const double* base = x->value.plane(n, 0);
    for (std::size_t p = 0; p < hw; ++p) {
      double mean = 0.0;
      for (int c = 0; c < s.c; ++c) mean += base[c * hw + p];
      mean /= s.c;
      double var = 0.0;
      for (int c = 0; c < s.c; ++c) {
        const double d = base[c * hw + p] - mean;
        var += d * d;
      }
      var /= s.c;
      const double is = 1.0 / std::sqrt(var + eps);
      (*inv_std)[n * hw + p] = is;
      for (int c = 0; c < s.c; ++c) {
        const double xh = (base[c * hw + p] - mean) * is;
        xhat->plane(n, 0)[c * hw + p] = xh;
        const double gmul = gain ? gain->value[c] : 1.0;
        const double badd = bias ? bias->value[c] : 0.0;
        out.plane(n, 0)[c * hw + p] = gmul * xh + badd;
      }
    }
  }
  return make(std::move(out), {x, gain, bias}, [xhat, inv_std](Node& self) {
    const Var& x = self.inputs[0];
    const Var& gain = self.inputs[1];
    const Var& bias = self.inputs[2];
    const Shape s = x->value.shape();
    const std::size_t hw = s.plane();
    std::vector<double> dxh(static_cast<std::size_t>(s.c));
    for (int n = 0; n < s.n; ++n) {
      const double* g = self.grad.plane(n, 0);
      const double* xh = xhat->plane(n, 0);
      for (std::size_t p = 0; p < hw; ++p) {
        double m1 = 0.0;
        double m2 = 0.0;
        for (int c = 0; c < s.c; ++c) {
          const double gv = g[c * hw + p];
          if (wants(gain)) gain->grad_buffer()[c] += gv * xh[c * hw + p];
          if (wants(bias)) bias->grad_buffer()[c] += gv;
          dxh[c] = gv * (gain ? gain->value[c] : 1.0);
          m1 += dxh[c];
          m2 += dxh[c] * xh[c * hw + p];
        }
        if (!wants(x)) continue;
        m1 /= s.c;
        m2 /= s.c;
        const double is = (*inv_std)[n * hw + p];
        double* dx = x->grad_buffer().plane(n, 0);
        for (int c = 0; c < s.c; ++c)
          dx[c * hw + p] += is * (dxh[c] - m1 - xh[c * hw + p] * m2);
      }
    }
  });
}

Var prelu(const Var& x, const Var& slope) {
  const double a = slope->value[0];
  Tensor out = x->value;
  for (double& v : out.values())
    if (v < 0.0) v *= a;
  return make(std::move(out), {x, slope}, [](Node& self) {
    const Var& x = self.inputs[0];
    const Var& slope = self.inputs[1];
    const double a = slope->value[0];
    const auto& xv = x->value.values();
    double ds = 0.0;
    Tensor* dx = wants(x) ? &x->grad_buffer() : nullptr;
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const double g = self.grad[i];
      if (xv[i] < 0.0) {
        ds += g * xv[i];
        if (dx) (*dx)[i] += a * g;
      } else if (dx) {
        (*dx)[i] += g;
      }
    }
    if (wants(slope)) slope->grad_buffer()[0] += ds;
  });
}

Var relu(const Var& x) {
  Tensor out = x->value;
  for (double& v : out.values()) v = std::max(v, 0.0);
  return make(std::move(out), {x}, [](Node& self) {
    const Var& x = self.inputs[0];
    Tensor& dx = x->grad_buffer();
    for (std::size_t i = 0; i < dx.numel(); ++i)
      if (x->value[i] > 0.0) dx[i] += self.grad[i];
  });
}

Var add(const Var& a, const Var& b) {
  require_same(a->value.shape(), b->value.shape(), "add");
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += b->value[i];
  return make(std::move(out), {a, b}, [](Node& self) {
    for (const Var& in : self.inputs) {
      if (!wants(in)) continue;
      Tensor& d = in->grad_buffer();
      for (std::size_t i = 0; i < d.numel(); ++i) d[i] += self.grad[i];
    }
  });
}

Var concat_channels(std::span<const Var> parts) {
  if (parts.empty()) fail(ErrorCode::EmptyInput, "concat of nothing");
  Shape s = parts.front()->value.shape();
  int total = 0;
  for (const Var& p : parts) {
    const Shape& ps = p->value.shape();
    if (ps.n != s.n || ps.h != s.h || ps.w != s.w)
      fail(ErrorCode::ShapeMismatch, "concat: " + ps.str() + " vs " + s.str());
    total += ps.c;
  }
  s.c = total;
  Tensor out(s);
  const std::size_t hw = s.plane();
  for (int n = 0; n < s.n; ++n) {
    double* dst = out.plane(n, 0);
    for (const Var& p : parts) {
      const std::size_t len = p->value.shape().c * hw;
      std::copy_n(p->value.plane(n, 0), len, dst);
      dst += len;
    }
  }
  return make(std::move(out), std::vector<Var>(parts.begin(), parts.end()), [](Node& self) {
    const Shape& s = self.value.shape();
    const std::size_t hw = s.plane();
    for (int n = 0; n < s.n; ++n) {
      const double* src = self.grad.plane(n, 0);
      for (const Var& p : self.inputs) {
        const std::size_t len = p->value.shape().c * hw;
        if (wants(p)) {
          double* d = p->grad_buffer().plane(n, 0);
          for (std::size_t i = 0; i < len; ++i) d[i] += src[i];
        }
        src += len;
      }
    }
  });
}

Var signed_pow(const Var& x, double gamma, double scale, double linear_zone) {
  // Slope of the line joining the origin to the curve at |x| = linear_zone.
  const double zone_slope = std::pow(linear_zone, gamma - 1.0);
  Tensor out = x->value;
  for (double& v : out.values()) {
    const double a = std::abs(v);
    const double m = a < linear_zone ? a * zone_slope : std::pow(a, gamma);
    v = scale * std::copysign(m, v);
  }
  return make(std::move(out), {x}, [gamma, scale, linear_zone, zone_slope](Node& self) {
    const Var& x = self.inputs[0];
    Tensor& dx = x->grad_buffer();
    for (std::size_t i = 0; i < dx.numel(); ++i) {
      const double a = std::abs(x->value[i]);
      const double d = a < linear_zone ? zone_slope : gamma * std::pow(a, gamma - 1.0);
      dx[i] += self.grad[i] * scale * d;
    }
  });
}

Var stretch_planes(const Var& x, std::vector<double> lo, std::vector<double> hi,
                   std::vector<char> passthrough) {
  const Shape s = x->value.shape();
  const std::size_t planes = static_cast<std::size_t>(s.n) * s.c;
  if (lo.size() != planes || hi.size() != planes || passthrough.size() != planes)
    fail(ErrorCode::ShapeMismatch, "stretch_planes: threshold count");
  Tensor out(s);
  const std::size_t hw = s.plane();
  for (std::size_t pl = 0; pl < planes; ++pl) {
    const double* src = x->value.data() + pl * hw;
    double* dst = out.data() + pl * hw;
    if (passthrough[pl]) {
      std::copy_n(src, hw, dst);
      continue;
    }
    const double inv = 1.0 / (hi[pl] - lo[pl]);
    for (std::size_t i = 0; i < hw; ++i)
      dst[i] = std::clamp((src[i] - lo[pl]) * inv, 0.0, 1.0);
  }
  return make(std::move(out), {x},
              [lo = std::move(lo), hi = std::move(hi),
               passthrough = std::move(passthrough)](Node& self) {
                const Var& x = self.inputs[0];
                const std::size_t hw = x->value.shape().plane();
                Tensor& dx = x->grad_buffer();
                for (std::size_t pl = 0; pl < lo.size(); ++pl) {
                  const double* g = self.grad.data() + pl * hw;
                  const double* xv = x->value.data() + pl * hw;
                  double* d = dx.data() + pl * hw;
                  if (passthrough[pl]) {
                    for (std::size_t i = 0; i < hw; ++i) d[i] += g[i];
                    continue;
                  }
                  const double inv = 1.0 / (hi[pl] - lo[pl]);
                  for (std::size_t i = 0; i < hw; ++i) {
                    const double t = (xv[i] - lo[pl]) * inv;
                    if (t >= 0.0 && t <= 1.0) d[i] += g[i] * inv;
                  }
                }
              });
}

Var max_pool2(const Var& x) {
  const Shape s = x->value.shape();
  if (s.h % 2 || s.w % 2)
    fail(ErrorCode::IndivisibleSpatialDims, "max_pool2 on odd size " + s.str());
  Shape os{s.n, s.c, s.h / 2, s.w / 2};
  Tensor out(os);
  auto arg = std::make_shared<std::vector<std::size_t>>(os.numel());
  std::size_t o = 0;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const double* src = x->value.plane(n, c);
      const std::size_t base = src - x->value.data();
      for (int y = 0; y < os.h; ++y)
        for (int xx = 0; xx < os.w; ++xx, ++o) {
          std::size_t best = static_cast<std::size_t>(2 * y) * s.w + 2 * xx;
          for (std::size_t cand : {best + 1, best + s.w, best + s.w + 1})
            if (src[cand] > src[best]) best = cand;
          out[o] = src[best];
          (*arg)[o] = base + best;
        }
    }
  return make(std::move(out), {x}, [arg](Node& self) {
    Tensor& dx = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < arg->size(); ++i) dx[(*arg)[i]] += self.grad[i];
  });
}

namespace {

struct Tap {
  int i0, i1;
  double w1;
};

std::vector<Tap> upsample_taps(int in) {
  std::vector<Tap> taps(static_cast<std::size_t>(2 * in));
  for (int o = 0; o < 2 * in; ++o) {
    const double src = std::max((o + 0.5) / 2.0 - 0.5, 0.0);
    const int i0 = std::min(static_cast<int>(src), in - 1);
    const int i1 = std::min(i0 + 1, in - 1);
    taps[o] = Tap{i0, i1, src - i0};
  }
  return taps;
}

}  // namespace

Var upsample2(const Var& x) {
  const Shape s = x->value.shape();
  Shape os{s.n, s.c, 2 * s.h, 2 * s.w};
  const auto ty = upsample_taps(s.h);
  const auto tx = upsample_taps(s.w);
  Tensor out(os);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const double* src = x->value.plane(n, c);
      double* dst = out.plane(n, c);
      for (int y = 0; y < os.h; ++y) {
        const Tap& a = ty[y];
        const double* r0 = src + static_cast<std::size_t>(a.i0) * s.w;
        const double* r1 = src + static_cast<std::size_t>(a.i1) * s.w;
        for (int xx = 0; xx < os.w; ++xx) {
          const Tap& b = tx[xx];
          const double top = r0[b.i0] + b.w1 * (r0[b.i1] - r0[b.i0]);
          const double bot = r1[b.i0] + b.w1 * (r1[b.i1] - r1[b.i0]);
          dst[static_cast<std::size_t>(y) * os.w + xx] = top + a.w1 * (bot - top);
        }
      }
    }
  return make(std::move(out), {x}, [ty, tx](Node& self) {
    const Var& x = self.inputs[0];
    const Shape s = x->value.shape();
    const Shape os = self.value.shape();
    Tensor& dx = x->grad_buffer();
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c) {
        double* d = dx.plane(n, c);
        const double* g = self.grad.plane(n, c);
        for (int y = 0; y < os.h; ++y) {
          const Tap& a = ty[y];
          for (int xx = 0; xx < os.w; ++xx) {
            const Tap& b = tx[xx];
            const double gv = g[static_cast<std::size_t>(y) * os.w + xx];
            const double gy0 = gv * (1.0 - a.w1);
            const double gy1 = gv * a.w1;
            d[static_cast<std::size_t>(a.i0) * s.w + b.i0] += gy0 * (1.0 - b.w1);
            d[static_cast<std::size_t>(a.i0) * s.w + b.i1] += gy0 * b.w1;
            d[static_cast<std::size_t>(a.i1) * s.w + b.i0] += gy1 * (1.0 - b.w1);
            d[static_cast<std::size_t>(a.i1) * s.w + b.i1] += gy1 * b.w1;
          }
        }
      }
  });
}

Var clamp01(const Var& x) {
  Tensor out = x->value;
  for (double& v : out.values()) v = std::clamp(v, 0.0, 1.0);
  return make(std::move(out), {x}, [](Node& self) {
    const Var& x = self.inputs[0];
    Tensor& dx = x->grad_buffer();
    for (std::size_t i = 0; i < dx.numel(); ++i) {
      const double v = x->value[i];
      if (v >= 0.0 && v <= 1.0) dx[i] += self.grad[i];
    }
  });
}

Var channel_affine(const Var& x, std::vector<double> scale, std::vector<double> shift) {
  const Shape s = x->value.shape();
  if (scale.size() != static_cast<std::size_t>(s.c) || shift.size() != scale.size())
    fail(ErrorCode::ShapeMismatch, "channel_affine: channel count");
  Tensor out = x->value;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      double* p = out.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) p[i] = p[i] * scale[c] + shift[c];
    }
  return make(std::move(out), {x}, [scale = std::move(scale)](Node& self) {
    const Shape s = self.value.shape();
    Tensor& dx = self.inputs[0]->grad_buffer();
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c) {
        double* d = dx.plane(n, c);
        const double* g = self.grad.plane(n, c);
        for (std::size_t i = 0; i < s.plane(); ++i) d[i] += g[i] * scale[c];
      }
  });
}

Var mean_abs_diff(const Var& a, const Tensor& target) {
  require_same(a->value.shape(), target.shape(), "mean_abs_diff");
  const std::size_t n = target.numel();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += std::abs(a->value[i] - target[i]);
  auto tgt = std::make_shared<Tensor>(target);
  return scalar_node(sum / static_cast<double>(n), {a}, [tgt](Node& self) {
    const Var& a = self.inputs[0];
    const double g = self.grad[0] / static_cast<double>(tgt->numel());
    Tensor& da = a->grad_buffer();
    for (std::size_t i = 0; i < da.numel(); ++i) {
      const double d = a->value[i] - (*tgt)[i];
      if (d > 0.0) da[i] += g;
      else if (d < 0.0) da[i] -= g;
    }
  });
}

Var cosine_distance(const Var& a, const Tensor& target) {
  require_same(a->value.shape(), target.shape(), "cosine_distance");
  double dot = 0.0, na = 0.0, nt = 0.0;
  for (std::size_t i = 0; i < target.numel(); ++i) {
    dot += a->value[i] * target[i];
    na += a->value[i] * a->value[i];
    nt += target[i] * target[i];
  }
  // sqrt(|a|^2 |t|^2) rounds to exactly <a,t> when a == t, so identical
  // inputs give a distance of exactly zero.
  const double cosv = dot / std::sqrt(na * nt);
  na = std::sqrt(na);
  nt = std::sqrt(nt);
  if (na < 1e-12 || nt < 1e-12)
    fail(ErrorCode::ZeroVector, "color loss on a zero vector");
  auto tgt = std::make_shared<Tensor>(target);
  return scalar_node(1.0 - cosv, {a}, [tgt, dot, na, nt](Node& self) {
    // d(1 - <a,t>/(|a||t|))/da = -t/(|a||t|) + <a,t> a / (|a|^3 |t|)
    const Var& a = self.inputs[0];
    const double g = self.grad[0];
    const double c1 = 1.0 / (na * nt);
    const double c2 = dot / (na * na * na * nt);
    Tensor& da = a->grad_buffer();
    for (std::size_t i = 0; i < da.numel(); ++i)
      da[i] += g * (-(*tgt)[i] * c1 + a->value[i] * c2);
  });
}

Var weighted_sum(std::span<const Var> scalars, std::span<const double> weights) {
  if (scalars.size() != weights.size())
    fail(ErrorCode::ShapeMismatch, "weighted_sum: size");
  double total = 0.0;
  for (std::size_t i = 0; i < scalars.size(); ++i)
    total += weights[i] * scalars[i]->value[0];
  std::vector<double> w(weights.begin(), weights.end());
  return scalar_node(total, std::vector<Var>(scalars.begin(), scalars.end()),
                     [w = std::move(w)](Node& self) {
                       for (std::size_t i = 0; i < w.size(); ++i)
                         if (wants(self.inputs[i]))
                           self.inputs[i]->grad_buffer()[0] += self.grad[0] * w[i];
                     });
}

Var scale(const Var& x, double k) {
  Tensor out = x->value;
  for (double& v : out.values()) v *= k;
  return make(std::move(out), {x}, [k](Node& self) {
    Tensor& dx = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += k * self.grad[i];
  });
}

}  // namespace aosr::ag
