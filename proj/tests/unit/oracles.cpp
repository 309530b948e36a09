#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace oracle {

using aosr::Image;
using aosr::Shape;
using aosr::Tensor;

Image random_image(int h, int w, int c, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Image img(h, w, c);
  for (double& v : img.data) v = u(gen);
  return img;
}

Tensor random_tensor(Shape s, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(s);
  for (double& v : t.values()) v = u(gen);
  return t;
}

double percentile(const std::vector<double>& values, double p) {
  std::vector<double> s = values;
  std::sort(s.begin(), s.end());
  const double need = p * static_cast<double>(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    // #{x <= s[i]} includes every later duplicate of s[i].
    std::size_t count = i + 1;
    while (count < s.size() && s[count] == s[i]) ++count;
    if (static_cast<double>(count) >= need - 1e-9) return s[i];
  }
  return s.back();
}

Image ols(const Image& img, const aosr::OLSParams& p) {
  Image out = img;
  for (int c = 0; c < img.channels; ++c) {
    std::vector<double> ch;
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) ch.push_back(img.at(y, x, c));
    const double t_min = percentile(ch, p.p_min);
    const double t_max = percentile(ch, p.p_max);
    const double lo = t_min - p.p_a_min * (t_max - t_min);
    const double hi = t_max + p.p_a_max * (t_max - t_min);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        const double v = (img.at(y, x, c) - lo) / (hi - lo);
        out.at(y, x, c) = v < 0 ? 0 : (v > 1 ? 1 : v);
      }
  }
  return out;
}

double ssim(const Image& a, const Image& b) {
  double win[11][11];
  double total = 0;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) {
      win[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
      total += win[i][j];
    }
  for (auto& row : win)
    for (double& v : row) v /= total;
  const double c1 = 1e-4, c2 = 9e-4;
  double sum = 0;
  for (int c = 0; c < a.channels; ++c) {
    double acc = 0;
    int count = 0;
    for (int y = 0; y + 11 <= a.height; ++y)
      for (int x = 0; x + 11 <= a.width; ++x) {
        double mx = 0, my = 0;
        for (int i = 0; i < 11; ++i)
          for (int j = 0; j < 11; ++j) {
            mx += win[i][j] * a.at(y + i, x + j, c);
            my += win[i][j] * b.at(y + i, x + j, c);
          }
        double vx = 0, vy = 0, cxy = 0;
        for (int i = 0; i < 11; ++i)
          for (int j = 0; j < 11; ++j) {
            const double dx = a.at(y + i, x + j, c) - mx;
            const double dy = b.at(y + i, x + j, c) - my;
            vx += win[i][j] * dx * dx;
            vy += win[i][j] * dy * dy;
            cxy += win[i][j] * dx * dy;
          }
        acc += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++count;
      }
    sum += acc / count;
  }
  return sum / a.channels;
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* b, int dilation) {
  const Shape xs = x.shape(), ws = w.shape();
  const int pad = dilation * (ws.h / 2);
  Tensor out(Shape{xs.n, ws.n, xs.h, xs.w});
  for (int n = 0; n < xs.n; ++n)
    for (int o = 0; o < ws.n; ++o)
      for (int y = 0; y < xs.h; ++y)
        for (int xx = 0; xx < xs.w; ++xx) {
          double acc = b ? (*b)[o] : 0.0;
          for (int i = 0; i < ws.c; ++i)
            for (int ky = 0; ky < ws.h; ++ky)
              for (int kx = 0; kx < ws.w; ++kx) {
                const int sy = y + ky * dilation - pad;
                const int sx = xx + kx * dilation - pad;
                if (sy < 0 || sy >= xs.h || sx < 0 || sx >= xs.w) continue;
                acc += w.at(o, i, ky, kx) * x.at(n, i, sy, sx);
              }
          out.at(n, o, y, xx) = acc;
        }
  return out;
}

double l1(const Image& a, const Image& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) s += std::fabs(a.data[i] - b.data[i]);
  return s / static_cast<double>(a.data.size());
}

GradCheck compare_with_fd(std::vector<Tensor> leaves, const std::vector<Tensor>& analytic,
                          const std::function<double(const std::vector<Tensor>&)>& eval,
                          const std::vector<std::string>& names, int samples, std::uint64_t seed, double step,
                          double tol, double floor) {
  GradCheck res;
  std::mt19937_64 gen(seed);
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    const std::size_t n = leaves[li].numel();
    std::vector<std::size_t> coords(n);
    for (std::size_t k = 0; k < n; ++k) coords[k] = k;
    if (static_cast<std::size_t>(samples) < n) {
      std::shuffle(coords.begin(), coords.end(), gen);
      coords.resize(samples);
    }
    for (std::size_t k : coords) {
      const double a = analytic[li].numel() ? analytic[li][k] : 0.0;
      const double orig = leaves[li][k];
      leaves[li][k] = orig + step;
      const double fp = eval(leaves);
      leaves[li][k] = orig - step;
      const double fm = eval(leaves);
      leaves[li][k] = orig;
      const double num = (fp - fm) / (2 * step);
      const double rel = std::fabs(a - num) / std::max({std::fabs(a), std::fabs(num), floor});
      ++res.checked;
      if (std::max(std::fabs(a), std::fabs(num)) > floor) ++res.nonzero;
      if (rel < tol) ++res.passed;
      if (rel > res.worst) {
        res.worst = rel;
        res.worst_where = (li < names.size() ? names[li] : std::to_string(li)) + "[" + std::to_string(k) +
                          "] analytic=" + std::to_string(a) + " numeric=" + std::to_string(num);
      }
    }
  }
  return res;
}

GradCheck check_gradients(const std::function<aosr::ag::Var(const std::vector<aosr::ag::Var>&)>& build,
                          std::vector<Tensor> leaves, const std::vector<std::string>& names, int samples,
                          std::uint64_t seed, double step, double tol, double floor) {
  namespace ag = aosr::ag;
  std::vector<ag::Var> vars;
  for (const Tensor& t : leaves) vars.push_back(ag::parameter(t));
  ag::backward(build(vars));
  std::vector<Tensor> grads;
  for (const ag::Var& v : vars) grads.push_back(v->grad);
  auto eval = [&](const std::vector<Tensor>& ls) {
    std::vector<ag::Var> cs;
    for (const Tensor& t : ls) cs.push_back(ag::constant(t));
    return build(cs)->value[0];
  };
  return compare_with_fd(std::move(leaves), grads, eval, names, samples, seed, step, tol, floor);
}

}  // namespace oracle
