#include "metrics.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "error.hpp"

namespace aosr {

double psnr(const Image& a, const Image& b, double cap) {
  if (!a.same_shape(b)) fail(ErrorCode::ShapeMismatch, "psnr: shape mismatch");
  if (a.size() == 0) fail(ErrorCode::EmptyInput, "psnr of empty images");
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.size());
  if (mse == 0.0) return cap;
  return std::min(cap, 10.0 * std::log10(1.0 / mse));
}

namespace {

std::vector<double> ssim_window() {
  std::vector<double> g(11);
  double sum = 0.0;
  for (int i = 0; i < 11; ++i) {
    g[i] = std::exp(-((i - 5) * (i - 5)) / (2.0 * 1.5 * 1.5));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Separable valid-region filtering of an h x w plane.
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w,
                                 const std::vector<double>& g) {
  const int k = static_cast<int>(g.size());
  const int oh = h - k + 1, ow = w - k + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += g[i] * src[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += g[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  return out;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  if (!a.same_shape(b)) fail(ErrorCode::ShapeMismatch, "ssim: shape mismatch");
  if (std::min(a.height, a.width) < 11)
    fail(ErrorCode::TooSmall, "ssim needs images of at least 11x11");
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  const auto g = ssim_window();
  double total = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    const auto x = a.channel(c);
    const auto y = b.channel(c);
    std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, a.height, a.width, g);
    const auto my = filter_valid(y, a.height, a.width, g);
    const auto sxx = filter_valid(xx, a.height, a.width, g);
    const auto syy = filter_valid(yy, a.height, a.width, g);
    const auto sxy = filter_valid(xy, a.height, a.width, g);
    double acc = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cxy = sxy[i] - mx[i] * my[i];
      acc += ((2 * mx[i] * my[i] + c1) * (2 * cxy + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    total += acc / static_cast<double>(mx.size());
  }
  return total / a.channels;
}

// ---------------------------------------------------------------------------
// NIQE

NiqeModel NiqeModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ModelMissing, "NIQE model not found: " + path.string());
  std::stringstream clean;
  std::string line;
  while (std::getline(in, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    clean << line << '\n';
  }
  NiqeModel m;
  std::string key;
  int version = 0;
  auto need = [&](bool ok, const char* what) {
    if (!ok) fail(ErrorCode::Format, std::string("bad NIQE model file: ") + what);
  };
  need(static_cast<bool>(clean >> key >> version) && key == "niqe-model" && version == 1, "header");
  while (clean >> key) {
    if (key == "block") {
      need(static_cast<bool>(clean >> m.block_h >> m.block_w), "block");
    } else if (key == "mu") {
      int n = 0;
      need(static_cast<bool>(clean >> n) && n > 0, "mu size");
      m.mu.resize(n);
      for (int i = 0; i < n; ++i) need(static_cast<bool>(clean >> m.mu[i]), "mu");
    } else if (key == "cov" || key == "window") {
      int r = 0, c = 0;
      need(static_cast<bool>(clean >> r >> c) && r > 0 && c > 0, "matrix size");
      Eigen::MatrixXd& mat = key == "cov" ? m.cov : m.window;
      mat.resize(r, c);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) need(static_cast<bool>(clean >> mat(i, j)), "matrix");
    } else {
      fail(ErrorCode::Format, "bad NIQE model file: unknown section " + key);
    }
  }
  need(m.mu.size() > 0 && m.cov.rows() == m.mu.size() && m.cov.cols() == m.mu.size(),
       "mu/cov sizes");
  need(m.window.size() > 0, "window");
  return m;
}

namespace {

using Plane = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double cubic(double x) {
  const double a = std::abs(x), a2 = a * a, a3 = a2 * a;
  if (a <= 1.0) return 1.5 * a3 - 2.5 * a2 + 1.0;
  if (a <= 2.0) return -0.5 * a3 + 2.5 * a2 - 4.0 * a + 2.0;
  return 0.0;
}

struct ResizeTaps {
  std::vector<std::vector<int>> index;
  std::vector<std::vector<double>> weight;
};

ResizeTaps resize_taps(int in_len, int out_len, double scale) {
  const bool aa = scale < 1.0;
  const double kw = aa ? 4.0 / scale : 4.0;
  const int p = static_cast<int>(std::ceil(kw)) + 2;
  ResizeTaps t;
  t.index.resize(out_len);
  t.weight.resize(out_len);
  for (int o = 0; o < out_len; ++o) {
    const double u = (o + 1) / scale + 0.5 * (1.0 - 1.0 / scale);
    const double left = std::floor(u - kw / 2.0);
    std::vector<double> w(p);
    double sum = 0.0;
    for (int k = 0; k < p; ++k) {
      const double d = u - (left + k);
      w[k] = aa ? scale * cubic(d * scale) : cubic(d);
      sum += w[k];
    }
    for (int k = 0; k < p; ++k) {
      if (w[k] == 0.0) continue;  // zero taps never contribute
      // 1-based MATLAB index mirrored symmetrically into [0, in_len).
      int j = static_cast<int>(left) + k - 1;
      if (j < 0) j = -j - 1;
      if (j >= in_len) j = 2 * in_len - 1 - j;
      j = std::clamp(j, 0, in_len - 1);
      t.index[o].push_back(j);
      t.weight[o].push_back(w[k] / sum);
    }
  }
  return t;
}

Plane resize_plane(const Plane& src, double scale) {
  const int oh = static_cast<int>(std::ceil(src.rows() * scale));
  const int ow = static_cast<int>(std::ceil(src.cols() * scale));
  const auto th = resize_taps(static_cast<int>(src.rows()), oh, scale);
  const auto tw = resize_taps(static_cast<int>(src.cols()), ow, scale);
  Plane mid(oh, src.cols());
  for (int o = 0; o < oh; ++o) {
    mid.row(o).setZero();
    for (std::size_t k = 0; k < th.index[o].size(); ++k)
      mid.row(o) += th.weight[o][k] * src.row(th.index[o][k]);
  }
  Plane out(oh, ow);
  for (int o = 0; o < ow; ++o) {
    out.col(o).setZero();
    for (std::size_t k = 0; k < tw.index[o].size(); ++k)
      out.col(o) += tw.weight[o][k] * mid.col(tw.index[o][k]);
  }
  return out;
}

// Convolution with replicate ('nearest') borders. The window is symmetric,
// so correlation and convolution coincide.
Plane filter_nearest(const Plane& img, const Eigen::MatrixXd& win) {
  const int rh = static_cast<int>(win.rows() / 2), rw = static_cast<int>(win.cols() / 2);
  const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
  Plane out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = 0; i < win.rows(); ++i) {
        const int yy = std::clamp(y + i - rh, 0, h - 1);
        for (int j = 0; j < win.cols(); ++j)
          acc += win(win.rows() - 1 - i, win.cols() - 1 - j) * img(yy, std::clamp(x + j - rw, 0, w - 1));
      }
      out(y, x) = acc;
    }
  return out;
}

struct Aggd {
  double alpha, beta_l, beta_r;
};

const std::vector<std::pair<double, double>>& aggd_table() {
  static const auto table = [] {
    std::vector<std::pair<double, double>> t;
    for (int i = 0; i <= 9800; ++i) {
      const double g = 0.2 + 0.001 * i;
      const double r = std::pow(std::tgamma(2.0 / g), 2) / (std::tgamma(1.0 / g) * std::tgamma(3.0 / g));
      t.emplace_back(g, r);
    }
    return t;
  }();
  return table;
}

Aggd estimate_aggd(const std::vector<double>& v) {
  double ls = 0.0, rs = 0.0, abs_sum = 0.0, sq_sum = 0.0;
  std::size_t ln = 0, rn = 0;
  for (double x : v) {
    if (x < 0) {
      ls += x * x;
      ++ln;
    } else if (x > 0) {
      rs += x * x;
      ++rn;
    }
    abs_sum += std::abs(x);
    sq_sum += x * x;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double left_std = ln ? std::sqrt(ls / ln) : nan;
  const double right_std = rn ? std::sqrt(rs / rn) : nan;
  const double gh = left_std / right_std;
  const double n = static_cast<double>(v.size());
  const double rhat = std::pow(abs_sum / n, 2) / (sq_sum / n);
  const double rnorm = rhat * (gh * gh * gh + 1) * (gh + 1) / std::pow(gh * gh + 1, 2);
  const auto& table = aggd_table();
  std::size_t best = 0;
  double best_err = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double e = std::pow(table[i].second - rnorm, 2);
    if (e < best_err) {
      best_err = e;
      best = i;
    }
  }
  const double alpha = table[best].first;
  const double k = std::sqrt(std::tgamma(1.0 / alpha) / std::tgamma(3.0 / alpha));
  return {alpha, left_std * k, right_std * k};
}

std::vector<double> block_features(const Plane& block) {
  const int h = static_cast<int>(block.rows()), w = static_cast<int>(block.cols());
  std::vector<double> flat(block.data(), block.data() + block.size());
  std::vector<double> feat;
  const Aggd base = estimate_aggd(flat);
  feat.push_back(base.alpha);
  feat.push_back((base.beta_l + base.beta_r) / 2.0);
  const int shifts[4][2] = {{0, 1}, {1, 0}, {1, 1}, {1, -1}};
  std::vector<double> prod(flat.size());
  for (const auto& s : shifts) {
    // Circular shift: shifted(i, j) = block(i - s0, j - s1).
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        const int si = ((i - s[0]) % h + h) % h;
        const int sj = ((j - s[1]) % w + w) % w;
        prod[static_cast<std::size_t>(i) * w + j] = block(i, j) * block(si, sj);
      }
    const Aggd a = estimate_aggd(prod);
    const double mean = (a.beta_r - a.beta_l) * (std::tgamma(2.0 / a.alpha) / std::tgamma(1.0 / a.alpha));
    feat.insert(feat.end(), {a.alpha, mean, a.beta_l, a.beta_r});
  }
  return feat;
}

Eigen::MatrixXd pinv(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cutoff = 1e-15 * (s.size() ? s.maxCoeff() : 0.0);
  Eigen::VectorXd inv(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) inv[i] = s[i] > cutoff ? 1.0 / s[i] : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace

Image matlab_imresize(const Image& img, double scale) {
  Image out;
  for (int c = 0; c < img.channels; ++c) {
    Plane p(img.height, img.width);
    const auto ch = img.channel(c);
    std::copy(ch.begin(), ch.end(), p.data());
    const Plane r = resize_plane(p, scale);
    if (c == 0) out = Image(static_cast<int>(r.rows()), static_cast<int>(r.cols()), img.channels);
    out.set_channel(c, std::span<const double>(r.data(), static_cast<std::size_t>(r.size())));
  }
  return out;
}

double niqe(const Image& img, const NiqeModel& model) {
  if (img.channels != 3 && img.channels != 1)
    fail(ErrorCode::ShapeMismatch, "niqe expects an RGB or gray image");
  const int nbh = img.height / model.block_h;
  const int nbw = img.width / model.block_w;
  if (nbh < 1 || nbw < 1)
    fail(ErrorCode::TooSmall, "niqe needs at least one " + std::to_string(model.block_h) + "x" +
                                  std::to_string(model.block_w) + " block");
  const int h = nbh * model.block_h, w = nbw * model.block_w;
  Plane gray(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v;
      if (img.channels == 3) {
        v = 0.298936021293775 * img.at(y, x, 0) + 0.587043074451121 * img.at(y, x, 1) +
            0.114020904255103 * img.at(y, x, 2);
      } else {
        v = img.at(y, x, 0);
      }
      gray(y, x) = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
    }

  const int nblocks = nbh * nbw;
  std::vector<std::vector<double>> feats(nblocks);
  Plane cur = gray;
  for (int scale = 1; scale <= 2; ++scale) {
    const Plane mu = filter_nearest(cur, model.window);
    const Plane sq = filter_nearest(cur.array().square().matrix(), model.window);
    const Plane sigma = (sq.array() - mu.array().square()).abs().sqrt().matrix();
    const Plane norm = ((cur.array() - mu.array()) / (sigma.array() + 1.0)).matrix();
    const int bh = model.block_h / scale, bw = model.block_w / scale;
    int b = 0;
    for (int ix = 0; ix < nbw; ++ix)
      for (int iy = 0; iy < nbh; ++iy, ++b) {
        const Plane block = norm.block(iy * bh, ix * bw, bh, bw);
        const auto f = block_features(block);
        feats[b].insert(feats[b].end(), f.begin(), f.end());
      }
    if (scale == 1) cur = resize_plane(cur / 255.0, 0.5) * 255.0;
  }

  const Eigen::Index dim = model.mu.size();
  Eigen::VectorXd mu_d = Eigen::VectorXd::Zero(dim);
  std::vector<int> count(dim, 0);
  std::vector<const std::vector<double>*> complete;
  for (const auto& f : feats) {
    if (static_cast<Eigen::Index>(f.size()) != dim)
      fail(ErrorCode::ConfigMismatch, "NIQE model dimension does not match the feature set");
    bool has_nan = false;
    for (Eigen::Index i = 0; i < dim; ++i) {
      if (std::isnan(f[i])) {
        has_nan = true;
        continue;
      }
      mu_d[i] += f[i];
      ++count[i];
    }
    if (!has_nan) complete.push_back(&f);
  }
  for (Eigen::Index i = 0; i < dim; ++i) mu_d[i] /= count[i];

  // Sample covariance over NaN-free blocks; with fewer than two blocks the
  // distorted covariance is taken as zero.
  Eigen::MatrixXd cov_d = Eigen::MatrixXd::Zero(dim, dim);
  if (complete.size() >= 2) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(dim);
    for (const auto* f : complete) m += Eigen::Map<const Eigen::VectorXd>(f->data(), dim);
    m /= static_cast<double>(complete.size());
    for (const auto* f : complete) {
      const Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(f->data(), dim) - m;
      cov_d += d * d.transpose();
    }
    cov_d /= static_cast<double>(complete.size() - 1);
  }
  const Eigen::MatrixXd inv = pinv((model.cov + cov_d) / 2.0);
  const Eigen::VectorXd diff = model.mu - mu_d;
  return std::sqrt(std::max(0.0, diff.dot(inv * diff)));
}

// ---------------------------------------------------------------------------
// Reports

MeanStd mean_std(const std::vector<double>& v, bool sample) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double x : v)
    if (!std::isnan(x)) {
      sum += x;
      ++n;
    }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (n == 0) return {nan, nan};
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double x : v)
    if (!std::isnan(x)) ss += (x - mean) * (x - mean);
  const double denom = sample ? static_cast<double>(n) - 1.0 : static_cast<double>(n);
  return {mean, denom > 0 ? std::sqrt(ss / denom) : 0.0};
}

void MetricReport::recompute() {
  std::vector<double> p, s, q;
  for (const auto& r : rows) {
    p.push_back(r.psnr);
    s.push_back(r.ssim);
    q.push_back(r.niqe);
  }
  psnr = mean_std(p, sample_std);
  ssim = mean_std(s, sample_std);
  niqe = mean_std(q, sample_std);
}

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

}  // namespace

std::string format_mean_std(const MeanStd& m, int digits) {
  if (std::isnan(m.mean)) return "nan";
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << m.mean << "±" << m.std;
  return ss.str();
}

std::string MetricReport::to_csv() const {
  std::ostringstream out;
  out << "image,psnr,ssim,niqe\n";
  for (const auto& r : rows)
    out << r.id << ',' << num(r.psnr) << ',' << num(r.ssim) << ',' << num(r.niqe) << '\n';
  out << "#mean," << num(psnr.mean) << ',' << num(ssim.mean) << ',' << num(niqe.mean) << '\n';
  out << (sample_std ? "#std_sample," : "#std_population,") << num(psnr.std) << ','
      << num(ssim.std) << ',' << num(niqe.std) << '\n';
  return out.str();
}

nlohmann::json MetricReport::to_json() const {
  using nlohmann::json;
  auto jnum = [](double v) -> json { return std::isnan(v) ? json(nullptr) : json(v); };
  json rows_j = json::array();
  for (const auto& r : rows)
    rows_j.push_back({{"image", r.id}, {"psnr", jnum(r.psnr)}, {"ssim", jnum(r.ssim)},
                      {"niqe", jnum(r.niqe)}});
  auto agg = [&](const MeanStd& m) {
    return json{{"mean", jnum(m.mean)}, {"std", jnum(m.std)}, {"display", format_mean_std(m)}};
  };
  return {{"dataset", dataset},
          {"psnr_cap_db", psnr_cap},
          {"std", sample_std ? "sample" : "population"},
          {"rows", rows_j},
          {"aggregate", {{"psnr", agg(psnr)}, {"ssim", agg(ssim)}, {"niqe", agg(niqe)}}}};
}

MetricReport evaluate_split(const std::filesystem::path& restored_dir,
                            const std::filesystem::path& truth_dir, const std::string& dataset,
                            const NiqeModel* niqe_model) {
  const auto restored = list_png(restored_dir);
  const auto truth = list_png(truth_dir);
  std::set<std::string> truth_names;
  for (const auto& p : truth) truth_names.insert(p.filename().string());
  std::set<std::string> restored_names;
  for (const auto& p : restored) restored_names.insert(p.filename().string());
  for (const auto& n : restored_names)
    if (!truth_names.count(n))
      fail(ErrorCode::PairMismatch, "no ground truth for " + (restored_dir / n).string());
  for (const auto& n : truth_names)
    if (!restored_names.count(n))
      fail(ErrorCode::PairMismatch, "no restored image for " + (truth_dir / n).string());

  MetricReport rep;
  rep.dataset = dataset;
  for (const auto& p : restored) {
    const std::string name = p.filename().string();
    const Image r = load_image(p);
    const Image t = load_image(truth_dir / name);
    if (!r.same_shape(t)) fail(ErrorCode::PairMismatch, "size mismatch for " + name);
    MetricRow row;
    row.id = p.stem().string();
    row.psnr = psnr(r, t, rep.psnr_cap);
    row.ssim = ssim(r, t);
    row.niqe = std::numeric_limits<double>::quiet_NaN();
    if (niqe_model && r.height >= niqe_model->block_h && r.width >= niqe_model->block_w)
      row.niqe = niqe(r, *niqe_model);
    rep.rows.push_back(row);
  }
  rep.recompute();
  return rep;
}

}  // namespace aosr
