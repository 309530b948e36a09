#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "image.hpp"
#include "json.hpp"

namespace aosr {

inline constexpr double kPsnrCap = 99.0;

// 10 log10(1 / MSE) over every element; `cap` when MSE is zero.
double psnr(const Image& a, const Image& b, double cap = kPsnrCap);

// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
// K2 = 0.03, dynamic range 1, valid-region means, averaged over channels.
double ssim(const Image& a, const Image& b);

// Pristine multivariate-Gaussian model for NIQE.
struct NiqeModel {
  int block_h = 96;
  int block_w = 96;
  Eigen::VectorXd mu;      // 36
  Eigen::MatrixXd cov;     // 36 x 36
  Eigen::MatrixXd window;  // local normalization weights

  static NiqeModel load(const std::filesystem::path& path);
};

// Natural image quality evaluator on the MATLAB-style luminance of `img`.
// TooSmall when the image holds no full block.
double niqe(const Image& img, const NiqeModel& model);

// Bicubic resize with antialiasing, matching MATLAB imresize.
Image matlab_imresize(const Image& img, double scale);

struct MetricRow {
  std::string id;
  double psnr = 0.0;
  double ssim = 0.0;
  double niqe = 0.0;  // NaN when not computed
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

// Mean and (sample or population) std, skipping NaNs.
MeanStd mean_std(const std::vector<double>& v, bool sample = true);

struct MetricReport {
  std::string dataset;
  std::vector<MetricRow> rows;
  bool sample_std = true;
  double psnr_cap = kPsnrCap;
  MeanStd psnr, ssim, niqe;

  void recompute();
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

// "22.939±4.575"
std::string format_mean_std(const MeanStd& m, int digits = 3);

// Pairs files by name; PairMismatch names the first file without a partner.
// NIQE is computed on the restored images when a model is given and the
// image is large enough, NaN otherwise.
MetricReport evaluate_split(const std::filesystem::path& restored_dir,
                            const std::filesystem::path& truth_dir, const std::string& dataset,
                            const NiqeModel* niqe_model = nullptr);

}  // namespace aosr
