#include "aosr/aosr.h"

#include <cmath>
#include <exception>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "checkpoint.hpp"
#include "degrade.hpp"
#include "error.hpp"
#include "harness.hpp"
#include "metrics.hpp"
#include "net.hpp"
#include "priors.hpp"
#include "rng.hpp"

struct aosr_image {
  aosr::Image img;
};

struct aosr_model {
  aosr::Checkpoint ckpt;
};

struct aosr_niqe_model {
  aosr::NiqeModel model;
};

namespace {

namespace fs = std::filesystem;

thread_local std::string g_last_error;

template <class F>
aosr_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return AOSR_OK;
  } catch (const aosr::Error& e) {
    g_last_error = e.what();
    return static_cast<aosr_status>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return AOSR_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return AOSR_ERR_INTERNAL;
}

void require(const void* p, const char* what) {
  if (!p) aosr::fail(aosr::ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

aosr_image* wrap(aosr::Image img) { return new aosr_image{std::move(img)}; }

void report(aosr_progress_fn fn, void* user, const std::string& line) {
  if (fn) fn(line.c_str(), user);
}

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(digits);
  ss << v;
  return ss.str();
}

aosr::SynthesisRanges ranges_with_set(aosr::SceneKind kind, const char* atmo_set_path) {
  aosr::SynthesisRanges r;
  if (atmo_set_path) {
    aosr::AtmoLightSet set = aosr::read_atmo_set(atmo_set_path);
    if (kind == aosr::SceneKind::Haze) r.haze = set;
    if (kind == aosr::SceneKind::Sand) r.sand = set;
    set.validate(kind);
  }
  return r;
}

}  // namespace

extern "C" {

const char* aosr_version(void) { return "1.0.0"; }

const char* aosr_last_error(void) { return g_last_error.c_str(); }

const char* aosr_status_name(aosr_status status) {
  if (status == AOSR_OK) return "Ok";
  if (status == AOSR_ERR_INTERNAL) return "InternalError";
  return aosr::error_code_name(static_cast<aosr::ErrorCode>(status));
}

aosr_status aosr_image_load(const char* path, aosr_image** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = wrap(aosr::load_image(path));
  });
}

aosr_status aosr_image_create(int height, int width, int channels, const double* data, aosr_image** out) {
  return guarded([&] {
    require(out, "out");
    if (height < 1 || width < 1 || (channels != 1 && channels != 3))
      aosr::fail(aosr::ErrorCode::InvalidArgument, "image needs positive size and 1 or 3 channels");
    aosr::Image img(height, width, channels);
    if (data) std::copy(data, data + img.size(), img.data.begin());
    *out = wrap(std::move(img));
  });
}

aosr_status aosr_image_save(const aosr_image* img, const char* path) {
  return guarded([&] {
    require(img, "img");
    require(path, "path");
    aosr::save_image(img->img, path);
  });
}

aosr_status aosr_image_shape(const aosr_image* img, int* height, int* width, int* channels) {
  return guarded([&] {
    require(img, "img");
    if (height) *height = img->img.height;
    if (width) *width = img->img.width;
    if (channels) *channels = img->img.channels;
  });
}

const double* aosr_image_data(const aosr_image* img) { return img ? img->img.data.data() : nullptr; }

void aosr_image_free(aosr_image* img) { delete img; }

aosr_status aosr_gamma_correct(const aosr_image* img, double gamma, double epsilon, aosr_image** out) {
  return guarded([&] {
    require(img, "img");
    require(out, "out");
    *out = wrap(aosr::gamma_correct(img->img, gamma, epsilon));
  });
}

aosr_status aosr_optimized_linear_stretch(const aosr_image* img, double p_min, double p_max, double p_a_min,
                                          double p_a_max, aosr_image** out) {
  return guarded([&] {
    require(img, "img");
    require(out, "out");
    *out = wrap(aosr::optimized_linear_stretch(img->img, {p_min, p_max, p_a_min, p_a_max}));
  });
}

aosr_status aosr_synthesize(const aosr_image* clean, const aosr_image* depth, const char* scene,
                            const char* atmo_set_path, uint64_t seed, aosr_image** out) {
  return guarded([&] {
    require(clean, "clean");
    require(scene, "scene");
    require(out, "out");
    const aosr::SceneKind kind = aosr::parse_scene(scene);
    std::optional<aosr::Image> d;
    if (depth) d = depth->img;
    *out = wrap(aosr::synth_pair(clean->img, d, kind, ranges_with_set(kind, atmo_set_path), seed).degraded);
  });
}

aosr_status aosr_model_load(const char* checkpoint_path, aosr_model** out) {
  return guarded([&] {
    require(checkpoint_path, "checkpoint_path");
    require(out, "out");
    *out = new aosr_model{aosr::load_checkpoint(checkpoint_path)};
  });
}

aosr_status aosr_model_restore(const aosr_model* model, const aosr_image* in, aosr_image** out) {
  return guarded([&] {
    require(model, "model");
    require(in, "in");
    require(out, "out");
    *out = wrap(aosr::aosrnet_forward(in->img, model->ckpt));
  });
}

void aosr_model_free(aosr_model* model) { delete model; }

aosr_status aosr_psnr(const aosr_image* a, const aosr_image* b, double* out) {
  return guarded([&] {
    require(a, "a");
    require(b, "b");
    require(out, "out");
    *out = aosr::psnr(a->img, b->img);
  });
}

aosr_status aosr_ssim(const aosr_image* a, const aosr_image* b, double* out) {
  return guarded([&] {
    require(a, "a");
    require(b, "b");
    require(out, "out");
    *out = aosr::ssim(a->img, b->img);
  });
}

aosr_status aosr_niqe_model_load(const char* path, aosr_niqe_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new aosr_niqe_model{aosr::NiqeModel::load(path)};
  });
}

aosr_status aosr_niqe(const aosr_image* img, const aosr_niqe_model* model, double* out) {
  return guarded([&] {
    require(img, "img");
    require(model, "model");
    require(out, "out");
    *out = aosr::niqe(img->img, model->model);
  });
}

void aosr_niqe_model_free(aosr_niqe_model* model) { delete model; }

aosr_status aosr_synth_dir(const char* clean_dir, const char* depth_dir, const char* out_dir, const char* scene,
                           const char* atmo_set_path, uint64_t seed, aosr_progress_fn progress, void* user) {
  return guarded([&] {
    require(clean_dir, "clean_dir");
    require(out_dir, "out_dir");
    require(scene, "scene");
    const aosr::SceneKind kind = aosr::parse_scene(scene);
    if (kind != aosr::SceneKind::LowLight && !depth_dir)
      aosr::fail(aosr::ErrorCode::MissingDepth,
                 std::string(aosr::scene_name(kind)) + " synthesis needs a depth directory");
    const aosr::SynthesisRanges ranges = ranges_with_set(kind, atmo_set_path);
    const auto files = aosr::list_png(clean_dir);
    if (files.empty()) aosr::fail(aosr::ErrorCode::EmptyCorpus, std::string("no PNG images in ") + clean_dir);
    const fs::path out(out_dir);
    fs::create_directories(out / "degraded");
    fs::create_directories(out / "clean");
    aosr::DatasetManifest m;
    for (std::size_t i = 0; i < files.size(); ++i) {
      const fs::path& f = files[i];
      const aosr::Image clean = aosr::load_image(f);
      std::optional<aosr::Image> depth;
      if (depth_dir) {
        const fs::path d = fs::path(depth_dir) / f.filename();
        if (fs::exists(d)) depth = aosr::load_gray(d);
        else if (kind != aosr::SceneKind::LowLight)
          aosr::fail(aosr::ErrorCode::MissingDepth, "no depth map " + d.string());
      }
      aosr::DegradationSpec spec;
      const aosr::ImagePair p =
          aosr::synth_pair(clean, depth, kind, ranges, aosr::derive_seed(seed, {i}), &spec);
      aosr::save_image(p.degraded, out / "degraded" / f.filename());
      aosr::save_image(p.clean, out / "clean" / f.filename());
      aosr::ManifestEntry e;
      e.id = f.stem().string();
      e.clean = out / "clean" / f.filename();
      e.degraded = out / "degraded" / f.filename();
      e.scene = kind;
      m.entries.push_back(std::move(e));
      std::ostringstream line;
      line << "synth " << f.filename().string() << " scene=" << aosr::scene_name(kind);
      if (kind == aosr::SceneKind::LowLight)
        line << " dark_gamma=" << fixed(spec.dark_gamma, 4) << " illum_scale=" << fixed(spec.illum_scale, 4);
      else
        line << " beta=" << fixed(spec.beta, 4) << " A=(" << fixed(spec.atmo_light[0], 3) << ','
             << fixed(spec.atmo_light[1], 3) << ',' << fixed(spec.atmo_light[2], 3) << ')';
      report(progress, user, line.str());
    }
    aosr::save_manifest(m, out / "manifest.json");
  });
}

aosr_status aosr_build_manifest(const char* clean_dir, const char* depth_dir, const double* scene_mix,
                                double test_fraction, uint64_t seed, const char* out_path) {
  return guarded([&] {
    require(clean_dir, "clean_dir");
    require(out_path, "out_path");
    aosr::ManifestRequest req;
    if (scene_mix) req.scene_mix = {scene_mix[0], scene_mix[1], scene_mix[2]};
    req.test_fraction = test_fraction;
    std::optional<fs::path> depth;
    if (depth_dir) depth = depth_dir;
    const fs::path out(out_path);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    aosr::save_manifest(aosr::build_manifest(clean_dir, depth, req, seed), out);
  });
}

aosr_status aosr_train(const char* config_path, const char* manifest_path, const char* out_dir,
                       aosr_progress_fn progress, void* user) {
  return guarded([&] {
    require(config_path, "config_path");
    require(manifest_path, "manifest_path");
    require(out_dir, "out_dir");
    const aosr::TrainConfig cfg = aosr::load_train_config(config_path);
    const aosr::DatasetManifest m = aosr::load_manifest(manifest_path);
    aosr::TrainOptions opts;
    opts.out_dir = fs::path(out_dir);
    opts.on_epoch = [&](const aosr::EpochLog& e) {
      std::ostringstream line;
      line.precision(6);
      line << "epoch " << e.epoch + 1 << '/' << cfg.epochs << " lr=" << e.lr << " steps=" << e.steps
           << " loss=" << e.total << " (l1=" << e.l1 << " color=" << e.color << " cr=" << e.cr << ')';
      report(progress, user, line.str());
    };
    aosr::train(cfg, m, opts);
  });
}

aosr_status aosr_restore_dir(const char* checkpoint_path, const char* in_dir, const char* out_dir,
                             aosr_progress_fn progress, void* user) {
  return guarded([&] {
    require(checkpoint_path, "checkpoint_path");
    require(in_dir, "in_dir");
    require(out_dir, "out_dir");
    const aosr::Checkpoint ck = aosr::load_checkpoint(checkpoint_path);
    const auto files = aosr::list_png(in_dir);
    if (files.empty()) aosr::fail(aosr::ErrorCode::EmptyInput, std::string("no PNG images in ") + in_dir);
    fs::create_directories(out_dir);
    for (const fs::path& f : files) {
      aosr::save_image(aosr::aosrnet_forward(aosr::load_image(f), ck), fs::path(out_dir) / f.filename());
      report(progress, user, "restored " + f.filename().string());
    }
  });
}

aosr_status aosr_eval_dir(const char* restored_dir, const char* truth_dir, const char* dataset,
                          const char* niqe_model_path, const char* report_path) {
  return guarded([&] {
    require(restored_dir, "restored_dir");
    require(truth_dir, "truth_dir");
    require(report_path, "report_path");
    std::optional<aosr::NiqeModel> model;
    if (niqe_model_path) model = aosr::NiqeModel::load(niqe_model_path);
    const aosr::MetricReport rep = aosr::evaluate_split(restored_dir, truth_dir, dataset ? dataset : "",
                                                        model ? &*model : nullptr);
    const fs::path out(report_path);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    aosr::write_text_atomic(out, rep.to_csv());
    fs::path js = out;
    js.replace_extension(".json");
    aosr::write_text_atomic(js, rep.to_json().dump(2) + "\n");
  });
}

aosr_status aosr_ols_sweep(const char* grid_path, const char* eval_dir, const char* out_csv) {
  return guarded([&] {
    require(grid_path, "grid_path");
    require(eval_dir, "eval_dir");
    require(out_csv, "out_csv");
    const auto rep = aosr::ols_sweep(aosr::read_sweep_grid(grid_path), eval_dir);
    const fs::path out(out_csv);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    aosr::write_text_atomic(out, rep.to_csv());
  });
}

aosr_status aosr_ablate(const char* kind, const char* config_path, const char* manifest_path,
                        const char* out_csv, aosr_progress_fn progress, void* user) {
  return guarded([&] {
    require(kind, "kind");
    require(config_path, "config_path");
    require(out_csv, "out_csv");
    const aosr::AblationKind k = aosr::parse_ablation_kind(kind);
    const aosr::TrainConfig cfg = aosr::load_train_config(config_path);
    fs::path mpath;
    if (manifest_path) {
      mpath = manifest_path;
    } else {
      std::ifstream in(config_path);
      const auto j = nlohmann::json::parse(in, nullptr, false);
      if (j.is_discarded() || !j.contains("manifest") || !j.at("manifest").is_string())
        aosr::fail(aosr::ErrorCode::InvalidArgument, "no manifest given and the config names none");
      mpath = fs::path(config_path).parent_path() / j.at("manifest").get<std::string>();
    }
    const aosr::DatasetManifest m = aosr::load_manifest(mpath);
    const auto rows = aosr::ablation_rows(k);
    const auto rep = aosr::run_ablation(k, cfg, m, [&](std::size_t i, const aosr::AblationRow& r) {
      std::ostringstream line;
      line << "ablation row " << i + 1 << '/' << rows.size() << " [" << r.toggles[0] << r.toggles[1]
           << r.toggles[2] << "] psnr=" << aosr::format_mean_std({r.psnr_mean, r.psnr_std})
           << " ssim=" << aosr::format_mean_std({r.ssim_mean, r.ssim_std});
      report(progress, user, line.str());
    });
    const fs::path out(out_csv);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    aosr::write_text_atomic(out, rep.to_csv());
  });
}

}  // extern "C"
