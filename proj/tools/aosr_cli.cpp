// Command-line front end. Talks to the library only through aosr.h.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aosr/aosr.h"

namespace {

void to_stderr(const char* line, void*) { std::fprintf(stderr, "%s\n", line); }

int finish(aosr_status st) {
  if (st == AOSR_OK) return 0;
  std::fprintf(stderr, "error (%s): %s\n", aosr_status_name(st), aosr_last_error());
  return 1;
}

const char* opt_cstr(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

struct UsageError {
  std::string msg;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"All-in-one scene recovery: synthesis, training, restoration and evaluation"};
  app.set_version_flag("--version", aosr_version());
  app.require_subcommand(1);

  int rc = 0;
  auto versioned = [&](CLI::App* sub) { sub->set_version_flag("--version", aosr_version()); };

  std::string clean, depth, out, scene, atmo;
  std::uint64_t seed = 0;
  auto* synth = app.add_subcommand("synth", "Synthesize degraded/clean pairs and a manifest");
  versioned(synth);
  synth->add_option("--clean", clean, "Directory of clean PNG images")->required();
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--scene", scene, "haze, sand or lowlight")
      ->required()
      ->check(CLI::IsMember({"haze", "sand", "lowlight"}));
  synth->add_option("--depth", depth, "Directory of depth maps named like the clean images");
  synth->add_option("--atmo-set", atmo, "Atmospheric light set file");
  synth->add_option("--seed", seed, "Random seed");
  synth->callback([&] {
    if (scene != "lowlight" && depth.empty())
      throw UsageError{"--depth is required for scene " + scene};
    rc = finish(aosr_synth_dir(clean.c_str(), opt_cstr(depth), out.c_str(), scene.c_str(), opt_cstr(atmo),
                               seed, to_stderr, nullptr));
  });

  std::vector<double> mix{1.0 / 3, 1.0 / 3, 1.0 / 3};
  double test_fraction = 0.0;
  auto* manifest = app.add_subcommand("manifest", "Assign scene kinds to a clean corpus");
  versioned(manifest);
  manifest->add_option("--clean", clean, "Directory of clean PNG images")->required();
  manifest->add_option("--depth", depth, "Directory of depth maps");
  manifest->add_option("--out", out, "Manifest file to write")->required();
  manifest->add_option("--mix", mix, "Haze, sand and low-light fractions")->expected(3)->delimiter(',');
  manifest->add_option("--test-fraction", test_fraction, "Share of each scene held out for testing")
      ->check(CLI::Range(0.0, 0.999));
  manifest->add_option("--seed", seed, "Random seed");
  manifest->callback([&] {
    rc = finish(aosr_build_manifest(clean.c_str(), opt_cstr(depth), mix.data(), test_fraction, seed, out.c_str()));
  });

  std::string config, manifest_path;
  auto* train = app.add_subcommand("train", "Train a network");
  versioned(train);
  train->add_option("--config", config, "Training config (JSON)")->required();
  train->add_option("--manifest", manifest_path, "Dataset manifest (JSON)")->required();
  train->add_option("--out", out, "Output directory for checkpoint and log")->required();
  train->callback([&] {
    rc = finish(aosr_train(config.c_str(), manifest_path.c_str(), out.c_str(), to_stderr, nullptr));
  });

  std::string ckpt, in;
  auto* restore = app.add_subcommand("restore", "Restore a directory of images");
  versioned(restore);
  restore->add_option("--ckpt", ckpt, "Checkpoint file")->required();
  restore->add_option("--in", in, "Input directory")->required();
  restore->add_option("--out", out, "Output directory")->required();
  restore->callback([&] {
    rc = finish(aosr_restore_dir(ckpt.c_str(), in.c_str(), out.c_str(), to_stderr, nullptr));
  });

  std::string restored, truth, report, niqe_model, dataset;
  auto* eval = app.add_subcommand("eval", "Score restored images against ground truth");
  versioned(eval);
  eval->add_option("--restored", restored, "Restored images")->required();
  eval->add_option("--truth", truth, "Ground-truth images")->required();
  eval->add_option("--report", report, "CSV report path (a .json copy is written alongside)")->required();
  eval->add_option("--niqe-model", niqe_model, "NIQE model file");
  eval->add_option("--dataset", dataset, "Dataset label recorded in the report");
  eval->callback([&] {
    rc = finish(aosr_eval_dir(restored.c_str(), truth.c_str(), dataset.c_str(), opt_cstr(niqe_model),
                              report.c_str()));
  });

  std::string grid, eval_dir;
  auto* sweep = app.add_subcommand("sweep", "OLS adjustment sweep per scene");
  versioned(sweep);
  sweep->add_option("--grid", grid, "Grid file of 'p_a_min p_a_max' lines")->required();
  sweep->add_option("--eval", eval_dir, "Directory with <scene>/degraded and <scene>/clean")
      ->required();
  sweep->add_option("--out", out, "CSV output")->default_val("sweep.csv");
  sweep->callback([&] { rc = finish(aosr_ols_sweep(grid.c_str(), eval_dir.c_str(), out.c_str())); });

  std::string kind;
  auto* ablate = app.add_subcommand("ablate", "Module or loss ablation");
  versioned(ablate);
  ablate->add_option("--kind", kind, "modules or losses")->required()->check(CLI::IsMember({"modules", "losses"}));
  ablate->add_option("--config", config, "Training config (JSON)")->required();
  ablate->add_option("--manifest", manifest_path, "Dataset manifest; defaults to the config's");
  ablate->add_option("--out", out, "CSV output")->default_val("ablation.csv");
  ablate->callback([&] {
    rc = finish(aosr_ablate(kind.c_str(), config.c_str(), opt_cstr(manifest_path), out.c_str(), to_stderr,
                            nullptr));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.msg.c_str());
    return 2;
  }
  return rc;
}
