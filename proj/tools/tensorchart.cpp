// SPDX-License-Identifier: Apache-2.0
//
// tensorchart: channel-charting pipeline driver.
// Exit codes: 0 ok, 1 usage/config, 2 io, 3 corrupt artifact,
// 4 training divergence, 5 artifact inconsistency.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "tensorchart/pipeline.hpp"

using namespace tensorchart;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<double> snr_db;
  std::optional<std::size_t> hopping;
};

PipelineConfig resolve_config(const CommonOpts &opts) {
  PipelineConfig cfg;
  if (!opts.config_path.empty()) cfg = load_config(opts.config_path);
  if (opts.seed) {
    cfg.dataset_seed = *opts.seed;
    cfg.train.seed = *opts.seed;
  }
  if (opts.snr_db) cfg.snr_db = *opts.snr_db;
  if (opts.hopping) cfg.hopping = *opts.hopping;
  return cfg;
}

std::string join(const std::string &dir, const std::string &name) {
  return (std::filesystem::path(dir) / name).string();
}

void add_common(CLI::App *cmd, CommonOpts &opts, bool with_generate_flags) {
  cmd->add_option("--config", opts.config_path, "config file (key = value sections)");
  cmd->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
  cmd->add_option("--seed", opts.seed, "seed for dataset generation and training");
  if (with_generate_flags) {
    cmd->add_option("--snr", opts.snr_db, "apply AWGN at this SNR in dB");
    cmd->add_option("--hopping", opts.hopping, "1/h_p consecutive-block observation");
  }
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"channel charting over covariance tensor features"};
  app.require_subcommand(1);

  CommonOpts gen_opts, feat_opts, train_opts, eval_opts, base_opts, print_opts;
  std::string dataset_path, features_path, dissim_path, model_path;

  auto *generate = app.add_subcommand("generate", "simulate a labeled channel dataset");
  add_common(generate, gen_opts, true);

  auto *featurize = app.add_subcommand("featurize", "covariance features + geodesic targets");
  featurize->add_option("dataset", dataset_path, "CCDS dataset file")->required();
  add_common(featurize, feat_opts, false);

  auto *train_cmd = app.add_subcommand("train", "fit the charting network");
  train_cmd->add_option("features", features_path, "CCFT feature file")->required();
  train_cmd->add_option("dissimilarity", dissim_path, "CCDM dissimilarity file")->required();
  add_common(train_cmd, train_opts, false);

  auto *evaluate = app.add_subcommand("evaluate", "chart quality metrics + scatter plot");
  evaluate->add_option("model", model_path, "CCNN model file")->required();
  evaluate->add_option("features", features_path, "CCFT feature file")->required();
  evaluate->add_option("dissimilarity", dissim_path, "CCDM dissimilarity file")->required();
  evaluate->add_option("dataset", dataset_path, "CCDS dataset file")->required();
  add_common(evaluate, eval_opts, false);

  auto *baseline = app.add_subcommand("baseline-isomap", "classical MDS on the geodesic matrix");
  baseline->add_option("dissimilarity", dissim_path, "CCDM dissimilarity file")->required();
  baseline->add_option("dataset", dataset_path, "CCDS dataset file")->required();
  add_common(baseline, base_opts, false);

  auto *print_cmd = app.add_subcommand("print-config", "print the effective configuration");
  print_cmd->add_option("--config", print_opts.config_path, "config file to load first");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) {
      const PipelineConfig cfg = resolve_config(gen_opts);
      std::filesystem::create_directories(gen_opts.out_dir);
      const auto summary = cmd_generate(cfg, join(gen_opts.out_dir, "dataset.ccds"));
      std::printf("dataset: %s\n", summary.dataset_path.c_str());
      std::printf("samples: %zu\n", summary.n_samples);
      std::printf("seed: %llu\n", static_cast<unsigned long long>(cfg.dataset_seed));
      std::printf("config digest: %016llx\n",
                  static_cast<unsigned long long>(fnv1a(print_config(cfg))));
      std::printf("file digest: %016llx\n", static_cast<unsigned long long>(summary.digest));
    } else if (featurize->parsed()) {
      const PipelineConfig cfg = resolve_config(feat_opts);
      std::filesystem::create_directories(feat_opts.out_dir);
      const auto summary = cmd_featurize(cfg, dataset_path, join(feat_opts.out_dir, "features.ccft"),
                                         join(feat_opts.out_dir, "dissimilarity.ccdm"));
      std::printf("features: %s\n", summary.features_path.c_str());
      std::printf("dissimilarity: %s\n", summary.dissimilarity_path.c_str());
      std::printf("feature shape: %zux%zux%zu\n", summary.feature_shape[0],
                  summary.feature_shape[1], summary.feature_shape[2]);
    } else if (train_cmd->parsed()) {
      const PipelineConfig cfg = resolve_config(train_opts);
      std::filesystem::create_directories(train_opts.out_dir);
      const auto summary = cmd_train(cfg, features_path, dissim_path,
                                     join(train_opts.out_dir, "model.ccnn"),
                                     join(train_opts.out_dir, "loss.csv"));
      std::printf("parameters: %zu\n", summary.parameter_count);
      std::printf("model: %s\n", summary.model_path.c_str());
      std::printf("loss log: %s\n", summary.loss_path.c_str());
      std::printf("loss: %.6f -> %.6f\n", summary.initial_loss, summary.final_loss);
      std::printf("model digest: %016llx\n",
                  static_cast<unsigned long long>(file_digest(summary.model_path)));
    } else if (evaluate->parsed()) {
      const PipelineConfig cfg = resolve_config(eval_opts);
      std::filesystem::create_directories(eval_opts.out_dir);
      const auto summary =
          cmd_evaluate(cfg, model_path, features_path, dissim_path, dataset_path,
                       join(eval_opts.out_dir, "report.txt"), join(eval_opts.out_dir, "chart.svg"));
      std::printf("ct = %.4f\ntw = %.4f\nks = %.4f\n", summary.metrics.ct, summary.metrics.tw,
                  summary.metrics.ks);
      std::printf("report: %s\n", summary.report_path.c_str());
      std::printf("plot: %s\n", summary.svg_path.c_str());
    } else if (baseline->parsed()) {
      const PipelineConfig cfg = resolve_config(base_opts);
      std::filesystem::create_directories(base_opts.out_dir);
      const auto summary = cmd_baseline_isomap(cfg, dissim_path, dataset_path,
                                               join(base_opts.out_dir, "isomap_report.txt"),
                                               join(base_opts.out_dir, "isomap_chart.svg"));
      std::printf("ct = %.4f\ntw = %.4f\nks = %.4f\n", summary.metrics.ct, summary.metrics.tw,
                  summary.metrics.ks);
      std::printf("report: %s\n", summary.report_path.c_str());
      std::printf("plot: %s\n", summary.svg_path.c_str());
    } else if (print_cmd->parsed()) {
      const PipelineConfig cfg = resolve_config(print_opts);
      std::fputs(print_config(cfg).c_str(), stdout);
    }
  } catch (const IoError &e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 2;
  } catch (const CorruptArtifactError &e) {
    std::fprintf(stderr, "corrupt artifact: %s\n", e.what());
    return 3;
  } catch (const DivergenceError &e) {
    std::fprintf(stderr, "training diverged: %s\n", e.what());
    return 4;
  } catch (const InconsistencyError &e) {
    std::fprintf(stderr, "inconsistent artifacts: %s\n", e.what());
    return 5;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
