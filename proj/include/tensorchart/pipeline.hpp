// SPDX-License-Identifier: Apache-2.0
//
// Pipeline orchestration: a flat key = value config with section headers,
// and the five pipeline commands (generate, featurize, train, evaluate,
// baseline-isomap) as library functions. The CLI is a thin wrapper mapping
// error types onto exit codes.

#ifndef TENSORCHART_PIPELINE_HPP
#define TENSORCHART_PIPELINE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tensorchart/dataset.hpp"
#include "tensorchart/eval.hpp"
#include "tensorchart/features.hpp"
#include "tensorchart/network.hpp"

namespace tensorchart {

struct PipelineConfig {
  SystemConfig system;
  TrajectoryConfig trajectory;

  // dataset
  std::size_t n_samples = 1000;
  std::uint64_t dataset_seed = 1;
  std::optional<double> snr_db;  // unset: no noise
  std::size_t hopping = 1;       // observation h_p; 1 = full band

  // features
  std::size_t feature_hp = 17;
  std::vector<std::size_t> tucker_ranks = {8, 8, 8};
  std::size_t geodesic_k = 10;

  // network + training
  NetworkArch arch;
  TrainConfig train;

  // evaluation
  std::size_t metric_k = 0;  // 0: floor(0.05 * n)
  std::string scenario = "clean";
};

// Canonical text form; parse(print(cfg)) == cfg.
std::string print_config(const PipelineConfig &cfg);
PipelineConfig parse_config_text(const std::string &text);
PipelineConfig load_config(const std::string &path);

std::uint64_t file_digest(const std::string &path);

std::size_t effective_metric_k(const PipelineConfig &cfg, std::size_t n);

struct GenerateSummary {
  std::string dataset_path;
  std::size_t n_samples = 0;
  std::uint64_t digest = 0;
};

GenerateSummary cmd_generate(const PipelineConfig &cfg, const std::string &dataset_path);

struct FeaturizeSummary {
  std::string features_path;
  std::string dissimilarity_path;
  std::vector<std::size_t> feature_shape;
};

FeaturizeSummary cmd_featurize(const PipelineConfig &cfg, const std::string &dataset_path,
                               const std::string &features_path,
                               const std::string &dissimilarity_path);

struct TrainSummary {
  std::string model_path;
  std::string loss_path;
  std::size_t parameter_count = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

TrainSummary cmd_train(const PipelineConfig &cfg, const std::string &features_path,
                       const std::string &dissimilarity_path, const std::string &model_path,
                       const std::string &loss_path);

struct EvaluateSummary {
  MetricReport metrics;
  double ks_against_targets = 0.0;
  double affine_residual_rms = 0.0;
  std::string report_path;
  std::string svg_path;
};

EvaluateSummary cmd_evaluate(const PipelineConfig &cfg, const std::string &model_path,
                             const std::string &features_path,
                             const std::string &dissimilarity_path,
                             const std::string &dataset_path, const std::string &report_path,
                             const std::string &svg_path);

struct BaselineSummary {
  MetricReport metrics;
  double negative_mass = 0.0;
  double affine_residual_rms = 0.0;
  std::string report_path;
  std::string svg_path;
};

BaselineSummary cmd_baseline_isomap(const PipelineConfig &cfg,
                                    const std::string &dissimilarity_path,
                                    const std::string &dataset_path,
                                    const std::string &report_path, const std::string &svg_path);

}  // namespace tensorchart

#endif
