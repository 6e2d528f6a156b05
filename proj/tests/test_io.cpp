// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "tensorchart/pipeline.hpp"
#include "tensorchart/rng.hpp"

using namespace tensorchart;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("tensorchart_io_" + std::to_string(Rng(42).next_u64() % 100000) +
                                        "_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string &name) const { return (path / name).string(); }
};

PipelineConfig tiny_pipeline_config() {
  PipelineConfig cfg;
  // enough samples and step size that the walk genuinely covers 2-D; a short
  // filament would give a line metric and a degenerate second MDS axis
  cfg.n_samples = 120;
  cfg.trajectory.step_sigma = 5.0;
  cfg.dataset_seed = 9;
  cfg.train.seed = 9;
  cfg.train.epochs = 4;
  cfg.train.batch_size = 8;
  cfg.geodesic_k = 6;
  cfg.metric_k = 3;
  return cfg;
}

Dataset tiny_dataset() {
  SystemConfig sys;
  sys.n_rx = 4;
  sys.n_pol = 2;
  sys.n_tx = 2;
  sys.n_sub = 12;
  sys.path_count = 2;
  TrajectoryConfig traj;
  Dataset ds;
  ds.system = sys;
  ds.samples = generate_dataset(3, 6, sys, traj);
  apply_hopping(ds.samples[2], 3, 1);
  return ds;
}

}  // namespace

TEST_CASE("datasets round-trip bit-exactly including masks and offsets") {
  TempDir tmp;
  const Dataset ds = tiny_dataset();
  const std::string path = tmp.file("ds.ccds");
  save_dataset(path, ds);
  const Dataset back = load_dataset(path);

  REQUIRE(back.samples.size() == ds.samples.size());
  CHECK(back.system.n_rx == ds.system.n_rx);
  CHECK(back.system.delta_f == ds.system.delta_f);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    CHECK(back.samples[i].position == ds.samples[i].position);
    CHECK(back.samples[i].observed == ds.samples[i].observed);
    CHECK(back.samples[i].hopping_offset == ds.samples[i].hopping_offset);
    for (std::size_t j = 0; j < ds.samples[i].channel.size(); ++j)
      CHECK(back.samples[i].channel.data()[j] == ds.samples[i].channel.data()[j]);
  }

  const auto positions = load_positions(path);
  REQUIRE(positions.size() == ds.samples.size());
  for (std::size_t i = 0; i < positions.size(); ++i)
    CHECK(positions[i] == ds.samples[i].position);
}

TEST_CASE("corrupt dataset files are rejected with a diagnostic") {
  TempDir tmp;
  const std::string path = tmp.file("bad.ccds");
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOPEgarbage";
  }
  CHECK_THROWS_AS(load_dataset(path), CorruptArtifactError);

  const Dataset ds = tiny_dataset();
  const std::string good = tmp.file("good.ccds");
  save_dataset(good, ds);
  const auto size = fs::file_size(good);
  fs::resize_file(good, size - 17);
  CHECK_THROWS_AS(load_dataset(good), CorruptArtifactError);

  CHECK_THROWS_AS(load_dataset(tmp.file("missing.ccds")), IoError);
}

TEST_CASE("dissimilarity files preserve kind and payload") {
  TempDir tmp;
  Rng rng(5);
  DissimilarityMatrix d(7, DissimilarityKind::kGeodesic);
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = i + 1; j < 7; ++j) {
      const double v = rng.uniform();
      d.at(i, j) = v;
      d.at(j, i) = v;
    }
  const std::string path = tmp.file("d.ccdm");
  save_dissimilarity(path, d);
  const auto back = load_dissimilarity(path);
  CHECK(back.kind == DissimilarityKind::kGeodesic);
  REQUIRE(back.n == d.n);
  for (std::size_t i = 0; i < d.values.size(); ++i) CHECK(back.values[i] == d.values[i]);
}

TEST_CASE("feature files round-trip real/imag tensors and the overall SCM") {
  TempDir tmp;
  Rng rng(6);
  const std::string path = tmp.file("f.ccft");
  FeatureWriter writer(path, 2);
  std::vector<DenoisedFeature> feats(2);
  std::vector<ScmMatrix> scms;
  for (int s = 0; s < 2; ++s) {
    feats[s].real_part = RealTensor({3, 3, 2});
    feats[s].imag_part = RealTensor({3, 3, 2});
    for (auto &v : feats[s].real_part.data()) v = rng.normal();
    for (auto &v : feats[s].imag_part.data()) v = rng.normal();
    ScmMatrix scm(3, 3);
    for (auto &v : scm.data()) v = {rng.normal(), rng.normal()};
    writer.append(feats[s], scm);
    scms.push_back(scm);
  }
  writer.finish();

  const FeatureSet back = load_features(path);
  REQUIRE(back.features.size() == 2);
  for (int s = 0; s < 2; ++s) {
    for (std::size_t i = 0; i < feats[s].real_part.size(); ++i) {
      CHECK(back.features[s].real_part.data()[i] == feats[s].real_part.data()[i]);
      CHECK(back.features[s].imag_part.data()[i] == feats[s].imag_part.data()[i]);
    }
    for (std::size_t i = 0; i < scms[s].data().size(); ++i)
      CHECK(back.scms[s].data()[i] == scms[s].data()[i]);
  }
}

TEST_CASE("the printed config parses back to the same canonical text") {
  PipelineConfig cfg;
  cfg.snr_db = 0.0;
  cfg.scenario = "noise";
  cfg.train.epochs = 77;
  cfg.tucker_ranks = {6, 6, 5};
  const std::string text = print_config(cfg);
  const PipelineConfig parsed = parse_config_text(text);
  CHECK(print_config(parsed) == text);

  PipelineConfig defaults;
  CHECK(print_config(parse_config_text(print_config(defaults))) == print_config(defaults));
  CHECK(!parse_config_text(print_config(defaults)).snr_db.has_value());
}

TEST_CASE("unknown config keys and malformed lines are rejected") {
  CHECK_THROWS_AS(parse_config_text("[system]\nbogus = 3\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("[system\nn_rx = 4\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("[train]\nlearning_rate = fast\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("no_equals_here\n"), std::invalid_argument);
}

TEST_CASE("defaults match the reference system dimensions") {
  PipelineConfig cfg;
  CHECK(cfg.system.n_rx == 32);
  CHECK(cfg.system.n_pol == 2);
  CHECK(cfg.system.n_tx == 2);
  CHECK(cfg.system.n_sub == 408);
  CHECK(cfg.system.f_c == 3.5e9);
  CHECK(cfg.n_samples == 1000);
  CHECK(cfg.train.batch_size == 32);
  CHECK(cfg.train.learning_rate == 1e-3);
  CHECK(cfg.train.epochs == 300);
  CHECK(cfg.feature_hp == 17);
  CHECK(effective_metric_k(cfg, 1000) == 50);
}

TEST_CASE("the full pipeline runs end to end on a small config and is deterministic") {
  TempDir tmp;
  PipelineConfig cfg = tiny_pipeline_config();

  const auto gen = cmd_generate(cfg, tmp.file("dataset.ccds"));
  CHECK(gen.n_samples == 120);

  const auto gen2 = cmd_generate(cfg, tmp.file("dataset2.ccds"));
  CHECK(gen2.digest == gen.digest);

  const auto feat = cmd_featurize(cfg, tmp.file("dataset.ccds"), tmp.file("features.ccft"),
                                  tmp.file("dissimilarity.ccdm"));
  const std::vector<std::size_t> want = {32, 32, 24};
  CHECK(feat.feature_shape == want);

  const auto feat2 = cmd_featurize(cfg, tmp.file("dataset.ccds"), tmp.file("features2.ccft"),
                                   tmp.file("dissimilarity2.ccdm"));
  CHECK(file_digest(tmp.file("features2.ccft")) == file_digest(tmp.file("features.ccft")));
  CHECK(file_digest(tmp.file("dissimilarity2.ccdm")) == file_digest(tmp.file("dissimilarity.ccdm")));

  const auto trained = cmd_train(cfg, tmp.file("features.ccft"), tmp.file("dissimilarity.ccdm"),
                                 tmp.file("model.ccnn"), tmp.file("loss.csv"));
  CHECK(trained.parameter_count >= 9500);
  CHECK(trained.parameter_count <= 14000);

  const auto trained2 = cmd_train(cfg, tmp.file("features.ccft"), tmp.file("dissimilarity.ccdm"),
                                  tmp.file("model2.ccnn"), tmp.file("loss2.csv"));
  CHECK(file_digest(tmp.file("model2.ccnn")) == file_digest(tmp.file("model.ccnn")));

  // loss log has one row per epoch plus the header
  {
    std::ifstream loss(tmp.file("loss.csv"));
    std::string line;
    std::size_t rows = 0;
    std::getline(loss, line);
    CHECK(line == "epoch,mean_loss");
    while (std::getline(loss, line))
      if (!line.empty()) ++rows;
    CHECK(rows == cfg.train.epochs);
  }

  const auto eval = cmd_evaluate(cfg, tmp.file("model.ccnn"), tmp.file("features.ccft"),
                                 tmp.file("dissimilarity.ccdm"), tmp.file("dataset.ccds"),
                                 tmp.file("report.txt"), tmp.file("chart.svg"));
  CHECK(eval.metrics.ct >= 0.0);
  CHECK(eval.metrics.ct <= 1.0);
  CHECK(eval.metrics.tw >= 0.0);
  CHECK(eval.metrics.tw <= 1.0);
  CHECK(eval.metrics.ks >= 0.0);

  {
    std::ifstream report(tmp.file("report.txt"));
    std::string text((std::istreambuf_iterator<char>(report)), std::istreambuf_iterator<char>());
    CHECK(text.find("ct = ") != std::string::npos);
    CHECK(text.find("tw = ") != std::string::npos);
    CHECK(text.find("ks = ") != std::string::npos);
    CHECK(text.find("scenario = clean") != std::string::npos);
  }
  {
    std::ifstream svg_file(tmp.file("chart.svg"));
    std::string svg((std::istreambuf_iterator<char>(svg_file)), std::istreambuf_iterator<char>());
    std::size_t count = 0, at = 0;
    while ((at = svg.find("<circle", at)) != std::string::npos) {
      ++count;
      at += 7;
    }
    CHECK(count == 2 * cfg.n_samples);
  }

  const auto base = cmd_baseline_isomap(cfg, tmp.file("dissimilarity.ccdm"), tmp.file("dataset.ccds"),
                                        tmp.file("isomap_report.txt"), tmp.file("isomap_chart.svg"));
  CHECK(base.metrics.ks >= 0.0);
  CHECK(fs::exists(tmp.file("isomap_chart.svg")));
}

TEST_CASE("mismatched artifacts are flagged as inconsistent") {
  TempDir tmp;
  PipelineConfig cfg = tiny_pipeline_config();
  cmd_generate(cfg, tmp.file("a.ccds"));
  cmd_featurize(cfg, tmp.file("a.ccds"), tmp.file("a.ccft"), tmp.file("a.ccdm"));
  cmd_train(cfg, tmp.file("a.ccft"), tmp.file("a.ccdm"), tmp.file("a.ccnn"), tmp.file("a.csv"));

  PipelineConfig small = cfg;
  small.n_samples = 60;
  cmd_generate(small, tmp.file("b.ccds"));

  CHECK_THROWS_AS(cmd_evaluate(cfg, tmp.file("a.ccnn"), tmp.file("a.ccft"), tmp.file("a.ccdm"),
                               tmp.file("b.ccds"), tmp.file("r.txt"), tmp.file("c.svg")),
                  InconsistencyError);
  CHECK_THROWS_AS(cmd_baseline_isomap(cfg, tmp.file("a.ccdm"), tmp.file("b.ccds"),
                                      tmp.file("r.txt"), tmp.file("c.svg")),
                  InconsistencyError);

  // direct-kind matrix is the wrong artifact for the baseline
  DissimilarityMatrix direct(60, DissimilarityKind::kDirect);
  for (std::size_t i = 0; i < 60; ++i)
    for (std::size_t j = 0; j < 60; ++j) direct.at(i, j) = i == j ? 0.0 : 1.0;
  save_dissimilarity(tmp.file("direct.ccdm"), direct);
  CHECK_THROWS_AS(cmd_baseline_isomap(cfg, tmp.file("direct.ccdm"), tmp.file("b.ccds"),
                                      tmp.file("r.txt"), tmp.file("c.svg")),
                  InconsistencyError);
}
