// SPDX-License-Identifier: Apache-2.0

#include "tensorchart/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

#include "tensorchart/binio.hpp"
#include "tensorchart/parallel.hpp"

namespace tensorchart {

namespace {

std::string fmt_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

std::string fmt_shape_list(const std::vector<std::array<std::size_t, 3>> &shapes) {
  std::string out;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shapes[i][0]) + "x" + std::to_string(shapes[i][1]) + "x" +
           std::to_string(shapes[i][2]);
  }
  return out;
}

std::string fmt_size_list(const std::vector<std::size_t> &values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(values[i]);
  }
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string &s, const std::string &what) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoul(item));
    } catch (const std::exception &) {
      throw std::invalid_argument("config: bad list entry '" + item + "' for " + what);
    }
  }
  if (out.empty()) throw std::invalid_argument("config: empty list for " + what);
  return out;
}

std::vector<std::array<std::size_t, 3>> parse_shape_list(const std::string &s) {
  std::vector<std::array<std::size_t, 3>> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::array<std::size_t, 3> shape{};
    std::stringstream is(item);
    std::string part;
    int got = 0;
    while (std::getline(is, part, 'x')) {
      if (got >= 3) throw std::invalid_argument("config: shape '" + item + "' needs 3 dims");
      shape[got++] = std::stoul(part);
    }
    if (got != 3) throw std::invalid_argument("config: shape '" + item + "' needs 3 dims");
    out.push_back(shape);
  }
  if (out.empty()) throw std::invalid_argument("config: empty tcl_shapes");
  return out;
}

double parse_double(const std::string &s, const std::string &what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception &) {
    throw std::invalid_argument("config: bad number '" + s + "' for " + what);
  }
}

std::uint64_t parse_u64(const std::string &s, const std::string &what) {
  try {
    return std::stoull(s);
  } catch (const std::exception &) {
    throw std::invalid_argument("config: bad integer '" + s + "' for " + what);
  }
}

bool parse_bool(const std::string &s, const std::string &what) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("config: bad boolean '" + s + "' for " + what);
}

}  // namespace

std::string print_config(const PipelineConfig &c) {
  std::ostringstream out;
  out << "[system]\n";
  out << "n_rx = " << c.system.n_rx << "\n";
  out << "n_pol = " << c.system.n_pol << "\n";
  out << "n_tx = " << c.system.n_tx << "\n";
  out << "n_sub = " << c.system.n_sub << "\n";
  out << "delta_f = " << fmt_double(c.system.delta_f) << "\n";
  out << "f_c = " << fmt_double(c.system.f_c) << "\n";
  out << "path_count = " << c.system.path_count << "\n";
  out << "\n[trajectory]\n";
  out << "x_min = " << fmt_double(c.trajectory.x_min) << "\n";
  out << "x_max = " << fmt_double(c.trajectory.x_max) << "\n";
  out << "y_min = " << fmt_double(c.trajectory.y_min) << "\n";
  out << "y_max = " << fmt_double(c.trajectory.y_max) << "\n";
  out << "step_sigma = " << fmt_double(c.trajectory.step_sigma) << "\n";
  out << "momentum = " << fmt_double(c.trajectory.momentum) << "\n";
  out << "ue_height = " << fmt_double(c.trajectory.ue_height) << "\n";
  out << "bs_x = " << fmt_double(c.trajectory.bs_position[0]) << "\n";
  out << "bs_y = " << fmt_double(c.trajectory.bs_position[1]) << "\n";
  out << "bs_z = " << fmt_double(c.trajectory.bs_position[2]) << "\n";
  out << "field_grid = " << c.trajectory.field_grid << "\n";
  out << "angle_jitter = " << fmt_double(c.trajectory.angle_jitter) << "\n";
  out << "gain_jitter = " << fmt_double(c.trajectory.gain_jitter) << "\n";
  out << "nlos_gain_min = " << fmt_double(c.trajectory.nlos_gain_min) << "\n";
  out << "nlos_gain_max = " << fmt_double(c.trajectory.nlos_gain_max) << "\n";
  out << "reference_distance = " << fmt_double(c.trajectory.reference_distance) << "\n";
  out << "\n[dataset]\n";
  out << "n_samples = " << c.n_samples << "\n";
  out << "seed = " << c.dataset_seed << "\n";
  out << "snr_db = " << (c.snr_db ? fmt_double(*c.snr_db) : std::string("none")) << "\n";
  out << "hopping = " << c.hopping << "\n";
  out << "\n[features]\n";
  out << "h_p = " << c.feature_hp << "\n";
  out << "tucker_ranks = " << fmt_size_list(c.tucker_ranks) << "\n";
  out << "geodesic_k = " << c.geodesic_k << "\n";
  out << "\n[network]\n";
  out << "tcl_shapes = " << fmt_shape_list(c.arch.tcl_shapes) << "\n";
  out << "fcn_widths = " << fmt_size_list(c.arch.fcn_widths) << "\n";
  out << "leaky_slope = " << fmt_double(c.arch.leaky_slope) << "\n";
  out << "\n[train]\n";
  out << "batch_size = " << c.train.batch_size << "\n";
  out << "learning_rate = " << fmt_double(c.train.learning_rate) << "\n";
  out << "epochs = " << c.train.epochs << "\n";
  out << "beta1 = " << fmt_double(c.train.beta1) << "\n";
  out << "beta2 = " << fmt_double(c.train.beta2) << "\n";
  out << "epsilon = " << fmt_double(c.train.epsilon) << "\n";
  out << "seed = " << c.train.seed << "\n";
  out << "pairs_per_epoch = " << c.train.pairs_per_epoch << "\n";
  out << "full_pair_enumeration = " << (c.train.full_pair_enumeration ? "true" : "false") << "\n";
  out << "\n[eval]\n";
  out << "metric_k = " << c.metric_k << "\n";
  out << "scenario = " << c.scenario << "\n";
  return out.str();
}

PipelineConfig parse_config_text(const std::string &text) {
  PipelineConfig c;
  std::istringstream in(text);
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(line_no) + ": bad section");
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string qual = section + "." + key;

    if (qual == "system.n_rx") c.system.n_rx = parse_u64(value, qual);
    else if (qual == "system.n_pol") c.system.n_pol = parse_u64(value, qual);
    else if (qual == "system.n_tx") c.system.n_tx = parse_u64(value, qual);
    else if (qual == "system.n_sub") c.system.n_sub = parse_u64(value, qual);
    else if (qual == "system.delta_f") c.system.delta_f = parse_double(value, qual);
    else if (qual == "system.f_c") c.system.f_c = parse_double(value, qual);
    else if (qual == "system.path_count") c.system.path_count = parse_u64(value, qual);
    else if (qual == "trajectory.x_min") c.trajectory.x_min = parse_double(value, qual);
    else if (qual == "trajectory.x_max") c.trajectory.x_max = parse_double(value, qual);
    else if (qual == "trajectory.y_min") c.trajectory.y_min = parse_double(value, qual);
    else if (qual == "trajectory.y_max") c.trajectory.y_max = parse_double(value, qual);
    else if (qual == "trajectory.step_sigma") c.trajectory.step_sigma = parse_double(value, qual);
    else if (qual == "trajectory.momentum") c.trajectory.momentum = parse_double(value, qual);
    else if (qual == "trajectory.ue_height") c.trajectory.ue_height = parse_double(value, qual);
    else if (qual == "trajectory.bs_x") c.trajectory.bs_position[0] = parse_double(value, qual);
    else if (qual == "trajectory.bs_y") c.trajectory.bs_position[1] = parse_double(value, qual);
    else if (qual == "trajectory.bs_z") c.trajectory.bs_position[2] = parse_double(value, qual);
    else if (qual == "trajectory.field_grid") c.trajectory.field_grid = parse_u64(value, qual);
    else if (qual == "trajectory.angle_jitter") c.trajectory.angle_jitter = parse_double(value, qual);
    else if (qual == "trajectory.gain_jitter") c.trajectory.gain_jitter = parse_double(value, qual);
    else if (qual == "trajectory.nlos_gain_min") c.trajectory.nlos_gain_min = parse_double(value, qual);
    else if (qual == "trajectory.nlos_gain_max") c.trajectory.nlos_gain_max = parse_double(value, qual);
    else if (qual == "trajectory.reference_distance") c.trajectory.reference_distance = parse_double(value, qual);
    else if (qual == "dataset.n_samples") c.n_samples = parse_u64(value, qual);
    else if (qual == "dataset.seed") c.dataset_seed = parse_u64(value, qual);
    else if (qual == "dataset.snr_db") {
      if (value == "none") c.snr_db.reset();
      else c.snr_db = parse_double(value, qual);
    } else if (qual == "dataset.hopping") c.hopping = parse_u64(value, qual);
    else if (qual == "features.h_p") c.feature_hp = parse_u64(value, qual);
    else if (qual == "features.tucker_ranks") c.tucker_ranks = parse_size_list(value, qual);
    else if (qual == "features.geodesic_k") c.geodesic_k = parse_u64(value, qual);
    else if (qual == "network.tcl_shapes") c.arch.tcl_shapes = parse_shape_list(value);
    else if (qual == "network.fcn_widths") c.arch.fcn_widths = parse_size_list(value, qual);
    else if (qual == "network.leaky_slope") c.arch.leaky_slope = parse_double(value, qual);
    else if (qual == "train.batch_size") c.train.batch_size = parse_u64(value, qual);
    else if (qual == "train.learning_rate") c.train.learning_rate = parse_double(value, qual);
    else if (qual == "train.epochs") c.train.epochs = parse_u64(value, qual);
    else if (qual == "train.beta1") c.train.beta1 = parse_double(value, qual);
    else if (qual == "train.beta2") c.train.beta2 = parse_double(value, qual);
    else if (qual == "train.epsilon") c.train.epsilon = parse_double(value, qual);
    else if (qual == "train.seed") c.train.seed = parse_u64(value, qual);
    else if (qual == "train.pairs_per_epoch") c.train.pairs_per_epoch = parse_u64(value, qual);
    else if (qual == "train.full_pair_enumeration") c.train.full_pair_enumeration = parse_bool(value, qual);
    else if (qual == "eval.metric_k") c.metric_k = parse_u64(value, qual);
    else if (qual == "eval.scenario") c.scenario = value;
    else
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key '" +
                                  qual + "'");
  }
  return c;
}

PipelineConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::uint64_t file_digest(const std::string &path) {
  std::ifstream in = open_input(path);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  char buf[65536];
  while (in) {
    in.read(buf, sizeof buf);
    h = fnv1a(buf, std::size_t(in.gcount()), h);
  }
  return h;
}

std::size_t effective_metric_k(const PipelineConfig &cfg, std::size_t n) {
  std::size_t k = cfg.metric_k != 0 ? cfg.metric_k : std::size_t(0.05 * double(n));
  k = std::max<std::size_t>(1, k);
  if (2 * k >= n) k = n >= 4 ? n / 2 - 1 : 1;
  return k;
}

GenerateSummary cmd_generate(const PipelineConfig &cfg, const std::string &dataset_path) {
  const auto positions = plan_trajectory(cfg.dataset_seed, cfg.n_samples, cfg.trajectory);
  const ClusterField field(cfg.dataset_seed, cfg.system, cfg.trajectory);
  if (cfg.hopping != 1) {
    if (cfg.hopping == 0 || cfg.system.n_sub % cfg.hopping != 0)
      throw std::invalid_argument("generate: hopping must divide the subcarrier count");
  }

  DatasetWriter writer(dataset_path, cfg.system, std::uint32_t(cfg.n_samples),
                       std::uint32_t(cfg.hopping));
  const std::size_t chunk = 64;
  std::vector<Sample> buffer;
  for (std::size_t start = 0; start < cfg.n_samples; start += chunk) {
    const std::size_t stop = std::min(cfg.n_samples, start + chunk);
    buffer.assign(stop - start, Sample{});
    parallel_for(0, stop - start, [&](std::size_t k) {
      const std::size_t i = start + k;
      Sample s;
      s.position = positions[i];
      s.channel =
          cdl_channel(field.paths_at(positions[i]), field.rx_array(), field.tx_array(), cfg.system);
      if (cfg.snr_db)
        s.channel = add_awgn(s.channel, *cfg.snr_db, mix_seed(cfg.dataset_seed) + i);
      if (cfg.hopping != 1)
        apply_hopping(s, cfg.hopping, i % cfg.hopping);
      else
        s.observed.assign(cfg.system.n_sub, 1);
      buffer[k] = std::move(s);
    });
    for (Sample &s : buffer) writer.append(s);
  }
  writer.finish();

  GenerateSummary out;
  out.dataset_path = dataset_path;
  out.n_samples = cfg.n_samples;
  out.digest = file_digest(dataset_path);
  return out;
}

FeaturizeSummary cmd_featurize(const PipelineConfig &cfg, const std::string &dataset_path,
                               const std::string &features_path,
                               const std::string &dissimilarity_path) {
  DatasetReader reader(dataset_path);
  const std::size_t n = reader.sample_count();
  if (n == 0) throw InconsistencyError("featurize: dataset is empty");
  const SystemConfig &sys = reader.system();
  if (sys.n_sub % cfg.feature_hp != 0)
    throw std::invalid_argument("featurize: h_p must divide the subcarrier count");

  FeatureWriter writer(features_path, std::uint32_t(n));
  std::vector<ScmMatrix> scms(n);
  std::vector<std::size_t> shape;

  const std::size_t chunk = 64;
  std::vector<Sample> samples;
  std::vector<DenoisedFeature> feats;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t stop = std::min(n, start + chunk);
    samples.clear();
    for (std::size_t i = start; i < stop; ++i) samples.push_back(reader.next());
    feats.assign(stop - start, DenoisedFeature{});
    parallel_for(0, stop - start, [&](std::size_t k) {
      const Sample &s = samples[k];
      const CovTensor cov = spatial_cov_tensor(s.channel, s.observed, cfg.feature_hp);
      feats[k] = tucker_denoise(cov, cfg.tucker_ranks);
      scms[start + k] = overall_scm(s.channel, s.observed);
    });
    for (std::size_t k = 0; k < feats.size(); ++k) writer.append(feats[k], scms[start + k]);
    if (shape.empty()) shape = feats[0].real_part.shape();
  }
  writer.finish();

  const DissimilarityMatrix direct = scm_dissimilarity_matrix(scms);
  const DissimilarityMatrix geodesic = geodesic_dissimilarity(direct, cfg.geodesic_k);
  save_dissimilarity(dissimilarity_path, geodesic);

  FeaturizeSummary out;
  out.features_path = features_path;
  out.dissimilarity_path = dissimilarity_path;
  out.feature_shape = shape;
  return out;
}

TrainSummary cmd_train(const PipelineConfig &cfg, const std::string &features_path,
                       const std::string &dissimilarity_path, const std::string &model_path,
                       const std::string &loss_path) {
  const FeatureSet fs = load_features(features_path);
  const DissimilarityMatrix targets = load_dissimilarity(dissimilarity_path);
  if (fs.features.size() != targets.n)
    throw InconsistencyError("train: feature count " + std::to_string(fs.features.size()) +
                             " != dissimilarity size " + std::to_string(targets.n));
  if (fs.features.empty()) throw InconsistencyError("train: no features");

  NetworkArch arch = cfg.arch;
  const auto &shape = fs.features[0].real_part.shape();
  arch.input_shape = {shape[0], shape[1], shape[2]};
  const NetworkParams initial = init_network(arch, cfg.train.seed);

  const TrainResult result = train(initial, fs.features, targets, cfg.train);
  save_network(model_path, result.params);

  std::ofstream loss = open_output(loss_path);
  loss << "epoch,mean_loss\n";
  loss.precision(17);
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e)
    loss << e << "," << result.epoch_loss[e] << "\n";
  loss.flush();
  if (!loss) throw IoError("train: cannot write " + loss_path);

  TrainSummary out;
  out.model_path = model_path;
  out.loss_path = loss_path;
  out.parameter_count = result.params.parameter_count();
  out.initial_loss = result.epoch_loss.front();
  out.final_loss = result.epoch_loss.back();
  return out;
}

namespace {

std::vector<ChartPoint> chart_all(const NetworkParams &model, const FeatureSet &fs) {
  std::vector<ChartPoint> z(fs.features.size());
  parallel_for(0, fs.features.size(), [&](std::size_t i) {
    z[i] = infer(model, fs.features[i].real_part, fs.features[i].imag_part);
  });
  return z;
}

void write_report(const std::string &path,
                  const std::vector<std::pair<std::string, std::string>> &entries) {
  std::ofstream out = open_output(path);
  for (const auto &[key, value] : entries) out << key << " = " << value << "\n";
  out.flush();
  if (!out) throw IoError("report: cannot write " + path);
}

std::string fmt_metric(double v) {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed << v;
  return out.str();
}

}  // namespace

EvaluateSummary cmd_evaluate(const PipelineConfig &cfg, const std::string &model_path,
                             const std::string &features_path,
                             const std::string &dissimilarity_path,
                             const std::string &dataset_path, const std::string &report_path,
                             const std::string &svg_path) {
  const NetworkParams model = load_network(model_path);
  const FeatureSet fs = load_features(features_path);
  const DissimilarityMatrix targets = load_dissimilarity(dissimilarity_path);
  const auto positions = load_positions(dataset_path);

  const std::size_t n = fs.features.size();
  if (targets.n != n || positions.size() != n)
    throw InconsistencyError("evaluate: artifact sample counts differ (features " +
                             std::to_string(n) + ", dissimilarity " + std::to_string(targets.n) +
                             ", dataset " + std::to_string(positions.size()) + ")");
  const auto &shape = fs.features[0].real_part.shape();
  if (model.arch.input_shape[0] != shape[0] || model.arch.input_shape[1] != shape[1] ||
      model.arch.input_shape[2] != shape[2])
    throw InconsistencyError("evaluate: model input shape does not match the features");

  const std::vector<ChartPoint> z = chart_all(model, fs);
  const DissimilarityMatrix d_truth = euclidean_dissimilarity_matrix(positions);
  const std::size_t k = effective_metric_k(cfg, n);
  const MetricReport metrics = evaluate_chart(d_truth, z, k);
  const double ks_targets = kruskal_stress(targets, z);
  const AffineFit fit = optimal_affine(z, positions);

  std::ofstream svg = open_output(svg_path);
  svg << scatter_svg(positions, fit.aligned);
  svg.flush();
  if (!svg) throw IoError("evaluate: cannot write " + svg_path);

  write_report(report_path, {
                                {"scenario", cfg.scenario},
                                {"n", std::to_string(n)},
                                {"k", std::to_string(k)},
                                {"seed", std::to_string(cfg.dataset_seed)},
                                {"ct", fmt_metric(metrics.ct)},
                                {"tw", fmt_metric(metrics.tw)},
                                {"ks", fmt_metric(metrics.ks)},
                                {"ks_targets", fmt_metric(ks_targets)},
                                {"affine_residual_rms", fmt_metric(fit.residual_rms)},
                                {"parameters", std::to_string(model.parameter_count())},
                            });

  EvaluateSummary out;
  out.metrics = metrics;
  out.ks_against_targets = ks_targets;
  out.affine_residual_rms = fit.residual_rms;
  out.report_path = report_path;
  out.svg_path = svg_path;
  return out;
}

BaselineSummary cmd_baseline_isomap(const PipelineConfig &cfg,
                                    const std::string &dissimilarity_path,
                                    const std::string &dataset_path,
                                    const std::string &report_path, const std::string &svg_path) {
  const DissimilarityMatrix d_geo = load_dissimilarity(dissimilarity_path);
  if (d_geo.kind != DissimilarityKind::kGeodesic)
    throw InconsistencyError("baseline-isomap: geodesic dissimilarity artifact required");
  const auto positions = load_positions(dataset_path);
  if (positions.size() != d_geo.n)
    throw InconsistencyError("baseline-isomap: artifact sample counts differ");

  const MdsResult mds = isomap_baseline(d_geo);
  const DissimilarityMatrix d_truth = euclidean_dissimilarity_matrix(positions);
  const std::size_t k = effective_metric_k(cfg, d_geo.n);
  const MetricReport metrics = evaluate_chart(d_truth, mds.points, k);
  const AffineFit fit = optimal_affine(mds.points, positions);

  std::ofstream svg = open_output(svg_path);
  svg << scatter_svg(positions, fit.aligned);
  svg.flush();
  if (!svg) throw IoError("baseline-isomap: cannot write " + svg_path);

  write_report(report_path, {
                                {"scenario", cfg.scenario + "-isomap"},
                                {"n", std::to_string(d_geo.n)},
                                {"k", std::to_string(k)},
                                {"seed", std::to_string(cfg.dataset_seed)},
                                {"ct", fmt_metric(metrics.ct)},
                                {"tw", fmt_metric(metrics.tw)},
                                {"ks", fmt_metric(metrics.ks)},
                                {"negative_eig_mass", fmt_metric(mds.negative_mass)},
                                {"affine_residual_rms", fmt_metric(fit.residual_rms)},
                            });

  BaselineSummary out;
  out.metrics = metrics;
  out.negative_mass = mds.negative_mass;
  out.affine_residual_rms = fit.residual_rms;
  out.report_path = report_path;
  out.svg_path = svg_path;
  return out;
}

}  // namespace tensorchart
