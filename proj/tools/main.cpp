// Command-line front end: data generation, training, evaluation, calibration,
// decision-boundary dumps, sampling, and gradient checking, all file-based.

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "gcsl/calibration.hpp"
#include "gcsl/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string join_path(const std::string& out_dir, const std::string& name) {
  return (fs::path(out_dir) / name).string();
}

int worker_count() {
  const char* env = std::getenv("GCSL_THREADS");
  if (env && *env) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 0) throw ConfigError("GCSL_THREADS must be a non-negative integer");
    if (v > 0) return static_cast<int>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// ---- config file handling -------------------------------------------------

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

struct RunConfig {
  gcsl::TrainConfig train;
  std::string train_csv;
  std::string test_csv;  // empty = no evaluation
  int trials = 1;
  int calibration_bins = 10;
};

gcsl::Vec json_to_vec(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array of numbers");
  gcsl::Vec v;
  for (const auto& e : j) {
    if (!e.is_number()) throw ConfigError(what + " must be an array of numbers");
    v.push_back(e.get<double>());
  }
  return v;
}

RunConfig parse_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }

  check_keys(j, {"mode", "train_csv", "test_csv", "epochs", "batch_size", "learning_rate",
                 "optimizer", "lambda", "seed", "trials", "classes", "calibration_bins",
                 "net", "sgld", "unlabeled_weight", "supervised_warmup"},
             "config");

  RunConfig cfg;
  if (!j.contains("mode")) throw ConfigError("config requires \"mode\"");
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "standalone_tractable")
    cfg.train.mode = gcsl::TrainMode::standalone_tractable;
  else if (mode == "joint_ebm")
    cfg.train.mode = gcsl::TrainMode::joint_ebm;
  else
    throw ConfigError("mode must be standalone_tractable or joint_ebm");

  if (!j.contains("train_csv")) throw ConfigError("config requires \"train_csv\"");
  cfg.train_csv = j.at("train_csv").get<std::string>();
  cfg.test_csv = j.value("test_csv", std::string{});

  cfg.train.epochs = j.value("epochs", 2000);
  cfg.train.batch_size = j.value("batch_size", 0);
  cfg.train.learning_rate = j.value("learning_rate", 0.001);
  cfg.train.lambda = j.value("lambda", 10.0);
  cfg.train.seed = j.value("seed", static_cast<uint64_t>(1));
  cfg.train.classes = j.value("classes", 0);
  cfg.train.unlabeled_weight = j.value("unlabeled_weight", 1.0);
  cfg.train.supervised_warmup = j.value("supervised_warmup", 0);
  cfg.trials = j.value("trials", 1);
  cfg.calibration_bins = j.value("calibration_bins", 10);

  const std::string opt = j.value("optimizer", std::string("sgd"));
  if (opt == "sgd")
    cfg.train.optimizer = gcsl::OptimizerKind::sgd;
  else if (opt == "adaptive_moment")
    cfg.train.optimizer = gcsl::OptimizerKind::adaptive_moment;
  else
    throw ConfigError("optimizer must be sgd or adaptive_moment");

  if (cfg.train.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (cfg.train.batch_size < 0) throw ConfigError("batch_size must be >= 0");
  if (!(cfg.train.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (cfg.train.lambda < 0.0) throw ConfigError("lambda must be >= 0");
  if (cfg.train.unlabeled_weight < 0.0) throw ConfigError("unlabeled_weight must be >= 0");
  if (cfg.train.supervised_warmup < 0) throw ConfigError("supervised_warmup must be >= 0");
  if (cfg.train.supervised_warmup > 0 && cfg.train.mode != gcsl::TrainMode::joint_ebm)
    throw ConfigError("supervised_warmup applies only to joint_ebm mode");
  if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
  if (cfg.calibration_bins < 1) throw ConfigError("calibration_bins must be >= 1");

  if (j.contains("net")) {
    const json& n = j.at("net");
    check_keys(n, {"layers", "activation"}, "net");
    if (!n.contains("layers")) throw ConfigError("net requires \"layers\"");
    for (const auto& e : n.at("layers")) {
      int v = e.get<int>();
      if (v < 1) throw ConfigError("net.layers entries must be >= 1");
      cfg.train.net_layers.push_back(v);
    }
    const std::string act = n.value("activation", std::string("tanh"));
    if (act == "tanh")
      cfg.train.activation = gcsl::Activation::tanh;
    else if (act == "relu")
      cfg.train.activation = gcsl::Activation::relu;
    else
      throw ConfigError("net.activation must be tanh or relu");
  }
  if (cfg.train.mode == gcsl::TrainMode::joint_ebm && cfg.train.net_layers.empty())
    throw ConfigError("joint_ebm mode requires a \"net\" section");

  if (j.contains("sgld")) {
    const json& s = j.at("sgld");
    check_keys(s, {"steps", "step_size", "noise_std", "init_low", "init_high", "chains",
                   "reinit_prob", "chain_init"},
               "sgld");
    cfg.train.sgld.steps = s.value("steps", 100);
    cfg.train.sgld.step_size = s.value("step_size", 2.0);
    cfg.train.sgld.noise_std = s.value("noise_std", 0.01);
    cfg.train.sgld.chains = s.value("chains", 64);
    cfg.train.sgld.reinit_prob = s.value("reinit_prob", 0.05);
    const std::string ci = s.value("chain_init", std::string("uniform_box"));
    if (ci == "uniform_box")
      cfg.train.sgld.chain_init = gcsl::ChainInit::uniform_box;
    else if (ci == "data")
      cfg.train.sgld.chain_init = gcsl::ChainInit::data;
    else
      throw ConfigError("sgld.chain_init must be uniform_box or data");
    if (s.contains("init_low")) cfg.train.sgld.init_low = json_to_vec(s.at("init_low"), "sgld.init_low");
    if (s.contains("init_high"))
      cfg.train.sgld.init_high = json_to_vec(s.at("init_high"), "sgld.init_high");
    if (cfg.train.sgld.steps < 0) throw ConfigError("sgld.steps must be >= 0");
    if (cfg.train.sgld.step_size < 0.0) throw ConfigError("sgld.step_size must be >= 0");
    if (cfg.train.sgld.noise_std < 0.0) throw ConfigError("sgld.noise_std must be >= 0");
    if (cfg.train.sgld.chains < 1) throw ConfigError("sgld.chains must be >= 1");
    if (cfg.train.sgld.reinit_prob < 0.0 || cfg.train.sgld.reinit_prob > 1.0)
      throw ConfigError("sgld.reinit_prob must be in [0, 1]");
  }
  return cfg;
}

std::string config_echo(const RunConfig& cfg, uint64_t seed) {
  json j;
  j["mode"] = cfg.train.mode == gcsl::TrainMode::joint_ebm ? "joint_ebm"
                                                           : "standalone_tractable";
  j["epochs"] = cfg.train.epochs;
  j["batch_size"] = cfg.train.batch_size;
  j["learning_rate"] = cfg.train.learning_rate;
  j["optimizer"] =
      cfg.train.optimizer == gcsl::OptimizerKind::sgd ? "sgd" : "adaptive_moment";
  j["lambda"] = cfg.train.lambda;
  j["seed"] = seed;
  j["train_csv"] = cfg.train_csv;
  if (!cfg.train.net_layers.empty()) {
    j["net"]["layers"] = cfg.train.net_layers;
    j["net"]["activation"] =
        cfg.train.activation == gcsl::Activation::relu ? "relu" : "tanh";
    j["unlabeled_weight"] = cfg.train.unlabeled_weight;
    j["supervised_warmup"] = cfg.train.supervised_warmup;
  }
  return j.dump();
}

// ---- subcommand bodies ----------------------------------------------------

struct GenDataArgs {
  int n_train = 100;
  int n_test = 1000;
  uint64_t seed = 1;
  double std_dev = 0.25;
  std::string mask = "none";
  uint64_t mask_seed = 0;
  std::string out_dir = ".";
};

gcsl::MaskRule parse_mask(const std::string& text, uint64_t mask_seed) {
  auto colon = text.find(':');
  std::string kind = text.substr(0, colon);
  gcsl::MaskRule rule;
  rule.seed = mask_seed;
  if (colon != std::string::npos) {
    try {
      rule.k = std::stoi(text.substr(colon + 1));
    } catch (...) {
      throw ConfigError("bad mask count in '" + text + "'");
    }
  }
  if (kind == "extremal")
    rule.kind = gcsl::MaskKind::extremal_y;
  else if (kind == "random")
    rule.kind = gcsl::MaskKind::random_k_per_class;
  else
    throw ConfigError("mask must be none, extremal:<k>, or random:<k>");
  return rule;
}

int cmd_gen_data(const GenDataArgs& args) {
  auto [train, test] = gcsl::gen_two_gaussians(args.n_train, args.n_test, args.seed,
                                               args.std_dev);
  if (args.mask != "none") train = gcsl::apply_mask(train, parse_mask(args.mask, args.mask_seed));
  gcsl::write_csv(train, join_path(args.out_dir, "train.csv"));
  gcsl::write_csv(test, join_path(args.out_dir, "test.csv"));
  std::cout << "wrote train.csv (" << train.size() << " rows, " << train.labeled_count()
            << " labeled) and test.csv (" << test.size() << " rows)\n";
  return 0;
}

void write_history_csv(const gcsl::TrainHistory& history, const std::string& path) {
  std::ostringstream out;
  out << "epoch,cross_entropy,generative_nll,coupling_penalty,total_loss,train_accuracy,"
         "seconds\n";
  for (size_t e = 0; e < history.epochs.size(); ++e) {
    const auto& s = history.epochs[e];
    out << (e + 1) << ',' << gcsl::format_double(s.loss.cross_entropy) << ','
        << gcsl::format_double(s.loss.generative_nll) << ','
        << gcsl::format_double(s.loss.coupling_penalty) << ','
        << gcsl::format_double(s.loss.total) << ','
        << gcsl::format_double(s.train_accuracy) << ',' << gcsl::format_double(s.seconds)
        << '\n';
  }
  gcsl::atomic_write_text(path, out.str());
}

int cmd_train(const std::string& config_path, const std::string& out_dir) {
  RunConfig cfg = parse_run_config(config_path);
  gcsl::Dataset train_data = gcsl::read_csv(cfg.train_csv);
  gcsl::Dataset test_data;
  const bool have_test = !cfg.test_csv.empty();
  if (have_test) test_data = gcsl::read_csv(cfg.test_csv);

  const int trials = cfg.trials;
  std::vector<double> accuracy(trials, 0.0);
  std::vector<std::string> failures(trials);
  std::atomic<int> next{0};

  auto run_trial = [&](int t) {
    gcsl::TrainConfig tc = cfg.train;
    tc.seed = cfg.train.seed + static_cast<uint64_t>(t);  // derived trial seed
    auto [model, history] = gcsl::train(train_data, tc);
    std::string suffix = trials == 1 ? "" : "_trial" + std::to_string(t + 1);
    gcsl::save_checkpoint(model, join_path(out_dir, "checkpoint" + suffix + ".json"),
                          config_echo(cfg, tc.seed));
    write_history_csv(history, join_path(out_dir, "history" + suffix + ".csv"));
    if (have_test) accuracy[t] = gcsl::evaluate(model, test_data).accuracy;
  };

  const int workers = std::min(worker_count(), trials);
  if (workers <= 1) {
    for (int t = 0; t < trials; ++t) run_trial(t);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int t = next.fetch_add(1); t < trials; t = next.fetch_add(1)) {
          try {
            run_trial(t);
          } catch (const std::exception& e) {
            failures[t] = e.what();
          }
        }
      });
    for (auto& th : pool) th.join();
    for (int t = 0; t < trials; ++t)
      if (!failures[t].empty()) throw std::runtime_error(failures[t]);
  }

  if (have_test) {
    double mean = 0.0;
    for (double a : accuracy) mean += a / trials;
    double var = 0.0;
    for (double a : accuracy) var += (a - mean) * (a - mean);
    double stddev = trials > 1 ? std::sqrt(var / (trials - 1)) : 0.0;

    std::ostringstream out;
    out << "trial,seed,test_accuracy\n";
    for (int t = 0; t < trials; ++t)
      out << (t + 1) << ',' << (cfg.train.seed + static_cast<uint64_t>(t)) << ','
          << gcsl::format_double(accuracy[t]) << '\n';
    gcsl::atomic_write_text(join_path(out_dir, "summary.csv"), out.str());
    std::cout << "test accuracy mean " << mean * 100.0 << "% std " << stddev * 100.0
              << "% over " << trials << (trials == 1 ? " trial\n" : " trials\n");
  } else {
    std::cout << "trained " << trials << (trials == 1 ? " model\n" : " models\n");
  }
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& data_path,
             const std::string& out_dir) {
  auto [model, echo] = gcsl::load_checkpoint(checkpoint);
  gcsl::Dataset data = gcsl::read_csv(data_path);
  if (data.dim() != model.input_dim())
    throw std::runtime_error("dimension mismatch: checkpoint expects " +
                             std::to_string(model.input_dim()) + "-D input, data is " +
                             std::to_string(data.dim()) + "-D");
  gcsl::EvalResult res = gcsl::evaluate(model, data);

  std::vector<gcsl::PredictionRecord> records(data.size());
  for (int i = 0; i < data.size(); ++i) {
    records[i].predicted = res.predicted[i];
    records[i].confidence = res.posteriors(i, res.predicted[i]);
    records[i].label = *data.labels[i];
  }
  gcsl::write_predictions_csv(records, join_path(out_dir, "predictions.csv"));

  json metrics;
  metrics["accuracy"] = res.accuracy;
  metrics["n"] = data.size();
  metrics["checkpoint"] = checkpoint;
  metrics["data"] = data_path;
  gcsl::atomic_write_text(join_path(out_dir, "metrics.json"), metrics.dump(2) + "\n");
  std::cout << "accuracy " << res.accuracy * 100.0 << "% on " << data.size() << " samples\n";
  return 0;
}

int cmd_calibrate(const std::string& predictions, int bins, const std::string& out_dir) {
  auto records = gcsl::read_predictions_csv(predictions);
  gcsl::CalibrationReport report = gcsl::ece(records, bins);
  gcsl::ConfidenceHistogram hist = gcsl::confidence_histogram(records, bins);

  {
    std::ostringstream out;
    out << "ece,accuracy,mean_confidence,n\n"
        << gcsl::format_double(report.ece) << ',' << gcsl::format_double(report.accuracy)
        << ',' << gcsl::format_double(report.mean_confidence) << ',' << report.n << '\n';
    gcsl::atomic_write_text(join_path(out_dir, "ece.csv"), out.str());
  }
  gcsl::write_report_csv(report, join_path(out_dir, "reliability.csv"));
  {
    std::ostringstream out;
    out << "bin,low,high,count\n";
    for (int b = 0; b < bins; ++b)
      out << (b + 1) << ',' << gcsl::format_double(static_cast<double>(b) / bins) << ','
          << gcsl::format_double(static_cast<double>(b + 1) / bins) << ','
          << hist.counts[b] << '\n';
    gcsl::atomic_write_text(join_path(out_dir, "histogram.csv"), out.str());
  }
  std::cout << "ECE " << report.ece << " over " << report.n << " predictions ("
            << bins << " bins)\n";
  return 0;
}

struct BoundaryArgs {
  std::string checkpoint;
  double x1_min = -2, x1_max = 2, x2_min = -2, x2_max = 2;
  int x1_steps = 50, x2_steps = 50;
  std::string out_dir = ".";
};

int cmd_boundary(const BoundaryArgs& args) {
  auto [model, echo] = gcsl::load_checkpoint(args.checkpoint);
  if (model.input_dim() != 2)
    throw std::runtime_error("boundary grids need a 2-D input model; checkpoint expects " +
                             std::to_string(model.input_dim()) + "-D input");
  if (args.x1_steps < 0 || args.x2_steps < 0)
    throw ConfigError("grid steps must be non-negative");

  auto coord = [](double lo, double hi, int steps, int i) {
    return steps <= 1 ? lo : lo + (hi - lo) * i / (steps - 1);
  };
  std::ostringstream out;
  out << "x1,x2,p_class1\n";
  for (int i = 0; i < args.x1_steps; ++i)
    for (int j = 0; j < args.x2_steps; ++j) {
      gcsl::Vec x{coord(args.x1_min, args.x1_max, args.x1_steps, i),
                  coord(args.x2_min, args.x2_max, args.x2_steps, j)};
      gcsl::Vec p = gcsl::posterior_disc(model.features(x), model.disc);
      out << gcsl::format_double(x[0]) << ',' << gcsl::format_double(x[1]) << ','
          << gcsl::format_double(p[0]) << '\n';
    }
  gcsl::atomic_write_text(join_path(args.out_dir, "boundary.csv"), out.str());
  std::cout << "wrote boundary.csv (" << args.x1_steps * args.x2_steps << " points)\n";
  return 0;
}

struct GenerateArgs {
  std::string checkpoint;
  int n = 100;
  int cls = 0;  // 1-based; 0 = marginal energy
  int steps = 100;
  double step_size = 0.02;
  double noise_std = 0.141421356237309515;  // sqrt(step_size) at the default step
  std::vector<double> init_low, init_high;
  uint64_t seed = 1;
  std::string out_dir = ".";
};

int cmd_generate(const GenerateArgs& args) {
  auto [model, echo] = gcsl::load_checkpoint(args.checkpoint);
  gcsl::SgldConfig cfg;
  cfg.steps = args.steps;
  cfg.step_size = args.step_size;
  cfg.noise_std = args.noise_std;
  cfg.init_low = args.init_low.empty() ? gcsl::Vec(model.input_dim(), -2.0)
                                       : gcsl::Vec(args.init_low);
  cfg.init_high = args.init_high.empty() ? gcsl::Vec(model.input_dim(), 2.0)
                                         : gcsl::Vec(args.init_high);
  gcsl::Mat samples =
      gcsl::generate(model, args.n, args.cls - 1, cfg, gcsl::Rng(args.seed));

  gcsl::Dataset out;
  out.features = samples;
  out.labels.assign(args.n, args.cls > 0 ? std::optional<int>(args.cls - 1) : std::nullopt);
  gcsl::write_csv(out, join_path(args.out_dir, "samples.csv"));
  std::cout << "wrote samples.csv (" << args.n << " rows)\n";
  return 0;
}

struct GradcheckArgs {
  int classes = 2;
  int dim = 2;
  int samples = 8;
  double lambda = 2.5;
  double tolerance = 1e-4;
  uint64_t seed = 1;
};

int cmd_gradcheck(const GradcheckArgs& args) {
  if (args.classes < 1 || args.dim < 1 || args.samples < 1)
    throw ConfigError("classes, dim, and samples must be positive");
  gcsl::Rng rng(args.seed);

  gcsl::HybridModel model(args.classes, args.dim);
  for (double& v : model.disc.weights.a) v = rng.normal();
  for (double& v : model.disc.biases) v = 0.3 * rng.normal();
  for (double& v : model.gen.mix_logits) v = 0.3 * rng.normal();
  for (double& v : model.gen.means.a) v = rng.normal();
  for (double& v : model.gen.precision.raw()) v = 0.2 * rng.normal();

  gcsl::Dataset data;
  data.features = gcsl::Mat(args.samples, args.dim, 0.0);
  data.labels.assign(args.samples, std::nullopt);
  for (int i = 0; i < args.samples; ++i) {
    for (int j = 0; j < args.dim; ++j) data.features(i, j) = 1.5 * rng.normal();
    if (i % 2 == 0) data.labels[i] = i % args.classes;  // half labeled, half not
  }

  gcsl::GradCheckReport report =
      gcsl::grad_check(model, data, args.lambda, args.tolerance);
  for (const auto& block : report.blocks)
    std::cout << (block.max_rel_err < args.tolerance ? "ok   " : "FAIL ") << block.name
              << " max_rel_err " << block.max_rel_err << '\n';
  std::cout << (report.pass ? "PASS" : "FAIL") << " worst " << report.worst
            << " tolerance " << report.tolerance << '\n';
  return report.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-coupled softmax layer toolkit"};
  app.require_subcommand(1);

  GenDataArgs gen_args;
  auto* gen = app.add_subcommand("gen-data", "Generate the two-Gaussians dataset");
  gen->add_option("--n-train", gen_args.n_train, "Training rows")->check(CLI::NonNegativeNumber);
  gen->add_option("--n-test", gen_args.n_test, "Test rows")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", gen_args.seed, "RNG seed");
  gen->add_option("--std", gen_args.std_dev, "Per-coordinate standard deviation");
  gen->add_option("--mask", gen_args.mask, "none, extremal:<k>, or random:<k>");
  gen->add_option("--mask-seed", gen_args.mask_seed, "Seed for random masks");
  gen->add_option("--out-dir", gen_args.out_dir, "Output directory");

  std::string train_config, train_out = ".";
  auto* tr = app.add_subcommand("train", "Train per a JSON config");
  tr->add_option("--config", train_config, "Config JSON path")->required();
  tr->add_option("--out-dir", train_out, "Output directory");

  std::string eval_ckpt, eval_data, eval_out = ".";
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on labeled data");
  ev->add_option("--checkpoint", eval_ckpt, "Checkpoint JSON path")->required();
  ev->add_option("--data", eval_data, "Labeled CSV path")->required();
  ev->add_option("--out-dir", eval_out, "Output directory");

  std::string cal_pred, cal_out = ".";
  int cal_bins = 10;
  auto* cal = app.add_subcommand("calibrate", "Calibration report from predictions CSV");
  cal->add_option("--predictions", cal_pred, "Predictions CSV path")->required();
  cal->add_option("--bins", cal_bins, "Number of confidence bins")->check(CLI::PositiveNumber);
  cal->add_option("--out-dir", cal_out, "Output directory");

  BoundaryArgs bd_args;
  auto* bd = app.add_subcommand("boundary", "Posterior grid for a 2-D model");
  bd->add_option("--checkpoint", bd_args.checkpoint, "Checkpoint JSON path")->required();
  bd->add_option("--x1-min", bd_args.x1_min);
  bd->add_option("--x1-max", bd_args.x1_max);
  bd->add_option("--x1-steps", bd_args.x1_steps);
  bd->add_option("--x2-min", bd_args.x2_min);
  bd->add_option("--x2-max", bd_args.x2_max);
  bd->add_option("--x2-steps", bd_args.x2_steps);
  bd->add_option("--out-dir", bd_args.out_dir, "Output directory");

  GenerateArgs gn_args;
  auto* gn = app.add_subcommand("generate", "Sample from a checkpoint with the Langevin sampler");
  gn->add_option("--checkpoint", gn_args.checkpoint, "Checkpoint JSON path")->required();
  gn->add_option("--n", gn_args.n, "Sample count")->check(CLI::NonNegativeNumber);
  gn->add_option("--class", gn_args.cls, "1-based class for conditional sampling (0 = marginal)");
  gn->add_option("--steps", gn_args.steps, "Sampler steps per chain");
  gn->add_option("--step-size", gn_args.step_size, "Drift scale");
  gn->add_option("--noise-std", gn_args.noise_std, "Per-step noise std");
  gn->add_option("--init-low", gn_args.init_low, "Per-dimension lower init bounds");
  gn->add_option("--init-high", gn_args.init_high, "Per-dimension upper init bounds");
  gn->add_option("--seed", gn_args.seed, "RNG seed");
  gn->add_option("--out-dir", gn_args.out_dir, "Output directory");

  GradcheckArgs gc_args;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of the analytic gradients");
  gc->add_option("--classes", gc_args.classes);
  gc->add_option("--dim", gc_args.dim);
  gc->add_option("--samples", gc_args.samples);
  gc->add_option("--lambda", gc_args.lambda);
  gc->add_option("--tolerance", gc_args.tolerance);
  gc->add_option("--seed", gc_args.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);  // --help and friends
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(gen_args);
    if (tr->parsed()) return cmd_train(train_config, train_out);
    if (ev->parsed()) return cmd_eval(eval_ckpt, eval_data, eval_out);
    if (cal->parsed()) return cmd_calibrate(cal_pred, cal_bins, cal_out);
    if (bd->parsed()) return cmd_boundary(bd_args);
    if (gn->parsed()) return cmd_generate(gn_args);
    if (gc->parsed()) return cmd_gradcheck(gc_args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\nRun with --help for usage.\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\nRun with --help for usage.\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
