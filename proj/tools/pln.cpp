// Command-line front end: train / evaluate / predict / trials / ppcheck /
// curves. Exit codes: 0 success, 2 usage or config error, 3 data error,
// 4 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "pln/pln.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Relative dataset paths resolve against PLN_DATA_DIR when it is set.
fs::path resolve_data_path(const std::string& p) {
  fs::path path(p);
  if (path.is_absolute() || fs::exists(path)) return path;
  if (const char* base = std::getenv("PLN_DATA_DIR")) {
    fs::path candidate = fs::path(base) / path;
    if (fs::exists(candidate)) return candidate;
  }
  return path;
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
  return j;
}

struct Manifest {
  std::string format = "csv";  // csv | libsvm
  pln::TaskKind task = pln::TaskKind::Classification;
  std::string train_path;
  std::string test_path;  // optional
  char delimiter = ',';
  int label_column = -1;
  int target_columns = 1;
  Eigen::Index n_features = 0;
  pln::SplitSpec split;
};

Manifest parse_manifest(const json& j) {
  Manifest m;
  const json& d = j.at("dataset");
  m.format = d.value("format", "csv");
  std::string task = d.value("task", "classification");
  if (task == "classification")
    m.task = pln::TaskKind::Classification;
  else if (task == "regression")
    m.task = pln::TaskKind::Regression;
  else
    throw DataError("manifest: unknown task '" + task + "'");
  m.train_path = d.at("train").get<std::string>();
  m.test_path = d.value("test", "");
  std::string delim = d.value("delimiter", ",");
  if (delim.size() != 1) throw DataError("manifest: delimiter must be 1 char");
  m.delimiter = delim[0];
  m.label_column = d.value("label_column", -1);
  m.target_columns = d.value("target_columns", 1);
  m.n_features = d.value("n_features", 0);

  if (j.contains("split")) {
    const json& s = j.at("split");
    std::string mode = s.value("mode", "fixed");
    if (mode == "fixed") {
      m.split.mode = pln::SplitSpec::Mode::Fixed;
    } else if (mode == "random_partition") {
      m.split.mode = pln::SplitSpec::Mode::RandomPartition;
      m.split.train_count = s.at("train_count").get<Eigen::Index>();
      m.split.test_count = s.at("test_count").get<Eigen::Index>();
      m.split.seed = s.value("seed", 0);
    } else {
      throw DataError("manifest: unknown split mode '" + mode + "'");
    }
  }
  return m;
}

pln::Dataset load_one(const Manifest& m, const std::string& path,
                      std::vector<std::string> class_names = {}) {
  fs::path resolved = resolve_data_path(path);
  if (!fs::exists(resolved))
    throw DataError("dataset file not found: " + path);
  if (m.format == "libsvm")
    return pln::load_libsvm(resolved.string(), m.task, m.n_features,
                            std::move(class_names));
  if (m.format == "csv") {
    pln::CsvSchema schema;
    schema.delimiter = m.delimiter;
    schema.label_column = m.label_column;
    schema.target_columns = m.target_columns;
    schema.task = m.task;
    return pln::load_csv(resolved.string(), schema, std::move(class_names));
  }
  throw DataError("manifest: unknown format '" + m.format + "'");
}

// Loads (train, test); in random_partition mode the train file holds the
// whole pool and the split happens here.
std::pair<pln::Dataset, pln::Dataset> load_split(const Manifest& m) {
  pln::Dataset train = load_one(m, m.train_path);
  if (m.split.mode == pln::SplitSpec::Mode::RandomPartition)
    return pln::partition(train, m.split.train_count, m.split.test_count,
                          m.split.seed);
  if (m.test_path.empty())
    throw DataError("manifest: fixed split needs a test file");
  pln::Dataset test = load_one(m, m.test_path, train.class_names);
  return {std::move(train), std::move(test)};
}

pln::TrainConfig parse_config(const json& j) {
  pln::TrainConfig cfg;
  cfg.lambda_ls = j.value("lambda_ls", cfg.lambda_ls);
  cfg.mu = j.value("mu", cfg.mu);
  cfg.k_max = j.value("k_max", cfg.k_max);
  cfg.alpha = j.value("alpha", cfg.alpha);
  cfg.delta = j.value("delta", cfg.delta);
  cfg.eta_n = j.value("eta_n", cfg.eta_n);
  cfg.eta_l = j.value("eta_l", cfg.eta_l);
  cfg.n_max = j.value("n_max", cfg.n_max);
  cfg.l_max = j.value("l_max", cfg.l_max);
  cfg.q = j.value("q", cfg.q);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.validation_fraction =
      j.value("validation_fraction", cfg.validation_fraction);
  cfg.normalize_random = j.value("normalize_random", cfg.normalize_random);
  cfg.admm_tol = j.value("admm_tol", cfg.admm_tol);
  if (j.contains("activation"))
    cfg.activation = pln::parse_activation(j.at("activation").get<std::string>());
  return cfg;
}

json step_to_json(const pln::GrowthStep& s) {
  json j{{"layer", s.layer_index},
         {"n_nodes", s.n_nodes_after},
         {"train_nme_db", s.train_nme_db},
         {"train_cost", s.train_cost},
         {"accepted", s.accepted},
         {"reason", pln::to_string(s.reason)},
         {"time_s", s.wall_time_s}};
  if (s.validation_nme_db) j["validation_nme_db"] = *s.validation_nme_db;
  if (s.train_accuracy) j["train_accuracy"] = *s.train_accuracy;
  return j;
}

// TrainConfig flags shared by train/trials; every config-file field has a
// CLI override.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    auto add = [this, cmd](const std::string& flag, const std::string& key) {
      cmd->add_option_function<std::string>(
          flag,
          [this, key](const std::string& v) { overrides[key] = v; });
    };
    add("--lambda-ls", "lambda_ls");
    add("--mu", "mu");
    add("--k-max", "k_max");
    add("--alpha", "alpha");
    add("--delta", "delta");
    add("--eta-n", "eta_n");
    add("--eta-l", "eta_l");
    add("--n-max", "n_max");
    add("--l-max", "l_max");
    add("--q", "q");
    add("--seed", "seed");
    add("--validation-fraction", "validation_fraction");
    add("--normalize-random", "normalize_random");
    add("--activation", "activation");
  }

  pln::TrainConfig resolve() const {
    json j = config_path.empty() ? json::object() : load_json(config_path);
    for (const auto& [key, val] : overrides) {
      if (key == "activation")
        j[key] = val;
      else if (key == "normalize_random")
        j[key] = (val == "true" || val == "1");
      else if (key == "k_max" || key == "l_max" || key == "q")
        j[key] = std::stoi(val);
      else if (key == "delta" || key == "n_max" || key == "seed")
        j[key] = std::stoll(val);
      else
        j[key] = std::stod(val);
    }
    return parse_config(j);
  }
};

void write_report(const pln::TrainReport& report, const fs::path& dir) {
  std::ofstream log(dir / "report.jsonl");
  for (const auto& s : report.steps) log << step_to_json(s).dump() << "\n";

  std::ofstream summary(dir / "summary.txt");
  summary << "baseline_train_nme_db " << report.baseline_train_nme_db << "\n"
          << "final_train_nme_db " << report.final_train_nme_db << "\n";
  if (report.final_validation_nme_db)
    summary << "final_validation_nme_db " << *report.final_validation_nme_db
            << "\n";
  if (report.final_train_accuracy)
    summary << "final_train_accuracy " << *report.final_train_accuracy << "\n";
  summary << "train_time_s " << report.total_time_s << "\n";
}

int cmd_train(const std::string& manifest_path, const ConfigFlags& flags,
              const std::string& out_dir) {
  Manifest m = parse_manifest(load_json(manifest_path));
  pln::TrainConfig cfg = flags.resolve();
  auto [train_set, test_set] = load_split(m);
  cfg.validate(train_set.target_dim());

  auto [model, report] = pln::train(train_set, cfg);

  fs::create_directories(out_dir);
  fs::path dir(out_dir);
  // write to a temporary name first so a failure leaves no partial model
  fs::path tmp = dir / "model.pln.tmp";
  pln::save_model(model, tmp.string());
  fs::rename(tmp, dir / "model.pln");
  write_report(report, dir);
  std::ofstream(dir / "model.txt") << pln::describe(model);

  Eigen::MatrixXd pred = pln::forward(model, test_set.X).predictions;
  std::cout << "train_nme_db " << report.final_train_nme_db << "\n"
            << "test_nme_db " << pln::nme_db(test_set.T, pred) << "\n";
  if (test_set.task == pln::TaskKind::Classification)
    std::cout << "test_accuracy " << pln::accuracy(test_set.T, pred) << "\n";
  std::cout << "train_time_s " << report.total_time_s << "\n"
            << "layers " << model.layers.size() << "\n";
  return kExitOk;
}

int cmd_evaluate(const std::string& model_path,
                 const std::string& manifest_path, int depth) {
  pln::PlnModel model = pln::load_model(model_path);
  Manifest m = parse_manifest(load_json(manifest_path));
  auto [train_set, test_set] = load_split(m);
  if (test_set.input_dim() != model.input_dim())
    throw DataError("model expects P=" + std::to_string(model.input_dim()) +
                    " but data has P=" + std::to_string(test_set.input_dim()));
  if (test_set.target_dim() != model.target_dim())
    throw DataError("model/target dimension mismatch");
  Eigen::MatrixXd pred = pln::forward(model, test_set.X, depth).predictions;
  std::cout << "test_nme_db " << pln::nme_db(test_set.T, pred) << "\n";
  if (test_set.task == pln::TaskKind::Classification)
    std::cout << "test_accuracy " << pln::accuracy(test_set.T, pred) << "\n";
  return kExitOk;
}

int cmd_predict(const std::string& model_path,
                const std::string& manifest_path, const std::string& out) {
  pln::PlnModel model = pln::load_model(model_path);
  Manifest m = parse_manifest(load_json(manifest_path));
  pln::Dataset data = load_one(
      m, m.test_path.empty() ? m.train_path : m.test_path, model.class_names);
  if (data.input_dim() != model.input_dim())
    throw DataError("model/data input dimension mismatch");
  Eigen::MatrixXd pred = pln::forward(model, data.X).predictions;
  std::ofstream os(out);
  if (!os) throw DataError("cannot write " + out);
  for (Eigen::Index j = 0; j < pred.cols(); ++j) {
    for (Eigen::Index i = 0; i < pred.rows(); ++i)
      os << pred(i, j) << (i + 1 < pred.rows() ? "," : "");
    if (!model.class_names.empty()) {
      Eigen::Index best = 0;
      for (Eigen::Index i = 1; i < pred.rows(); ++i)
        if (pred(i, j) > pred(best, j)) best = i;
      os << "," << model.class_names[static_cast<std::size_t>(best)];
    }
    os << "\n";
  }
  return kExitOk;
}

int cmd_trials(const std::string& manifest_path, const ConfigFlags& flags,
               int trials) {
  Manifest m = parse_manifest(load_json(manifest_path));
  pln::TrainConfig cfg = flags.resolve();

  pln::TrialSummary summary;
  if (m.split.mode == pln::SplitSpec::Mode::RandomPartition) {
    pln::Dataset pool = load_one(m, m.train_path);
    summary = pln::run_trials(pool, std::nullopt, m.split, cfg, trials);
  } else {
    auto [train_set, test_set] = load_split(m);
    summary = pln::run_trials(train_set, test_set, m.split, cfg, trials);
  }

  auto row = [](const std::string& name, const pln::MetricStat& s) {
    std::printf("%-14s %10.4f +- %.4f\n", name.c_str(), s.mean, s.stddev);
  };
  std::printf("trials         %10d\n", summary.trials);
  row("train_nme_db", summary.train_nme_db);
  row("test_nme_db", summary.test_nme_db);
  if (summary.test_accuracy) row("test_accuracy", *summary.test_accuracy);
  std::printf("%-14s %10.4f\n", "train_time_s", summary.mean_train_time_s);
  return kExitOk;
}

int cmd_ppcheck(const std::string& activation, Eigen::Index n, int trials) {
  pln::ActivationSpec spec = pln::parse_activation(activation);
  double residual = pln::verify_pp(spec, n, trials, 0);
  bool pass = residual <= 1e-9;
  std::cout << (pass ? "PASS" : "FAIL") << " residual=" << residual << "\n";
  return pass ? kExitOk : kExitNumerical;
}

int cmd_curves(const std::string& report_path, const std::string& out_dir) {
  std::ifstream in(report_path);
  if (!in) throw DataError("cannot open " + report_path);
  fs::create_directories(out_dir);
  fs::path dir(out_dir);
  std::ofstream nme(dir / "nodes_vs_nme.csv");
  std::ofstream acc(dir / "nodes_vs_accuracy.csv");
  std::ofstream widths(dir / "layer_nodes.csv");
  nme << "cumulative_random_nodes,layer,train_nme_db\n";
  acc << "cumulative_random_nodes,layer,train_accuracy\n";
  widths << "layer,n_nodes\n";

  std::string line;
  long long cumulative = 0;
  int last_layer = 0;
  long long last_layer_nodes = 0;
  long long prev_layers_total = 0;
  bool any = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError("malformed report line: " + std::string(e.what()));
    }
    if (!j.value("accepted", false)) continue;
    any = true;
    int layer = j.at("layer").get<int>();
    long long nodes = j.at("n_nodes").get<long long>();
    if (layer != last_layer) {
      if (last_layer != 0) {
        widths << last_layer << "," << last_layer_nodes << "\n";
        prev_layers_total += last_layer_nodes;
      }
      last_layer = layer;
    }
    last_layer_nodes = nodes;
    cumulative = prev_layers_total + nodes;
    nme << cumulative << "," << layer << "," << j.at("train_nme_db").dump()
        << "\n";
    if (j.contains("train_accuracy"))
      acc << cumulative << "," << layer << ","
          << j.at("train_accuracy").dump() << "\n";
  }
  if (last_layer != 0) widths << last_layer << "," << last_layer_nodes << "\n";
  if (!any) throw DataError("report contains no accepted steps");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Progressive Learning Network trainer and tools"};
  app.require_subcommand(1);

  std::string manifest, out_dir = "pln_out", model_path, report_path, out_file;
  std::string activation = "relu";
  int trials = 50, depth = -1;
  Eigen::Index pp_n = 32;
  int pp_trials = 1000;
  ConfigFlags train_flags, trial_flags;

  auto* train_cmd = app.add_subcommand("train", "train a model from a manifest");
  train_cmd->add_option("manifest", manifest)->required();
  train_cmd->add_option("--out", out_dir, "output directory");
  train_flags.attach(train_cmd);

  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a model");
  eval_cmd->add_option("model", model_path)->required();
  eval_cmd->add_option("manifest", manifest)->required();
  eval_cmd->add_option("--depth", depth, "evaluate at a fixed depth");

  auto* predict_cmd = app.add_subcommand("predict", "write predictions as CSV");
  predict_cmd->add_option("model", model_path)->required();
  predict_cmd->add_option("manifest", manifest)->required();
  predict_cmd->add_option("--out", out_file)->required();

  auto* trials_cmd =
      app.add_subcommand("trials", "repeated-trial mean/std protocol");
  trials_cmd->add_option("manifest", manifest)->required();
  trials_cmd->add_option("--trials", trials);
  trial_flags.attach(trials_cmd);

  auto* pp_cmd = app.add_subcommand("ppcheck", "verify the PP identity");
  pp_cmd->add_option("activation", activation)->required();
  pp_cmd->add_option("--n", pp_n);
  pp_cmd->add_option("--trials", pp_trials);

  auto* curves_cmd =
      app.add_subcommand("curves", "emit plot-ready series from a report");
  curves_cmd->add_option("report", report_path)->required();
  curves_cmd->add_option("--out", out_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(manifest, train_flags, out_dir);
    if (*eval_cmd) return cmd_evaluate(model_path, manifest, depth);
    if (*predict_cmd) return cmd_predict(model_path, manifest, out_file);
    if (*trials_cmd) return cmd_trials(manifest, trial_flags, trials);
    if (*pp_cmd) return cmd_ppcheck(activation, pp_n, pp_trials);
    if (*curves_cmd) return cmd_curves(report_path, out_dir);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}
