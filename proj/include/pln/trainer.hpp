#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pln/data.hpp"
#include "pln/metrics.hpp"
#include "pln/model.hpp"
#include "pln/solvers.hpp"

namespace pln {

// splitmix64 step, used to spawn deterministic sub-seeds from a root seed.
inline std::uint64_t mix_seed(std::uint64_t root, std::uint64_t stream) {
  std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct TrainConfig {
  double lambda_ls = 1e2;
  double mu = 1e3;
  int k_max = 100;
  double alpha = 2.0;
  Eigen::Index delta = 50;
  double eta_n = 0.005;
  double eta_l = 0.1;
  Eigen::Index n_max = 1000;
  int l_max = 100;
  int q = 2;
  std::uint64_t seed = 0;
  double validation_fraction = 0.0;
  bool normalize_random = true;
  double admm_tol = 1e-6;
  ActivationSpec activation = ActivationSpec::relu();

  void validate(Eigen::Index Q) const {
    if (lambda_ls < 0.0) throw std::invalid_argument("config: lambda_ls < 0");
    if (mu <= 0.0) throw std::invalid_argument("config: mu must be positive");
    if (k_max < 1) throw std::invalid_argument("config: k_max must be >= 1");
    if (alpha < 1.0)
      throw std::invalid_argument(
          "config: alpha must be >= 1 so [U_Q, 0] stays feasible");
    if (delta < 1) throw std::invalid_argument("config: delta must be >= 1");
    if (q != 1 && q != 2) throw std::invalid_argument("config: q must be 1 or 2");
    if (n_max < 2 * Q)
      throw std::invalid_argument("config: n_max must be >= 2Q");
    if (l_max < 0) throw std::invalid_argument("config: l_max < 0");
    if (validation_fraction < 0.0 || validation_fraction >= 1.0)
      throw std::invalid_argument("config: validation_fraction in [0,1)");
  }
};

// Norm budget for the output-matrix constraint: ||O||_q <= alpha^{1/q} ||U_Q||_q.
inline double output_norm_budget(const TrainConfig& cfg, Eigen::Index Q) {
  const double c = cfg.activation.u_scale();
  const double u_norm =
      cfg.q == 2 ? c * std::sqrt(2.0 * static_cast<double>(Q))
                 : c * 2.0 * static_cast<double>(Q);
  return std::pow(cfg.alpha, 1.0 / cfg.q) * u_norm;
}

// Dense [U_Q, 0] candidate of width n.
inline Eigen::MatrixXd pp_fallback_matrix(const ActivationSpec& act,
                                          Eigen::Index Q, Eigen::Index n) {
  Eigen::MatrixXd O = Eigen::MatrixXd::Zero(Q, n);
  O.leftCols(Q) = act.u_scale() * Eigen::MatrixXd::Identity(Q, Q);
  O.middleCols(Q, Q) = -act.u_scale() * Eigen::MatrixXd::Identity(Q, Q);
  return O;
}

enum class StepReason {
  Accepted,
  NodeGainBelowEtaN,
  LayerGainBelowEtaL,
  HitNMax,
  HitLMax,
};

inline const char* to_string(StepReason r) {
  switch (r) {
    case StepReason::Accepted: return "accepted";
    case StepReason::NodeGainBelowEtaN: return "node_gain_below_eta_n";
    case StepReason::LayerGainBelowEtaL: return "layer_gain_below_eta_l";
    case StepReason::HitNMax: return "hit_n_max";
    case StepReason::HitLMax: return "hit_l_max";
  }
  return "?";
}

struct GrowthStep {
  int layer_index = 0;
  Eigen::Index n_nodes_after = 0;
  double train_nme_db = 0.0;
  std::optional<double> validation_nme_db;
  double train_cost = 0.0;
  bool accepted = false;
  StepReason reason = StepReason::Accepted;
  double wall_time_s = 0.0;
  std::optional<double> train_accuracy;  // classification only
};

struct TrainReport {
  double baseline_train_nme_db = 0.0;
  double baseline_cost = 0.0;
  std::vector<GrowthStep> steps;
  double final_train_nme_db = 0.0;
  std::optional<double> final_validation_nme_db;
  std::optional<double> final_train_accuracy;
  double total_time_s = 0.0;
};

inline std::pair<Eigen::MatrixXd, double> fit_linear_baseline(
    const Dataset& data, const TrainConfig& config) {
  if (data.size() < 1) throw std::invalid_argument("empty dataset");
  Eigen::MatrixXd W = solve_ridge({data.X, data.T, config.lambda_ls});
  double cost = (data.T - W * data.X).squaredNorm();
  return {W, cost};
}

struct OutputOptResult {
  Eigen::MatrixXd O;
  double cost = 0.0;  // sum_j ||t - O y||^2, no 1/2 factor
};

// Solves the constrained output problem by ADMM, then keeps the best of
// {ADMM iterate, PP fallback [U_Q, 0], extra candidates}. The PP fallback
// is feasible for alpha >= 1 and reproduces the previous prediction, which
// turns the monotone-cost argument into a runtime guarantee.
inline OutputOptResult optimize_output_matrix(
    const Eigen::MatrixXd& Y, const Eigen::MatrixXd& T,
    const TrainConfig& config,
    const std::vector<Eigen::MatrixXd>& extra_candidates = {},
    const std::optional<Eigen::MatrixXd>& warm_start = std::nullopt) {
  const Eigen::Index Q = T.rows(), n = Y.rows();
  if (n < 2 * Q)
    throw std::invalid_argument("optimize_output_matrix: need n >= 2Q");
  const double eps = output_norm_budget(config, Q);

  AdmmResult admm = solve_constrained_ls(
      {Y, T, eps, config.q}, {config.mu, config.k_max, config.admm_tol},
      warm_start);

  OutputOptResult best{admm.O, (T - admm.O * Y).squaredNorm()};
  auto consider = [&](const Eigen::MatrixXd& cand) {
    double c = (T - cand * Y).squaredNorm();
    if (c < best.cost) best = {cand, c};
  };
  consider(pp_fallback_matrix(config.activation, Q, n));
  for (const auto& cand : extra_candidates)
    if (cand.cols() == n && cand.rows() == Q) consider(cand);
  return best;
}

namespace detail {

inline double safe_ratio(double nme_old, double nme_new) {
  const double denom = std::max(std::abs(nme_old), 1e-12);
  return (nme_old - nme_new) / denom;
}

// Cached signals for the current depth on the training split and the
// optional validation split.
struct DepthState {
  Dataset train;
  std::optional<Dataset> val;
  Eigen::MatrixXd prev_output;      // y of the last layer (or X)
  Eigen::MatrixXd val_prev_output;
  double cost = 0.0;                // training cost at current depth
  double train_nme = 0.0;
  std::optional<double> val_nme;
  std::optional<double> train_acc;
  double decide_nme = 0.0;          // validation NME when available

  bool use_val() const { return val.has_value(); }
};

inline DepthState make_depth_state(const PlnModel& model, Dataset train,
                                   std::optional<Dataset> val) {
  DepthState st;
  st.train = std::move(train);
  st.val = std::move(val);
  st.prev_output = st.train.X;
  Eigen::MatrixXd pred = model.w_ls_star * st.train.X;
  Eigen::MatrixXd val_pred;
  if (st.use_val()) {
    st.val_prev_output = st.val->X;
    val_pred = model.w_ls_star * st.val->X;
  }
  for (const auto& layer : model.layers) {
    st.prev_output = layer_output(model.activation, layer, st.prev_output);
    pred = layer.output_matrix * st.prev_output;
    if (st.use_val()) {
      st.val_prev_output =
          layer_output(model.activation, layer, st.val_prev_output);
      val_pred = layer.output_matrix * st.val_prev_output;
    }
  }
  st.cost = (st.train.T - pred).squaredNorm();
  st.train_nme = nme_db(st.train.T, pred);
  if (st.train.task == TaskKind::Classification)
    st.train_acc = accuracy(st.train.T, pred);
  if (st.use_val()) st.val_nme = nme_db(st.val->T, val_pred);
  st.decide_nme = st.use_val() ? *st.val_nme : st.train_nme;
  return st;
}

// Candidate layer mid-optimization, before it is committed to the model.
struct LayerCandidate {
  PlnLayer layer;
  OutputOptResult opt;
  Eigen::MatrixXd Y;      // layer output on the training split
  Eigen::MatrixXd val_Y;
  double train_nme = 0.0;
  std::optional<double> val_nme;
  std::optional<double> train_acc;
  double decide_nme = 0.0;
};

inline void evaluate_candidate(LayerCandidate& c, const DepthState& st) {
  Eigen::MatrixXd pred = c.opt.O * c.Y;
  c.train_nme = nme_db(st.train.T, pred);
  if (st.train.task == TaskKind::Classification)
    c.train_acc = accuracy(st.train.T, pred);
  if (st.use_val()) c.val_nme = nme_db(st.val->T, c.opt.O * c.val_Y);
  c.decide_nme = st.use_val() ? *c.val_nme : c.train_nme;
}

// Width growth: extend by Delta while the relative NME improvement clears
// eta_n and the cap allows it. The RNG stream continues across extensions,
// so a rejected draw is not replayed by later layers.
inline void grow_candidate_width(LayerCandidate& cand, const DepthState& st,
                                 const TrainConfig& config,
                                 const ActivationSpec& act, int layer_index,
                                 std::mt19937_64& rng,
                                 std::vector<GrowthStep>& steps,
                                 const std::function<double()>& clock) {
  const Eigen::Index Q = st.train.T.rows();
  while (true) {
    if (cand.layer.n_nodes() + config.delta > config.n_max) {
      steps.push_back({layer_index, cand.layer.n_nodes(), cand.train_nme,
                       cand.val_nme, cand.opt.cost, false, StepReason::HitNMax,
                       clock(), cand.train_acc});
      return;
    }
    LayerCandidate next;
    next.layer = cand.layer;
    extend_layer(next.layer, config.delta, rng);
    next.Y = layer_output(act, next.layer, st.prev_output);
    if (st.use_val())
      next.val_Y = layer_output(act, next.layer, st.val_prev_output);

    // Zero-padded current solution is feasible and, without normalization,
    // reproduces the current cost exactly.
    Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(Q, next.layer.n_nodes());
    padded.leftCols(cand.layer.n_nodes()) = cand.opt.O;
    next.opt =
        optimize_output_matrix(next.Y, st.train.T, config, {padded}, padded);
    evaluate_candidate(next, st);

    const bool improves =
        safe_ratio(cand.decide_nme, next.decide_nme) >= config.eta_n;
    const bool cost_ok = next.opt.cost <= cand.opt.cost + 1e-9;
    if (improves && cost_ok) {
      cand = std::move(next);
      steps.push_back({layer_index, cand.layer.n_nodes(), cand.train_nme,
                       cand.val_nme, cand.opt.cost, true, StepReason::Accepted,
                       clock(), cand.train_acc});
    } else {
      steps.push_back({layer_index, next.layer.n_nodes(), next.train_nme,
                       next.val_nme, next.opt.cost, false,
                       StepReason::NodeGainBelowEtaN, clock(),
                       next.train_acc});
      return;
    }
  }
}

inline LayerCandidate build_candidate(const PlnModel& model,
                                      const DepthState& st,
                                      const TrainConfig& config,
                                      std::mt19937_64& rng) {
  const Eigen::Index Q = st.train.T.rows();
  const Eigen::MatrixXd& prev_map = model.layers.empty()
                                        ? model.w_ls_star
                                        : model.layers.back().output_matrix;
  // Smallest growing start: one Delta-row random block, capped at n_max.
  const Eigen::Index initial_width =
      std::min<Eigen::Index>(2 * Q + config.delta, config.n_max);
  LayerCandidate cand;
  cand.layer =
      build_layer(prev_map, initial_width, rng, config.normalize_random);
  cand.Y = layer_output(model.activation, cand.layer, st.prev_output);
  if (st.use_val())
    cand.val_Y = layer_output(model.activation, cand.layer, st.val_prev_output);
  cand.opt = optimize_output_matrix(cand.Y, st.train.T, config);
  evaluate_candidate(cand, st);
  return cand;
}

inline void commit_candidate(PlnModel& model, DepthState& st,
                             LayerCandidate&& cand) {
  cand.layer.output_matrix = cand.opt.O;
  st.prev_output = std::move(cand.Y);
  if (st.use_val()) st.val_prev_output = std::move(cand.val_Y);
  st.cost = cand.opt.cost;
  st.train_nme = cand.train_nme;
  st.val_nme = cand.val_nme;
  st.train_acc = cand.train_acc;
  st.decide_nme = cand.decide_nme;
  model.layers.push_back(std::move(cand.layer));
}

// Depth growth: layers are added and optimized one at a time; a layer that
// fails the eta_l threshold is rolled back and growth stops.
inline void grow_depth_impl(PlnModel& model, DepthState& st,
                            const TrainConfig& config,
                            std::vector<GrowthStep>& steps,
                            const std::function<double()>& clock) {
  for (int l = static_cast<int>(model.layers.size()) + 1; l <= config.l_max;
       ++l) {
    std::mt19937_64 rng(mix_seed(config.seed, static_cast<std::uint64_t>(l)));
    LayerCandidate cand = build_candidate(model, st, config, rng);
    std::vector<GrowthStep> layer_steps;
    layer_steps.push_back({l, cand.layer.n_nodes(), cand.train_nme,
                           cand.val_nme, cand.opt.cost, true,
                           StepReason::Accepted, clock(), cand.train_acc});
    grow_candidate_width(cand, st, config, model.activation, l, rng,
                         layer_steps, clock);

    const bool improves =
        safe_ratio(st.decide_nme, cand.decide_nme) >= config.eta_l;
    const bool cost_ok = cand.opt.cost <= st.cost + 1e-9;
    if (improves && cost_ok) {
      for (auto& s : layer_steps) steps.push_back(std::move(s));
      commit_candidate(model, st, std::move(cand));
      if (l == config.l_max)
        steps.push_back({l, model.layers.back().n_nodes(), st.train_nme,
                         st.val_nme, st.cost, false, StepReason::HitLMax,
                         clock(), st.train_acc});
    } else {
      steps.push_back({l, cand.layer.n_nodes(), cand.train_nme, cand.val_nme,
                       cand.opt.cost, false, StepReason::LayerGainBelowEtaL,
                       clock(), cand.train_acc});
      return;
    }
  }
}

inline std::function<double()> start_clock() {
  auto t0 = std::chrono::steady_clock::now();
  return [t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };
}

}  // namespace detail

// Grows the width of the model's last layer in place. The layer must be
// the last one; greedy training never revisits earlier layers.
inline std::vector<GrowthStep> grow_width(PlnModel& model,
                                          std::size_t layer_index,
                                          const Dataset& data,
                                          const TrainConfig& config) {
  if (model.layers.empty() || layer_index != model.layers.size() - 1)
    throw std::invalid_argument("grow_width: only the last layer can grow");
  auto clock = detail::start_clock();
  PlnModel base = model;
  base.layers.pop_back();
  detail::DepthState st = detail::make_depth_state(base, data, std::nullopt);

  detail::LayerCandidate cand;
  cand.layer = model.layers.back();
  cand.Y = layer_output(model.activation, cand.layer, st.prev_output);
  cand.opt.O = cand.layer.output_matrix;
  cand.opt.cost = (st.train.T - cand.opt.O * cand.Y).squaredNorm();
  detail::evaluate_candidate(cand, st);

  std::mt19937_64 rng(mix_seed(config.seed,
                               0x8000000000000000ULL ^
                                   static_cast<std::uint64_t>(layer_index)));
  std::vector<GrowthStep> steps;
  detail::grow_candidate_width(cand, st, config, model.activation,
                               static_cast<int>(layer_index) + 1, rng, steps,
                               clock);
  model.layers.pop_back();
  detail::commit_candidate(model, st, std::move(cand));
  return steps;
}

// Appends and optimizes new layers until the eta_l threshold or l_max stops
// growth. The model must already hold an optimized baseline.
inline std::vector<GrowthStep> grow_depth(PlnModel& model, const Dataset& data,
                                          const TrainConfig& config) {
  config.validate(data.target_dim());
  auto clock = detail::start_clock();
  detail::DepthState st = detail::make_depth_state(model, data, std::nullopt);
  std::vector<GrowthStep> steps;
  detail::grow_depth_impl(model, st, config, steps, clock);
  return steps;
}

struct TrainResult {
  PlnModel model;
  TrainReport report;
};

// Progressive training: ridge baseline, then layers added and grown one at
// a time. Each accepted step keeps the training cost non-increasing; the
// node/layer thresholds eta_n / eta_l decide on training NME, or on
// validation NME when validation_fraction > 0.
inline TrainResult train(const Dataset& data, const TrainConfig& config) {
  config.validate(data.target_dim());
  auto clock = detail::start_clock();

  Dataset train_split = data;
  std::optional<Dataset> val;
  if (config.validation_fraction > 0.0) {
    const Eigen::Index n_val = static_cast<Eigen::Index>(std::floor(
        config.validation_fraction * static_cast<double>(data.size())));
    if (n_val > 0) {
      auto [tr, va] = partition(data, data.size() - n_val, n_val,
                                mix_seed(config.seed, 0xA11));
      train_split = std::move(tr);
      val = std::move(va);
    }
  }

  PlnModel model;
  model.activation = config.activation;
  model.q = config.q;
  model.alpha = config.alpha;
  model.seed = config.seed;
  model.class_names = train_split.class_names;

  TrainReport report;
  auto [w_ls, c_ls] = fit_linear_baseline(train_split, config);
  model.w_ls_star = std::move(w_ls);

  detail::DepthState st =
      detail::make_depth_state(model, std::move(train_split), std::move(val));
  report.baseline_cost = c_ls;
  report.baseline_train_nme_db = st.train_nme;

  detail::grow_depth_impl(model, st, config, report.steps, clock);

  report.final_train_nme_db = st.train_nme;
  report.final_validation_nme_db = st.val_nme;
  if (st.train.task == TaskKind::Classification) {
    Eigen::MatrixXd pred = forward(model, st.train.X).predictions;
    report.final_train_accuracy = accuracy(st.train.T, pred);
  }
  report.total_time_s = clock();
  return {std::move(model), std::move(report)};
}

}  // namespace pln
