#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pln/data.hpp"
#include "pln/metrics.hpp"
#include "pln/trainer.hpp"

namespace pln {

struct SplitSpec {
  enum class Mode { Fixed, RandomPartition };
  Mode mode = Mode::Fixed;
  Eigen::Index train_count = 0;
  Eigen::Index test_count = 0;
  std::uint64_t seed = 0;
};

struct MetricStat {
  double mean = 0.0;
  double stddev = 0.0;  // zero by convention for a single trial
};

struct TrialSummary {
  int trials = 0;
  MetricStat train_nme_db;
  MetricStat test_nme_db;
  std::optional<MetricStat> test_accuracy;
  double mean_train_time_s = 0.0;
};

namespace detail {

inline MetricStat stat(const std::vector<double>& xs) {
  MetricStat s;
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

}  // namespace detail

// Repeated-trial protocol: each trial draws a fresh partition seed (random
// partition mode) and a fresh model seed, then reports mean and standard
// deviation of test NME and accuracy. Aggregation order is by trial index.
inline TrialSummary run_trials(const Dataset& train_source,
                               const std::optional<Dataset>& fixed_test,
                               const SplitSpec& spec, TrainConfig config,
                               int trials) {
  if (trials < 1) throw std::invalid_argument("run_trials: trials must be >= 1");
  if (spec.mode == SplitSpec::Mode::Fixed && !fixed_test)
    throw std::invalid_argument("run_trials: fixed mode needs a test set");

  std::vector<double> train_nmes, test_nmes, accs, times;
  const std::uint64_t root = config.seed;
  for (int t = 0; t < trials; ++t) {
    Dataset train, test;
    if (spec.mode == SplitSpec::Mode::RandomPartition) {
      auto [tr, te] =
          partition(train_source, spec.train_count, spec.test_count,
                    mix_seed(spec.seed, static_cast<std::uint64_t>(t)));
      train = std::move(tr);
      test = std::move(te);
    } else {
      train = train_source;
      test = *fixed_test;
    }
    config.seed = mix_seed(root, 0x5eedULL + static_cast<std::uint64_t>(t));
    auto [model, report] = pln::train(train, config);
    Eigen::MatrixXd pred = forward(model, test.X).predictions;
    train_nmes.push_back(report.final_train_nme_db);
    test_nmes.push_back(nme_db(test.T, pred));
    if (test.task == TaskKind::Classification)
      accs.push_back(accuracy(test.T, pred));
    times.push_back(report.total_time_s);
  }

  TrialSummary summary;
  summary.trials = trials;
  summary.train_nme_db = detail::stat(train_nmes);
  summary.test_nme_db = detail::stat(test_nmes);
  if (!accs.empty()) summary.test_accuracy = detail::stat(accs);
  summary.mean_train_time_s = detail::stat(times).mean;
  return summary;
}

}  // namespace pln
