// Tabular Q-learning over (tr(P) bin, number of processing sensors).
#pragma once

#include "procnet/env.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace procnet {

struct LearningParams {
  double alpha = 0.01;
  double gamma = 0.99;
  double eps_max = 0.9;
  double eps_min = 0.1;
  int episodes = 20000;
  /// Stop once the greedy policy has not changed for this many episodes;
  /// 0 disables early stopping.
  int patience = 2000;
  /// Greedy-policy evaluation period for the training curve; 0 disables.
  int eval_every = 100;
  std::uint64_t seed = 1;

  void validate() const;
  /// max(eps_max / sqrt(t), eps_min) for episode t = 1, 2, ...
  double epsilon(int t) const;

  friend bool operator==(const LearningParams&, const LearningParams&) = default;
};

/// Action values Q(s, a) and visit counts, states x actions.
struct QTable {
  Eigen::MatrixXd values;
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> visits;

  QTable() = default;
  QTable(int states, int actions);

  int states() const { return static_cast<int>(values.rows()); }
  int actions() const { return static_cast<int>(values.cols()); }

  /// Lowest-index maximizer of Q(s, .).
  int greedy(int s) const;
  std::vector<int> greedy_policy() const;
};

/// r + gamma * max_a' Q(s', a') - Q(s, a)
double td_error(const QTable& q, int s, int a, double r, int s_next, double gamma);

struct Transition {
  int state = 0;
  int action = 0;
  double reward = 0;
  int next_state = 0;
};

/// Non-terminal: Q(s,a) += alpha * td_error.
/// Terminal: Q(s,a) = (1 - alpha) Q(s,a) + alpha r.
void q_update(QTable& q, const Transition& t, bool terminal, double alpha, double gamma);

using Rng = std::mt19937_64;

/// Epsilon-greedy: a uniform draw u < epsilon picks a uniform random action,
/// otherwise the greedy one. Always consumes exactly one draw for u.
int select_action(const QTable& q, int s, double epsilon, Rng& rng);

struct TrainingCurve {
  std::vector<double> returns;  ///< return of every training (exploring) episode
  std::vector<double> costs;    ///< cost of every training episode
  std::vector<int> eval_episode;        ///< episode index of each greedy evaluation
  std::vector<double> eval_cost;        ///< greedy-policy cost at that point
  std::vector<double> eval_return;
};

struct TrainResult {
  QTable table;
  std::vector<int> policy;  ///< greedy action per bin
  TrainingCurve curve;
  int episodes_run = 0;
  bool early_stopped = false;
};

/// Runs Q-learning on the deterministic environment. The state is the bin of
/// tr(P) at each decision instant; one update per window, with the terminal
/// branch on the last window.
TrainResult train(const Scenario& scenario, const Discretizer& discretizer,
                  const LearningParams& params);

}  // namespace procnet
