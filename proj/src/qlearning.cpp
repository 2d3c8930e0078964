#include "procnet/qlearning.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace procnet {

void LearningParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
  if (!(eps_min >= 0.0 && eps_min <= eps_max && eps_max <= 1.0))
    throw std::invalid_argument("need 0 <= eps_min <= eps_max <= 1");
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  if (patience < 0 || eval_every < 0)
    throw std::invalid_argument("patience and eval_every must be >= 0");
}

double LearningParams::epsilon(int t) const {
  return std::max(eps_max / std::sqrt(static_cast<double>(std::max(t, 1))), eps_min);
}

QTable::QTable(int states, int actions)
    : values(Eigen::MatrixXd::Zero(states, actions)),
      visits(decltype(visits)::Zero(states, actions)) {
  if (states < 1 || actions < 1) throw std::invalid_argument("empty Q-table");
}

int QTable::greedy(int s) const {
  Eigen::Index best = 0;
  values.row(s).maxCoeff(&best);  // first maximizer
  return static_cast<int>(best);
}

std::vector<int> QTable::greedy_policy() const {
  std::vector<int> p(static_cast<std::size_t>(states()));
  for (int s = 0; s < states(); ++s) p[static_cast<std::size_t>(s)] = greedy(s);
  return p;
}

double td_error(const QTable& q, int s, int a, double r, int s_next, double gamma) {
  return r + gamma * q.values.row(s_next).maxCoeff() - q.values(s, a);
}

void q_update(QTable& q, const Transition& t, bool terminal, double alpha, double gamma) {
  double& v = q.values(t.state, t.action);
  if (terminal)
    v = (1.0 - alpha) * v + alpha * t.reward;
  else
    v += alpha * td_error(q, t.state, t.action, t.reward, t.next_state, gamma);
  ++q.visits(t.state, t.action);
}

int select_action(const QTable& q, int s, double epsilon, Rng& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < epsilon) {
    std::uniform_int_distribution<int> pick(0, q.actions() - 1);
    return pick(rng);
  }
  return q.greedy(s);
}

TrainResult train(const Scenario& scenario, const Discretizer& discretizer,
                  const LearningParams& params) {
  params.validate();
  TrainResult out;
  out.table = QTable(discretizer.bins(), scenario.num_actions());
  QTable& q = out.table;
  Rng rng(params.seed);

  std::vector<int> policy = q.greedy_policy();
  int unchanged = 0;
  const std::size_t L = scenario.num_windows();

  for (int t = 1; t <= params.episodes; ++t) {
    const double eps = params.epsilon(t);
    Episode ep(scenario);
    int s = discretizer.bin(ep.state_trace());
    double ret = 0, g = 1;
    for (std::size_t l = 0; l < L; ++l) {
      const int a = select_action(q, s, eps, rng);
      const WindowOutcome o = ep.step(a);
      const int s_next = discretizer.bin(o.next_state_trace);
      q_update(q, {s, a, o.reward, s_next}, l + 1 == L, params.alpha, params.gamma);
      g *= scenario.discount;
      ret += g * o.reward;
      s = s_next;
    }
    const auto& tr = ep.traces();
    double cost = 0;
    for (double v : tr) cost += v;
    out.curve.returns.push_back(ret);
    out.curve.costs.push_back(cost / static_cast<double>(tr.size()));
    out.episodes_run = t;

    auto next = q.greedy_policy();
    unchanged = next == policy ? unchanged + 1 : 0;
    policy = std::move(next);

    if (params.eval_every > 0 && t % params.eval_every == 0) {
      const auto r = run_greedy(scenario, discretizer, policy);
      out.curve.eval_episode.push_back(t);
      out.curve.eval_cost.push_back(r.cost);
      out.curve.eval_return.push_back(r.ret);
    }
    if (params.patience > 0 && unchanged >= params.patience) {
      out.early_stopped = true;
      break;
    }
  }
  out.policy = std::move(policy);
  return out;
}

}  // namespace procnet
