#include "procnet/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace procnet {

void Scenario::validate() const {
  Step slowest = 1;
  for (const auto& s : sensors) {
    s.validate();
    if (s.raw.noise.rows() != model.output_dim())
      throw std::invalid_argument("sensor noise does not match the model output dimension");
    slowest = std::max(slowest, s.processed.gen_delay);
  }
  schedule.validate_spacing(slowest);
  if (!(discount > 0.0 && discount <= 1.0))
    throw std::invalid_argument("discount must lie in (0, 1]");
}

Scenario Scenario::truncated(std::size_t windows) const {
  return Scenario{model, sensors, schedule.truncated(windows), discount};
}

Discretizer::Discretizer(std::vector<double> edges, int bins)
    : edges_(std::move(edges)), bins_(bins) {
  if (bins_ < 1) throw std::invalid_argument("discretizer needs at least one bin");
  if (static_cast<int>(edges_.size()) > bins_ - 1)
    throw std::invalid_argument("too many edges for the bin count");
  for (std::size_t i = 1; i < edges_.size(); ++i)
    if (!(edges_[i] > edges_[i - 1]))
      throw std::invalid_argument("discretizer edges must be strictly increasing");
}

Discretizer Discretizer::fit(std::vector<double> samples, int bins) {
  if (bins < 2) throw std::invalid_argument("need at least two bins");
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  std::vector<double> edges;
  for (int j = 1; j < bins; ++j) {
    const std::size_t cut = static_cast<std::size_t>(j) * n / static_cast<std::size_t>(bins);
    if (cut == 0 || cut >= n) continue;
    // Move a cut that splits tied values to the nearest place where the
    // sorted samples change value; with no such place, drop the edge.
    std::size_t best = 0;
    std::size_t best_dist = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 1; i < n; ++i) {
      if (samples[i - 1] < samples[i]) {
        const std::size_t d = i > cut ? i - cut : cut - i;
        if (d < best_dist) {
          best_dist = d;
          best = i;
        }
      }
    }
    if (best == 0) continue;
    edges.push_back(0.5 * (samples[best - 1] + samples[best]));
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return Discretizer(std::move(edges), bins);
}

int Discretizer::bin(double x) const {
  return static_cast<int>(std::upper_bound(edges_.begin(), edges_.end(), x) - edges_.begin());
}

Episode::Episode(const Scenario& scenario)
    : scenario_(&scenario),
      network_(scenario.sensors),
      predictor_(scenario.model, max_reception_delay(scenario.sensors)) {
  traces_.reserve(static_cast<std::size_t>(scenario.horizon()));
  traces_.push_back(predictor_.trace());
}

WindowOutcome Episode::step(int action) {
  if (done()) throw std::logic_error("episode already finished");
  if (action < 0 || action > scenario_->num_sensors())
    throw std::invalid_argument("action out of range");

  const auto& schedule = scenario_->schedule;
  const Step K = schedule.horizon();
  const Step t0 = schedule.start(window_);
  const Step t1 = schedule.end(window_);

  WindowOutcome out;
  out.window = window_;
  out.action = action;
  out.state_trace = predictor_.trace();

  const std::size_t dropped_before = discarded_.size();
  out.switches = network_.apply_decision(t0, action, window_, &discarded_);
  out.discarded = static_cast<int>(discarded_.size() - dropped_before);

  scratch_.clear();
  network_.run_until(t1, K, scratch_);
  for (const auto& e : scratch_)
    if (e.arrival_time < K) predictor_.add(e);

  const Step last = std::min(t1, K - 1);
  while (predictor_.time() < last) {
    predictor_.advance();
    traces_.push_back(predictor_.trace());
  }

  double sum = 0;
  for (Step k = t0; k < t1; ++k) sum += traces_[static_cast<std::size_t>(k)];
  out.reward = -sum / static_cast<double>(t1 - t0);
  out.next_state_trace = predictor_.trace();
  ++window_;
  return out;
}

namespace {

EpisodeResult finish(const Scenario& scenario, std::vector<WindowOutcome> outcomes,
                     std::vector<double> traces) {
  EpisodeResult r;
  r.outcomes = std::move(outcomes);
  r.traces = std::move(traces);
  r.cost = std::accumulate(r.traces.begin(), r.traces.end(), 0.0) /
           static_cast<double>(r.traces.size());
  double g = 1.0;
  for (const auto& o : r.outcomes) {
    g *= scenario.discount;
    r.ret += g * o.reward;
  }
  return r;
}

void check_decisions(const Scenario& scenario, std::span<const int> decisions) {
  if (decisions.size() != scenario.num_windows())
    throw std::invalid_argument("expected " + std::to_string(scenario.num_windows()) +
                                " decisions, got " + std::to_string(decisions.size()));
}

}  // namespace

EpisodeResult run_episode(const Scenario& scenario, std::span<const int> decisions) {
  check_decisions(scenario, decisions);
  Episode ep(scenario);
  std::vector<WindowOutcome> outcomes;
  for (int a : decisions) outcomes.push_back(ep.step(a));
  return finish(scenario, std::move(outcomes), ep.traces());
}

EpisodeResult run_episode_batch(const Scenario& scenario, std::span<const int> decisions) {
  check_decisions(scenario, decisions);
  const auto streams = simulate_sensor_streams(scenario.sensors, scenario.schedule, decisions);
  const auto trace = run_trace(streams.events, scenario.model, scenario.horizon());

  std::vector<int> discards(scenario.num_windows(), 0);
  for (const auto& d : streams.discarded) ++discards[d.decision_index];

  std::vector<WindowOutcome> outcomes;
  const auto& sched = scenario.schedule;
  for (std::size_t l = 0; l < sched.size(); ++l) {
    WindowOutcome o;
    o.window = l;
    o.action = decisions[l];
    o.state_trace = trace.traces[static_cast<std::size_t>(sched.start(l))];
    const Step t1 = sched.end(l);
    double sum = 0;
    for (Step k = sched.start(l); k < t1; ++k) sum += trace.traces[static_cast<std::size_t>(k)];
    o.reward = -sum / static_cast<double>(t1 - sched.start(l));
    o.next_state_trace = trace.traces[static_cast<std::size_t>(std::min(t1, sched.horizon() - 1))];
    o.switches = streams.switches[l];
    o.discarded = discards[l];
    outcomes.push_back(o);
  }
  return finish(scenario, std::move(outcomes), trace.traces);
}

EpisodeResult run_greedy(const Scenario& scenario, const Discretizer& discretizer,
                         std::span<const int> policy) {
  if (static_cast<int>(policy.size()) != discretizer.bins())
    throw std::invalid_argument("policy must map every bin to an action");
  Episode ep(scenario);
  std::vector<WindowOutcome> outcomes;
  while (!ep.done())
    outcomes.push_back(ep.step(policy[static_cast<std::size_t>(discretizer.bin(ep.state_trace()))]));
  return finish(scenario, std::move(outcomes), ep.traces());
}

std::vector<int> static_policy(const Scenario& scenario, int a) {
  if (a < 0 || a > scenario.num_sensors()) throw std::invalid_argument("action out of range");
  return std::vector<int>(scenario.num_windows(), a);
}

std::vector<double> calibration_samples(const Scenario& scenario) {
  std::vector<double> out;
  for (int a = 0; a <= scenario.num_sensors(); ++a) {
    const auto r = run_episode(scenario, static_policy(scenario, a));
    for (const auto& o : r.outcomes) out.push_back(o.state_trace);
  }
  return out;
}

Discretizer calibrate_discretizer(const Scenario& scenario, int bins) {
  return Discretizer::fit(calibration_samples(scenario), bins);
}

namespace {

struct OracleSearch {
  const Scenario& scenario;
  std::vector<int> prefix;
  OracleResult best;

  void descend(const Episode& ep) {
    if (ep.done()) {
      const auto& tr = ep.traces();
      const double cost =
          std::accumulate(tr.begin(), tr.end(), 0.0) / static_cast<double>(tr.size());
      ++best.evaluated;
      if (best.decisions.empty() || cost < best.cost) {
        best.cost = cost;
        best.decisions = prefix;
      }
      return;
    }
    for (int a = 0; a <= scenario.num_sensors(); ++a) {
      Episode next = ep;
      next.step(a);
      prefix.push_back(a);
      descend(next);
      prefix.pop_back();
    }
  }
};

}  // namespace

OracleResult brute_force_best(const Scenario& scenario, std::size_t windows) {
  std::size_t space = 1;
  for (std::size_t l = 0; l < windows; ++l) {
    space *= static_cast<std::size_t>(scenario.num_actions());
    if (space > kOracleCap)
      throw std::invalid_argument("oracle search space exceeds " + std::to_string(kOracleCap) +
                                  " sequences");
  }
  const Scenario small = scenario.truncated(windows);
  OracleSearch search{small, {}, {}};
  search.descend(Episode(small));
  return search.best;
}

}  // namespace procnet
