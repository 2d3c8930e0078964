// Episodic environment for homogeneous sensing policies: binds the sensor
// network and the delayed Kalman predictor into decision windows and scores
// them.
#pragma once

#include "procnet/estimator.hpp"
#include "procnet/model.hpp"
#include "procnet/sensing.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace procnet {

/// Everything needed to roll out a policy.
struct Scenario {
  Model model;
  std::vector<SensorSpec> sensors;
  DecisionSchedule schedule;
  double discount = 0.99;  ///< gamma, used for the episode return

  int num_sensors() const { return static_cast<int>(sensors.size()); }
  int num_actions() const { return num_sensors() + 1; }
  std::size_t num_windows() const { return schedule.size(); }
  Step horizon() const { return schedule.horizon(); }

  /// Throws std::invalid_argument if the sensors or the schedule are
  /// inconsistent (windows shorter than the processing delay, ...).
  void validate() const;

  /// Same system restricted to the first `windows` decision windows.
  Scenario truncated(std::size_t windows) const;
};

/// Equal-frequency binning of tr(P) values.
class Discretizer {
 public:
  Discretizer() = default;
  /// Edges must be strictly increasing; `bins` is the nominal bin count and
  /// may exceed edges.size() + 1 after degenerate calibration.
  Discretizer(std::vector<double> edges, int bins);

  /// Quantile edges over `samples` so that each bin receives an equal share.
  static Discretizer fit(std::vector<double> samples, int bins);

  /// Bin index in [0, bins): the number of edges <= x.
  int bin(double x) const;
  int bins() const { return bins_; }
  const std::vector<double>& edges() const { return edges_; }

  friend bool operator==(const Discretizer&, const Discretizer&) = default;

 private:
  std::vector<double> edges_;
  int bins_ = 1;
};

struct WindowOutcome {
  std::size_t window = 0;
  double state_trace = 0;  ///< tr(P) at the decision instant
  int action = 0;
  double reward = 0;       ///< minus the mean of tr(P_k) over the window
  double next_state_trace = 0;
  int switches = 0;
  int discarded = 0;
};

struct EpisodeResult {
  std::vector<WindowOutcome> outcomes;
  std::vector<double> traces;  ///< tr(P_k), k = 0..K-1
  double cost = 0;             ///< mean of traces
  double ret = 0;              ///< sum_l gamma^l r_l, l = 1..L
};

/// One episode in progress. Carries sensor state and in-flight measurements
/// across window boundaries, so a step is only meaningful in sequence.
class Episode {
 public:
  explicit Episode(const Scenario& scenario);

  bool done() const { return window_ >= scenario_->num_windows(); }
  std::size_t window() const { return window_; }
  Step time() const { return predictor_.time(); }
  /// tr(P) at the current decision instant.
  double state_trace() const { return predictor_.trace(); }
  const Covariance& covariance() const { return predictor_.covariance(); }

  /// Applies action p for the current window and advances to the next
  /// decision instant (or to the end of the horizon).
  WindowOutcome step(int action);

  const std::vector<double>& traces() const { return traces_; }
  const std::vector<DiscardedSample>& discarded() const { return discarded_; }

 private:
  const Scenario* scenario_;
  SensorNetwork network_;
  DelayedKalmanPredictor predictor_;
  std::size_t window_ = 0;
  std::vector<double> traces_;
  std::vector<MeasurementEvent> scratch_;
  std::vector<DiscardedSample> discarded_;
};

/// Rolls out a fixed decision sequence (one action per window).
EpisodeResult run_episode(const Scenario& scenario, std::span<const int> decisions);

/// The same rollout through the batch pipeline: simulate the whole stream,
/// then run the incremental predictor over it.
EpisodeResult run_episode_batch(const Scenario& scenario, std::span<const int> decisions);

/// Rolls out a state-feedback policy: action = policy[discretizer.bin(tr P)].
EpisodeResult run_greedy(const Scenario& scenario, const Discretizer& discretizer,
                         std::span<const int> policy);

/// Static policy All-a.
std::vector<int> static_policy(const Scenario& scenario, int a);

/// tr(P) at every decision instant of every All-a episode, a = 0..N.
std::vector<double> calibration_samples(const Scenario& scenario);

/// Equal-frequency discretizer over calibration_samples.
Discretizer calibrate_discretizer(const Scenario& scenario, int bins);

struct OracleResult {
  std::vector<int> decisions;
  double cost = 0;
  std::size_t evaluated = 0;
};

inline constexpr std::size_t kOracleCap = 1'000'000;

/// Exhaustive search over all (N+1)^L homogeneous decision sequences of the
/// first `windows` windows; returns the cost minimizer (first in
/// lexicographic order on ties). Rejects search spaces above kOracleCap.
OracleResult brute_force_best(const Scenario& scenario, std::size_t windows);

}  // namespace procnet
