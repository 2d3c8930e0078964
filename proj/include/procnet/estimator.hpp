// Kalman covariance predictor with delayed and out-of-sequence measurements.
//
// A measurement updates the covariance at its sample time, but only once it
// has arrived. P_k is therefore a function of the set of measurements that
// arrived by step k:
//
//   P_k = Pred(Upd(...Upd(Pred(Upd(P0, V_0), k_0:k_1), V_1)..., V_M), k_M:k)
//
// with the measurements sorted by sample time.
#pragma once

#include "procnet/model.hpp"
#include "procnet/sensing.hpp"

#include <deque>
#include <map>
#include <span>
#include <vector>

namespace procnet {

/// Immutable set of measurements sorted by (sample, arrival, sensor).
class EventLog {
 public:
  EventLog() = default;
  explicit EventLog(std::vector<MeasurementEvent> events);

  std::span<const MeasurementEvent> events() const { return events_; }
  std::size_t size() const { return events_.size(); }

  /// Measurements with arrival_time <= k, still sorted by sample time.
  EventLog arrived_by(Step k) const;

 private:
  std::vector<MeasurementEvent> events_;
};

/// P_k computed from scratch from the measurements of `log` that arrived by
/// step k, starting from the model's P0 at step 0.
Covariance covariance_at(const EventLog& log, const Model& model, Step k);
Covariance covariance_at(const EventLog& log, const Model& model, Step k, const Covariance& P0);

struct CovarianceTrace {
  std::vector<Covariance> covariances;  ///< P_k for k = 0..K-1
  std::vector<double> traces;           ///< tr(P_k)

  std::size_t size() const { return traces.size(); }
  double mean() const;
};

/// Real-time predictor. Steps forward one instant at a time; measurements
/// arriving at the new instant are folded in by rolling back to their sample
/// time and recomputing forward. History older than twice the largest
/// reception delay is dropped.
class DelayedKalmanPredictor {
 public:
  DelayedKalmanPredictor(const Model& model, Step max_delay);

  Step time() const { return now_; }
  const Covariance& covariance() const { return history_.back(); }
  double trace() const { return history_.back().trace(); }

  /// Queues a measurement. Its arrival time must lie after time().
  void add(const MeasurementEvent& e);
  void add(std::span<const MeasurementEvent> events);

  /// Moves to time() + 1 and returns the new P.
  const Covariance& advance();

  /// Covariance retained for step t (within the rollback window).
  const Covariance& covariance_at_step(Step t) const;

 private:
  Covariance recompute(Step t, const Covariance& prev) const;

  const Model* model_;
  Step depth_;
  Step now_ = 0;
  Step base_ = 0;                      // step of history_.front()
  std::deque<Covariance> history_;     // P_t for t in [base_, now_]
  std::multimap<Step, MeasurementEvent> pending_;        // keyed by arrival
  std::map<Step, std::vector<Covariance>> applied_;      // keyed by sample time
};

/// tr(P_k) for k = 0..K-1, computed incrementally.
CovarianceTrace run_trace(std::span<const MeasurementEvent> events, const Model& model,
                          Step horizon);

/// Same trace through per-step recomputation with covariance_at. Quadratic
/// in the horizon; kept as the reference route.
CovarianceTrace run_trace_naive(std::span<const MeasurementEvent> events, const Model& model,
                                Step horizon);

}  // namespace procnet
