#include "procnet/estimator.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace procnet {

namespace {

bool by_sample(const MeasurementEvent& a, const MeasurementEvent& b) {
  if (a.sample_time != b.sample_time) return a.sample_time < b.sample_time;
  if (a.arrival_time != b.arrival_time) return a.arrival_time < b.arrival_time;
  return a.sensor_id < b.sensor_id;
}

void check_event(const MeasurementEvent& e, const Model& model) {
  if (e.sample_time < 0 || e.arrival_time < e.sample_time)
    throw std::invalid_argument("measurement arrives before it is sampled");
  if (e.noise.rows() != model.output_dim() || e.noise.cols() != model.output_dim())
    throw std::invalid_argument("measurement noise does not match the output dimension");
}

}  // namespace

EventLog::EventLog(std::vector<MeasurementEvent> events) : events_(std::move(events)) {
  std::stable_sort(events_.begin(), events_.end(), by_sample);
}

EventLog EventLog::arrived_by(Step k) const {
  EventLog out;
  std::copy_if(events_.begin(), events_.end(), std::back_inserter(out.events_),
               [k](const MeasurementEvent& e) { return e.arrival_time <= k; });
  return out;
}

Covariance covariance_at(const EventLog& log, const Model& model, Step k) {
  return covariance_at(log, model, k, model.initial_covariance());
}

Covariance covariance_at(const EventLog& log, const Model& model, Step k, const Covariance& P0) {
  if (k < 0) throw std::invalid_argument("covariance_at: k must be >= 0");
  Covariance P = P0;
  Step t = 0;
  for (const auto& e : log.events()) {
    if (e.arrival_time > k) continue;
    check_event(e, model);
    P = predict_cov(P, model, t, e.sample_time);
    t = e.sample_time;
    P = update_cov(P, e.noise, model.output_matrix());
  }
  return predict_cov(P, model, t, k);
}

double CovarianceTrace::mean() const {
  if (traces.empty()) return 0.0;
  return std::accumulate(traces.begin(), traces.end(), 0.0) / static_cast<double>(traces.size());
}

DelayedKalmanPredictor::DelayedKalmanPredictor(const Model& model, Step max_delay)
    : model_(&model), depth_(2 * std::max<Step>(max_delay, 1) + 1) {
  history_.push_back(model.initial_covariance());
}

void DelayedKalmanPredictor::add(const MeasurementEvent& e) {
  check_event(e, *model_);
  if (e.arrival_time <= now_)
    throw std::logic_error("measurement queued after its arrival time");
  if (e.arrival_time - e.sample_time > depth_ / 2)
    throw std::logic_error("measurement delay exceeds the predictor's rollback depth");
  pending_.emplace(e.arrival_time, e);
}

void DelayedKalmanPredictor::add(std::span<const MeasurementEvent> events) {
  for (const auto& e : events) add(e);
}

Covariance DelayedKalmanPredictor::recompute(Step t, const Covariance& prev) const {
  Covariance P = prev;
  model_->propagate(P, t - 1);
  if (auto it = applied_.find(t); it != applied_.end())
    for (const auto& V : it->second) P = update_cov(P, V, model_->output_matrix());
  return P;
}

const Covariance& DelayedKalmanPredictor::advance() {
  const Step t = now_ + 1;

  // Fold in the measurements arriving now; remember the oldest sample time.
  Step rollback = t;
  auto [first, last] = pending_.equal_range(t);
  std::vector<MeasurementEvent> arriving;
  for (auto it = first; it != last; ++it) arriving.push_back(it->second);
  pending_.erase(first, last);
  std::stable_sort(arriving.begin(), arriving.end(), by_sample);
  for (auto& e : arriving) {
    rollback = std::min(rollback, e.sample_time);
    applied_[e.sample_time].push_back(std::move(e.noise));
  }

  history_.emplace_back();
  now_ = t;
  if (rollback < base_ + 1 && !(rollback == 0 && base_ == 0))
    throw std::logic_error("out-of-sequence measurement older than the retained history");

  if (rollback == 0) {
    Covariance P0 = model_->initial_covariance();
    if (auto it = applied_.find(0); it != applied_.end())
      for (const auto& V : it->second) P0 = update_cov(P0, V, model_->output_matrix());
    history_.front() = std::move(P0);
    rollback = 1;
  }
  for (Step s = rollback; s <= t; ++s) {
    const auto idx = static_cast<std::size_t>(s - base_);
    history_[idx] = recompute(s, history_[idx - 1]);
  }

  while (now_ - base_ > depth_) {
    history_.pop_front();
    applied_.erase(base_);
    ++base_;
  }
  return history_.back();
}

const Covariance& DelayedKalmanPredictor::covariance_at_step(Step t) const {
  if (t < base_ || t > now_) throw std::out_of_range("step outside the retained history");
  return history_[static_cast<std::size_t>(t - base_)];
}

CovarianceTrace run_trace(std::span<const MeasurementEvent> events, const Model& model,
                          Step horizon) {
  if (horizon < 1) throw std::invalid_argument("run_trace: horizon must be >= 1");
  Step max_delay = 1;
  for (const auto& e : events) {
    check_event(e, model);
    max_delay = std::max(max_delay, e.arrival_time - e.sample_time);
  }
  // A measurement available at step 0 would change P_0 itself; the
  // incremental route starts from P0, so hand that case to the reference.
  for (const auto& e : events)
    if (e.arrival_time == 0) return run_trace_naive(events, model, horizon);

  DelayedKalmanPredictor predictor(model, max_delay);
  CovarianceTrace out;
  out.covariances.reserve(static_cast<std::size_t>(horizon));
  out.traces.reserve(static_cast<std::size_t>(horizon));
  out.covariances.push_back(predictor.covariance());
  out.traces.push_back(predictor.trace());

  for (const auto& e : events)
    if (e.arrival_time > 0 && e.arrival_time < horizon) predictor.add(e);
  for (Step k = 1; k < horizon; ++k) {
    const Covariance& P = predictor.advance();
    out.covariances.push_back(P);
    out.traces.push_back(P.trace());
  }
  return out;
}

CovarianceTrace run_trace_naive(std::span<const MeasurementEvent> events, const Model& model,
                                Step horizon) {
  if (horizon < 1) throw std::invalid_argument("run_trace: horizon must be >= 1");
  const EventLog log({events.begin(), events.end()});
  CovarianceTrace out;
  for (Step k = 0; k < horizon; ++k) {
    out.covariances.push_back(covariance_at(log, model, k));
    out.traces.push_back(out.covariances.back().trace());
  }
  return out;
}

}  // namespace procnet
