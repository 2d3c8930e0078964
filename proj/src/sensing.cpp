#include "procnet/sensing.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace procnet {

std::string_view to_string(Mode m) { return m == Mode::Raw ? "raw" : "processed"; }

void SensorSpec::validate() const {
  if (raw.kind != Mode::Raw || processed.kind != Mode::Processed)
    throw std::invalid_argument("sensor modes are mislabeled");
  if (raw.gen_delay < 1 || processed.gen_delay < 1)
    throw std::invalid_argument("generation delays must be >= 1 step");
  if (!(processed.gen_delay > raw.gen_delay))
    throw std::invalid_argument("processing delay must exceed raw delay");
  if (raw.comm_delay < 1 || processed.comm_delay < 1)
    throw std::invalid_argument("communication delays must be >= 1 step");
  if (processed.comm_delay > raw.comm_delay)
    throw std::invalid_argument("processed data cannot take longer to transmit than raw data");
  if (raw.noise.rows() != processed.noise.rows() || !is_symmetric_pd(raw.noise) ||
      !is_symmetric_pd(processed.noise))
    throw std::invalid_argument("noise covariances must be symmetric positive definite");
  // Raw strictly noisier in the Loewner order.
  const Covariance gap = raw.noise - processed.noise;
  if (!is_symmetric_pd(gap))
    throw std::invalid_argument("raw noise must strictly dominate processed noise");
}

std::vector<SensorSpec> make_homogeneous_sensors(int count, const SensingMode& raw,
                                                 const SensingMode& processed) {
  if (count < 0) throw std::invalid_argument("sensor count must be >= 0");
  std::vector<SensorSpec> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    SensorSpec s{i, raw, processed};
    s.raw.kind = Mode::Raw;
    s.processed.kind = Mode::Processed;
    s.validate();
    out.push_back(std::move(s));
  }
  return out;
}

DecisionSchedule::DecisionSchedule(std::vector<Step> decision_times, Step horizon)
    : times_(std::move(decision_times)), horizon_(horizon) {
  if (times_.empty()) throw std::invalid_argument("schedule needs at least one decision");
  if (times_.front() != 0) throw std::invalid_argument("first decision must be at step 0");
  for (std::size_t l = 1; l < times_.size(); ++l)
    if (times_[l] <= times_[l - 1])
      throw std::invalid_argument("decision times must be strictly increasing");
  if (times_.back() >= horizon_)
    throw std::invalid_argument("last decision must precede the horizon");
}

DecisionSchedule DecisionSchedule::uniform(Step window, std::size_t windows, Step horizon) {
  if (window < 1 || windows == 0) throw std::invalid_argument("empty schedule");
  std::vector<Step> t(windows);
  for (std::size_t l = 0; l < windows; ++l) t[l] = static_cast<Step>(l) * window;
  return DecisionSchedule(std::move(t),
                          horizon > 0 ? horizon : static_cast<Step>(windows) * window);
}

void DecisionSchedule::validate_spacing(Step min_gap) const {
  for (std::size_t l = 1; l < times_.size(); ++l)
    if (times_[l] - times_[l - 1] < min_gap)
      throw std::invalid_argument("decision windows shorter than the processing delay");
}

DecisionSchedule DecisionSchedule::truncated(std::size_t windows) const {
  if (windows == 0 || windows > times_.size())
    throw std::invalid_argument("cannot truncate schedule to " + std::to_string(windows) +
                                " windows");
  std::vector<Step> t(times_.begin(), times_.begin() + static_cast<std::ptrdiff_t>(windows));
  return DecisionSchedule(std::move(t), end(windows - 1));
}

std::vector<Mode> assign_modes(std::span<const Mode> prev, int p) {
  const int n = static_cast<int>(prev.size());
  if (p < 0 || p > n) throw std::invalid_argument("p must lie in [0, N]");
  std::vector<Mode> out(prev.begin(), prev.end());
  int current = static_cast<int>(std::count(out.begin(), out.end(), Mode::Processed));
  const Mode from = p > current ? Mode::Raw : Mode::Processed;
  const Mode to = p > current ? Mode::Processed : Mode::Raw;
  for (auto& m : out) {
    if (current == p) break;
    if (m == from) {
      m = to;
      current += (to == Mode::Processed) ? 1 : -1;
    }
  }
  return out;
}

SensorNetwork::SensorNetwork(std::vector<SensorSpec> specs)
    : specs_(std::move(specs)),
      modes_(specs_.size(), Mode::Raw),
      sample_start_(specs_.size(), 0) {
  for (const auto& s : specs_) s.validate();
}

int SensorNetwork::processing_count() const {
  return static_cast<int>(std::count(modes_.begin(), modes_.end(), Mode::Processed));
}

int SensorNetwork::apply_decision(Step at, int p, std::size_t decision_index,
                                  std::vector<DiscardedSample>* discarded) {
  const auto next = assign_modes(modes_, p);
  int switches = 0;
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    const bool changed = next[i] != modes_[i];
    switches += changed ? 1 : 0;
    if (!started_) {
      sample_start_[i] = at;
    } else if (changed) {
      // run_until(at) already emitted anything completing by `at`, so a
      // sample started before `at` is still generating.
      if (sample_start_[i] < at && discarded)
        discarded->push_back({specs_[i].id, sample_start_[i], modes_[i], decision_index});
      sample_start_[i] = at;
    }
  }
  modes_ = next;
  started_ = true;
  return switches;
}

MeasurementEvent SensorNetwork::complete(std::size_t i) const {
  const SensingMode& m = specs_[i].mode(modes_[i]);
  return {specs_[i].id, sample_start_[i], sample_start_[i] + m.reception_delay(), modes_[i],
          m.noise};
}

void SensorNetwork::run_until(Step until, Step horizon, std::vector<MeasurementEvent>& out) {
  if (!started_) throw std::logic_error("run_until before the first decision");
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    const SensingMode& m = specs_[i].mode(modes_[i]);
    while (sample_start_[i] < horizon && next_sample_time(sample_start_[i], m) <= until) {
      out.push_back(complete(i));
      sample_start_[i] = next_sample_time(sample_start_[i], m);
    }
  }
}

void SensorNetwork::flush(Step horizon, std::vector<MeasurementEvent>& out) {
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    if (started_ && sample_start_[i] < horizon) {
      out.push_back(complete(i));
      sample_start_[i] = horizon;
    }
  }
}

SensorStreams simulate_sensor_streams(std::span<const SensorSpec> specs,
                                      const DecisionSchedule& schedule,
                                      std::span<const int> decisions) {
  if (decisions.size() != schedule.size())
    throw std::invalid_argument("one decision per window is required");
  for (int p : decisions)
    if (p < 0 || p > static_cast<int>(specs.size()))
      throw std::invalid_argument("decision exceeds the number of sensors");

  SensorNetwork net({specs.begin(), specs.end()});
  SensorStreams out;
  const Step K = schedule.horizon();
  for (std::size_t l = 0; l < schedule.size(); ++l) {
    out.switches.push_back(net.apply_decision(schedule.start(l), decisions[l], l, &out.discarded));
    net.run_until(schedule.end(l), K, out.events);
  }
  net.flush(K, out.events);
  std::stable_sort(out.events.begin(), out.events.end(), [](const auto& a, const auto& b) {
    if (a.arrival_time != b.arrival_time) return a.arrival_time < b.arrival_time;
    if (a.sample_time != b.sample_time) return a.sample_time < b.sample_time;
    return a.sensor_id < b.sensor_id;
  });
  return out;
}

Step max_reception_delay(std::span<const SensorSpec> specs) {
  Step d = 0;
  for (const auto& s : specs)
    d = std::max({d, s.raw.reception_delay(), s.processed.reception_delay()});
  return d;
}

}  // namespace procnet
