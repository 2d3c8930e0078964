// Smart sensors with a raw/processed sensing mode, the homogeneous decision
// schedule, and the stream of measurements delivered to the base station.
#pragma once

#include "procnet/model.hpp"

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace procnet {

enum class Mode { Raw, Processed };

std::string_view to_string(Mode m);

/// One operating mode of a sensor. Delays are in steps.
struct SensingMode {
  Mode kind = Mode::Raw;
  Step gen_delay = 1;   ///< acquisition (and processing) time
  Step comm_delay = 1;  ///< transmission time to the base station
  Covariance noise;     ///< measurement-noise covariance V

  /// Delay at reception: generation plus communication.
  Step reception_delay() const { return gen_delay + comm_delay; }
};

struct SensorSpec {
  int id = 0;
  SensingMode raw;
  SensingMode processed;

  const SensingMode& mode(Mode m) const { return m == Mode::Raw ? raw : processed; }

  /// Throws std::invalid_argument if the modes break the latency-accuracy
  /// trade-off (processing slower, raw noisier) or the compression model
  /// (processed data never slower to transmit, comm delays >= 1 step).
  void validate() const;
};

/// N interchangeable sensors with ids 0..N-1.
std::vector<SensorSpec> make_homogeneous_sensors(int count, const SensingMode& raw,
                                                 const SensingMode& processed);

/// Next sampling instant once the sample taken at `current` completes.
inline Step next_sample_time(Step current, const SensingMode& mode) {
  return current + mode.gen_delay;
}

/// Decision instants k^(1) = 0 < k^(2) < ... < k^(L) < K.
class DecisionSchedule {
 public:
  DecisionSchedule(std::vector<Step> decision_times, Step horizon);

  /// L windows of `window` steps each; horizon defaults to L * window.
  static DecisionSchedule uniform(Step window, std::size_t windows, Step horizon = 0);

  std::size_t size() const { return times_.size(); }
  Step horizon() const { return horizon_; }
  Step start(std::size_t l) const { return times_.at(l); }
  /// End of window l (exclusive): the next decision time, or K for the last.
  Step end(std::size_t l) const {
    return l + 1 < times_.size() ? times_[l + 1] : horizon_;
  }
  const std::vector<Step>& times() const { return times_; }

  /// Checks that consecutive decisions are at least `min_gap` steps apart.
  void validate_spacing(Step min_gap) const;

  /// The first `windows` windows, with the horizon cut at the end of the last one.
  DecisionSchedule truncated(std::size_t windows) const;

 private:
  std::vector<Step> times_;
  Step horizon_;
};

/// A measurement delivered to the base station.
struct MeasurementEvent {
  int sensor_id = 0;
  Step sample_time = 0;   ///< time of the measured state
  Step arrival_time = 0;  ///< sample_time + reception delay
  Mode mode = Mode::Raw;
  Covariance noise;
};

/// A sample dropped because its sensor was commanded to switch mode before
/// the sample finished generating.
struct DiscardedSample {
  int sensor_id = 0;
  Step sample_time = 0;
  Mode mode = Mode::Raw;
  std::size_t decision_index = 0;
};

/// Mode assignment with exactly p processing sensors that differs from
/// `prev` in |p - p_prev| entries. Lowest sensor ids switch first.
std::vector<Mode> assign_modes(std::span<const Mode> prev, int p);

/// Incremental simulation of the sensor network, one decision window at a
/// time. The environment drives it window by window; simulate_sensor_streams
/// drives it over a whole schedule.
class SensorNetwork {
 public:
  explicit SensorNetwork(std::vector<SensorSpec> specs);

  std::size_t size() const { return specs_.size(); }
  const std::vector<SensorSpec>& specs() const { return specs_; }
  const std::vector<Mode>& modes() const { return modes_; }
  int processing_count() const;

  /// Applies homogeneous decision p at time `at`. Sensors whose mode changes
  /// drop a sample still in generation (started before `at`) and restart
  /// sampling at `at`. The first decision starts every sensor at `at`.
  /// Returns the number of sensors that switched mode.
  int apply_decision(Step at, int p, std::size_t decision_index,
                     std::vector<DiscardedSample>* discarded = nullptr);

  /// Emits every sample that completes generation at or before `until`,
  /// skipping samples taken at or after `horizon`. Sampling continues
  /// back-to-back per sensor.
  void run_until(Step until, Step horizon, std::vector<MeasurementEvent>& out);

  /// Completes the in-flight sample of every sensor if it was taken before
  /// `horizon`. Such events usually arrive after the horizon.
  void flush(Step horizon, std::vector<MeasurementEvent>& out);

 private:
  MeasurementEvent complete(std::size_t i) const;

  std::vector<SensorSpec> specs_;
  std::vector<Mode> modes_;
  std::vector<Step> sample_start_;  // in-flight sample of each sensor
  bool started_ = false;
};

struct SensorStreams {
  std::vector<MeasurementEvent> events;  ///< sorted by (arrival, sample, sensor)
  std::vector<DiscardedSample> discarded;
  std::vector<int> switches;  ///< mode switches at each decision
};

/// Generates the measurement stream of a homogeneous policy over the whole
/// schedule. `decisions[l]` is the number of processing sensors in window l.
SensorStreams simulate_sensor_streams(std::span<const SensorSpec> specs,
                                      const DecisionSchedule& schedule,
                                      std::span<const int> decisions);

/// Largest reception delay across all sensors and modes.
Step max_reception_delay(std::span<const SensorSpec> specs);

}  // namespace procnet
