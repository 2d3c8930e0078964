// Experiment configuration: YAML on disk, milliseconds for delays, integer
// steps everywhere after loading.
#pragma once

#include "procnet/env.hpp"
#include "procnet/qlearning.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace procnet {

/// Malformed or invalid configuration. `line` is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

enum class MeasurementKind { Position, Full };

struct SystemConfig {
  double period_ms = 10;
  double pos_noise_var = 0.025;
  double vel_noise_var = 0.002;
  double initial_variance = 10;
  MeasurementKind measurement = MeasurementKind::Position;

  friend bool operator==(const SystemConfig&, const SystemConfig&) = default;
};

struct SensorConfig {
  int count = 4;
  double raw_delay_ms = 40;
  double proc_delay_ms = 140;
  double comm_raw_ms = 10;
  double comm_proc_ms = 10;
  double raw_noise_var = 10;
  double proc_noise_var = 1;

  friend bool operator==(const SensorConfig&, const SensorConfig&) = default;
};

struct ScheduleConfig {
  double window_ms = 500;
  int windows = 10;
  double horizon_ms = 0;  ///< 0: windows * window_ms

  friend bool operator==(const ScheduleConfig&, const ScheduleConfig&) = default;
};

/// Defaults reproduce the four-drone tracking experiment: T = 10 ms,
/// raw 40 ms, processed 140 ms, 10 ms links, variances 10 and 1, N = 4,
/// P0 = 10 I, ten 500 ms windows, M = 5 bins and the Q-learning
/// hyperparameters alpha = 0.01, gamma = 0.99, eps in [0.1, 0.9].
struct ExperimentConfig {
  SystemConfig system;
  SensorConfig sensors;
  ScheduleConfig schedule;
  LearningParams learning;
  int bins = 5;

  /// Converts a duration to steps; throws ConfigError unless it is an
  /// integral multiple of the sampling period.
  Step steps(double ms, std::string_view what) const;

  /// Throws ConfigError naming the violated modeling assumption.
  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

ExperimentConfig parse_config(std::string_view yaml);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string write_config(const ExperimentConfig& config);

/// Builds the simulation scenario (model, sensors, schedule, discount).
Scenario make_scenario(const ExperimentConfig& config);

}  // namespace procnet
