#include "procnet/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace procnet {

namespace {

int line_of(const YAML::Node& n) { return n.Mark().is_null() ? 0 : n.Mark().line + 1; }

void reject_unknown(const YAML::Node& map, const std::set<std::string>& known,
                    const std::string& section) {
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (!known.count(key))
      throw ConfigError("unknown key '" + key + "' in " + section, line_of(kv.first));
  }
}

template <typename T>
void read(const YAML::Node& map, const char* key, T& out) {
  const YAML::Node n = map[key];
  if (!n) return;
  try {
    out = n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(std::string("bad value for '") + key + "'", line_of(n));
  }
}

YAML::Node section(const YAML::Node& root, const char* name) {
  YAML::Node n = root[name];
  if (n && !n.IsMap()) throw ConfigError(std::string("'") + name + "' must be a mapping", line_of(n));
  return n;
}

}  // namespace

Step ExperimentConfig::steps(double ms, std::string_view what) const {
  const double ratio = ms / system.period_ms;
  const double rounded = std::round(ratio);
  if (!(std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, std::abs(ratio))))
    throw ConfigError(std::string(what) + " (" + std::to_string(ms) +
                      " ms) is not an integral number of sampling periods");
  return static_cast<Step>(rounded);
}

void ExperimentConfig::validate() const {
  if (!(system.period_ms > 0)) throw ConfigError("period_ms must be positive");
  if (system.pos_noise_var < 0 || system.vel_noise_var < 0)
    throw ConfigError("process noise variances must be non-negative");
  if (system.initial_variance < 0) throw ConfigError("initial_variance must be non-negative");
  if (sensors.count < 0) throw ConfigError("sensor count must be non-negative");

  const Step raw = steps(sensors.raw_delay_ms, "raw_delay_ms");
  const Step proc = steps(sensors.proc_delay_ms, "proc_delay_ms");
  const Step comm_raw = steps(sensors.comm_raw_ms, "comm_raw_ms");
  const Step comm_proc = steps(sensors.comm_proc_ms, "comm_proc_ms");
  const Step window = steps(schedule.window_ms, "window_ms");

  if (raw < 1) throw ConfigError("sensing modes: raw_delay_ms must be at least one period");
  if (!(proc > raw))
    throw ConfigError("latency-accuracy trade-off violated: proc_delay_ms must exceed raw_delay_ms");
  if (!(sensors.raw_noise_var > sensors.proc_noise_var))
    throw ConfigError(
        "latency-accuracy trade-off violated: raw_noise_var must exceed proc_noise_var");
  if (!(sensors.proc_noise_var > 0)) throw ConfigError("proc_noise_var must be positive");
  if (comm_raw < 1 || comm_proc < 1)
    throw ConfigError("communication model violated: delays must be at least one period");
  if (comm_proc > comm_raw)
    throw ConfigError("communication model violated: comm_proc_ms must not exceed comm_raw_ms");
  if (schedule.windows < 1) throw ConfigError("schedule needs at least one window");
  if (window < proc)
    throw ConfigError(
        "decision spacing violated: window_ms must be at least the processing delay");
  if (schedule.horizon_ms != 0) {
    const Step K = steps(schedule.horizon_ms, "horizon_ms");
    if (K <= window * (schedule.windows - 1))
      throw ConfigError("horizon must extend past the last decision");
  }
  if (bins < 2) throw ConfigError("bins must be at least 2");
  try {
    learning.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("learning: ") + e.what());
  }
}

ExperimentConfig parse_config(std::string_view yaml) {
  ExperimentConfig c;
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml));
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, e.mark.line + 1);
  }
  if (root.IsNull()) {
    c.validate();
    return c;
  }
  if (!root.IsMap()) throw ConfigError("top level must be a mapping", line_of(root));
  reject_unknown(root, {"system", "sensors", "schedule", "learning"}, "top level");

  if (auto s = section(root, "system")) {
    reject_unknown(s, {"period_ms", "pos_noise_var", "vel_noise_var", "initial_variance",
                       "measurement"},
                   "system");
    read(s, "period_ms", c.system.period_ms);
    read(s, "pos_noise_var", c.system.pos_noise_var);
    read(s, "vel_noise_var", c.system.vel_noise_var);
    read(s, "initial_variance", c.system.initial_variance);
    std::string m = c.system.measurement == MeasurementKind::Position ? "position" : "full";
    read(s, "measurement", m);
    if (m == "position")
      c.system.measurement = MeasurementKind::Position;
    else if (m == "full")
      c.system.measurement = MeasurementKind::Full;
    else
      throw ConfigError("measurement must be 'position' or 'full'", line_of(s["measurement"]));
  }
  if (auto s = section(root, "sensors")) {
    reject_unknown(s, {"count", "raw_delay_ms", "proc_delay_ms", "comm_raw_ms", "comm_proc_ms",
                       "raw_noise_var", "proc_noise_var"},
                   "sensors");
    read(s, "count", c.sensors.count);
    read(s, "raw_delay_ms", c.sensors.raw_delay_ms);
    read(s, "proc_delay_ms", c.sensors.proc_delay_ms);
    read(s, "comm_raw_ms", c.sensors.comm_raw_ms);
    read(s, "comm_proc_ms", c.sensors.comm_proc_ms);
    read(s, "raw_noise_var", c.sensors.raw_noise_var);
    read(s, "proc_noise_var", c.sensors.proc_noise_var);
  }
  if (auto s = section(root, "schedule")) {
    reject_unknown(s, {"window_ms", "windows", "horizon_ms"}, "schedule");
    read(s, "window_ms", c.schedule.window_ms);
    read(s, "windows", c.schedule.windows);
    read(s, "horizon_ms", c.schedule.horizon_ms);
  }
  if (auto s = section(root, "learning")) {
    reject_unknown(s, {"bins", "alpha", "gamma", "eps_max", "eps_min", "episodes", "patience",
                       "eval_every", "seed"},
                   "learning");
    read(s, "bins", c.bins);
    read(s, "alpha", c.learning.alpha);
    read(s, "gamma", c.learning.gamma);
    read(s, "eps_max", c.learning.eps_max);
    read(s, "eps_min", c.learning.eps_min);
    read(s, "episodes", c.learning.episodes);
    read(s, "patience", c.learning.patience);
    read(s, "eval_every", c.learning.eval_every);
    read(s, "seed", c.learning.seed);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string write_config(const ExperimentConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "system" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "period_ms" << YAML::Value << c.system.period_ms;
  out << YAML::Key << "pos_noise_var" << YAML::Value << c.system.pos_noise_var;
  out << YAML::Key << "vel_noise_var" << YAML::Value << c.system.vel_noise_var;
  out << YAML::Key << "initial_variance" << YAML::Value << c.system.initial_variance;
  out << YAML::Key << "measurement" << YAML::Value
      << (c.system.measurement == MeasurementKind::Position ? "position" : "full");
  out << YAML::EndMap;
  out << YAML::Key << "sensors" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "count" << YAML::Value << c.sensors.count;
  out << YAML::Key << "raw_delay_ms" << YAML::Value << c.sensors.raw_delay_ms;
  out << YAML::Key << "proc_delay_ms" << YAML::Value << c.sensors.proc_delay_ms;
  out << YAML::Key << "comm_raw_ms" << YAML::Value << c.sensors.comm_raw_ms;
  out << YAML::Key << "comm_proc_ms" << YAML::Value << c.sensors.comm_proc_ms;
  out << YAML::Key << "raw_noise_var" << YAML::Value << c.sensors.raw_noise_var;
  out << YAML::Key << "proc_noise_var" << YAML::Value << c.sensors.proc_noise_var;
  out << YAML::EndMap;
  out << YAML::Key << "schedule" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "window_ms" << YAML::Value << c.schedule.window_ms;
  out << YAML::Key << "windows" << YAML::Value << c.schedule.windows;
  out << YAML::Key << "horizon_ms" << YAML::Value << c.schedule.horizon_ms;
  out << YAML::EndMap;
  out << YAML::Key << "learning" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "bins" << YAML::Value << c.bins;
  out << YAML::Key << "alpha" << YAML::Value << c.learning.alpha;
  out << YAML::Key << "gamma" << YAML::Value << c.learning.gamma;
  out << YAML::Key << "eps_max" << YAML::Value << c.learning.eps_max;
  out << YAML::Key << "eps_min" << YAML::Value << c.learning.eps_min;
  out << YAML::Key << "episodes" << YAML::Value << c.learning.episodes;
  out << YAML::Key << "patience" << YAML::Value << c.learning.patience;
  out << YAML::Key << "eval_every" << YAML::Value << c.learning.eval_every;
  out << YAML::Key << "seed" << YAML::Value << c.learning.seed;
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

Scenario make_scenario(const ExperimentConfig& c) {
  c.validate();
  const double T = c.system.period_ms / 1000.0;
  Model base = make_double_integrator_2d(T, c.system.vel_noise_var, c.system.pos_noise_var,
                                         c.system.initial_variance);
  Model model = c.system.measurement == MeasurementKind::Position
                    ? with_output(base, position_output_2d())
                    : base;
  const auto m = model.output_dim();

  SensingMode raw{Mode::Raw, c.steps(c.sensors.raw_delay_ms, "raw_delay_ms"),
                  c.steps(c.sensors.comm_raw_ms, "comm_raw_ms"),
                  c.sensors.raw_noise_var * Covariance::Identity(m, m)};
  SensingMode proc{Mode::Processed, c.steps(c.sensors.proc_delay_ms, "proc_delay_ms"),
                   c.steps(c.sensors.comm_proc_ms, "comm_proc_ms"),
                   c.sensors.proc_noise_var * Covariance::Identity(m, m)};

  const Step window = c.steps(c.schedule.window_ms, "window_ms");
  const Step horizon = c.schedule.horizon_ms != 0 ? c.steps(c.schedule.horizon_ms, "horizon_ms") : 0;
  Scenario s{std::move(model), make_homogeneous_sensors(c.sensors.count, raw, proc),
             DecisionSchedule::uniform(window, static_cast<std::size_t>(c.schedule.windows),
                                       horizon),
             c.learning.gamma};
  s.validate();
  return s;
}

}  // namespace procnet
