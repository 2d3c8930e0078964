#include "procnet/config.hpp"
#include "procnet/io.hpp"

#include <doctest.h>

#include <sstream>
#include <string>

using namespace procnet;

TEST_CASE("empty config gives the four-drone defaults") {
  const auto c = parse_config("");
  CHECK(c.system.period_ms == 10);
  CHECK(c.sensors.count == 4);
  CHECK(c.sensors.raw_delay_ms == 40);
  CHECK(c.sensors.proc_delay_ms == 140);
  CHECK(c.sensors.comm_raw_ms == 10);
  CHECK(c.sensors.comm_proc_ms == 10);
  CHECK(c.sensors.raw_noise_var == 10);
  CHECK(c.sensors.proc_noise_var == 1);
  CHECK(c.schedule.window_ms == 500);
  CHECK(c.schedule.windows == 10);
  CHECK(c.bins == 5);
  CHECK(c.learning.alpha == 0.01);
  CHECK(c.learning.gamma == 0.99);
  CHECK(c.learning.eps_max == 0.9);
  CHECK(c.learning.eps_min == 0.1);

  const Scenario s = make_scenario(c);
  CHECK(s.horizon() == 500);
  CHECK(s.model.initial_covariance() == 10.0 * Covariance::Identity(4, 4));
  CHECK(s.sensors[0].raw.gen_delay == 4);
  CHECK(s.sensors[0].processed.gen_delay == 14);
  CHECK(s.sensors[0].raw.reception_delay() == 5);
  CHECK(s.schedule.start(1) == 50);
  CHECK(s.discount == 0.99);
}

TEST_CASE("config overrides and measurement choice") {
  const auto c = parse_config(R"(
system:
  measurement: full
  vel_noise_var: 0.1
  pos_noise_var: 0
sensors:
  count: 2
  comm_raw_ms: 30
learning:
  seed: 7
  bins: 4
)");
  CHECK(c.system.measurement == MeasurementKind::Full);
  CHECK(c.sensors.count == 2);
  CHECK(c.learning.seed == 7);
  CHECK(c.bins == 4);
  const Scenario s = make_scenario(c);
  CHECK(s.model.full_state_output());
  CHECK(s.sensors.size() == 2);
  CHECK(s.sensors[0].raw.comm_delay == 3);
  CHECK(s.sensors[0].raw.noise.rows() == 4);
}

TEST_CASE("config errors name the violated assumption") {
  auto message = [](const std::string& yaml) {
    try {
      parse_config(yaml);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message("sensors: {proc_delay_ms: 30}").find("trade-off") != std::string::npos);
  CHECK(message("sensors: {raw_noise_var: 0.5}").find("trade-off") != std::string::npos);
  CHECK(message("sensors: {raw_delay_ms: 45}").find("integral") != std::string::npos);
  CHECK(message("sensors: {comm_proc_ms: 20}").find("communication") != std::string::npos);
  CHECK(message("sensors: {comm_raw_ms: 0}").find("communication") != std::string::npos);
  CHECK(message("schedule: {window_ms: 100}").find("decision spacing") != std::string::npos);
  CHECK(message("learning: {alpha: 2}").find("alpha") != std::string::npos);
}

TEST_CASE("config parse errors carry line numbers") {
  try {
    parse_config("system:\n  period_ms: 10\n  bogus: 1\n");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
  try {
    parse_config("sensors:\n  count: [1, 2\n");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(e.line() > 0);
  }
  try {
    parse_config("sensors:\n  count: many\n");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(load_config("/nonexistent/procnet.yaml"), ConfigError);
}

TEST_CASE("config round trip") {
  auto c = parse_config("");
  CHECK(parse_config(write_config(c)) == c);
  c.system.vel_noise_var = 0.1234567890123;
  c.system.measurement = MeasurementKind::Full;
  c.sensors.count = 3;
  c.schedule.horizon_ms = 4730;
  c.learning.seed = 987654321;
  c.learning.eps_min = 0.05;
  c.bins = 7;
  CHECK(parse_config(write_config(c)) == c);
}

TEST_CASE("discretizer file round trip") {
  const Discretizer d({0.1, 1.0 / 3.0, 2.5e-7 + 1}, 5);
  std::stringstream ss;
  write_discretizer(ss, d);
  CHECK(ss.str().rfind("procnet-discretizer 1\n", 0) == 0);
  CHECK(read_discretizer(ss) == d);
}

TEST_CASE("learned policy file round trip") {
  LearnedPolicy p{Discretizer({1.5, 2.5}, 3), QTable(3, 2), {1, 0, 1}};
  p.table.values << -1.0 / 3, -2, 0, -1e-300, -6.37, -7.25;
  p.table.visits << 1, 2, 3, 4, 5, 6;
  std::stringstream ss;
  write_learned_policy(ss, p);
  const auto q = read_learned_policy(ss);
  CHECK(q.discretizer == p.discretizer);
  CHECK(q.table.values == p.table.values);
  CHECK(q.table.visits == p.table.visits);
  CHECK(q.policy == p.policy);
}

TEST_CASE("malformed artifacts are rejected with a line number") {
  auto fails = [](const std::string& text) {
    std::istringstream in(text);
    try {
      read_learned_policy(in);
    } catch (const ArtifactError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(fails("procnet-qtable 2\n").find("version") != std::string::npos);
  CHECK(fails("procnet-discretizer 1\n").find("line 1") != std::string::npos);
  CHECK(fails("procnet-qtable 1\nstates 2\nactions 2\nbins 2\nedges 1\nq 0 0 0\n")
            .find("end of file") != std::string::npos);
  CHECK(fails("procnet-qtable 1\nstates 2\nactions 2\nbins 2\nedges 1\nq 0 x 0\n")
            .find("bad number") != std::string::npos);
  CHECK(fails("procnet-qtable 1\nstates 2\nactions 2\nbins 2\nedges 1\nq 0 0 0\nq 1 0 0\n"
              "visits 0 0 0\nvisits 1 0 0\npolicy 0 9\n")
            .find("out of range") != std::string::npos);
  CHECK(fails("procnet-qtable 1\nstates 3\nactions 2\nbins 2\nedges 1\n").find("bin count") !=
        std::string::npos);
  CHECK_THROWS_AS(load_discretizer("/nonexistent/d.txt"), ArtifactError);
}

TEST_CASE("trace CSV has K rows with window markers") {
  const Scenario s = make_scenario(parse_config(""));
  const auto r = run_episode(s, std::vector<int>{1, 0, 1, 1, 1, 1, 1, 1, 1, 1});
  std::stringstream ss;
  write_trace_csv(ss, s, r);
  std::string line;
  std::getline(ss, line);
  CHECK(line == "k,trace,window_index,action");
  int rows = 0;
  while (std::getline(ss, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const auto c3 = line.find(',', c2 + 1);
    const int k = std::stoi(line.substr(0, c1));
    const int w = std::stoi(line.substr(c2 + 1, c3 - c2 - 1));
    const int a = std::stoi(line.substr(c3 + 1));
    CHECK(k == rows);
    CHECK(w == k / 50);
    CHECK(a == (w == 1 ? 0 : 1));
    ++rows;
  }
  CHECK(rows == 500);
}

TEST_CASE("moving average") {
  const auto m = moving_average({1, 2, 3, 4, 5}, 2);
  CHECK(m == std::vector<double>{1, 1.5, 2.5, 3.5, 4.5});
  CHECK(moving_average({}, 3).empty());
  CHECK_THROWS_AS(moving_average({1}, 0), std::invalid_argument);
}

TEST_CASE("shortest round-trip doubles") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(1.0 / 3)) == 1.0 / 3);
}

TEST_CASE("shipped default config equals the built-in defaults") {
  CHECK(load_config(std::string(PROCNET_SOURCE_DIR) + "/configs/default.yaml") == parse_config(""));
}
