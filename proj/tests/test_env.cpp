#include "procnet/config.hpp"
#include "procnet/env.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace procnet;
namespace ts = testing_support;

namespace {

const Scenario& default_scenario() {
  static const Scenario s = make_scenario(parse_config(""));
  return s;
}

/// Random small scenario with 1..3 sensors, 1..5 windows.
Scenario random_scenario(ts::Rng& rng) {
  const Eigen::Index n = ts::uniform_int(rng, 1, 3);
  const int count = static_cast<int>(ts::uniform_int(rng, 1, 3));
  auto sensors = ts::random_sensors(rng, n, count);
  const Step window = sensors[0].processed.gen_delay + ts::uniform_int(rng, 0, 15);
  const auto L = static_cast<std::size_t>(ts::uniform_int(rng, 1, 5));
  const Step extra = ts::uniform_int(rng, 0, 1) ? ts::uniform_int(rng, 1, 10) : 0;
  return Scenario{ts::random_model(rng, n), std::move(sensors),
                  DecisionSchedule::uniform(window, L, static_cast<Step>(L) * window + extra),
                  ts::uniform(rng, 0.5, 1.0)};
}

std::vector<int> random_decisions(ts::Rng& rng, const Scenario& s) {
  std::vector<int> d(s.num_windows());
  for (auto& a : d) a = static_cast<int>(ts::uniform_int(rng, 0, s.num_sensors()));
  return d;
}

}  // namespace

TEST_CASE("static policy costs of the default scenario") {
  const Scenario& s = default_scenario();
  CHECK(s.horizon() == 500);
  CHECK(s.num_windows() == 10);
  CHECK(s.num_actions() == 5);
  // Frozen regression values (position measurements, W = diag(.025, .002)).
  const double expected[] = {6.464708750515593, 6.365705837281197, 6.408759228273919,
                             6.563729316653352, 6.992701069686301};
  for (int a = 0; a <= 4; ++a) {
    const auto r = run_episode(s, static_policy(s, a));
    CAPTURE(a);
    CHECK(r.cost == doctest::Approx(expected[a]).epsilon(1e-9));
    CHECK(r.traces.size() == 500);
    for (const auto& o : r.outcomes) CHECK(o.discarded == 0);
  }
}

TEST_CASE("Table IV sequence beats All-1 and early transients matter") {
  const Scenario& s = default_scenario();
  const auto all1 = run_episode(s, static_policy(s, 1));
  const auto seq = run_episode(s, std::vector<int>{1, 0, 1, 1, 1, 1, 1, 1, 1, 1});
  CHECK(seq.cost <= all1.cost);
  CHECK(seq.outcomes[1].discarded == 1);
  // Raw samples restart at 50 every 4 steps; the one taken at 98 is still
  // generating when processing resumes at 100.
  CHECK(seq.outcomes[2].discarded == 1);
}

TEST_CASE("window after processing: action 0 beats action 4") {
  const Scenario& s = default_scenario();
  Episode a(s), b(s);
  a.step(1);
  b.step(1);
  const auto ra = a.step(0);
  const auto rb = b.step(4);
  CHECK(ra.reward > rb.reward);
}

TEST_CASE("unchanged action across a boundary discards nothing") {
  const Scenario& s = default_scenario();
  for (int p = 0; p <= 4; ++p) {
    Episode ep(s);
    ep.step(p);
    const auto o = ep.step(p);
    CHECK(o.discarded == 0);
    CHECK(o.switches == 0);
  }
}

TEST_CASE("single window: cost is the mean trace") {
  Scenario s = default_scenario().truncated(1);
  const auto r = run_episode(s, std::vector<int>{2});
  double sum = 0;
  for (double v : r.traces) sum += v;
  CHECK(r.traces.size() == 50);
  CHECK(r.cost == doctest::Approx(sum / 50).epsilon(1e-15));
  CHECK(r.outcomes[0].reward == doctest::Approx(-r.cost).epsilon(1e-15));
}

TEST_CASE("reward, cost and return consistency on random scenarios") {
  ts::Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const Scenario s = random_scenario(rng);
    const auto d = random_decisions(rng, s);
    const auto r = run_episode(s, d);
    CAPTURE(trial);
    REQUIRE(r.traces.size() == static_cast<std::size_t>(s.horizon()));
    double weighted = 0, ret = 0, g = 1;
    for (std::size_t l = 0; l < s.num_windows(); ++l) {
      const double len = static_cast<double>(s.schedule.end(l) - s.schedule.start(l));
      weighted += len * r.outcomes[l].reward;
      g *= s.discount;
      ret += g * r.outcomes[l].reward;
    }
    CHECK(std::abs(r.cost + weighted / static_cast<double>(s.horizon())) <= 1e-9);
    CHECK(std::abs(r.ret - ret) <= 1e-12 * std::max(1.0, std::abs(ret)));
  }
}

TEST_CASE("stepping and batch rollouts agree") {
  ts::Rng rng(32);
  for (int trial = 0; trial < 60; ++trial) {
    const Scenario s = random_scenario(rng);
    const auto d = random_decisions(rng, s);
    const auto a = run_episode(s, d);
    const auto b = run_episode_batch(s, d);
    CAPTURE(trial);
    REQUIRE(a.traces.size() == b.traces.size());
    for (std::size_t k = 0; k < a.traces.size(); ++k)
      CHECK(std::abs(a.traces[k] - b.traces[k]) <= 1e-9 * std::max(1.0, b.traces[k]));
    for (std::size_t l = 0; l < a.outcomes.size(); ++l) {
      CHECK(a.outcomes[l].discarded == b.outcomes[l].discarded);
      CHECK(a.outcomes[l].switches == b.outcomes[l].switches);
      CHECK(a.outcomes[l].state_trace == doctest::Approx(b.outcomes[l].state_trace));
    }
  }
}

TEST_CASE("stepping trace matches the independent reference on the default scenario") {
  const Scenario& s = default_scenario();
  const std::vector<int> d{1, 0, 3, 3, 2, 4, 0, 1, 1, 2};
  const auto r = run_episode(s, d);
  const auto streams = simulate_sensor_streams(s.sensors, s.schedule, d);
  const auto ref = ts::reference_traces(streams.events, s.model, s.horizon());
  for (std::size_t k = 0; k < ref.size(); k += 7) CHECK(ts::rel_err(r.traces[k], ref[k]) <= 1e-8);
}

TEST_CASE("rollouts are deterministic") {
  const Scenario& s = default_scenario();
  const std::vector<int> d{4, 0, 2, 2, 1, 3, 0, 0, 4, 1};
  const auto a = run_episode(s, d);
  const auto b = run_episode(s, d);
  CHECK(a.traces == b.traces);
  CHECK(a.cost == b.cost);
  CHECK(a.ret == b.ret);
}

TEST_CASE("episode interface") {
  const Scenario& s = default_scenario();
  Episode ep(s);
  CHECK(ep.time() == 0);
  CHECK(ep.state_trace() == doctest::Approx(40.0));
  CHECK_THROWS_AS(ep.step(5), std::invalid_argument);
  CHECK_THROWS_AS(ep.step(-1), std::invalid_argument);
  for (int l = 0; l < 10; ++l) {
    CHECK_FALSE(ep.done());
    ep.step(1);
  }
  CHECK(ep.done());
  CHECK(ep.time() == 499);
  CHECK_THROWS_AS(ep.step(1), std::logic_error);
  CHECK_THROWS_AS(run_episode(s, std::vector<int>{1, 1}), std::invalid_argument);
}

TEST_CASE("discretizer examples") {
  SUBCASE("median split") {
    const auto d = Discretizer::fit({1, 2, 3, 4}, 2);
    REQUIRE(d.edges().size() == 1);
    CHECK(d.edges()[0] == 2.5);
    CHECK(d.bin(1) == 0);
    CHECK(d.bin(2) == 0);
    CHECK(d.bin(3) == 1);
    CHECK(d.bin(4) == 1);
  }
  SUBCASE("identical samples map to bin 0") {
    const auto d = Discretizer::fit(std::vector<double>(20, 3.5), 5);
    CHECK(d.edges().empty());
    CHECK(d.bins() == 5);
    CHECK(d.bin(3.5) == 0);
    CHECK(d.bin(-1e9) == 0);
    CHECK(d.bin(1e9) == 0);
  }
  SUBCASE("ties move the cut to the nearest value change") {
    const auto d = Discretizer::fit({1, 1, 1, 2, 5, 5}, 2);
    REQUIRE(d.edges().size() == 1);
    CHECK(d.edges()[0] == 1.5);
  }
  SUBCASE("bad construction") {
    CHECK_THROWS_AS(Discretizer::fit({1, 2}, 1), std::invalid_argument);
    CHECK_THROWS_AS(Discretizer({2, 1}, 3), std::invalid_argument);
    CHECK_THROWS_AS(Discretizer({1, 2, 3}, 3), std::invalid_argument);
  }
}

TEST_CASE("discretizer occupancy over random distinct samples") {
  ts::Rng rng(33);
  for (int trial = 0; trial < 200; ++trial) {
    const int M = static_cast<int>(ts::uniform_int(rng, 2, 8));
    const auto n = static_cast<std::size_t>(ts::uniform_int(rng, M, 200));
    std::vector<double> x(n);
    for (auto& v : x) v = ts::uniform(rng, 0, 100);
    const auto d = Discretizer::fit(x, M);
    CHECK(static_cast<int>(d.edges().size()) == M - 1);
    std::vector<int> occ(static_cast<std::size_t>(M), 0);
    for (double v : x) ++occ[static_cast<std::size_t>(d.bin(v))];
    const auto [lo, hi] = std::minmax_element(occ.begin(), occ.end());
    CHECK(*hi - *lo <= 1);
  }
}

TEST_CASE("calibration of the default scenario") {
  const Scenario& s = default_scenario();
  const auto samples = calibration_samples(s);
  CHECK(samples.size() == 50);
  const auto d = calibrate_discretizer(s, 5);
  REQUIRE(d.edges().size() == 4);
  CHECK(std::is_sorted(d.edges().begin(), d.edges().end()));
  std::vector<int> occ(5, 0);
  for (double v : samples) ++occ[static_cast<std::size_t>(d.bin(v))];
  for (int c : occ) CHECK(c == 10);
}

TEST_CASE("oracle on a dominant-processing pair") {
  // Processing costs one extra step and is far more accurate.
  const Model m(Covariance::Identity(1, 1), 0.1 * Covariance::Identity(1, 1),
                10.0 * Covariance::Identity(1, 1));
  const auto sensors = make_homogeneous_sensors(
      1, {Mode::Raw, 2, 1, 50.0 * Covariance::Identity(1, 1)},
      {Mode::Processed, 3, 1, 0.01 * Covariance::Identity(1, 1)});
  const Scenario s{m, sensors, DecisionSchedule::uniform(10, 2), 0.99};
  const auto best = brute_force_best(s, 2);
  CHECK(best.decisions == std::vector<int>{1, 1});
  CHECK(best.evaluated == 4);
}

TEST_CASE("oracle over three windows of the default scenario") {
  const Scenario& s = default_scenario();
  const auto best = brute_force_best(s, 3);
  CHECK(best.evaluated == 125);
  CHECK(best.decisions.size() == 3);
  const Scenario small = s.truncated(3);
  for (int a = 0; a <= 4; ++a) CHECK(best.cost <= run_episode(small, static_policy(small, a)).cost);
  CHECK(best.cost == doctest::Approx(run_episode(small, best.decisions).cost).epsilon(1e-15));
  CHECK_THROWS_AS(brute_force_best(s, 10), std::invalid_argument);
}

TEST_CASE("scenario validation") {
  Scenario s = default_scenario();
  s.discount = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  Scenario tight = default_scenario();
  tight.schedule = DecisionSchedule::uniform(10, 3);
  CHECK_THROWS_AS(tight.validate(), std::invalid_argument);
}
