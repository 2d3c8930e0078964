// procnet: calibrate, train, evaluate and compare sensing policies.
#include "procnet/config.hpp"
#include "procnet/env.hpp"
#include "procnet/io.hpp"
#include "procnet/qlearning.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace procnet;

namespace {

enum ExitCode {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kConfig = 3,
  kArtifact = 4,
  kNumerical = 5,
  kInvalid = 6,
};

/// Moving-average window used for the smoothed trace output.
constexpr std::size_t kMovingAverageWindow = 50;

struct Common {
  std::string config_path;
  std::string out_dir = "procnet_out";
  std::optional<std::uint64_t> seed;

  ExperimentConfig load() const {
    ExperimentConfig c = config_path.empty() ? parse_config("") : load_config(config_path);
    if (seed) c.learning.seed = *seed;
    return c;
  }

  fs::path out(const std::string& name) const {
    fs::create_directories(out_dir);
    return fs::path(out_dir) / name;
  }
};

std::string join(const std::vector<int>& v, char sep = ',') {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(v[i]);
  }
  return s;
}

std::vector<int> actions_of(const EpisodeResult& r) {
  std::vector<int> a;
  for (const auto& o : r.outcomes) a.push_back(o.action);
  return a;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw ArtifactError("cannot write " + p.string());
  return f;
}

/// all:<a> | seq:<a1,...,aL> | table:<path>
struct PolicySpec {
  std::string name;
  std::optional<std::vector<int>> sequence;
  std::optional<LearnedPolicy> learned;

  static PolicySpec parse(const std::string& spec, const Scenario& scenario) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("policy must be all:<a>, seq:<list> or table:<path>");
    const std::string kind = spec.substr(0, colon), arg = spec.substr(colon + 1);
    PolicySpec p;
    if (kind == "all") {
      const int a = std::stoi(arg);
      p.name = "All-" + std::to_string(a);
      p.sequence = static_policy(scenario, a);
    } else if (kind == "seq") {
      std::vector<int> seq;
      std::stringstream ss(arg);
      for (std::string t; std::getline(ss, t, ',');) seq.push_back(std::stoi(t));
      p.name = "seq(" + join(seq) + ")";
      p.sequence = std::move(seq);
    } else if (kind == "table") {
      p.learned = load_learned_policy(arg);
      p.name = "Q-l";
      if (p.learned->table.actions() != scenario.num_actions())
        throw ArtifactError("table has " + std::to_string(p.learned->table.actions()) +
                            " actions but the configuration has " +
                            std::to_string(scenario.num_actions()));
    } else {
      throw std::invalid_argument("unknown policy kind '" + kind + "'");
    }
    return p;
  }

  EpisodeResult run(const Scenario& scenario) const {
    if (learned) return run_greedy(scenario, learned->discretizer, learned->policy);
    return run_episode(scenario, *sequence);
  }
};

void print_row(const std::string& name, const EpisodeResult& r) {
  std::cout << std::left << std::setw(static_cast<int>(std::max<std::size_t>(14, name.size() + 1))) << name << std::right << std::fixed
            << std::setprecision(3) << std::setw(9) << r.cost << std::setw(11) << r.ret << "   "
            << join(actions_of(r), ' ') << "\n";
  std::cout.unsetf(std::ios::floatfield);
}

void emit_csv(const Common& common, const std::string& stem, const Scenario& scenario,
              const EpisodeResult& r) {
  auto trace = open_out(common.out(stem + "_trace.csv"));
  write_trace_csv(trace, scenario, r);
  auto ma = open_out(common.out(stem + "_moving_average.csv"));
  write_moving_average_csv(ma, r.traces, kMovingAverageWindow);
}

std::string file_stem(std::string name) {
  for (auto& ch : name)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-') ch = '_';
  return name;
}

int cmd_calibrate(const Common& common, std::optional<int> bins) {
  const auto cfg = common.load();
  const Scenario scenario = make_scenario(cfg);
  const auto samples = calibration_samples(scenario);
  const Discretizer d = Discretizer::fit(samples, bins.value_or(cfg.bins));
  save(common.out("discretizer.txt"), d);

  std::vector<int> occupancy(static_cast<std::size_t>(d.bins()), 0);
  for (double s : samples) ++occupancy[static_cast<std::size_t>(d.bin(s))];
  std::cout << "bins " << d.bins() << ", " << samples.size() << " calibration samples\n";
  std::cout << "edges";
  for (double e : d.edges()) std::cout << ' ' << format_double(e);
  std::cout << "\noccupancy " << join(occupancy, ' ') << "\n";
  std::cout << "wrote " << common.out("discretizer.txt").string() << "\n";
  return kOk;
}

int cmd_train(const Common& common, const std::string& disc_path, std::optional<int> episodes) {
  auto cfg = common.load();
  if (episodes) cfg.learning.episodes = *episodes;
  const Scenario scenario = make_scenario(cfg);
  const Discretizer d = load_discretizer(disc_path);

  const TrainResult tr = train(scenario, d, cfg.learning);
  save(common.out("qtable.txt"), LearnedPolicy{d, tr.table, tr.policy});
  {
    auto f = open_out(common.out("training_curve.csv"));
    write_training_curve_csv(f, tr.curve);
  }
  {
    auto f = open_out(common.out("policy.csv"));
    f << "bin,lower,upper,action\n";
    for (int s = 0; s < d.bins(); ++s) {
      const auto& e = d.edges();
      const std::string lo = s == 0 || s - 1 >= static_cast<int>(e.size()) ? "" : format_double(e[static_cast<std::size_t>(s - 1)]);
      const std::string hi = s >= static_cast<int>(e.size()) ? "" : format_double(e[static_cast<std::size_t>(s)]);
      f << s << ',' << lo << ',' << hi << ',' << tr.policy[static_cast<std::size_t>(s)] << "\n";
    }
  }

  const auto greedy = run_greedy(scenario, d, tr.policy);
  std::cout << "episodes " << tr.episodes_run << (tr.early_stopped ? " (early stop)" : "")
            << ", seed " << cfg.learning.seed << "\n";
  std::cout << "greedy policy per bin: " << join(tr.policy, ' ') << "\n";
  print_row("Q-l", greedy);
  std::cout << "wrote " << common.out("qtable.txt").string() << "\n";
  return kOk;
}

int cmd_evaluate(const Common& common, const std::string& policy, bool csv) {
  const auto cfg = common.load();
  const Scenario scenario = make_scenario(cfg);
  const auto spec = PolicySpec::parse(policy, scenario);
  const auto r = spec.run(scenario);

  print_row(spec.name, r);
  auto report = open_out(common.out("report.txt"));
  report << "policy " << spec.name << "\n"
         << "cost " << format_double(r.cost) << "\n"
         << "return " << format_double(r.ret) << "\n"
         << "actions " << join(actions_of(r), ' ') << "\n";
  for (const auto& o : r.outcomes)
    report << "window " << o.window << " action " << o.action << " reward "
           << format_double(o.reward) << " switches " << o.switches << " discarded "
           << o.discarded << "\n";
  if (csv) emit_csv(common, file_stem(spec.name), scenario, r);
  return kOk;
}

int cmd_compare(const Common& common, const std::vector<std::string>& extra, bool csv) {
  const auto cfg = common.load();
  const Scenario scenario = make_scenario(cfg);
  std::vector<std::pair<std::string, EpisodeResult>> rows;
  for (int a = 0; a <= scenario.num_sensors(); ++a)
    rows.emplace_back("All-" + std::to_string(a), run_episode(scenario, static_policy(scenario, a)));
  for (const auto& p : extra) {
    const auto spec = PolicySpec::parse(p, scenario);
    rows.emplace_back(spec.name, spec.run(scenario));
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.second.cost < b.second.cost; });

  std::cout << std::left << std::setw(14) << "policy" << std::right << std::setw(9) << "cost"
            << std::setw(11) << "return" << "   actions\n";
  auto f = open_out(common.out("compare.csv"));
  f << "policy,cost,return,actions\n";
  for (const auto& [name, r] : rows) {
    print_row(name, r);
    f << name << ',' << format_double(r.cost) << ',' << format_double(r.ret) << ','
      << join(actions_of(r), ' ') << "\n";
    if (csv) emit_csv(common, file_stem(name), scenario, r);
  }
  return kOk;
}

int cmd_oracle(const Common& common, std::size_t windows, const std::string& table) {
  const auto cfg = common.load();
  const Scenario scenario = make_scenario(cfg);
  const OracleResult best = brute_force_best(scenario, windows);
  const Scenario small = scenario.truncated(windows);

  std::cout << "truncated horizon: " << windows << " windows, K = " << small.horizon()
            << " steps, " << best.evaluated << " sequences\n";
  std::cout << "oracle   " << std::fixed << std::setprecision(4) << best.cost << "   "
            << join(best.decisions, ' ') << "\n";
  double best_static = 0;
  for (int a = 0; a <= small.num_sensors(); ++a) {
    const auto r = run_episode(small, static_policy(small, a));
    if (a == 0 || r.cost < best_static) best_static = r.cost;
    std::cout << "All-" << a << "    " << r.cost << "\n";
  }
  if (!table.empty()) {
    const auto learned = load_learned_policy(table);
    if (learned.table.actions() != scenario.num_actions())
      throw ArtifactError("table action count does not match the configuration");
    const auto r = run_greedy(small, learned.discretizer, learned.policy);
    std::cout << "Q-l      " << r.cost << "   " << join(actions_of(r), ' ') << "\n";
    std::cout << "gap      " << std::setprecision(3) << 100.0 * (r.cost - best.cost) / best.cost
              << " %\n";
  }
  std::cout.unsetf(std::ios::floatfield);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sensing design for processing networks: simulation, Q-learning, evaluation"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config_path, "YAML experiment config (defaults if omitted)")
        ->check(CLI::ExistingFile);
    sub->add_option("-o,--out", common.out_dir, "output directory")->capture_default_str();
    sub->add_option("-s,--seed", common.seed, "RNG seed (overrides the config)");
  };

  std::optional<int> bins;
  auto* calibrate = app.add_subcommand("calibrate", "fit the tr(P) discretizer from static policies");
  add_common(calibrate);
  calibrate->add_option("-m,--bins", bins, "number of bins (overrides the config)");

  std::string disc_path;
  std::optional<int> episodes;
  auto* trainer = app.add_subcommand("train", "run Q-learning and write the learned policy");
  add_common(trainer);
  trainer->add_option("-d,--discretizer", disc_path, "discretizer file from 'calibrate'")
      ->required()
      ->check(CLI::ExistingFile);
  trainer->add_option("-e,--episodes", episodes, "training episodes (overrides the config)");

  std::string policy;
  bool csv = false;
  auto* evaluate = app.add_subcommand("evaluate", "evaluate one policy");
  add_common(evaluate);
  evaluate->add_option("-p,--policy", policy, "all:<a> | seq:<a1,...,aL> | table:<path>")
      ->required();
  evaluate->add_flag("--csv", csv, "write per-step trace and moving-average CSV");

  std::vector<std::string> extra;
  auto* compare = app.add_subcommand("compare", "evaluate all static policies (and extra ones)");
  add_common(compare);
  compare->add_option("-p,--policy", extra, "additional policies");
  compare->add_flag("--csv", csv, "write per-step trace and moving-average CSV per policy");

  std::size_t oracle_windows = 3;
  std::string table;
  auto* oracle = app.add_subcommand("oracle", "exhaustive search on a truncated horizon");
  add_common(oracle);
  oracle->add_option("-w,--windows", oracle_windows, "number of windows to search")
      ->capture_default_str();
  oracle->add_option("-t,--table", table, "learned policy to compare against the optimum")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*calibrate) return cmd_calibrate(common, bins);
    if (*trainer) return cmd_train(common, disc_path, episodes);
    if (*evaluate) return cmd_evaluate(common, policy, csv);
    if (*compare) return cmd_compare(common, extra, csv);
    if (*oracle) return cmd_oracle(common, oracle_windows, table);
  } catch (const ConfigError& e) {
    std::cerr << "error[config]: " << e.what() << "\n";
    return kConfig;
  } catch (const ArtifactError& e) {
    std::cerr << "error[artifact]: " << e.what() << "\n";
    return kArtifact;
  } catch (const NumericalError& e) {
    std::cerr << "error[numerical]: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error[invalid]: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}
