#include "procnet/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace procnet {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  /// Next non-empty, non-comment line split into tokens.
  std::vector<std::string> next(const char* expected) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ss(line);
      std::vector<std::string> tok;
      for (std::string t; ss >> t;) tok.push_back(t);
      if (tok.empty()) continue;
      if (tok[0] != expected) fail(std::string("expected '") + expected + "', found '" + tok[0] + "'");
      return tok;
    }
    fail(std::string("unexpected end of file, expected '") + expected + "'");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ArtifactError("line " + std::to_string(line_no_) + ": " + what);
  }

  double number(const std::string& s) const {
    double v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail("bad number '" + s + "'");
    return v;
  }

  long long integer(const std::string& s) const {
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail("bad integer '" + s + "'");
    return v;
  }

  long long single(const char* key) {
    auto t = next(key);
    if (t.size() != 2) fail(std::string("'") + key + "' takes one value");
    return integer(t[1]);
  }

  void header(const char* magic) {
    auto t = next(magic);
    if (t.size() != 2 || integer(t[1]) != kArtifactVersion)
      fail(std::string("unsupported ") + magic + " version");
  }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

void write_edges(std::ostream& out, const Discretizer& d) {
  out << "bins " << d.bins() << "\n";
  out << "edges";
  for (double e : d.edges()) out << ' ' << format_double(e);
  out << "\n";
}

Discretizer read_edges(LineReader& r) {
  const auto bins = r.single("bins");
  const auto t = r.next("edges");
  std::vector<double> edges;
  for (std::size_t i = 1; i < t.size(); ++i) edges.push_back(r.number(t[i]));
  try {
    return Discretizer(std::move(edges), static_cast<int>(bins));
  } catch (const std::invalid_argument& e) {
    r.fail(e.what());
  }
}

template <typename T>
void save_with(const std::filesystem::path& path, const T& value,
               void (*writer)(std::ostream&, const T&)) {
  std::ofstream out(path);
  if (!out) throw ArtifactError("cannot write " + path.string());
  writer(out, value);
  if (!out) throw ArtifactError("failed writing " + path.string());
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("cannot open " + path.string());
  return in;
}

}  // namespace

void write_discretizer(std::ostream& out, const Discretizer& d) {
  out << "procnet-discretizer " << kArtifactVersion << "\n";
  write_edges(out, d);
}

Discretizer read_discretizer(std::istream& in) {
  LineReader r(in);
  r.header("procnet-discretizer");
  return read_edges(r);
}

void write_learned_policy(std::ostream& out, const LearnedPolicy& p) {
  const QTable& q = p.table;
  out << "procnet-qtable " << kArtifactVersion << "\n";
  out << "states " << q.states() << "\n";
  out << "actions " << q.actions() << "\n";
  write_edges(out, p.discretizer);
  for (int s = 0; s < q.states(); ++s) {
    out << "q " << s;
    for (int a = 0; a < q.actions(); ++a) out << ' ' << format_double(q.values(s, a));
    out << "\n";
  }
  for (int s = 0; s < q.states(); ++s) {
    out << "visits " << s;
    for (int a = 0; a < q.actions(); ++a) out << ' ' << q.visits(s, a);
    out << "\n";
  }
  out << "policy";
  for (int a : p.policy) out << ' ' << a;
  out << "\n";
}

LearnedPolicy read_learned_policy(std::istream& in) {
  LineReader r(in);
  r.header("procnet-qtable");
  const auto states = r.single("states");
  const auto actions = r.single("actions");
  if (states < 1 || actions < 1) r.fail("empty table");
  LearnedPolicy p;
  p.discretizer = read_edges(r);
  if (p.discretizer.bins() != states) r.fail("bin count does not match the table");
  p.table = QTable(static_cast<int>(states), static_cast<int>(actions));
  for (long long s = 0; s < states; ++s) {
    const auto t = r.next("q");
    if (static_cast<long long>(t.size()) != actions + 2 || r.integer(t[1]) != s)
      r.fail("malformed q row");
    for (long long a = 0; a < actions; ++a) p.table.values(s, a) = r.number(t[a + 2]);
  }
  for (long long s = 0; s < states; ++s) {
    const auto t = r.next("visits");
    if (static_cast<long long>(t.size()) != actions + 2 || r.integer(t[1]) != s)
      r.fail("malformed visits row");
    for (long long a = 0; a < actions; ++a) p.table.visits(s, a) = r.integer(t[a + 2]);
  }
  const auto t = r.next("policy");
  if (static_cast<long long>(t.size()) != states + 1) r.fail("policy needs one action per state");
  for (std::size_t i = 1; i < t.size(); ++i) {
    const auto a = r.integer(t[i]);
    if (a < 0 || a >= actions) r.fail("policy action out of range");
    p.policy.push_back(static_cast<int>(a));
  }
  return p;
}

Discretizer load_discretizer(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_discretizer(in);
}

LearnedPolicy load_learned_policy(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_learned_policy(in);
}

void save(const std::filesystem::path& path, const Discretizer& d) {
  save_with<Discretizer>(path, d, &write_discretizer);
}

void save(const std::filesystem::path& path, const LearnedPolicy& p) {
  save_with<LearnedPolicy>(path, p, &write_learned_policy);
}

void write_trace_csv(std::ostream& out, const Scenario& scenario, const EpisodeResult& r) {
  out << "k,trace,window_index,action\n";
  const auto& sched = scenario.schedule;
  std::size_t l = 0;
  for (std::size_t k = 0; k < r.traces.size(); ++k) {
    while (l + 1 < sched.size() && static_cast<Step>(k) >= sched.start(l + 1)) ++l;
    out << k << ',' << format_double(r.traces[k]) << ',' << l << ',' << r.outcomes.at(l).action
        << "\n";
  }
}

std::vector<double> moving_average(const std::vector<double>& values, std::size_t window) {
  if (window == 0) throw std::invalid_argument("moving average window must be >= 1");
  std::vector<double> out(values.size());
  double sum = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= window) sum -= values[i - window];
    out[i] = sum / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

void write_moving_average_csv(std::ostream& out, const std::vector<double>& traces,
                              std::size_t window) {
  out << "k,moving_average\n";
  const auto ma = moving_average(traces, window);
  for (std::size_t k = 0; k < ma.size(); ++k) out << k << ',' << format_double(ma[k]) << "\n";
}

void write_training_curve_csv(std::ostream& out, const TrainingCurve& curve) {
  out << "episode,return,cost,greedy_cost,greedy_return\n";
  std::size_t j = 0;
  for (std::size_t i = 0; i < curve.returns.size(); ++i) {
    const int episode = static_cast<int>(i) + 1;
    out << episode << ',' << format_double(curve.returns[i]) << ','
        << format_double(curve.costs[i]) << ',';
    if (j < curve.eval_episode.size() && curve.eval_episode[j] == episode) {
      out << format_double(curve.eval_cost[j]) << ',' << format_double(curve.eval_return[j]);
      ++j;
    } else {
      out << ',';
    }
    out << "\n";
  }
}

}  // namespace procnet
