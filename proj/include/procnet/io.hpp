// Line-oriented, versioned text artifacts and CSV output.
//
// Discretizer file:
//   procnet-discretizer 1
//   bins <M>
//   edges <e_1> ... <e_j>          (j <= M-1, strictly increasing)
//
// Learned-policy file:
//   procnet-qtable 1
//   states <M>
//   actions <N+1>
//   bins <M>
//   edges <e_1> ... <e_j>
//   q <s> <Q(s,0)> ... <Q(s,N)>    (one line per state)
//   visits <s> <n(s,0)> ... <n(s,N)>
//   policy <a_0> ... <a_{M-1}>
//
// Numbers are written in shortest round-trip form. Lines starting with '#'
// are ignored on read.
#pragma once

#include "procnet/env.hpp"
#include "procnet/qlearning.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace procnet {

/// Missing, malformed or incompatible artifact file.
class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kArtifactVersion = 1;

std::string format_double(double v);

void write_discretizer(std::ostream& out, const Discretizer& d);
Discretizer read_discretizer(std::istream& in);

struct LearnedPolicy {
  Discretizer discretizer;
  QTable table;
  std::vector<int> policy;
};

void write_learned_policy(std::ostream& out, const LearnedPolicy& p);
LearnedPolicy read_learned_policy(std::istream& in);

Discretizer load_discretizer(const std::filesystem::path& path);
LearnedPolicy load_learned_policy(const std::filesystem::path& path);
void save(const std::filesystem::path& path, const Discretizer& d);
void save(const std::filesystem::path& path, const LearnedPolicy& p);

/// k,trace,window_index,action -- one row per step k = 0..K-1.
void write_trace_csv(std::ostream& out, const Scenario& scenario, const EpisodeResult& r);

/// Trailing moving average of tr(P_k) over `window` steps (fewer at the start).
std::vector<double> moving_average(const std::vector<double>& values, std::size_t window);
void write_moving_average_csv(std::ostream& out, const std::vector<double>& traces,
                              std::size_t window);

void write_training_curve_csv(std::ostream& out, const TrainingCurve& curve);

}  // namespace procnet
