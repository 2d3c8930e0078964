// Test-side references and random instance generators. Nothing here calls
// into the library's update or prediction code.
#pragma once

#include "procnet/model.hpp"
#include "procnet/sensing.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace testing_support {

using procnet::Covariance;
using procnet::MeasurementEvent;
using procnet::Model;
using procnet::Step;
using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline long long uniform_int(Rng& rng, long long lo, long long hi) {
  return std::uniform_int_distribution<long long>(lo, hi)(rng);
}

/// Random SPD matrix with eigenvalues in [lo, hi].
inline Covariance random_spd(Rng& rng, Eigen::Index n, double lo, double hi) {
  Covariance G(n, n);
  for (Eigen::Index i = 0; i < G.size(); ++i) G(i) = uniform(rng, -1, 1);
  Eigen::HouseholderQR<Covariance> qr(G);
  const Covariance Q = qr.householderQ();
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = uniform(rng, lo, hi);
  Covariance S = Q * d.asDiagonal() * Q.transpose();
  return (S + S.transpose()) / 2;
}

/// Mildly unstable-to-stable random dynamics, spectral radius near 1.
inline Covariance random_dynamics(Rng& rng, Eigen::Index n) {
  Covariance A = Covariance::Identity(n, n);
  for (Eigen::Index i = 0; i < A.size(); ++i) A(i) += uniform(rng, -0.08, 0.08);
  return A;
}

inline Model random_model(Rng& rng, Eigen::Index n) {
  return Model(random_dynamics(rng, n), random_spd(rng, n, 0.01, 0.5),
               random_spd(rng, n, 0.5, 10));
}

/// Independent reference: information-form update (P^-1 + H^T V^-1 H)^-1.
inline Covariance info_update(const Covariance& P, const Covariance& V, const Covariance& H) {
  const Covariance info = P.inverse() + H.transpose() * V.inverse() * H;
  Covariance out = info.inverse();
  return (out + out.transpose()) / 2;
}

/// Independent reference for P_k: every event with arrival <= k, applied in
/// sample-time order, from P0 at step 0.
inline Covariance reference_covariance(std::vector<MeasurementEvent> events, const Model& m,
                                       Step k) {
  std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
    return a.sample_time < b.sample_time;
  });
  Covariance P = m.initial_covariance();
  Step t = 0;
  const Covariance H = m.output_matrix();
  auto predict_to = [&](Step target) {
    for (; t < target; ++t) {
      const Covariance A = m.state_matrix(t);
      P = A * P * A.transpose() + m.process_noise(t);
    }
  };
  for (const auto& e : events) {
    if (e.arrival_time > k) continue;
    predict_to(e.sample_time);
    P = info_update(P, e.noise, H);
  }
  predict_to(k);
  return P;
}

inline std::vector<double> reference_traces(const std::vector<MeasurementEvent>& events,
                                            const Model& m, Step K) {
  std::vector<double> out;
  for (Step k = 0; k < K; ++k) out.push_back(reference_covariance(events, m, k).trace());
  return out;
}

/// Random out-of-sequence stream: up to `max_events` measurements with
/// sample times in [0, K) and delays in [1, max_delay].
inline std::vector<MeasurementEvent> random_events(Rng& rng, Eigen::Index m, Step K,
                                                   int max_events, Step max_delay) {
  std::vector<MeasurementEvent> ev;
  const auto count = uniform_int(rng, 0, max_events);
  for (long long i = 0; i < count; ++i) {
    MeasurementEvent e;
    e.sensor_id = static_cast<int>(uniform_int(rng, 0, 5));
    e.sample_time = uniform_int(rng, 0, K - 1);
    e.arrival_time = e.sample_time + uniform_int(rng, 1, max_delay);
    e.mode = uniform_int(rng, 0, 1) ? procnet::Mode::Processed : procnet::Mode::Raw;
    e.noise = random_spd(rng, m, 0.1, 5);
    ev.push_back(std::move(e));
  }
  return ev;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

/// Small random homogeneous sensor network satisfying the mode assumptions.
inline std::vector<procnet::SensorSpec> random_sensors(Rng& rng, Eigen::Index m, int count) {
  procnet::SensingMode raw{procnet::Mode::Raw, uniform_int(rng, 1, 4), uniform_int(rng, 1, 3),
                           Covariance()};
  procnet::SensingMode proc{procnet::Mode::Processed, raw.gen_delay + uniform_int(rng, 1, 6),
                            uniform_int(rng, 1, raw.comm_delay), Covariance()};
  const double vp = uniform(rng, 0.2, 2), vr = vp + uniform(rng, 0.5, 8);
  raw.noise = vr * Covariance::Identity(m, m);
  proc.noise = vp * Covariance::Identity(m, m);
  return procnet::make_homogeneous_sensors(count, raw, proc);
}

}  // namespace testing_support
