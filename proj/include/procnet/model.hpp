// Linear process model and the two covariance maps of the Kalman predictor:
// open-loop prediction and information-form measurement update.
//
// Everything here is templated on the scalar type and works on dense,
// dynamically sized Eigen matrices. All functions are pure.
#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

namespace procnet {

/// Discrete time index. Step k stands for wall time k*T.
/// Steps are 0-based: step 0 is the first instant of the horizon.
using Step = std::int64_t;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Raised when a matrix inversion would be ill-conditioned or a covariance
/// loses definiteness.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Largest accepted condition number of a matrix that gets inverted.
inline constexpr double kMaxConditionNumber = 1e12;

/// Tolerance on the smallest eigenvalue when checking semidefiniteness.
inline constexpr double kPsdTolerance = 1e-10;

template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& m, double tol = 1e-9) {
  if (m.rows() != m.cols()) return false;
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

template <typename Derived>
bool is_symmetric_psd(const Eigen::MatrixBase<Derived>& m,
                      double tol = kPsdTolerance) {
  using Scalar = typename Derived::Scalar;
  if (!is_symmetric(m)) return false;
  if (m.size() == 0) return true;
  const MatrixX<Scalar> sym = (m + m.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= Scalar(-tol);
}

template <typename Derived>
bool is_symmetric_pd(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (!is_symmetric(m) || m.size() == 0) return false;
  Eigen::LLT<MatrixX<Scalar>> llt(m.eval());
  return llt.info() == Eigen::Success;
}

/// In-place (P + P^T) / 2.
template <typename Derived>
void symmetrize(Eigen::MatrixBase<Derived>& m) {
  m = (m + m.transpose().eval()) / typename Derived::Scalar(2);
}

/// Time-varying linear dynamics x_{k+1} = A_k x_k + w_k, w_k ~ N(0, W_k),
/// with initial error covariance P0 and an output matrix H.
/// The output matrix defaults to the identity, i.e. sensors observe the
/// full state: y_k = x_k + v_k.
template <typename Scalar>
class SystemModel {
 public:
  using Matrix = MatrixX<Scalar>;
  using Generator = std::function<Matrix(Step)>;

  /// Time-invariant model. An empty H means identity.
  SystemModel(Matrix A, Matrix W, Matrix P0, Matrix H = Matrix())
      : n_(A.rows()),
        A_(std::move(A)),
        W_(std::move(W)),
        P0_(std::move(P0)),
        H_(std::move(H)) {
    if (A_.rows() != A_.cols()) throw std::invalid_argument("A must be square");
    if (W_.rows() != n_ || W_.cols() != n_)
      throw std::invalid_argument("W must be n x n");
    if (!is_symmetric_psd(W_))
      throw std::invalid_argument("W must be symmetric positive semidefinite");
    init_common();
  }

  /// Time-varying model; A(k) and W(k) are evaluated on demand.
  static SystemModel time_varying(Eigen::Index n, Generator A, Generator W,
                                  Matrix P0, Matrix H = Matrix()) {
    SystemModel m;
    m.n_ = n;
    m.A_fn_ = std::move(A);
    m.W_fn_ = std::move(W);
    m.P0_ = std::move(P0);
    m.H_ = std::move(H);
    m.init_common();
    return m;
  }

  Eigen::Index dim() const { return n_; }
  Eigen::Index output_dim() const { return H_.rows(); }
  bool time_invariant() const { return !A_fn_; }

  Matrix state_matrix(Step k) const { return A_fn_ ? checked_A(k) : A_; }
  Matrix process_noise(Step k) const { return W_fn_ ? checked_W(k) : W_; }
  const Matrix& initial_covariance() const { return P0_; }
  const Matrix& output_matrix() const { return H_; }
  bool full_state_output() const { return full_output_; }

  /// One open-loop step P <- A_k P A_k^T + W_k, followed by symmetrization.
  void propagate(Matrix& P, Step k) const {
    if (A_fn_) {
      const Matrix A = checked_A(k);
      P = (A * P * A.transpose()).eval() + checked_W(k);
    } else {
      P = (A_ * P * A_.transpose()).eval() + W_;
    }
    symmetrize(P);
  }

 private:
  SystemModel() = default;

  void init_common() {
    if (P0_.rows() != n_ || P0_.cols() != n_)
      throw std::invalid_argument("P0 must be n x n");
    if (!is_symmetric_psd(P0_))
      throw std::invalid_argument("P0 must be symmetric positive semidefinite");
    if (H_.size() == 0) H_ = Matrix::Identity(n_, n_);
    if (H_.cols() != n_) throw std::invalid_argument("H must have n columns");
    full_output_ = H_.rows() == n_ && H_.isIdentity(0);
  }

  Matrix checked_A(Step k) const {
    Matrix A = A_fn_(k);
    if (A.rows() != n_ || A.cols() != n_)
      throw std::invalid_argument("A_k has wrong shape at step " + std::to_string(k));
    return A;
  }

  Matrix checked_W(Step k) const {
    Matrix W = W_fn_(k);
    if (W.rows() != n_ || W.cols() != n_ || !is_symmetric_psd(W))
      throw std::invalid_argument("W_k must be n x n symmetric PSD at step " +
                                  std::to_string(k));
    return W;
  }

  Eigen::Index n_ = 0;
  Matrix A_, W_, P0_, H_;
  Generator A_fn_, W_fn_;
  bool full_output_ = true;
};

using Model = SystemModel<double>;
using Covariance = MatrixX<double>;

/// Multi-step open-loop prediction over [from, to): applies the maps for
/// steps from, from+1, ..., to-1. Returns P unchanged when from == to.
template <typename Derived>
MatrixX<typename Derived::Scalar> predict_cov(
    const Eigen::MatrixBase<Derived>& P,
    const SystemModel<typename Derived::Scalar>& model, Step from, Step to) {
  if (from > to) throw std::invalid_argument("predict_cov: from > to");
  MatrixX<typename Derived::Scalar> out = P;
  for (Step k = from; k < to; ++k) model.propagate(out, k);
  return out;
}

/// Reciprocal condition estimate of a symmetric positive definite matrix,
/// from the extreme eigenvalues. Returns 0 for an indefinite matrix.
template <typename Derived>
double spd_rcond(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(m.eval(), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const Scalar lo = ev.minCoeff(), hi = ev.maxCoeff();
  if (!(lo > Scalar(0)) || !(hi > Scalar(0))) return 0.0;
  return static_cast<double>(lo / hi);
}

/// Measurement update of the error covariance with a measurement
/// y = H x + v, v ~ N(0, V):
///
///   P+ = (P^-1 + H^T V^-1 H)^-1 = P - P H^T (H P H^T + V)^-1 H P
///
/// The right-hand form is used so that a singular (PSD) prior is accepted.
/// With H = I this is (P^-1 + V^-1)^-1.
template <typename DerivedP, typename DerivedV, typename DerivedH>
MatrixX<typename DerivedP::Scalar> update_cov(
    const Eigen::MatrixBase<DerivedP>& P, const Eigen::MatrixBase<DerivedV>& V,
    const Eigen::MatrixBase<DerivedH>& H) {
  using Scalar = typename DerivedP::Scalar;
  using Matrix = MatrixX<Scalar>;
  if (P.rows() != P.cols() || H.cols() != P.rows() || V.rows() != H.rows() ||
      V.cols() != V.rows())
    throw std::invalid_argument("update_cov: dimension mismatch");

  const Matrix PHt = P * H.transpose();
  Matrix S = H * PHt;
  S += V;
  symmetrize(S);
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success)
    throw NumericalError("update_cov: innovation covariance is not positive definite");
  if (spd_rcond(S) * kMaxConditionNumber < 1.0)
    throw NumericalError("update_cov: innovation covariance is ill-conditioned");

  Matrix out = P - PHt * llt.solve(PHt.transpose());
  symmetrize(out);
  return out;
}

/// Full-state update (H = I): (P^-1 + V^-1)^-1.
template <typename DerivedP, typename DerivedV>
MatrixX<typename DerivedP::Scalar> update_cov(const Eigen::MatrixBase<DerivedP>& P,
                                              const Eigen::MatrixBase<DerivedV>& V) {
  using Matrix = MatrixX<typename DerivedP::Scalar>;
  return update_cov(P, V, Matrix::Identity(P.rows(), P.cols()));
}

/// Planar target as two decoupled double integrators, state order
/// (px, vx, py, vy). Per axis A = [1 T; 0 1] and W = diag(pos, vel).
/// The output matrix is the identity (full-state measurements).
template <typename Scalar = double>
SystemModel<Scalar> make_double_integrator_2d(Scalar T, Scalar vel_noise_var,
                                              Scalar pos_noise_var = Scalar(0),
                                              Scalar initial_variance = Scalar(10)) {
  if (!(T > Scalar(0))) throw std::invalid_argument("sampling period must be > 0");
  if (vel_noise_var < Scalar(0) || pos_noise_var < Scalar(0))
    throw std::invalid_argument("noise variances must be >= 0");
  if (initial_variance < Scalar(0))
    throw std::invalid_argument("initial variance must be >= 0");

  using Matrix = MatrixX<Scalar>;
  Matrix A = Matrix::Identity(4, 4);
  A(0, 1) = T;
  A(2, 3) = T;
  Matrix W = Matrix::Zero(4, 4);
  W(0, 0) = W(2, 2) = pos_noise_var;
  W(1, 1) = W(3, 3) = vel_noise_var;
  Matrix P0 = initial_variance * Matrix::Identity(4, 4);
  return SystemModel<Scalar>(std::move(A), std::move(W), std::move(P0));
}

/// Output matrix selecting the two positions of the planar double integrator.
template <typename Scalar = double>
MatrixX<Scalar> position_output_2d() {
  MatrixX<Scalar> H = MatrixX<Scalar>::Zero(2, 4);
  H(0, 0) = Scalar(1);
  H(1, 2) = Scalar(1);
  return H;
}

/// Same dynamics as `model`, observed through H.
template <typename Scalar>
SystemModel<Scalar> with_output(const SystemModel<Scalar>& model, MatrixX<Scalar> H) {
  if (!model.time_invariant()) {
    auto m = model;
    return SystemModel<Scalar>::time_varying(
        model.dim(), [m](Step k) { return m.state_matrix(k); },
        [m](Step k) { return m.process_noise(k); }, model.initial_covariance(),
        std::move(H));
  }
  return SystemModel<Scalar>(model.state_matrix(0), model.process_noise(0),
                             model.initial_covariance(), std::move(H));
}

}  // namespace procnet
