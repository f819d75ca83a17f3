#pragma once

// Closed-system propagation by exact diagonalization. One decomposition of
// H serves every time point: rho(t) = V e^{-i 2 pi E t} V^H rho V ... in the
// eigenbasis the evolution is an elementwise phase.

#include "nvpol/model.hpp"
#include "nvpol/state.hpp"

namespace nvpol {

struct Trajectory {
  Eigen::VectorXd times;  // us
  Eigen::VectorXd P_S, P_S1, P_C, P_J, P_J1;
  Eigen::VectorXd& series(Site site);
  const Eigen::VectorXd& series(Site site) const;
};

class EigenPropagator {
 public:
  // Throws if H is not Hermitian.
  explicit EigenPropagator(const Matrix& h);

  const Eigen::VectorXd& energies() const { return energies_; }
  const Matrix& eigenvectors() const { return vectors_; }

  Matrix propagate(const Matrix& rho0, double t_us) const;

  // Expectation series <obs>(t) for one initial state and many observables;
  // O(dim^2) per time point after the one-off basis transforms.
  std::vector<Eigen::VectorXd> observable_series(
      const Matrix& rho0, const std::vector<Matrix>& observables,
      const Eigen::VectorXd& times) const;

  // Time average over [0, T] of <obs>(t), in closed form.
  double time_average(const Matrix& rho0, const Matrix& obs, double T) const;

 private:
  Eigen::VectorXd energies_;  // MHz
  Matrix vectors_;
};

Trajectory evolve_unitary(const Matrix& rho0, const Matrix& h,
                          const Eigen::VectorXd& times,
                          const SpinRegister& reg);

struct CouplingScanOptions {
  double field_halfwidth_mT = 0.3;
  int field_points = 601;
  double t_max_us = 200.0;
  int t_points = 401;
};

struct CouplingScanPoint {
  double a_zz;        // MHz
  double max_abs_PC;  // extremum of |P_C| over the field/time window
  double max_abs_PS1;
};

// Fig-5a style study: extremal carbon and P1 polarization reachable in a
// unitary transfer near the central matching field, vs carbon coupling.
std::vector<CouplingScanPoint> unitary_limit_scan(
    const std::vector<double>& couplings_mhz, const ModelParams& params,
    const SpinRegister& reg, double field_center_mT,
    const CouplingScanOptions& opts = {});

}  // namespace nvpol
