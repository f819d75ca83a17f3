#pragma once

// Density-matrix construction and the polarization observables.

#include "nvpol/spin.hpp"

namespace nvpol {

// Per-spin initial condition: a pure Zeeman level |m> or maximally mixed.
struct LevelSpec {
  enum class Kind { Thermal, Pure };
  Kind kind = Kind::Thermal;
  double m = 0.0;  // magnetic quantum number, Pure only
  static LevelSpec thermal() { return {Kind::Thermal, 0.0}; }
  static LevelSpec pure(double m) { return {Kind::Pure, m}; }
};

// One spec per register member, in register order.
class InitialState {
 public:
  explicit InitialState(const SpinRegister& reg)
      : specs_(reg.size()) {}
  // Everything thermal except the optically pumped NV in m_S = 0.
  static InitialState nv_polarized(const SpinRegister& reg);
  InitialState& set(const SpinRegister& reg, Site site, LevelSpec spec);
  const std::vector<LevelSpec>& specs() const { return specs_; }

 private:
  std::vector<LevelSpec> specs_;
};

// Tensor product of pure projectors and identity/d factors; trace one.
Matrix initial_state(const InitialState& spec, const SpinRegister& reg);

// Hermiticity, unit trace and positivity checks for a density matrix.
void check_density_matrix(const Matrix& rho, double tol_trace = 1e-10,
                          double tol_eig = 1e-10);

// P_S = Tr{S_z rho}; spin-1/2 polarizations carry a factor 2 so they
// saturate at +-1: P_S1 = 2 Tr{S'_z rho}, P_C = 2 Tr{I_z rho}.
struct Polarizations {
  double S = 0, S1 = 0, C = 0, J = 0, J1 = 0;
};

// z observables of every site present, scaled per the convention above.
struct PolarizationOps {
  explicit PolarizationOps(const SpinRegister& reg);
  std::vector<Site> sites;
  std::vector<Matrix> ops;  // aligned with `sites`
  Polarizations eval(const Matrix& rho) const;
};

Polarizations polarizations(const Matrix& rho, const SpinRegister& reg);

}  // namespace nvpol
