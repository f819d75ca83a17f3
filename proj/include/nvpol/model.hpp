#pragma once

// Model Hamiltonian for the NV / P1 / nuclear-spin cluster: crystal field,
// Zeeman terms with field tilt, quadrupole terms, hyperfine tensors and the
// NV-P1 dipolar coupling, in the two carbon-coupling variants.

#include "nvpol/spin.hpp"

namespace nvpol {

// Which electron the 13C couples to.
enum class ModelVariant { NvCoupledCarbon, P1CoupledCarbon };

// Shape of the NV-P1 coupling. SecularCrossFlip keeps S_z*S'_z plus the
// pair-flip term -(d/4)(S+S'+ + S-S'-) that connects the NV and P1
// transitions which become degenerate at the matching fields. PointDipole
// is the full tensor d*(S.S' - 3(S.n)(S'.n)) for inter-defect direction n.
enum class DipolarForm { Ising, SecularCrossFlip, PointDipole };

struct ModelParams {
  double D = 2870.0;         // NV zero-field splitting, MHz
  double gamma_e = 28.025;   // MHz/mT
  double gamma_C = 0.01071;  // MHz/mT
  double gamma_N = 0.003077; // MHz/mT
  double Q_nv = -4.95;       // 14N quadrupole at the NV, MHz
  double Q_p1 = -3.97;       // 14N quadrupole at the P1, MHz

  Tensor3 A_C;   // NV-13C hyperfine, NV frame, MHz
  Tensor3 A_N;   // NV-14N hyperfine, NV frame, MHz
  Tensor3 A_N1;  // P1-14N hyperfine, P1 principal frame, MHz
  Tensor3 A_C1;  // P1-13C hyperfine (P1-coupled variant), P1 frame, MHz

  double d_nvp1 = 0.5;  // NV-P1 coupling amplitude, MHz
  DipolarForm nvp1_form = DipolarForm::SecularCrossFlip;
  double dipole_zenith_deg = 90.0;  // inter-defect direction, PointDipole only
  double dipole_azimuth_deg = 0.0;

  double B = 51.2;         // field magnitude, mT
  double theta_deg = 0.0;  // angle between field and NV axis

  double p1_zenith_deg = 0.0;  // orientation of the P1 trigonal axis
  double p1_azimuth_deg = 0.0;

  double deltaT = 0.0;    // temperature offset, K
  double dD_dT = -0.076;  // crystal-field thermal coefficient, MHz/K

  ModelParams();

  double D_eff() const { return D + dD_dT * deltaT; }

  // Axial carbon tensor with zz = a_zz and the zx = zz/4 anisotropy that
  // opens the nuclear flip channel.
  static Tensor3 carbon_tensor(double a_zz);
  // Axial tensor diag(a_perp, a_perp, a_par).
  static Tensor3 axial_tensor(double a_perp, double a_par);

  // Field direction in the NV frame.
  Eigen::Vector3d field_direction() const {
    return {std::sin(deg2rad(theta_deg)), 0.0, std::cos(deg2rad(theta_deg))};
  }

  // Throws std::invalid_argument listing every violated bound.
  void validate() const;
};

// NV-P1 coupling operator on the given register (requires both sites).
Matrix nv_p1_dipolar(double d, DipolarForm form, const SpinRegister& reg,
                     double dipole_zenith_deg = 90.0,
                     double dipole_azimuth_deg = 0.0);

// Full Hamiltonian on `reg`; sites absent from the register are dropped
// together with their couplings. Hermitian by construction.
Matrix build_hamiltonian(const ModelParams& params, ModelVariant variant,
                         const SpinRegister& reg);

}  // namespace nvpol
