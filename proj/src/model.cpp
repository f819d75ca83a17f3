#include "nvpol/model.hpp"

#include <cmath>
#include <sstream>

namespace nvpol {

ModelParams::ModelParams() {
  A_C = carbon_tensor(4.0);
  A_N = axial_tensor(0.0, -2.16);
  A_N1 = axial_tensor(81.3, 114.0);
  // Appendix-style P1-coupled carbon tensor.
  A_C1 = axial_tensor(10.0, 14.0);
  A_C1(0, 2) = A_C1(2, 0) = 4.0;
}

Tensor3 ModelParams::carbon_tensor(double a_zz) {
  Tensor3 t = Tensor3::Zero();
  t(2, 2) = a_zz;
  t(0, 2) = t(2, 0) = a_zz / 4.0;
  return t;
}

Tensor3 ModelParams::axial_tensor(double a_perp, double a_par) {
  Tensor3 t = Tensor3::Zero();
  t(0, 0) = t(1, 1) = a_perp;
  t(2, 2) = a_par;
  return t;
}

void ModelParams::validate() const {
  std::ostringstream bad;
  auto check = [&](bool ok, const char* what) {
    if (!ok) bad << (bad.tellp() > 0 ? "; " : "") << what;
  };
  check(B >= 0, "B must be >= 0");
  check(theta_deg >= -90 && theta_deg <= 90,
        "theta_deg must lie in [-90, 90]");
  check(D > 0, "D must be > 0");
  check(d_nvp1 >= 0, "d_nvp1 must be >= 0");
  auto sym = [](const Tensor3& t) {
    return (t - t.transpose()).cwiseAbs().maxCoeff() < 1e-12;
  };
  check(sym(A_C), "A_C must be symmetric");
  check(sym(A_N), "A_N must be symmetric");
  check(sym(A_N1), "A_N1 must be symmetric");
  check(sym(A_C1), "A_C1 must be symmetric");
  if (bad.tellp() > 0)
    throw std::invalid_argument("ModelParams: " + bad.str());
}

Matrix nv_p1_dipolar(double d, DipolarForm form, const SpinRegister& reg,
                     double dipole_zenith_deg, double dipole_azimuth_deg) {
  if (d < 0) throw std::invalid_argument("nv_p1_dipolar: d must be >= 0");
  const int inv = reg.require(Site::Nv);
  const int ip1 = reg.require(Site::P1);
  const SpinTriple S = embedded_spin(inv, reg);
  const SpinTriple Sp = embedded_spin(ip1, reg);
  switch (form) {
    case DipolarForm::Ising:
      return d * (S.z * Sp.z);
    case DipolarForm::SecularCrossFlip:
      return d * (S.z * Sp.z -
                  0.25 * (S.plus() * Sp.plus() + S.minus() * Sp.minus()));
    case DipolarForm::PointDipole: {
      const Eigen::Vector3d n =
          unit_vector(dipole_zenith_deg, dipole_azimuth_deg);
      Matrix dot = Matrix::Zero(reg.dim(), reg.dim());
      Matrix sn = Matrix::Zero(reg.dim(), reg.dim());
      Matrix spn = Matrix::Zero(reg.dim(), reg.dim());
      for (int a = 0; a < 3; ++a) {
        dot.noalias() += S[a] * Sp[a];
        sn += n[a] * S[a];
        spn += n[a] * Sp[a];
      }
      return d * (dot - 3.0 * (sn * spn));
    }
  }
  throw std::invalid_argument("nv_p1_dipolar: unknown form");
}

Matrix build_hamiltonian(const ModelParams& params, ModelVariant variant,
                         const SpinRegister& reg) {
  params.validate();
  if (variant == ModelVariant::P1CoupledCarbon && reg.has(Site::Carbon) &&
      !reg.has(Site::P1))
    throw std::invalid_argument(
        "build_hamiltonian: P1-coupled carbon variant needs the P1 site");

  const int dim = reg.dim();
  Matrix h = Matrix::Zero(dim, dim);
  const Eigen::Vector3d b = params.field_direction();

  std::vector<SpinTriple> ops;
  ops.reserve(reg.size());
  for (int i = 0; i < reg.size(); ++i) ops.push_back(embedded_spin(i, reg));

  // Zeeman, H -= gamma * B * (b . S), per site.
  for (int i = 0; i < reg.size(); ++i) {
    double gamma = 0.0;
    switch (reg.spin(i).site) {
      case Site::Nv:
      case Site::P1: gamma = params.gamma_e; break;
      case Site::NvNitrogen:
      case Site::P1Nitrogen: gamma = params.gamma_N; break;
      case Site::Carbon: gamma = params.gamma_C; break;
    }
    for (int a = 0; a < 3; ++a)
      if (b[a] != 0.0) h.noalias() -= gamma * params.B * b[a] * ops[i][a];
  }

  if (auto inv = reg.index_of(Site::Nv)) {
    h.noalias() += params.D_eff() * (ops[*inv].z * ops[*inv].z);
    if (auto in = reg.index_of(Site::NvNitrogen)) {
      h.noalias() += params.Q_nv * (ops[*in].z * ops[*in].z);
      h += coupling_term(spin_matrices(1.0), *inv, params.A_N,
                         spin_matrices(1.0), *in, reg);
    }
  }

  const Eigen::Vector3d p1_axis =
      unit_vector(params.p1_zenith_deg, params.p1_azimuth_deg);
  if (auto in1 = reg.index_of(Site::P1Nitrogen)) {
    Matrix jn = Matrix::Zero(dim, dim);
    for (int a = 0; a < 3; ++a) jn += p1_axis[a] * ops[*in1][a];
    h.noalias() += params.Q_p1 * (jn * jn);
    if (auto ip1 = reg.index_of(Site::P1)) {
      h += coupling_term(
          spin_matrices(0.5), *ip1,
          rotate_tensor(params.A_N1, params.p1_zenith_deg,
                        params.p1_azimuth_deg),
          spin_matrices(1.0), *in1, reg);
    }
  }

  if (auto ic = reg.index_of(Site::Carbon)) {
    if (variant == ModelVariant::NvCoupledCarbon) {
      if (auto inv = reg.index_of(Site::Nv))
        h += coupling_term(spin_matrices(1.0), *inv, params.A_C,
                           spin_matrices(0.5), *ic, reg);
    } else {
      h += coupling_term(
          spin_matrices(0.5), reg.require(Site::P1),
          rotate_tensor(params.A_C1, params.p1_zenith_deg,
                        params.p1_azimuth_deg),
          spin_matrices(0.5), *ic, reg);
    }
  }

  if (reg.has(Site::Nv) && reg.has(Site::P1) && params.d_nvp1 != 0.0)
    h += nv_p1_dipolar(params.d_nvp1, params.nvp1_form, reg,
                       params.dipole_zenith_deg, params.dipole_azimuth_deg);

  return h;
}

}  // namespace nvpol
