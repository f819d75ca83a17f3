#include "nvpol/state.hpp"

#include <cmath>

namespace nvpol {

InitialState InitialState::nv_polarized(const SpinRegister& reg) {
  InitialState st(reg);
  if (reg.has(Site::Nv)) st.set(reg, Site::Nv, LevelSpec::pure(0.0));
  return st;
}

InitialState& InitialState::set(const SpinRegister& reg, Site site,
                                LevelSpec spec) {
  specs_.at(reg.require(site)) = spec;
  return *this;
}

Matrix initial_state(const InitialState& spec, const SpinRegister& reg) {
  if (static_cast<int>(spec.specs().size()) != reg.size())
    throw std::invalid_argument("initial_state: spec/register size mismatch");
  Matrix rho = Matrix::Identity(1, 1);
  for (int i = 0; i < reg.size(); ++i) {
    const SpinSpecies& sp = reg.spin(i);
    const LevelSpec& ls = spec.specs()[i];
    Matrix factor;
    if (ls.kind == LevelSpec::Kind::Thermal) {
      factor = Matrix::Identity(sp.dim(), sp.dim()) / double(sp.dim());
    } else {
      const double idx = sp.s - ls.m;
      const int k = static_cast<int>(std::lround(idx));
      if (std::abs(idx - k) > 1e-9 || k < 0 || k >= sp.dim())
        throw std::invalid_argument(
            std::string("initial_state: level m outside multiplicity of ") +
            sp.label);
      factor = Matrix::Zero(sp.dim(), sp.dim());
      factor(k, k) = 1.0;
    }
    Matrix next(rho.rows() * factor.rows(), rho.cols() * factor.cols());
    for (int r = 0; r < rho.rows(); ++r)
      for (int c = 0; c < rho.cols(); ++c)
        next.block(r * factor.rows(), c * factor.cols(), factor.rows(),
                   factor.cols()) = rho(r, c) * factor;
    rho = std::move(next);
  }
  return rho;
}

void check_density_matrix(const Matrix& rho, double tol_trace,
                          double tol_eig) {
  if (!is_hermitian(rho, 1e-9))
    throw std::invalid_argument("density matrix is not Hermitian");
  if (std::abs(rho.trace().real() - 1.0) > tol_trace)
    throw std::invalid_argument("density matrix trace differs from one");
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol_eig)
    throw std::invalid_argument("density matrix has a negative eigenvalue");
}

PolarizationOps::PolarizationOps(const SpinRegister& reg) {
  for (int i = 0; i < reg.size(); ++i) {
    const SpinSpecies& sp = reg.spin(i);
    const double scale = (sp.dim() == 2) ? 2.0 : 1.0;
    sites.push_back(sp.site);
    ops.push_back(scale * embed(spin_matrices(sp.s).z, i, reg));
  }
}

Polarizations PolarizationOps::eval(const Matrix& rho) const {
  Polarizations p;
  for (size_t i = 0; i < sites.size(); ++i) {
    const double v = (ops[i].cwiseProduct(rho.transpose())).sum().real();
    switch (sites[i]) {
      case Site::Nv: p.S = v; break;
      case Site::P1: p.S1 = v; break;
      case Site::Carbon: p.C = v; break;
      case Site::NvNitrogen: p.J = v; break;
      case Site::P1Nitrogen: p.J1 = v; break;
    }
  }
  return p;
}

Polarizations polarizations(const Matrix& rho, const SpinRegister& reg) {
  return PolarizationOps(reg).eval(rho);
}

}  // namespace nvpol
