#include "nvpol/unitary.hpp"

#include <cmath>

#include "nvpol/parallel.hpp"

namespace nvpol {

Eigen::VectorXd& Trajectory::series(Site site) {
  switch (site) {
    case Site::Nv: return P_S;
    case Site::P1: return P_S1;
    case Site::Carbon: return P_C;
    case Site::NvNitrogen: return P_J;
    case Site::P1Nitrogen: return P_J1;
  }
  throw std::invalid_argument("unknown site");
}

const Eigen::VectorXd& Trajectory::series(Site site) const {
  return const_cast<Trajectory*>(this)->series(site);
}

EigenPropagator::EigenPropagator(const Matrix& h) {
  if (!is_hermitian(h))
    throw std::invalid_argument("EigenPropagator: H is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("EigenPropagator: eigensolver failed");
  energies_ = es.eigenvalues();
  vectors_ = es.eigenvectors();
}

Matrix EigenPropagator::propagate(const Matrix& rho0, double t_us) const {
  const int n = static_cast<int>(energies_.size());
  if (rho0.rows() != n || rho0.cols() != n)
    throw std::invalid_argument("propagate: dimension mismatch");
  const Matrix rt = vectors_.adjoint() * rho0 * vectors_;
  Matrix out(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      out(i, j) = rt(i, j) * std::polar(1.0, -2.0 * kPi *
                                                 (energies_[i] - energies_[j]) *
                                                 t_us);
  return vectors_ * out * vectors_.adjoint();
}

std::vector<Eigen::VectorXd> EigenPropagator::observable_series(
    const Matrix& rho0, const std::vector<Matrix>& observables,
    const Eigen::VectorXd& times) const {
  const int n = static_cast<int>(energies_.size());
  const int nt = static_cast<int>(times.size());
  const Matrix rt = vectors_.adjoint() * rho0 * vectors_;
  std::vector<Matrix> weights;  // obs_ji * rho_ij, summed with phases later
  weights.reserve(observables.size());
  for (const Matrix& obs : observables) {
    const Matrix ot = vectors_.adjoint() * obs * vectors_;
    weights.push_back(ot.transpose().cwiseProduct(rt));
  }
  std::vector<Eigen::VectorXd> out(observables.size(),
                                   Eigen::VectorXd::Zero(nt));
  Matrix phase(n, n);
  for (int k = 0; k < nt; ++k) {
    const double t = times[k];
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        phase(i, j) =
            std::polar(1.0, -2.0 * kPi * (energies_[i] - energies_[j]) * t);
    for (size_t o = 0; o < weights.size(); ++o)
      out[o][k] = weights[o].cwiseProduct(phase).sum().real();
  }
  return out;
}

double EigenPropagator::time_average(const Matrix& rho0, const Matrix& obs,
                                     double T) const {
  const int n = static_cast<int>(energies_.size());
  const Matrix rt = vectors_.adjoint() * rho0 * vectors_;
  const Matrix ot = vectors_.adjoint() * obs * vectors_;
  const Matrix w = ot.transpose().cwiseProduct(rt);
  Complex acc = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double x = 2.0 * kPi * (energies_[i] - energies_[j]) * T;
      // mean over [0,T] of e^{-i x t/T}: (1 - e^{-ix}) / (ix)
      Complex phi;
      if (std::abs(x) < 1e-9) {
        phi = Complex(1.0 - x * x / 6.0, -x / 2.0);
      } else {
        phi = (1.0 - std::polar(1.0, -x)) / Complex(0.0, x);
      }
      acc += w(i, j) * phi;
    }
  }
  return acc.real();
}

Trajectory evolve_unitary(const Matrix& rho0, const Matrix& h,
                          const Eigen::VectorXd& times,
                          const SpinRegister& reg) {
  check_density_matrix(rho0, 1e-8, 1e-8);
  const EigenPropagator prop(h);
  const PolarizationOps pol(reg);
  const auto series = prop.observable_series(rho0, pol.ops, times);
  Trajectory tr;
  tr.times = times;
  const int nt = static_cast<int>(times.size());
  tr.P_S = tr.P_S1 = tr.P_C = tr.P_J = tr.P_J1 = Eigen::VectorXd::Zero(nt);
  for (size_t i = 0; i < pol.sites.size(); ++i)
    tr.series(pol.sites[i]) = series[i];
  return tr;
}

std::vector<CouplingScanPoint> unitary_limit_scan(
    const std::vector<double>& couplings_mhz, const ModelParams& params,
    const SpinRegister& reg, double field_center_mT,
    const CouplingScanOptions& opts) {
  std::vector<CouplingScanPoint> result(couplings_mhz.size());
  Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(opts.t_points, 0.0,
                                                     opts.t_max_us);
  const InitialState init = InitialState::nv_polarized(reg);
  const Matrix rho0 = initial_state(init, reg);
  const PolarizationOps pol(reg);
  const int ic = reg.require(Site::Carbon);
  const int ip1 = reg.require(Site::P1);
  std::vector<Matrix> obs = {pol.ops[ic], pol.ops[ip1]};

  for (size_t ci = 0; ci < couplings_mhz.size(); ++ci) {
    ModelParams p = params;
    p.A_C = ModelParams::carbon_tensor(couplings_mhz[ci]);
    std::vector<double> max_c(opts.field_points, 0.0);
    std::vector<double> max_p1(opts.field_points, 0.0);
    parallel_for(opts.field_points, [&](int bi) {
      ModelParams pb = p;
      pb.B = field_center_mT - opts.field_halfwidth_mT +
             2.0 * opts.field_halfwidth_mT * bi /
                 std::max(1, opts.field_points - 1);
      const Matrix h =
          build_hamiltonian(pb, ModelVariant::NvCoupledCarbon, reg);
      const EigenPropagator prop(h);
      const auto series = prop.observable_series(rho0, obs, times);
      max_c[bi] = series[0].cwiseAbs().maxCoeff();
      max_p1[bi] = series[1].cwiseAbs().maxCoeff();
    });
    CouplingScanPoint pt;
    pt.a_zz = couplings_mhz[ci];
    pt.max_abs_PC = *std::max_element(max_c.begin(), max_c.end());
    pt.max_abs_PS1 = *std::max_element(max_p1.begin(), max_p1.end());
    result[ci] = pt;
  }
  return result;
}

}  // namespace nvpol
