#include "nvpol/lindblad.hpp"

#include <Eigen/SparseLU>

#include <cmath>

#include "nvpol/parallel.hpp"

namespace nvpol {

namespace {

using SparseC = Eigen::SparseMatrix<Complex>;
using Triplet = Eigen::Triplet<Complex>;

SparseC sparsify(const Matrix& m, double tol = 0.0) {
  std::vector<Triplet> trips;
  for (int c = 0; c < m.cols(); ++c)
    for (int r = 0; r < m.rows(); ++r)
      if (std::abs(m(r, c)) > tol) trips.emplace_back(r, c, m(r, c));
  SparseC out(m.rows(), m.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

int level_index(const SpinSpecies& sp, double m) {
  const double idx = sp.s - m;
  const int k = static_cast<int>(std::lround(idx));
  if (std::abs(idx - k) > 1e-9 || k < 0 || k >= sp.dim())
    throw std::invalid_argument("collapse level outside spin multiplicity");
  return k;
}

}  // namespace

RelaxationTimes RelaxationTimes::standard_set() {
  RelaxationTimes t;
  t.carbon = 1e7;  // 10 s
  t.nv = 1e3;      // 1 ms
  t.p1 = 100.0;    // 100 us
  t.n_nv = 1e5;    // 100 ms
  t.n_p1 = 1e5;
  return t;
}

void RelaxationTimes::validate() const {
  for (double t : {nv, p1, carbon, n_nv, n_p1})
    if (!(t > 0))
      throw std::invalid_argument("RelaxationTimes: T1 must be positive");
}

std::vector<CollapseSpec> pump_operators(double rate_mhz,
                                         const SpinRegister& reg) {
  if (rate_mhz < 0)
    throw std::invalid_argument("pump_operators: rate must be >= 0");
  const int inv = reg.require(Site::Nv);
  return {{inv, +1.0, 0.0, rate_mhz}, {inv, -1.0, 0.0, rate_mhz}};
}

std::vector<CollapseSpec> t1_operators(const RelaxationTimes& times,
                                       const SpinRegister& reg) {
  times.validate();
  std::vector<CollapseSpec> specs;
  for (int i = 0; i < reg.size(); ++i) {
    const SpinSpecies& sp = reg.spin(i);
    double t1 = 0;
    switch (sp.site) {
      case Site::Nv: t1 = times.nv; break;
      case Site::P1: t1 = times.p1; break;
      case Site::Carbon: t1 = times.carbon; break;
      case Site::NvNitrogen: t1 = times.n_nv; break;
      case Site::P1Nitrogen: t1 = times.n_p1; break;
    }
    if (!std::isfinite(t1)) continue;
    const double gamma = 1.0 / t1;
    for (int a = 0; a < sp.dim(); ++a)
      for (int b = 0; b < sp.dim(); ++b)
        if (a != b) specs.push_back({i, sp.s - a, sp.s - b, gamma});
  }
  return specs;
}

Matrix collapse_matrix(const CollapseSpec& spec, const SpinRegister& reg) {
  const SpinSpecies& sp = reg.spin(spec.spin_index);
  if (spec.rate < 0) throw std::invalid_argument("collapse rate must be >= 0");
  Matrix op = Matrix::Zero(sp.dim(), sp.dim());
  op(level_index(sp, spec.m_to), level_index(sp, spec.m_from)) =
      std::sqrt(spec.rate);
  return embed(op, spec.spin_index, reg);
}

Liouvillian build_liouvillian(const Matrix& h,
                              const std::vector<CollapseSpec>& collapses,
                              const SpinRegister& reg) {
  if (h.rows() != reg.dim() || h.cols() != reg.dim())
    throw std::invalid_argument("build_liouvillian: dimension mismatch");
  if (!is_hermitian(h))
    throw std::invalid_argument("build_liouvillian: H is not Hermitian");
  const int n = reg.dim();
  const SparseC hs = sparsify(h, 0.0);
  std::vector<Triplet> trips;
  trips.reserve(2 * n * hs.nonZeros() / n + 64);

  const Complex mtwopi_i(0.0, -2.0 * kPi);
  // -2 pi i (1 (x) H): block diagonal copies of H.
  for (int k = 0; k < hs.outerSize(); ++k)
    for (SparseC::InnerIterator it(hs, k); it; ++it)
      for (int b = 0; b < n; ++b)
        trips.emplace_back(b * n + it.row(), b * n + it.col(),
                           mtwopi_i * it.value());
  // +2 pi i (H^T (x) 1): H(c,r) at block (r,c).
  for (int k = 0; k < hs.outerSize(); ++k)
    for (SparseC::InnerIterator it(hs, k); it; ++it)
      for (int b = 0; b < n; ++b)
        trips.emplace_back(it.col() * n + b, it.row() * n + b,
                           -mtwopi_i * it.value());

  Eigen::VectorXcd anticirc = Eigen::VectorXcd::Zero(n * n);
  for (const CollapseSpec& spec : collapses) {
    if (spec.rate == 0.0) continue;
    const SparseC c = sparsify(collapse_matrix(spec, reg), 0.0);
    // conj(c) (x) c
    for (int k1 = 0; k1 < c.outerSize(); ++k1)
      for (SparseC::InnerIterator it1(c, k1); it1; ++it1)
        for (int k2 = 0; k2 < c.outerSize(); ++k2)
          for (SparseC::InnerIterator it2(c, k2); it2; ++it2)
            trips.emplace_back(it1.row() * n + it2.row(),
                               it1.col() * n + it2.col(),
                               std::conj(it1.value()) * it2.value());
    // c^H c is diagonal for level-transfer operators; accumulate the
    // anticommutator -(1 (x) cdc + cdc^T (x) 1)/2 on the diagonal.
    Eigen::VectorXd cdc = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < c.outerSize(); ++k)
      for (SparseC::InnerIterator it(c, k); it; ++it)
        cdc[it.col()] += std::norm(it.value());
    for (int b = 0; b < n; ++b)
      for (int r = 0; r < n; ++r)
        anticirc[b * n + r] -= 0.5 * (cdc[r] + cdc[b]);
  }
  for (int k = 0; k < n * n; ++k)
    if (anticirc[k] != Complex(0, 0)) trips.emplace_back(k, k, anticirc[k]);

  Liouvillian out;
  out.dim = n;
  out.matrix.resize(n * n, n * n);
  out.matrix.setFromTriplets(trips.begin(), trips.end());
  out.matrix.makeCompressed();
  return out;
}

double steady_state_residual(const Liouvillian& liou, const Matrix& rho) {
  Eigen::VectorXcd v =
      Eigen::Map<const Eigen::VectorXcd>(rho.data(), rho.size());
  return (liou.matrix * v).norm() / liou.matrix.norm();
}

Matrix steady_state(const Liouvillian& liou, const SteadyStateOptions& opts) {
  const int n = liou.dim;
  const int n2 = n * n;

  if (n2 <= opts.svd_check_limit) {
    const Matrix dense = Matrix(liou.matrix);
    Eigen::BDCSVD<Matrix> svd(dense);
    const auto& sv = svd.singularValues();
    const double tol = 1e-10 * sv(0);
    int kernel = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) < tol) ++kernel;
    if (kernel != 1)
      throw SolverError("steady_state: Liouvillian kernel has dimension " +
                        std::to_string(kernel) + ", expected 1");
  }

  // Bordered system: the (0,0)-element row carries the trace constraint.
  const double scale = liou.matrix.norm() / n;
  std::vector<Triplet> trips;
  trips.reserve(liou.matrix.nonZeros() + n);
  for (int k = 0; k < liou.matrix.outerSize(); ++k)
    for (SparseC::InnerIterator it(liou.matrix, k); it; ++it)
      if (it.row() != 0) trips.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < n; ++k)
    trips.emplace_back(0, k * (n + 1), Complex(scale, 0.0));
  SparseC bordered(n2, n2);
  bordered.setFromTriplets(trips.begin(), trips.end());
  bordered.makeCompressed();

  Eigen::SparseLU<SparseC> lu;
  lu.compute(bordered);
  if (lu.info() != Eigen::Success)
    throw SolverError(
        "steady_state: sparse LU factorization failed (degenerate kernel?)");
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n2);
  rhs[0] = Complex(scale, 0.0);
  const Eigen::VectorXcd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success)
    throw SolverError("steady_state: sparse LU solve failed");

  Matrix rho = Eigen::Map<const Matrix>(x.data(), n, n);
  rho = 0.5 * (rho + rho.adjoint()).eval();
  rho /= rho.trace().real();

  const double rel = steady_state_residual(liou, rho);
  if (!(rel <= opts.residual_factor))
    throw SolverError("steady_state: residual " + std::to_string(rel) +
                      " exceeds bound");
  return rho;
}

namespace {

// y <- exp(L dt) y by scaled truncated Taylor summation.
void expmv_inplace(const SparseC& l, double dt, Eigen::VectorXcd& y) {
  double norm1 = 0.0;
  for (int k = 0; k < l.outerSize(); ++k) {
    double col = 0.0;
    for (SparseC::InnerIterator it(l, k); it; ++it)
      col += std::abs(it.value());
    norm1 = std::max(norm1, col);
  }
  const int steps = std::max(1, static_cast<int>(std::ceil(norm1 * dt / 4.0)));
  const double h = dt / steps;
  Eigen::VectorXcd term(y.size());
  for (int s = 0; s < steps; ++s) {
    term = y;
    for (int k = 1; k <= 80; ++k) {
      term = (l * term) * (h / k);
      y += term;
      if (term.norm() <= 1e-16 * y.norm()) break;
    }
  }
}

}  // namespace

LindbladResult evolve_lindblad(const Matrix& rho0, const Liouvillian& liou,
                               const Eigen::VectorXd& times,
                               const SpinRegister& reg,
                               const LindbladOptions& opts) {
  const int n = liou.dim;
  if (rho0.rows() != n || rho0.cols() != n || reg.dim() != n)
    throw std::invalid_argument("evolve_lindblad: dimension mismatch");
  check_density_matrix(rho0, 1e-8, 1e-8);
  const int nt = static_cast<int>(times.size());
  const int n2 = n * n;

  std::vector<Matrix> states(nt);
  const Eigen::VectorXcd v0 =
      Eigen::Map<const Eigen::VectorXcd>(rho0.data(), n2);

  bool done = false;
  if (n2 <= opts.dense_eig_limit) {
    const Matrix dense = Matrix(liou.matrix);
    Eigen::ComplexEigenSolver<Matrix> ces(dense);
    if (ces.info() == Eigen::Success) {
      const Matrix& vecs = ces.eigenvectors();
      const Eigen::VectorXcd& vals = ces.eigenvalues();
      Eigen::PartialPivLU<Matrix> lu(vecs);
      const Eigen::VectorXcd w = lu.solve(v0);
      const double rec = (vecs * w - v0).norm() / std::max(v0.norm(), 1e-300);
      if (rec < 1e-8) {
        for (int k = 0; k < nt; ++k) {
          Eigen::VectorXcd amp(n2);
          for (int j = 0; j < n2; ++j) {
            // clamp growing modes that are numerical noise
            const Complex lam = vals[j];
            const double re = std::min(lam.real(), 0.0);
            amp[j] = w[j] * std::exp(Complex(re, lam.imag()) * times[k]);
          }
          const Eigen::VectorXcd vt = vecs * amp;
          states[k] = Eigen::Map<const Matrix>(vt.data(), n, n);
        }
        done = true;
      }
    }
  }
  if (!done) {
    Eigen::VectorXcd y = v0;
    double t_prev = 0.0;
    for (int k = 0; k < nt; ++k) {
      const double dt = times[k] - t_prev;
      if (dt < 0)
        throw std::invalid_argument("evolve_lindblad: times must increase");
      if (dt > 0) expmv_inplace(liou.matrix, dt, y);
      t_prev = times[k];
      states[k] = Eigen::Map<const Matrix>(y.data(), n, n);
    }
  }

  LindbladResult res;
  res.trajectory.times = times;
  res.trajectory.P_S = res.trajectory.P_S1 = res.trajectory.P_C =
      res.trajectory.P_J = res.trajectory.P_J1 = Eigen::VectorXd::Zero(nt);
  res.trace_error.resize(nt);
  res.min_eigenvalue.resize(nt);
  const PolarizationOps pol(reg);
  for (int k = 0; k < nt; ++k) {
    Matrix& rho = states[k];
    res.trace_error[k] = std::abs(rho.trace().real() - 1.0) +
                         std::abs(rho.trace().imag());
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho + rho.adjoint()),
                                             Eigen::EigenvaluesOnly);
    res.min_eigenvalue[k] = es.eigenvalues().minCoeff();
    const Polarizations p = pol.eval(rho);
    res.trajectory.P_S[k] = p.S;
    res.trajectory.P_S1[k] = p.S1;
    res.trajectory.P_C[k] = p.C;
    res.trajectory.P_J[k] = p.J;
    res.trajectory.P_J1[k] = p.J1;
  }
  if (opts.keep_states) res.states = std::move(states);
  return res;
}

std::vector<PumpScanPoint> pump_rate_scan(const std::vector<double>& rates_mhz,
                                          const ModelParams& params,
                                          const RelaxationTimes& times,
                                          const SpinRegister& reg,
                                          ModelVariant variant) {
  const Matrix h = build_hamiltonian(params, variant, reg);
  const std::vector<CollapseSpec> relax = t1_operators(times, reg);
  const PolarizationOps pol(reg);
  std::vector<PumpScanPoint> out(rates_mhz.size());
  parallel_for(static_cast<int>(rates_mhz.size()), [&](int i) {
    std::vector<CollapseSpec> collapses = pump_operators(rates_mhz[i], reg);
    collapses.insert(collapses.end(), relax.begin(), relax.end());
    const Liouvillian liou = build_liouvillian(h, collapses, reg);
    const Matrix rho = steady_state(liou);
    const Polarizations p = pol.eval(rho);
    out[i] = {rates_mhz[i], p.C, p.S1, p.S, steady_state_residual(liou, rho)};
  });
  return out;
}

}  // namespace nvpol
