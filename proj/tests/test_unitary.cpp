#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "nvpol/unitary.hpp"

using namespace nvpol;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

Matrix random_hermitian(int n, std::mt19937& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) m(r, c) = Complex(u(rng), u(rng));
  return scale * 0.5 * (m + m.adjoint());
}

Matrix random_density(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) m(r, c) = Complex(u(rng), u(rng));
  Matrix rho = m * m.adjoint();
  rho /= rho.trace().real();
  return rho;
}

}  // namespace

TEST_CASE("initial_state: thermal and mixed product states") {
  const SpinRegister reg = SpinRegister::full();
  const Matrix rho_th = initial_state(InitialState(reg), reg);
  CHECK(max_abs(rho_th - Matrix::Identity(108, 108) / 108.0) < 1e-15);

  InitialState spec = InitialState::nv_polarized(reg);
  spec.set(reg, Site::NvNitrogen, LevelSpec::pure(0.0));
  const Matrix rho = initial_state(spec, reg);
  CHECK(rho.trace().real() == doctest::Approx(1.0).epsilon(1e-14));
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
  int rank = 0;
  for (int k = 0; k < 108; ++k)
    if (es.eigenvalues()(k) > 1e-12) ++rank;
  CHECK(rank == 12);  // 2 * 3 * 2 thermal states
  const double purity = (rho * rho).trace().real();
  CHECK(purity == doctest::Approx(1.0 / 12.0).epsilon(1e-12));

  InitialState bad(reg);
  bad.set(reg, Site::Carbon, LevelSpec::pure(1.5));
  CHECK_THROWS_AS(initial_state(bad, reg), std::invalid_argument);
}

TEST_CASE("polarizations: normalization conventions") {
  const SpinRegister reg = SpinRegister::full();
  const Polarizations mixed =
      polarizations(initial_state(InitialState(reg), reg), reg);
  CHECK(std::abs(mixed.S) < 1e-14);
  CHECK(std::abs(mixed.S1) < 1e-14);
  CHECK(std::abs(mixed.C) < 1e-14);

  InitialState nv0 = InitialState::nv_polarized(reg);
  const Polarizations p0 = polarizations(initial_state(nv0, reg), reg);
  CHECK(std::abs(p0.S) < 1e-14);  // m_S = 0 eigenstate

  InitialState cpol(reg);
  cpol.set(reg, Site::Carbon, LevelSpec::pure(0.5));
  const Polarizations pc = polarizations(initial_state(cpol, reg), reg);
  CHECK(pc.C == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("evolve_unitary: t = 0 reproduces the initial observables") {
  const SpinRegister reg =
      SpinRegister::with_sites({Site::Nv, Site::P1, Site::Carbon});
  ModelParams params;
  const Matrix h =
      build_hamiltonian(params, ModelVariant::NvCoupledCarbon, reg);
  std::mt19937 rng(5);
  const Matrix rho0 = random_density(reg.dim(), rng);
  Eigen::VectorXd times(3);
  times << 0.0, 0.3, 1.7;
  const Trajectory tr = evolve_unitary(rho0, h, times, reg);
  const Polarizations p = polarizations(rho0, reg);
  CHECK(tr.P_S[0] == doctest::Approx(p.S).epsilon(1e-12));
  CHECK(tr.P_S1[0] == doctest::Approx(p.S1).epsilon(1e-12));
  CHECK(tr.P_C[0] == doctest::Approx(p.C).epsilon(1e-12));
}

TEST_CASE("evolve_unitary: stationary state under a commuting Hamiltonian") {
  const SpinRegister reg = SpinRegister::with_sites({Site::Nv, Site::P1});
  ModelParams p;
  p.nvp1_form = DipolarForm::Ising;
  p.A_C = p.A_N = p.A_N1 = p.A_C1 = Tensor3::Zero();
  const Matrix h = build_hamiltonian(p, ModelVariant::NvCoupledCarbon, reg);
  InitialState spec(reg);
  spec.set(reg, Site::Nv, LevelSpec::pure(0.0));
  spec.set(reg, Site::P1, LevelSpec::pure(-0.5));
  const Matrix rho0 = initial_state(spec, reg);  // diagonal
  const Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(9, 0.0, 40.0);
  const Trajectory tr = evolve_unitary(rho0, h, times, reg);
  for (int k = 1; k < times.size(); ++k) {
    CHECK(tr.P_S[k] == doctest::Approx(tr.P_S[0]).epsilon(1e-12));
    CHECK(tr.P_S1[k] == doctest::Approx(tr.P_S1[0]).epsilon(1e-12));
  }
}

TEST_CASE("propagation preserves trace, purity, spectrum and energy") {
  std::mt19937 rng(17);
  const SpinRegister reg = SpinRegister::with_sites({Site::Nv, Site::Carbon});
  const Matrix h = random_hermitian(reg.dim(), rng, 5.0);
  const Matrix rho0 = random_density(reg.dim(), rng);
  const EigenPropagator prop(h);
  Eigen::SelfAdjointEigenSolver<Matrix> e0(rho0, Eigen::EigenvaluesOnly);
  const double purity0 = (rho0 * rho0).trace().real();
  const double energy0 = (h * rho0).trace().real();
  for (double t : {0.37, 2.9, 17.3}) {
    const Matrix rho = prop.propagate(rho0, t);
    CHECK(std::abs(rho.trace().real() - 1.0) < 1e-12);
    CHECK(is_hermitian(rho, 1e-11));
    CHECK((rho * rho).trace().real() ==
          doctest::Approx(purity0).epsilon(1e-9));
    CHECK((h * rho).trace().real() ==
          doctest::Approx(energy0).epsilon(1e-9));
    Eigen::SelfAdjointEigenSolver<Matrix> et(rho, Eigen::EigenvaluesOnly);
    for (int k = 0; k < reg.dim(); ++k)
      CHECK(std::abs(et.eigenvalues()(k) - e0.eigenvalues()(k)) < 1e-9);
  }
}

TEST_CASE("propagator composes: evolve(t1+t2) = evolve(t2) o evolve(t1)") {
  std::mt19937 rng(29);
  const SpinRegister reg = SpinRegister::with_sites({Site::P1, Site::Carbon});
  for (int trial = 0; trial < 4; ++trial) {
    const Matrix h = random_hermitian(reg.dim(), rng, 3.0);
    const Matrix rho0 = random_density(reg.dim(), rng);
    const EigenPropagator prop(h);
    const double t1 = 0.8 + trial, t2 = 1.9;
    const Matrix a = prop.propagate(rho0, t1 + t2);
    const Matrix b = prop.propagate(prop.propagate(rho0, t1), t2);
    CHECK(max_abs(a - b) < 1e-11);
  }
}

TEST_CASE("two-spin flip-flop matches the Rabi formula") {
  // H = a (S+S'- + S-S'+)/1 on two spin-1/2: |up,down> <-> |down,up>
  // oscillates as sin^2(2 pi a t); P_C follows the closed form.
  const SpinRegister reg = SpinRegister::with_sites({Site::P1, Site::Carbon});
  const SpinTriple s = spin_matrices(0.5);
  const double a = 0.35;  // MHz
  const Matrix sp = embed(s.plus(), 0, reg), sm = embed(s.minus(), 0, reg);
  const Matrix ip = embed(s.plus(), 1, reg), im = embed(s.minus(), 1, reg);
  const Matrix h = a * (sp * im + sm * ip);
  InitialState spec(reg);
  spec.set(reg, Site::P1, LevelSpec::pure(0.5));
  spec.set(reg, Site::Carbon, LevelSpec::pure(-0.5));
  const Matrix rho0 = initial_state(spec, reg);
  const Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(41, 0.0, 3.0);
  const Trajectory tr = evolve_unitary(rho0, h, times, reg);
  for (int k = 0; k < times.size(); ++k) {
    const double pc_expected = -1.0 + 2.0 * std::pow(
        std::sin(2.0 * kPi * a * times[k]), 2);
    CHECK(std::abs(tr.P_C[k] - pc_expected) < 1e-8);
  }
}

TEST_CASE("closed-form time average matches a fine quadrature") {
  std::mt19937 rng(43);
  const SpinRegister reg = SpinRegister::with_sites({Site::Nv, Site::P1});
  const Matrix h = random_hermitian(reg.dim(), rng, 2.0);
  const Matrix rho0 = random_density(reg.dim(), rng);
  const Matrix obs = random_hermitian(reg.dim(), rng);
  const EigenPropagator prop(h);
  const double T = 7.0;
  const int n = 20000;
  double quad = 0.0;
  for (int k = 0; k < n; ++k) {
    const double t = (k + 0.5) * T / n;
    quad += (obs.cwiseProduct(prop.propagate(rho0, t).transpose())).sum()
                .real();
  }
  quad /= n;
  CHECK(prop.time_average(rho0, obs, T) ==
        doctest::Approx(quad).epsilon(1e-6));
}

TEST_CASE("non-Hermitian generator is rejected") {
  Matrix h = Matrix::Zero(2, 2);
  h(0, 1) = 1.0;
  CHECK_THROWS_AS(EigenPropagator{h}, std::invalid_argument);
}
