#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "nvpol/model.hpp"

using namespace nvpol;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

Eigen::VectorXd eigenvalues(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

ModelParams bare_params() {
  ModelParams p;
  p.A_C = Tensor3::Zero();
  p.A_N = Tensor3::Zero();
  p.A_N1 = Tensor3::Zero();
  p.A_C1 = Tensor3::Zero();
  p.d_nvp1 = 0.0;
  p.Q_nv = 0.0;
  p.Q_p1 = 0.0;
  return p;
}

}  // namespace

TEST_CASE("pure crystal field: NV spectrum {0, D, D}") {
  ModelParams p = bare_params();
  p.B = 0.0;
  const SpinRegister reg = SpinRegister::with_sites({Site::Nv});
  const auto e = eigenvalues(
      build_hamiltonian(p, ModelVariant::NvCoupledCarbon, reg));
  CHECK(e(0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(e(1) == doctest::Approx(2870.0).epsilon(1e-14));
  CHECK(e(2) == doctest::Approx(2870.0).epsilon(1e-14));
}

TEST_CASE("NV and P1 transitions cross at D/(2 gamma_e)") {
  ModelParams p = bare_params();
  const double b_star = p.D / (2.0 * p.gamma_e);  // 51.2025 mT for defaults
  CHECK(b_star == doctest::Approx(51.2025).epsilon(1e-3));
  p.B = b_star;

  const SpinRegister nv = SpinRegister::with_sites({Site::Nv});
  const auto e_nv =
      eigenvalues(build_hamiltonian(p, ModelVariant::NvCoupledCarbon, nv));
  const double f_nv = e_nv(1) - e_nv(0);
  CHECK(f_nv == doctest::Approx(p.D - p.gamma_e * b_star).epsilon(1e-12));

  const SpinRegister p1 = SpinRegister::with_sites({Site::P1});
  const auto e_p1 =
      eigenvalues(build_hamiltonian(p, ModelVariant::NvCoupledCarbon, p1));
  const double f_p1 = e_p1(1) - e_p1(0);
  CHECK(f_p1 == doctest::Approx(p.gamma_e * b_star).epsilon(1e-12));

  CHECK(f_nv == doctest::Approx(f_p1).epsilon(1e-10));
}

TEST_CASE("temperature offset shifts the crystal field") {
  ModelParams p;
  p.deltaT = 30.0;  // dD_dT default -0.076 MHz/K
  CHECK(p.D_eff() == doctest::Approx(2870.0 - 2.28));
}

TEST_CASE("dipolar coupling: zero amplitude and the Ising form") {
  const SpinRegister reg = SpinRegister::with_sites({Site::Nv, Site::P1});
  CHECK(max_abs(nv_p1_dipolar(0.0, DipolarForm::SecularCrossFlip, reg)) ==
        0.0);

  const Matrix h = nv_p1_dipolar(0.7, DipolarForm::Ising, reg);
  const Matrix sz = embed(spin_matrices(1.0).z, 0, reg);
  const Matrix szp = embed(spin_matrices(0.5).z, 1, reg);
  CHECK(max_abs(h * sz - sz * h) < 1e-13);
  CHECK(max_abs(h * szp - szp * h) < 1e-13);
}

TEST_CASE("dipolar coupling: brute-force 6x6 cross-flip matrix") {
  // independent construction in the |m_S> (x) |m_S'> product basis
  const double d = 0.5;
  Matrix ref = Matrix::Zero(6, 6);
  const double ms[3] = {1.0, 0.0, -1.0};
  const double mp[2] = {0.5, -0.5};
  auto idx = [](int a, int b) { return a * 2 + b; };
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 2; ++b) ref(idx(a, b), idx(a, b)) = d * ms[a] * mp[b];
  // -(d/4)(S+S'+ + S-S'-): <a-1,up| H |a,down> and conjugates
  for (int a = 1; a < 3; ++a) {
    const double amp = std::sqrt(2.0) * 1.0;  // <m+1|S+|m> = sqrt2 for s=1
    ref(idx(a - 1, 0), idx(a, 1)) = -d / 4.0 * amp;
    ref(idx(a, 1), idx(a - 1, 0)) = -d / 4.0 * amp;
  }
  const SpinRegister reg = SpinRegister::with_sites({Site::Nv, Site::P1});
  const Matrix h = nv_p1_dipolar(d, DipolarForm::SecularCrossFlip, reg);
  CHECK(max_abs(h - ref) < 1e-13);
  // the element connecting the near-degenerate pair |0,up> <-> |-1,down>
  CHECK(h(idx(1, 0), idx(2, 1)).real() ==
        doctest::Approx(-d * std::sqrt(2.0) / 4.0));
}

TEST_CASE("dipolar coupling: point dipole form is Hermitian and traceless") {
  const SpinRegister reg = SpinRegister::with_sites({Site::Nv, Site::P1});
  const Matrix h = nv_p1_dipolar(0.5, DipolarForm::PointDipole, reg, 35.0,
                                 140.0);
  CHECK(is_hermitian(h, 1e-12));
  CHECK(std::abs(h.trace()) < 1e-12);
}

TEST_CASE("full Hamiltonian is Hermitian for random parameter draws") {
  std::mt19937 rng(101);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const SpinRegister reg = SpinRegister::full();
  for (int trial = 0; trial < 5; ++trial) {
    ModelParams p;
    p.B = 40.0 + 30.0 * std::abs(u(rng));
    p.theta_deg = 45.0 * std::abs(u(rng));
    p.p1_zenith_deg = 90.0 * std::abs(u(rng));
    p.p1_azimuth_deg = 180.0 * u(rng);
    p.A_C = ModelParams::carbon_tensor(13.0 * u(rng));
    p.deltaT = 50.0 * u(rng);
    p.nvp1_form = trial % 2 ? DipolarForm::PointDipole
                            : DipolarForm::SecularCrossFlip;
    const Matrix h = build_hamiltonian(p, ModelVariant::NvCoupledCarbon, reg);
    CHECK(is_hermitian(h, 1e-12));
    const Matrix h2 = build_hamiltonian(p, ModelVariant::P1CoupledCarbon, reg);
    CHECK(is_hermitian(h2, 1e-12));
  }
}

TEST_CASE("secular configuration is block diagonal in the m sectors") {
  // diagonal tensors, Ising coupling, aligned field: every site's S_z
  // commutes with H, so H is block diagonal after sorting by m labels
  ModelParams p;
  p.theta_deg = 0.0;
  p.nvp1_form = DipolarForm::Ising;
  p.A_C = ModelParams::axial_tensor(0.0, 4.0);
  p.A_N = ModelParams::axial_tensor(0.0, -2.16);
  p.A_N1 = ModelParams::axial_tensor(0.0, 114.0);
  const SpinRegister reg = SpinRegister::full();
  const Matrix h = build_hamiltonian(p, ModelVariant::NvCoupledCarbon, reg);
  for (int i = 0; i < reg.size(); ++i) {
    const Matrix sz = embed(spin_matrices(reg.spin(i).s).z, i, reg);
    CHECK(max_abs(h * sz - sz * h) < 1e-10);
  }
}

TEST_CASE("variant difference is exactly the carbon hyperfine swap") {
  ModelParams p;
  p.theta_deg = 7.0;
  const SpinRegister reg = SpinRegister::full();
  const Matrix h1 = build_hamiltonian(p, ModelVariant::NvCoupledCarbon, reg);
  const Matrix hb = build_hamiltonian(p, ModelVariant::P1CoupledCarbon, reg);
  const Matrix diff =
      coupling_term(spin_matrices(1.0), reg.require(Site::Nv), p.A_C,
                    spin_matrices(0.5), reg.require(Site::Carbon), reg) -
      coupling_term(spin_matrices(0.5), reg.require(Site::P1), p.A_C1,
                    spin_matrices(0.5), reg.require(Site::Carbon), reg);
  CHECK(max_abs((h1 - hb) - diff) < 1e-10);
}

TEST_CASE("spectra at +theta and -theta coincide for axial tensors") {
  // holds exactly when every tensor is azimuthally symmetric about z;
  // a zx hyperfine component makes the tilt direction physical
  ModelParams p;
  p.theta_deg = 21.0;
  p.A_C = ModelParams::axial_tensor(1.0, 4.0);
  p.A_C1 = ModelParams::axial_tensor(10.0, 14.0);
  const SpinRegister reg = SpinRegister::full();
  const Eigen::VectorXd ep =
      eigenvalues(build_hamiltonian(p, ModelVariant::NvCoupledCarbon, reg));
  ModelParams pm = p;
  pm.theta_deg = -21.0;
  const Eigen::VectorXd em =
      eigenvalues(build_hamiltonian(pm, ModelVariant::NvCoupledCarbon, reg));
  const double scale = ep.cwiseAbs().maxCoeff();
  for (int k = 0; k < ep.size(); ++k)
    CHECK(std::abs(em(k) - ep(k)) < 1e-9 * scale);
}

TEST_CASE("parameter validation rejects bad values together") {
  ModelParams p;
  p.B = -1.0;
  p.theta_deg = 120.0;
  p.A_C(0, 1) = 1.0;  // asymmetric
  try {
    p.validate();
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("B") != std::string::npos);
    CHECK(msg.find("theta") != std::string::npos);
    CHECK(msg.find("A_C") != std::string::npos);
  }
}
