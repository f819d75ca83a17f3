#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "nvpol/spin.hpp"

using namespace nvpol;

namespace {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c)
      out.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = a(r, c) * b;
  return out;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

Tensor3 random_symmetric(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  Tensor3 t;
  for (int a = 0; a < 3; ++a)
    for (int b = a; b < 3; ++b) t(a, b) = t(b, a) = u(rng);
  return t;
}

}  // namespace

TEST_CASE("spin matrices: defining conventions") {
  const SpinTriple half = spin_matrices(0.5);
  CHECK(half.z(0, 0).real() == doctest::Approx(0.5));
  CHECK(half.z(1, 1).real() == doctest::Approx(-0.5));

  const SpinTriple one = spin_matrices(1.0);
  CHECK(one.z(0, 0).real() == doctest::Approx(1.0));
  CHECK(one.z(1, 1).real() == doctest::Approx(0.0));
  CHECK(one.z(2, 2).real() == doctest::Approx(-1.0));
  const Matrix sz2 = one.z * one.z;
  CHECK(sz2(0, 0).real() == doctest::Approx(1.0));
  CHECK(sz2(1, 1).real() == doctest::Approx(0.0));
  CHECK(sz2(2, 2).real() == doctest::Approx(1.0));

  CHECK_THROWS_AS(spin_matrices(1.5), std::invalid_argument);
}

TEST_CASE("spin matrices: Sx spectrum of the spin-1") {
  const SpinTriple one = spin_matrices(1.0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(one.x);
  CHECK(es.eigenvalues()(0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(es.eigenvalues()(1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(es.eigenvalues()(2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("spin matrices: commutation relations") {
  for (double s : {0.5, 1.0}) {
    const SpinTriple t = spin_matrices(s);
    const Complex i(0, 1);
    CHECK(max_abs(t.x * t.y - t.y * t.x - i * t.z) < 1e-14);
    CHECK(max_abs(t.y * t.z - t.z * t.y - i * t.x) < 1e-14);
    CHECK(max_abs(t.z * t.x - t.x * t.z - i * t.y) < 1e-14);
  }
}

TEST_CASE("embed: two-spin examples") {
  const SpinRegister reg =
      SpinRegister::with_sites({Site::Nv, Site::Carbon});  // dims 3 x 2
  const Matrix sz = spin_matrices(1.0).z;
  const Matrix e = embed(sz, 0, reg);
  REQUIRE(e.rows() == 6);
  const double expect[6] = {1, 1, 0, 0, -1, -1};
  for (int k = 0; k < 6; ++k)
    CHECK(e(k, k).real() == doctest::Approx(expect[k]));

  // trace scaling
  CHECK(e.trace().real() ==
        doctest::Approx(sz.trace().real() * reg.dim() / 3.0));

  // operators on distinct sites commute
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix a = Matrix::Zero(3, 3), b = Matrix::Zero(2, 2);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) a(r, c) = Complex(u(rng), u(rng));
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) b(r, c) = Complex(u(rng), u(rng));
  const Matrix ea = embed(a, 0, reg);
  const Matrix eb = embed(b, 1, reg);
  CHECK(max_abs(ea * eb - eb * ea) < 1e-13);

  CHECK_THROWS_AS(embed(b, 0, reg), std::invalid_argument);
}

TEST_CASE("embed: preserves Hermiticity and spectral content") {
  const SpinRegister reg =
      SpinRegister::with_sites({Site::Nv, Site::P1, Site::Carbon});
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Matrix a = Matrix::Zero(2, 2);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) a(r, c) = Complex(u(rng), u(rng));
  a = (a + a.adjoint()).eval();
  const Matrix e = embed(a, 1, reg);
  CHECK(is_hermitian(e));
  Eigen::SelfAdjointEigenSolver<Matrix> small(a), big(e);
  // each eigenvalue appears with multiplicity dim / 2
  const int mult = reg.dim() / 2;
  for (int k = 0; k < 2; ++k)
    for (int m = 0; m < mult; ++m)
      CHECK(big.eigenvalues()(k * mult + m) ==
            doctest::Approx(small.eigenvalues()(k)).epsilon(1e-12));
}

TEST_CASE("coupling_term: diagonal and zero tensors") {
  const SpinRegister reg = SpinRegister::with_sites({Site::Nv, Site::Carbon});
  const SpinTriple s1 = spin_matrices(1.0);
  const SpinTriple s2 = spin_matrices(0.5);
  Tensor3 t = Tensor3::Zero();
  t(2, 2) = 3.25;
  const Matrix h = coupling_term(s1, 0, t, s2, 1, reg);
  const Matrix ref = 3.25 * embed(s1.z, 0, reg) * embed(s2.z, 1, reg);
  CHECK(max_abs(h - ref) < 1e-13);

  CHECK(max_abs(coupling_term(s1, 0, Tensor3::Zero(), s2, 1, reg)) == 0.0);
  CHECK_THROWS_AS(coupling_term(s1, 0, t, s1, 0, reg), std::invalid_argument);
}

TEST_CASE("coupling_term: equals the brute-force nine-term sum") {
  const SpinRegister reg = SpinRegister::with_sites({Site::P1, Site::Carbon});
  const SpinTriple a = spin_matrices(0.5);
  const SpinTriple b = spin_matrices(0.5);
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int trial = 0; trial < 8; ++trial) {
    Tensor3 t;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) t(i, j) = u(rng);
    // independent sum via explicit Kronecker products
    const Matrix id2 = Matrix::Identity(2, 2);
    Matrix ref = Matrix::Zero(4, 4);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        ref += t(i, j) * kron(a[i], id2) * kron(id2, b[j]);
    CHECK(max_abs(coupling_term(a, 0, t, b, 1, reg) - ref) < 1e-12);
  }
}

TEST_CASE("coupling_term: P1-carbon tensor is Hermitian with 14 MHz secular part") {
  const SpinRegister reg = SpinRegister::with_sites({Site::P1, Site::Carbon});
  Tensor3 t = Tensor3::Zero();
  t(0, 0) = t(1, 1) = 10.0;
  t(2, 2) = 14.0;
  t(0, 2) = t(2, 0) = 4.0;
  const SpinTriple s = spin_matrices(0.5);
  const Matrix h = coupling_term(s, 0, t, s, 1, reg);
  CHECK(is_hermitian(h, 1e-12));
  const Matrix szsz = embed(s.z, 0, reg) * embed(s.z, 1, reg);
  const double proj = (szsz.adjoint() * h).trace().real() /
                      (szsz.adjoint() * szsz).trace().real();
  CHECK(proj == doctest::Approx(14.0).epsilon(1e-12));
}

TEST_CASE("rotate_tensor: fixed points and the 70.5 degree closed form") {
  Tensor3 axial = Tensor3::Zero();
  axial(0, 0) = axial(1, 1) = 81.3;
  axial(2, 2) = 114.0;

  CHECK(max_abs(Matrix((rotate_tensor(axial, 0.0, 0.0) - axial)
                           .cast<Complex>())) < 1e-12);
  // azimuth alone leaves an axially symmetric tensor unchanged
  CHECK(max_abs(Matrix((rotate_tensor(axial, 0.0, 123.0) - axial)
                           .cast<Complex>())) < 1e-12);

  const double zen = 70.5;
  const Tensor3 rot = rotate_tensor(axial, zen, 0.0);
  const double c = std::cos(deg2rad(zen)), s = std::sin(deg2rad(zen));
  CHECK(rot(2, 2) ==
        doctest::Approx(114.0 * c * c + 81.3 * s * s).epsilon(1e-12));
}

TEST_CASE("rotate_tensor: preserves trace and eigenvalues") {
  std::mt19937 rng(37);
  std::uniform_real_distribution<double> ang(0.0, 360.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor3 t = random_symmetric(rng);
    const Tensor3 r = rotate_tensor(t, ang(rng) / 4.0, ang(rng));
    CHECK(r.trace() == doctest::Approx(t.trace()).epsilon(1e-12));
    Eigen::SelfAdjointEigenSolver<Tensor3> e1(t), e2(r);
    for (int k = 0; k < 3; ++k)
      CHECK(e2.eigenvalues()(k) ==
            doctest::Approx(e1.eigenvalues()(k)).epsilon(1e-12));
  }
}

TEST_CASE("register: canonical ordering and reductions") {
  const SpinRegister full = SpinRegister::full();
  CHECK(full.dim() == 108);
  CHECK(full.size() == 5);
  CHECK(full.spin(0).site == Site::Nv);
  CHECK(full.spin(4).site == Site::Carbon);

  // reduction preserves canonical order no matter the request order
  const SpinRegister red = SpinRegister::with_sites(
      {Site::Carbon, Site::Nv, Site::P1Nitrogen, Site::P1});
  CHECK(red.dim() == 36);
  CHECK(red.spin(0).site == Site::Nv);
  CHECK(red.spin(1).site == Site::P1);
  CHECK(red.spin(2).site == Site::P1Nitrogen);
  CHECK(red.spin(3).site == Site::Carbon);
  CHECK(!red.has(Site::NvNitrogen));
  CHECK_THROWS_AS(red.require(Site::NvNitrogen), std::invalid_argument);
}
