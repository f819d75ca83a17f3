#include "nvpol/spin.hpp"

#include <cmath>

namespace nvpol {

SpinTriple spin_matrices(double s) {
  const int d = static_cast<int>(std::lround(2 * s + 1));
  if (std::abs(2 * s + 1 - d) > 1e-12 || (d != 2 && d != 3))
    throw std::invalid_argument("spin_matrices: s must be 1/2 or 1");
  Matrix sp = Matrix::Zero(d, d);
  Matrix sz = Matrix::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    const double m = s - k;
    sz(k, k) = m;
    if (k > 0) sp(k - 1, k) = std::sqrt(s * (s + 1) - m * (m + 1));
  }
  SpinTriple t;
  t.x = 0.5 * (sp + sp.adjoint());
  t.y = Complex(0, -0.5) * (sp - sp.adjoint());
  t.z = sz;
  return t;
}

const char* site_name(Site site) {
  switch (site) {
    case Site::Nv: return "NV";
    case Site::NvNitrogen: return "N@NV";
    case Site::P1: return "P1";
    case Site::P1Nitrogen: return "N@P1";
    case Site::Carbon: return "13C";
  }
  return "?";
}

namespace {

SpinSpecies make_species(Site site) {
  // gamma_e positive by convention; Zeeman terms enter as -gamma*B*S.
  switch (site) {
    case Site::Nv: return {site, "NV", 1.0, 28.025};
    case Site::NvNitrogen: return {site, "N@NV", 1.0, 0.003077};
    case Site::P1: return {site, "P1", 0.5, 28.025};
    case Site::P1Nitrogen: return {site, "N@P1", 1.0, 0.003077};
    case Site::Carbon: return {site, "13C", 0.5, 0.01071};
  }
  throw std::invalid_argument("unknown site");
}

constexpr Site kCanonicalOrder[5] = {Site::Nv, Site::NvNitrogen, Site::P1,
                                     Site::P1Nitrogen, Site::Carbon};

}  // namespace

SpinRegister::SpinRegister(std::vector<SpinSpecies> spins)
    : spins_(std::move(spins)) {
  for (const auto& sp : spins_) dim_ *= sp.dim();
}

SpinRegister SpinRegister::full() {
  std::vector<SpinSpecies> spins;
  for (Site s : kCanonicalOrder) spins.push_back(make_species(s));
  return SpinRegister(std::move(spins));
}

SpinRegister SpinRegister::with_sites(const std::vector<Site>& sites) {
  std::vector<SpinSpecies> spins;
  for (Site s : kCanonicalOrder) {
    for (Site want : sites) {
      if (want == s) {
        spins.push_back(make_species(s));
        break;
      }
    }
  }
  if (spins.empty())
    throw std::invalid_argument("SpinRegister: at least one site required");
  return SpinRegister(std::move(spins));
}

std::optional<int> SpinRegister::index_of(Site site) const {
  for (int i = 0; i < size(); ++i)
    if (spins_[i].site == site) return i;
  return std::nullopt;
}

int SpinRegister::require(Site site) const {
  auto idx = index_of(site);
  if (!idx)
    throw std::invalid_argument(std::string("register lacks site ") +
                                site_name(site));
  return *idx;
}

Matrix embed(const Matrix& op, int index, const SpinRegister& reg) {
  if (index < 0 || index >= reg.size())
    throw std::invalid_argument("embed: index out of range");
  if (op.rows() != op.cols() || op.rows() != reg.spin(index).dim())
    throw std::invalid_argument("embed: operator dimension mismatch");
  Matrix out = Matrix::Identity(1, 1);
  for (int i = 0; i < reg.size(); ++i) {
    const Matrix& factor =
        (i == index) ? op
                     : static_cast<const Matrix&>(
                           Matrix::Identity(reg.spin(i).dim(),
                                            reg.spin(i).dim()));
    Matrix next(out.rows() * factor.rows(), out.cols() * factor.cols());
    for (int r = 0; r < out.rows(); ++r)
      for (int c = 0; c < out.cols(); ++c)
        next.block(r * factor.rows(), c * factor.cols(), factor.rows(),
                   factor.cols()) = out(r, c) * factor;
    out = std::move(next);
  }
  return out;
}

SpinTriple embedded_spin(int index, const SpinRegister& reg) {
  const SpinTriple t = spin_matrices(reg.spin(index).s);
  return {embed(t.x, index, reg), embed(t.y, index, reg),
          embed(t.z, index, reg)};
}

Matrix coupling_term(const SpinTriple& opA, int indexA, const Tensor3& tensor,
                     const SpinTriple& opB, int indexB,
                     const SpinRegister& reg) {
  if (indexA == indexB)
    throw std::invalid_argument("coupling_term: indices must differ");
  Matrix out = Matrix::Zero(reg.dim(), reg.dim());
  for (int a = 0; a < 3; ++a) {
    if (tensor.row(a).isZero(0.0)) continue;
    const Matrix ea = embed(opA[a], indexA, reg);
    for (int b = 0; b < 3; ++b) {
      if (tensor(a, b) == 0.0) continue;
      out.noalias() += tensor(a, b) * (ea * embed(opB[b], indexB, reg));
    }
  }
  return out;
}

Eigen::Matrix3d zenith_azimuth_rotation(double zenith_deg,
                                        double azimuth_deg) {
  return (Eigen::AngleAxisd(deg2rad(azimuth_deg), Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(deg2rad(zenith_deg), Eigen::Vector3d::UnitY()))
      .toRotationMatrix();
}

Tensor3 rotate_tensor(const Tensor3& tensor, double zenith_deg,
                      double azimuth_deg) {
  const Eigen::Matrix3d r = zenith_azimuth_rotation(zenith_deg, azimuth_deg);
  return r * tensor * r.transpose();
}

bool is_hermitian(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <=
         tol * std::max(1.0, m.cwiseAbs().maxCoeff());
}

}  // namespace nvpol
