#pragma once

// Spin operator construction and tensor-product embedding for small
// multi-spin registers. All energies are in MHz (linear frequency),
// fields in mT, times in us.

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nvpol {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Tensor3 = Eigen::Matrix3d;

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }

// Cartesian triple (Sx, Sy, Sz) acting on a single spin.
struct SpinTriple {
  Matrix x, y, z;
  Matrix plus() const { return x + Complex(0, 1) * y; }
  Matrix minus() const { return x - Complex(0, 1) * y; }
  const Matrix& operator[](int a) const {
    return a == 0 ? x : (a == 1 ? y : z);
  }
};

// Angular-momentum matrices for s in {1/2, 1}; Sz = diag(s, s-1, ..., -s).
SpinTriple spin_matrices(double s);

// Physical role of a register member. Ordering of the full register is
// fixed as [Nv, NvNitrogen, P1, P1Nitrogen, Carbon].
enum class Site { Nv, NvNitrogen, P1, P1Nitrogen, Carbon };

const char* site_name(Site site);

struct SpinSpecies {
  Site site;
  std::string label;
  double s;      // spin quantum number, 1/2 or 1
  double gamma;  // gyromagnetic ratio, MHz/mT, signed
  int dim() const { return static_cast<int>(std::lround(2 * s + 1)); }
};

// Ordered list of spins defining the composite Hilbert space. Immutable
// after construction; reductions drop sites but never reorder them.
class SpinRegister {
 public:
  // Canonical five-spin register [NV, 14N@NV, P1, 14N@P1, 13C], dim 108.
  static SpinRegister full();
  // Register restricted to the given sites, canonical order.
  static SpinRegister with_sites(const std::vector<Site>& sites);

  int size() const { return static_cast<int>(spins_.size()); }
  int dim() const { return dim_; }
  const SpinSpecies& spin(int i) const { return spins_.at(i); }
  const std::vector<SpinSpecies>& spins() const { return spins_; }

  bool has(Site site) const { return index_of(site).has_value(); }
  std::optional<int> index_of(Site site) const;
  // Throwing accessor for sites the caller requires.
  int require(Site site) const;

 private:
  explicit SpinRegister(std::vector<SpinSpecies> spins);
  std::vector<SpinSpecies> spins_;
  int dim_ = 1;
};

// I (x) ... (x) op (x) ... (x) I with identities on all other factors.
Matrix embed(const Matrix& op, int index, const SpinRegister& reg);

// Spin matrices of register member `index`, embedded into the register.
SpinTriple embedded_spin(int index, const SpinRegister& reg);

// Bilinear coupling sum_{ab} tensor(a,b) * A_a(indexA) * B_b(indexB).
Matrix coupling_term(const SpinTriple& opA, int indexA, const Tensor3& tensor,
                     const SpinTriple& opB, int indexB,
                     const SpinRegister& reg);

// Rotation taking the z axis to the (zenith, azimuth) direction, degrees.
Eigen::Matrix3d zenith_azimuth_rotation(double zenith_deg, double azimuth_deg);

inline Eigen::Vector3d unit_vector(double zenith_deg, double azimuth_deg) {
  return zenith_azimuth_rotation(zenith_deg, azimuth_deg) *
         Eigen::Vector3d::UnitZ();
}

// R * tensor * R^T; eigenvalues are preserved.
Tensor3 rotate_tensor(const Tensor3& tensor, double zenith_deg,
                      double azimuth_deg);

bool is_hermitian(const Matrix& m, double tol = 1e-10);

}  // namespace nvpol
