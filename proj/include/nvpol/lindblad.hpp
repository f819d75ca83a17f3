#pragma once

// Lindblad engine: collapse operators for optical pumping and T1
// relaxation, sparse Liouvillian over column-stacked density matrices,
// time propagation and the stationary state.

#include <Eigen/Sparse>

#include "nvpol/model.hpp"
#include "nvpol/state.hpp"
#include "nvpol/unitary.hpp"

namespace nvpol {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One collapse operator sqrt(rate) |m_to><m_from| on a single register
// member. Rates are linear (1/us); no 2*pi.
struct CollapseSpec {
  int spin_index;
  double m_from, m_to;
  double rate;  // 1/us
};

// Spin-lattice relaxation times in us; infinity disables a channel.
struct RelaxationTimes {
  double nv = std::numeric_limits<double>::infinity();
  double p1 = std::numeric_limits<double>::infinity();
  double carbon = std::numeric_limits<double>::infinity();
  double n_nv = std::numeric_limits<double>::infinity();
  double n_p1 = std::numeric_limits<double>::infinity();

  // T1(C) = 10 s, T1(NV) = 1 ms, T1(P1) = 100 us, T1(N,N') = 100 ms.
  static RelaxationTimes standard_set();

  void validate() const;
};

// Optical pumping of the NV into m_S = 0: sqrt(R)|0><+1| and sqrt(R)|0><-1|.
std::vector<CollapseSpec> pump_operators(double rate_mhz,
                                         const SpinRegister& reg);

// Symmetric two-way transfer at rate 1/T1 between every ordered level pair
// of every spin (6 per spin-1, 2 per spin-1/2). Infinite T1 -> omitted.
std::vector<CollapseSpec> t1_operators(const RelaxationTimes& times,
                                       const SpinRegister& reg);

Matrix collapse_matrix(const CollapseSpec& spec, const SpinRegister& reg);

// Superoperator L with vec(rho') = L vec(rho), column stacking:
//   L = -2i*pi (1 (x) H - H^T (x) 1)
//     + sum_k [ conj(c_k) (x) c_k - (1 (x) c_k^H c_k + (c_k^H c_k)^T (x) 1)/2 ]
struct Liouvillian {
  Eigen::SparseMatrix<Complex> matrix;
  int dim = 0;  // Hilbert-space dimension
};

Liouvillian build_liouvillian(const Matrix& h,
                              const std::vector<CollapseSpec>& collapses,
                              const SpinRegister& reg);

struct LindbladOptions {
  // Above this superoperator dimension the dense eigendecomposition
  // propagator is replaced by scaled Taylor stepping on the sparse L.
  int dense_eig_limit = 2600;
  bool keep_states = false;
};

struct LindbladResult {
  Trajectory trajectory;
  std::vector<Matrix> states;        // populated when keep_states
  Eigen::VectorXd trace_error;       // |Tr rho(t) - 1|
  Eigen::VectorXd min_eigenvalue;    // smallest eigenvalue of rho(t)
};

LindbladResult evolve_lindblad(const Matrix& rho0, const Liouvillian& liou,
                               const Eigen::VectorXd& times,
                               const SpinRegister& reg,
                               const LindbladOptions& opts = {});

struct SteadyStateOptions {
  // Dense SVD kernel-dimension pre-check runs when dim^2 <= this.
  int svd_check_limit = 1600;
  double residual_factor = 1e-9;  // residual <= factor * ||L||_F
};

// Solves L vec(rho) = 0 with unit trace via a bordered linear system:
// the row of the (0,0) matrix element is replaced by the trace functional.
// Throws SolverError on a degenerate kernel or unmet residual.
Matrix steady_state(const Liouvillian& liou,
                    const SteadyStateOptions& opts = {});

// Residual ||L vec(rho)|| / ||L||_F of a candidate stationary state.
double steady_state_residual(const Liouvillian& liou, const Matrix& rho);

struct PumpScanPoint {
  double rate_mhz;
  double P_C, P_S1, P_S;
  double residual;
};

// Steady-state polarizations versus NV pumping rate at fixed field.
std::vector<PumpScanPoint> pump_rate_scan(const std::vector<double>& rates_mhz,
                                          const ModelParams& params,
                                          const RelaxationTimes& times,
                                          const SpinRegister& reg,
                                          ModelVariant variant =
                                              ModelVariant::NvCoupledCarbon);

}  // namespace nvpol
