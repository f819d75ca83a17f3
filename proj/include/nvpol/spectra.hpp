#pragma once

// Field-swept machinery: energy-matching fields between the NV and the
// hyperfine-shifted P1 transitions, the signed carbon polarization pattern,
// orientation-weighted sweeps and Gaussian broadening.

#include <optional>

#include "nvpol/model.hpp"
#include "nvpol/state.hpp"

namespace nvpol {

// P1 orientation class relative to the NV axis: along it, or along one of
// the three bonds at 70.5 degrees (three times as abundant).
enum class P1Subset { Parallel, Misaligned };

constexpr double kMisalignedZenithDeg = 70.5;

struct MatchSpec {
  double theta_deg = 0.0;
  int mJ1 = 0;  // 14N projection at the P1: -1, 0, +1
  P1Subset subset = P1Subset::Parallel;
  bool nuclear_coflip = false;  // electron flip accompanied by a 14N flip
};

// NV |0> <-> lower electronic transition frequency (MHz) from the exact
// 3x3 crystal-field + Zeeman block.
double nv_transition_frequency(const ModelParams& params, double B,
                               double theta_deg);

// Labeled P1 (x) 14N levels at one field; transition helpers below.
struct P1Levels {
  // energies[e][m]: electron manifold e (0 = lower), nuclear label m+1.
  double energies[2][3];
  double electron_flip(int mJ1) const;  // nuclear projection preserved
  double coflip_mean(int mJ1) const;    // mean of the two 0<->mJ1 cross flips
};

P1Levels p1_levels(const ModelParams& params, double B, double theta_deg,
                   P1Subset subset, double azimuth_deg = 0.0);

// Field where the NV transition matches the selected P1 transition, found
// by bisection on [bracket_lo, bracket_hi] to 1e-4 mT. Empty when the
// bracket holds no sign change.
std::optional<double> matching_field(const MatchSpec& spec,
                                     const ModelParams& params,
                                     double bracket_lo_mT = 30.0,
                                     double bracket_hi_mT = 120.0);

// (theta, B) pairs for the central matching condition.
std::vector<std::pair<double, double>> matching_field_curve(
    const std::vector<double>& theta_grid_deg, const ModelParams& params);

// Time-averaged carbon polarization over [0, T_proj] under unitary
// evolution from `rho0` at field B.
double polarization_amplitude(double B, const ModelParams& params,
                              ModelVariant variant, const SpinRegister& reg,
                              const Matrix& rho0, double t_proj_us);

struct SweepConfig {
  double B_min_mT = 48.9;
  double B_max_mT = 53.5;
  int n_points = 2301;
  double t_proj_us = 50.0;      // starting projection window
  bool adaptive_t_proj = true;  // double until sticks move < 2 percent
  double max_t_proj_us = 1600.0;
  double conv_width_mT = 0.1;   // Gaussian standard deviation
  double weight_parallel = 1.0;
  double weight_misaligned = 3.0;
  int curve_points = 0;  // 0: curve sampled on the stick grid
  bool n_nv_level0 = false;  // start the NV 14N in m = 0 (default thermal)
};

struct LinePattern {
  Eigen::VectorXd field_mT;  // stick grid
  Eigen::VectorXd sticks;    // signed amplitudes
  Eigen::VectorXd curve_field_mT;
  Eigen::VectorXd curve;     // Gaussian-broadened pattern
  double t_proj_us = 0.0;    // final projection window
  double conv_width_mT = 0.0;
  double theta_deg = 0.0;
};

// Weighted sum over P1 subsets of the signed carbon amplitude on a field
// grid, plus its Gaussian convolution. The initial state is the optically
// pumped one (NV in m_S = 0, everything else thermal) unless provided.
LinePattern sweep(const SweepConfig& config, const ModelParams& params,
                  ModelVariant variant, const SpinRegister& reg,
                  const Matrix* rho0_override = nullptr);

// Signed superposition of unit-area Gaussians of standard deviation
// `width` centered on the sticks, sampled on `grid`. width = 0 reproduces
// the sticks (delta limit, equal grids required).
Eigen::VectorXd convolve_gaussian(const Eigen::VectorXd& stick_field,
                                  const Eigen::VectorXd& stick_amp,
                                  double width_mT,
                                  const Eigen::VectorXd& grid);

// Field of the largest |time-averaged carbon amplitude| on a linear scan
// around `center`; used to place steady-state and trajectory studies on
// the polarization peak.
double peak_amplitude_field(const ModelParams& params, ModelVariant variant,
                            const SpinRegister& reg, const Matrix& rho0,
                            double center_mT, double halfwidth_mT = 0.15,
                            int n_points = 1201, double t_proj_us = 100.0);

}  // namespace nvpol
