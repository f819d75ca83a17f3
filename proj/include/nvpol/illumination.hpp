#pragma once

// Beam-geometry signal model: normalized Gaussian intensity profiles on the
// crystal surface, intensity-to-pump-rate and saturation response maps, and
// the surface integral s_j(W) = int U P_C(U) P_NV(U) da.

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include <stdexcept>

namespace nvpol {

// Gaussian beam; effective_radius is the 1/e^2 intensity radius. The
// profile is truncated at the crystal edge and renormalized so the surface
// integral equals the total power W.
struct BeamProfile {
  double effective_radius_mm = 0.3;
  double center_x_mm = 0.0, center_y_mm = 0.0;
  double power_W = 1.0;
};

struct CrystalSurface {
  double width_mm = 3.2, height_mm = 3.2;
  int grid = 257;  // quadrature points per axis
};

// Monotone piecewise-linear lookup with clamped ends.
class LinearInterp {
 public:
  LinearInterp() = default;
  LinearInterp(std::vector<double> x, std::vector<double> y);
  double operator()(double x) const;
  bool empty() const { return x_.empty(); }

 private:
  std::vector<double> x_, y_;
};

struct ResponseMaps {
  // NV polarization saturation vs intensity (uW/um^2).
  double p_nv_max = 0.8;
  double i_sat = 10.0;
  // Linear intensity -> pumping rate map, MHz per uW/um^2.
  double kappa = 6.9e-3;
  // Steady-state carbon polarization vs pumping rate (MHz), from the
  // pump-rate scan; P_C(0) = 0.
  LinearInterp p_c_of_rate;

  double p_nv(double intensity) const {
    return p_nv_max * intensity / (intensity + i_sat);
  }
  double pump_rate(double intensity) const { return kappa * intensity; }
  double p_c(double intensity) const {
    return p_c_of_rate(pump_rate(intensity));
  }
};

// Intensity (uW/um^2 = W/mm^2) at a point of the crystal surface.
double intensity_profile(const BeamProfile& beam, const CrystalSurface& surf,
                         double x_mm, double y_mm);

double pump_rate_from_intensity(double intensity, double kappa = 6.9e-3);

// 2-D quadrature of U * P_C(U) * P_NV(U); refines the grid until the
// result changes by less than rel_tol. Throws when refinement stalls.
double signal_integral(const BeamProfile& beam, const CrystalSurface& surf,
                       const ResponseMaps& maps, double rel_tol = 1e-3);

struct PowerScanResult {
  std::vector<double> power_W;
  // one column per beam, row per power
  std::vector<std::vector<double>> signal;
};

PowerScanResult power_scan(const std::vector<BeamProfile>& beams,
                           const std::vector<double>& powers_W,
                           const CrystalSurface& surf,
                           const ResponseMaps& maps);

}  // namespace nvpol
