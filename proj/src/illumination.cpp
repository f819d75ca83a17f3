#include "nvpol/illumination.hpp"

#include <algorithm>
#include <cmath>

#include "nvpol/parallel.hpp"

namespace nvpol {

LinearInterp::LinearInterp(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  if (x_.size() != y_.size() || x_.size() < 2)
    throw std::invalid_argument("LinearInterp: need two or more knots");
  for (size_t i = 1; i < x_.size(); ++i)
    if (x_[i] <= x_[i - 1])
      throw std::invalid_argument("LinearInterp: x must increase");
}

double LinearInterp::operator()(double x) const {
  if (x_.empty()) throw std::logic_error("LinearInterp: empty");
  if (x <= x_.front()) return y_.front();
  if (x >= x_.back()) return y_.back();
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  const size_t i = static_cast<size_t>(it - x_.begin());
  const double t = (x - x_[i - 1]) / (x_[i] - x_[i - 1]);
  return y_[i - 1] + t * (y_[i] - y_[i - 1]);
}

namespace {

// Un-normalized 1/e^2 Gaussian and its integral over the crystal on an
// n x n midpoint grid. W/mm^2 equals uW/um^2, so no unit factor appears.
double raw_profile(const BeamProfile& beam, double x, double y) {
  const double r2 = (x - beam.center_x_mm) * (x - beam.center_x_mm) +
                    (y - beam.center_y_mm) * (y - beam.center_y_mm);
  const double w2 = beam.effective_radius_mm * beam.effective_radius_mm;
  return std::exp(-2.0 * r2 / w2);
}

double raw_integral(const BeamProfile& beam, const CrystalSurface& surf,
                    int n) {
  const double hx = surf.width_mm / n;
  const double hy = surf.height_mm / n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = -0.5 * surf.width_mm + (i + 0.5) * hx;
    for (int j = 0; j < n; ++j) {
      const double y = -0.5 * surf.height_mm + (j + 0.5) * hy;
      acc += raw_profile(beam, x, y);
    }
  }
  return acc * hx * hy;
}

}  // namespace

double intensity_profile(const BeamProfile& beam, const CrystalSurface& surf,
                         double x_mm, double y_mm) {
  if (std::abs(x_mm) > 0.5 * surf.width_mm ||
      std::abs(y_mm) > 0.5 * surf.height_mm)
    throw std::invalid_argument("intensity_profile: point off the surface");
  if (beam.power_W == 0.0) return 0.0;
  const double total = raw_integral(beam, surf, surf.grid);
  return beam.power_W * raw_profile(beam, x_mm, y_mm) / total;
}

double pump_rate_from_intensity(double intensity, double kappa) {
  if (intensity < 0)
    throw std::invalid_argument("pump_rate_from_intensity: negative intensity");
  return kappa * intensity;
}

namespace {

double integral_pass(const BeamProfile& beam, const CrystalSurface& surf,
                     const ResponseMaps& maps, int n) {
  if (beam.power_W == 0.0) return 0.0;
  const double total = raw_integral(beam, surf, n);
  const double hx = surf.width_mm / n;
  const double hy = surf.height_mm / n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = -0.5 * surf.width_mm + (i + 0.5) * hx;
    for (int j = 0; j < n; ++j) {
      const double y = -0.5 * surf.height_mm + (j + 0.5) * hy;
      const double u = beam.power_W * raw_profile(beam, x, y) / total;
      acc += u * maps.p_c(u) * maps.p_nv(u);
    }
  }
  return acc * hx * hy;
}

}  // namespace

double signal_integral(const BeamProfile& beam, const CrystalSurface& surf,
                       const ResponseMaps& maps, double rel_tol) {
  if (maps.p_c_of_rate.empty())
    throw std::invalid_argument("signal_integral: P_C map not set");
  int n = surf.grid;
  double prev = integral_pass(beam, surf, maps, n);
  for (int pass = 0; pass < 6; ++pass) {
    n *= 2;
    const double next = integral_pass(beam, surf, maps, n);
    const double denom = std::max(std::abs(next), 1e-300);
    if (std::abs(next - prev) / denom < rel_tol) return next;
    prev = next;
  }
  throw std::runtime_error("signal_integral: quadrature did not converge");
}

PowerScanResult power_scan(const std::vector<BeamProfile>& beams,
                           const std::vector<double>& powers_W,
                           const CrystalSurface& surf,
                           const ResponseMaps& maps) {
  PowerScanResult out;
  out.power_W = powers_W;
  out.signal.assign(powers_W.size(),
                    std::vector<double>(beams.size(), 0.0));
  const int npts = static_cast<int>(powers_W.size() * beams.size());
  parallel_for(npts, [&](int k) {
    const size_t ip = k / beams.size();
    const size_t ib = k % beams.size();
    BeamProfile b = beams[ib];
    b.power_W = powers_W[ip];
    out.signal[ip][ib] = signal_integral(b, surf, maps);
  });
  return out;
}

}  // namespace nvpol
