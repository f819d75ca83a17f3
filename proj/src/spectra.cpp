#include "nvpol/spectra.hpp"

#include <array>
#include <cmath>

#include "nvpol/lindblad.hpp"
#include "nvpol/parallel.hpp"
#include "nvpol/unitary.hpp"

namespace nvpol {

double nv_transition_frequency(const ModelParams& params, double B,
                               double theta_deg) {
  ModelParams p = params;
  p.B = B;
  p.theta_deg = theta_deg;
  const SpinRegister reg = SpinRegister::with_sites({Site::Nv});
  const Matrix h = build_hamiltonian(p, ModelVariant::NvCoupledCarbon, reg);
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[1] - es.eigenvalues()[0];
}

double P1Levels::electron_flip(int mJ1) const {
  return std::abs(energies[1][mJ1 + 1] - energies[0][mJ1 + 1]);
}

double P1Levels::coflip_mean(int mJ1) const {
  const double f1 = std::abs(energies[1][mJ1 + 1] - energies[0][1]);
  const double f2 = std::abs(energies[1][1] - energies[0][mJ1 + 1]);
  return 0.5 * (f1 + f2);
}

P1Levels p1_levels(const ModelParams& params, double B, double theta_deg,
                   P1Subset subset, double azimuth_deg) {
  ModelParams p = params;
  p.B = B;
  p.theta_deg = theta_deg;
  p.p1_zenith_deg = (subset == P1Subset::Parallel) ? 0.0 : kMisalignedZenithDeg;
  p.p1_azimuth_deg = azimuth_deg;
  const SpinRegister reg =
      SpinRegister::with_sites({Site::P1, Site::P1Nitrogen});
  const Matrix h = build_hamiltonian(p, ModelVariant::NvCoupledCarbon, reg);
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const Eigen::VectorXd& evals = es.eigenvalues();
  const Matrix& evecs = es.eigenvectors();

  // Basis order of the two-spin block is |mS'> (x) |mJ'>: index e*3 + nj.
  const Eigen::Vector3d bdir = p.field_direction();
  const SpinTriple se = spin_matrices(0.5);
  const SpinTriple jsp = spin_matrices(1.0);
  Matrix se_b = Matrix::Zero(2, 2);
  for (int a = 0; a < 3; ++a) se_b += bdir[a] * se[a];

  std::vector<int> manifold[2];  // 0: mS' = +1/2 (lower), 1: upper
  for (int k = 0; k < 6; ++k) {
    Complex acc = 0;
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c)
        for (int nj = 0; nj < 3; ++nj)
          acc += std::conj(evecs(r * 3 + nj, k)) * se_b(r, c) *
                 evecs(c * 3 + nj, k);
    manifold[acc.real() > 0 ? 0 : 1].push_back(k);
  }
  if (manifold[0].size() != 3 || manifold[1].size() != 3)
    throw SolverError("p1_levels: electron manifolds are too mixed to label");

  // Nuclear quantization axis: the hyperfine field seen by the nucleus.
  const Tensor3 a_rot =
      rotate_tensor(params.A_N1, p.p1_zenith_deg, p.p1_azimuth_deg);
  Eigen::Vector3d u = a_rot.transpose() * bdir;
  if (u.norm() < 1e-12) u = unit_vector(p.p1_zenith_deg, p.p1_azimuth_deg);
  u.normalize();
  if (u.dot(unit_vector(p.p1_zenith_deg, p.p1_azimuth_deg)) < 0) u = -u;
  Matrix ju = Matrix::Zero(3, 3);
  for (int a = 0; a < 3; ++a) ju += u[a] * jsp[a];

  // Conditional nuclear spinor within the dominant electron block.
  auto nuclear_part = [&](int k, int block) {
    Eigen::Vector3cd v;
    for (int nj = 0; nj < 3; ++nj) v[nj] = evecs(block * 3 + nj, k);
    const double nrm = v.norm();
    if (nrm < 1e-8)
      throw SolverError("p1_levels: vanishing conditional nuclear state");
    return (v / nrm).eval();
  };

  P1Levels out{};
  std::array<Eigen::Vector3cd, 3> lower_nuc;
  std::array<bool, 3> seen{false, false, false};
  for (int k : manifold[0]) {
    const Eigen::Vector3cd nuc = nuclear_part(k, 0);
    const double mj = (nuc.adjoint() * ju * nuc)(0).real();
    const int label = static_cast<int>(std::lround(mj));
    if (label < -1 || label > 1 || seen[label + 1])
      throw SolverError("p1_levels: ambiguous nuclear label");
    seen[label + 1] = true;
    lower_nuc[label + 1] = nuc;
    out.energies[0][label + 1] = evals[k];
  }
  std::array<bool, 3> used{false, false, false};
  for (int k : manifold[1]) {
    const Eigen::Vector3cd nuc = nuclear_part(k, 1);
    int best = -1;
    double best_ov = -1.0;
    for (int m = 0; m < 3; ++m) {
      if (used[m]) continue;
      const double ov = std::abs((lower_nuc[m].adjoint() * nuc)(0));
      if (ov > best_ov) {
        best_ov = ov;
        best = m;
      }
    }
    used[best] = true;
    out.energies[1][best] = evals[k];
  }
  return out;
}

std::optional<double> matching_field(const MatchSpec& spec,
                                     const ModelParams& params,
                                     double bracket_lo_mT,
                                     double bracket_hi_mT) {
  if (spec.mJ1 < -1 || spec.mJ1 > 1)
    throw std::invalid_argument("matching_field: mJ1 must be -1, 0 or +1");
  if (spec.nuclear_coflip && spec.mJ1 == 0)
    throw std::invalid_argument("matching_field: coflip requires mJ1 = +-1");
  auto gap = [&](double B) {
    const P1Levels lv = p1_levels(params, B, spec.theta_deg, spec.subset);
    const double fp1 = spec.nuclear_coflip ? lv.coflip_mean(spec.mJ1)
                                           : lv.electron_flip(spec.mJ1);
    return nv_transition_frequency(params, B, spec.theta_deg) - fp1;
  };
  double lo = bracket_lo_mT, hi = bracket_hi_mT;
  double glo = gap(lo);
  if (glo * gap(hi) > 0) return std::nullopt;
  for (int it = 0; it < 60 && (hi - lo) > 1e-7; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = gap(mid);
    if (glo * gm <= 0) {
      hi = mid;
    } else {
      lo = mid;
      glo = gm;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<std::pair<double, double>> matching_field_curve(
    const std::vector<double>& theta_grid_deg, const ModelParams& params) {
  std::vector<std::pair<double, double>> out(theta_grid_deg.size());
  parallel_for(static_cast<int>(theta_grid_deg.size()), [&](int i) {
    MatchSpec spec;
    spec.theta_deg = theta_grid_deg[i];
    const auto b = matching_field(spec, params);
    if (!b)
      throw SolverError("matching_field_curve: no matching field at theta " +
                        std::to_string(theta_grid_deg[i]));
    out[i] = {theta_grid_deg[i], *b};
  });
  return out;
}

double polarization_amplitude(double B, const ModelParams& params,
                              ModelVariant variant, const SpinRegister& reg,
                              const Matrix& rho0, double t_proj_us) {
  ModelParams p = params;
  p.B = B;
  const Matrix h = build_hamiltonian(p, variant, reg);
  const EigenPropagator prop(h);
  const int ic = reg.require(Site::Carbon);
  const Matrix pc = 2.0 * embed(spin_matrices(0.5).z, ic, reg);
  return prop.time_average(rho0, pc, t_proj_us);
}

namespace {

// One full stick pass at a fixed projection window.
Eigen::VectorXd stick_pass(const Eigen::VectorXd& grid,
                           const SweepConfig& config,
                           const ModelParams& params, ModelVariant variant,
                           const SpinRegister& reg, const Matrix& rho0,
                           double t_proj) {
  const int n = static_cast<int>(grid.size());
  struct Orientation {
    double zenith, azimuth, weight;
  };
  std::vector<Orientation> orients;
  if (config.weight_parallel != 0.0)
    orients.push_back({0.0, 0.0, config.weight_parallel});
  if (config.weight_misaligned != 0.0) {
    if (std::abs(params.theta_deg) < 1e-12) {
      orients.push_back({kMisalignedZenithDeg, 0.0, config.weight_misaligned});
    } else {
      for (double az : {0.0, 120.0, 240.0})
        orients.push_back(
            {kMisalignedZenithDeg, az, config.weight_misaligned / 3.0});
    }
  }
  Eigen::VectorXd sticks = Eigen::VectorXd::Zero(n);
  for (const Orientation& o : orients) {
    ModelParams po = params;
    po.p1_zenith_deg = o.zenith;
    po.p1_azimuth_deg = o.azimuth;
    Eigen::VectorXd part(n);
    parallel_for(n, [&](int i) {
      part[i] =
          polarization_amplitude(grid[i], po, variant, reg, rho0, t_proj);
    });
    sticks += o.weight * part;
  }
  return sticks;
}

}  // namespace

LinePattern sweep(const SweepConfig& config, const ModelParams& params,
                  ModelVariant variant, const SpinRegister& reg,
                  const Matrix* rho0_override) {
  if (config.n_points < 2 || config.B_min_mT >= config.B_max_mT)
    throw std::invalid_argument("sweep: invalid field grid");
  if (config.conv_width_mT < 0)
    throw std::invalid_argument("sweep: negative convolution width");
  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(
      config.n_points, config.B_min_mT, config.B_max_mT);
  Matrix rho0;
  if (rho0_override) {
    rho0 = *rho0_override;
  } else {
    InitialState init = InitialState::nv_polarized(reg);
    if (config.n_nv_level0 && reg.has(Site::NvNitrogen))
      init.set(reg, Site::NvNitrogen, LevelSpec::pure(0.0));
    rho0 = initial_state(init, reg);
  }

  double t_proj = config.t_proj_us;
  Eigen::VectorXd sticks =
      stick_pass(grid, config, params, variant, reg, rho0, t_proj);
  if (config.adaptive_t_proj) {
    while (2 * t_proj <= config.max_t_proj_us) {
      const Eigen::VectorXd next =
          stick_pass(grid, config, params, variant, reg, rho0, 2 * t_proj);
      const double scale = std::max(next.cwiseAbs().maxCoeff(), 1e-30);
      const double change = (next - sticks).cwiseAbs().maxCoeff() / scale;
      sticks = next;
      t_proj *= 2;
      if (change < 0.02) break;
    }
  }

  LinePattern pat;
  pat.field_mT = grid;
  pat.sticks = sticks;
  pat.t_proj_us = t_proj;
  pat.conv_width_mT = config.conv_width_mT;
  pat.theta_deg = params.theta_deg;
  pat.curve_field_mT =
      (config.curve_points > 1)
          ? Eigen::VectorXd::LinSpaced(config.curve_points, config.B_min_mT,
                                       config.B_max_mT)
          : grid;
  pat.curve = convolve_gaussian(grid, sticks, config.conv_width_mT,
                                pat.curve_field_mT);
  return pat;
}

double peak_amplitude_field(const ModelParams& params, ModelVariant variant,
                            const SpinRegister& reg, const Matrix& rho0,
                            double center_mT, double halfwidth_mT,
                            int n_points, double t_proj_us) {
  Eigen::VectorXd amp(n_points);
  parallel_for(n_points, [&](int i) {
    const double b = center_mT - halfwidth_mT +
                     2.0 * halfwidth_mT * i / std::max(1, n_points - 1);
    amp[i] = polarization_amplitude(b, params, variant, reg, rho0, t_proj_us);
  });
  int best = 0;
  amp.cwiseAbs().maxCoeff(&best);
  return center_mT - halfwidth_mT +
         2.0 * halfwidth_mT * best / std::max(1, n_points - 1);
}

Eigen::VectorXd convolve_gaussian(const Eigen::VectorXd& stick_field,
                                  const Eigen::VectorXd& stick_amp,
                                  double width_mT,
                                  const Eigen::VectorXd& grid) {
  if (stick_field.size() != stick_amp.size())
    throw std::invalid_argument("convolve_gaussian: size mismatch");
  if (width_mT < 0)
    throw std::invalid_argument("convolve_gaussian: negative width");
  if (width_mT == 0.0) {
    if (grid.size() != stick_field.size())
      throw std::invalid_argument(
          "convolve_gaussian: delta limit needs matching grids");
    return stick_amp;
  }
  const double norm = 1.0 / (width_mT * std::sqrt(2.0 * kPi));
  const double cutoff = 8.0 * width_mT;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(grid.size());
  for (int j = 0; j < grid.size(); ++j) {
    double acc = 0.0;
    for (int i = 0; i < stick_field.size(); ++i) {
      const double dx = grid[j] - stick_field[i];
      if (std::abs(dx) > cutoff) continue;
      acc += stick_amp[i] * std::exp(-0.5 * dx * dx / (width_mT * width_mT));
    }
    out[j] = norm * acc;
  }
  return out;
}

}  // namespace nvpol
