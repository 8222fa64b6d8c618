#include "rimdpe/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace rimdpe {

namespace {

constexpr double kCodePeriod = 1e-3;

using Vec4 = Eigen::Vector4d;

Vec4 pack(const ReceiverState& s) {
  return {s.position.x(), s.position.y(), s.position.z(),
          kSpeedOfLight * s.clock_bias};
}

ReceiverState unpack(const Vec4& v, const ReceiverState& tmpl) {
  ReceiverState s = tmpl;
  s.position = v.head<3>();
  s.clock_bias = v[3] / kSpeedOfLight;
  return s;
}

Vec4 uniform_in_ball(std::mt19937_64& rng, double radius) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif;
  Vec4 dir;
  do {
    dir = Vec4(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
  } while (dir.norm() == 0.0);
  return dir.normalized() * (radius * std::pow(unif(rng), 0.25));
}

}  // namespace

void ArsParams::validate() const {
  if (!(min_radius > 0.0) || !(initial_radius > min_radius)) {
    throw std::invalid_argument("ARS radii must satisfy initial > min > 0");
  }
  if (!(contraction > 1.0)) {
    throw std::invalid_argument("ARS contraction must exceed 1");
  }
  if (max_iterations < 0) {
    throw std::invalid_argument("ARS max_iterations must be non-negative");
  }
}

EstimateResult ars_maximize(const CostFunction& cost, const ReceiverState& center,
                            const ArsParams& params) {
  params.validate();
  EstimateResult result;
  result.kappa_hat = center;
  result.cost = cost(center);
  if (!std::isfinite(result.cost)) {
    throw std::invalid_argument("cost is not finite at the ARS starting point");
  }

  std::mt19937_64 rng(params.seed);
  Vec4 best = pack(center);
  double radius = params.initial_radius;
  for (int it = 0; it < params.max_iterations; ++it) {
    Vec4 trial = best + uniform_in_ball(rng, radius);
    ReceiverState candidate = unpack(trial, center);
    double value = cost(candidate);
    if (value > result.cost) {
      best = trial;
      result.cost = value;
      result.kappa_hat = candidate;
      radius = params.initial_radius;
    } else {
      radius /= params.contraction;
      if (radius < params.min_radius) radius = params.initial_radius;
    }
    result.iterations = it + 1;
  }
  return result;
}

EstimateResult dpe_estimate_clean(const ComplexSignal& x_clean,
                                  const Scenario& scenario, const ArsParams& ars,
                                  const ReceiverState& init,
                                  const CafOptions& caf_options) {
  DpeCostEvaluator evaluator(x_clean, scenario, init, caf_options);
  // A 4-D step of radius r moves a pseudorange by at most √2·r.
  double window = caf_options.table_half_window_m > 0.0
                      ? caf_options.table_half_window_m
                      : std::numbers::sqrt2 * ars.initial_radius + 300.0;
  evaluator.tabulate(window);
  return ars_maximize([&](const ReceiverState& k) { return evaluator(k); }, init,
                      ars);
}

EstimateResult dpe_estimate(const ComplexSignal& x, const Scenario& scenario,
                            const RimConfig& rim, const ArsParams& ars,
                            const ReceiverState& init,
                            const CafOptions& caf_options) {
  scenario.validate();
  ComplexSignal clean = apply_rim(x, rim);
  EstimateResult r = dpe_estimate_clean(clean, scenario, ars, init, caf_options);
  r.method = rim.chain.empty() ? Method::dpe : Method::dpe_rim;
  r.rim = rim;
  return r;
}

AcquisitionResult acquire_2sp(const ComplexSignal& x, const PrnCode& code,
                              const std::vector<double>& tau_axis,
                              const std::vector<double>& doppler_axis,
                              const CafOptions& caf_options) {
  if (tau_axis.empty() || doppler_axis.empty()) {
    throw std::invalid_argument("acquisition grid is empty");
  }
  auto [block, count] = resolve_blocks(x.size(), x.sample_rate, caf_options);
  std::vector<double> power(tau_axis.size() * doppler_axis.size(), 0.0);
  for (std::size_t b = 0; b < count; ++b) {
    ComplexSignal seg{std::vector<cplx>(x.samples.begin() + static_cast<std::ptrdiff_t>(b * block),
                                        x.samples.begin() + static_cast<std::ptrdiff_t>((b + 1) * block)),
                      x.sample_rate};
    // Blocks start on whole code periods, so the same delay axis applies.
    CafGrid g = caf_options.replica_bandwidth > 0.0
                    ? bandlimited_caf_grid(seg, code, tau_axis, doppler_axis,
                                           caf_options.replica_bandwidth)
                    : caf_grid(seg, code, tau_axis, doppler_axis);
    for (std::size_t i = 0; i < power.size(); ++i) power[i] += std::norm(g.values[i]);
  }

  std::size_t best = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < power.size(); ++i) {
    sum += power[i];
    if (power[i] > power[best]) best = i;
  }
  const std::size_t nt = tau_axis.size();
  const std::size_t d = best / nt;
  const std::size_t t = best % nt;

  AcquisitionResult r;
  r.doppler_hat = doppler_axis[d];
  r.tau_hat = tau_axis[t];
  r.peak_power = power[best];
  r.peak_to_mean = sum > 0.0 ? power[best] / (sum / static_cast<double>(power.size())) : 0.0;
  if (t > 0 && t + 1 < nt) {
    double pm = power[d * nt + t - 1];
    double p0 = power[best];
    double pp = power[d * nt + t + 1];
    double denom = pm - 2.0 * p0 + pp;
    if (denom < 0.0) {
      double delta = std::clamp(0.5 * (pm - pp) / denom, -0.5, 0.5);
      r.tau_hat += delta * 0.5 * (tau_axis[t + 1] - tau_axis[t - 1]);
    }
  }
  return r;
}

EstimateResult ls_pvt(const std::vector<double>& pseudoranges,
                      const std::vector<Vec3>& sat_positions,
                      const ReceiverState& init) {
  const std::size_t m = pseudoranges.size();
  if (m != sat_positions.size()) {
    throw std::invalid_argument("pseudorange and satellite counts differ");
  }
  if (m < 4) {
    throw std::invalid_argument("least-squares PVT needs at least 4 satellites, got " +
                                std::to_string(m));
  }
  Vec4 state = pack(init);
  Eigen::MatrixXd h(static_cast<Eigen::Index>(m), 4);
  Eigen::VectorXd resid(static_cast<Eigen::Index>(m));

  auto linearize = [&](const Vec4& s) {
    for (std::size_t i = 0; i < m; ++i) {
      auto row = static_cast<Eigen::Index>(i);
      Vec3 diff = s.head<3>() - sat_positions[i];
      double range = diff.norm();
      if (!(range > 0.0)) {
        throw std::domain_error("receiver coincides with a satellite");
      }
      h.block<1, 3>(row, 0) = diff.transpose() / range;
      h(row, 3) = 1.0;
      resid(row) = pseudoranges[i] - (range + s[3]);
    }
  };

  EstimateResult result;
  result.method = Method::twostep;
  for (int it = 0; it < 20; ++it) {
    linearize(state);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    double cond = sv(0) / sv(sv.size() - 1);
    if (!(sv(sv.size() - 1) > 0.0) || !(cond < 1e12)) {
      throw std::domain_error("singular PVT geometry (condition number " +
                              std::to_string(cond) + ")");
    }
    Vec4 step = svd.solve(resid);
    state += step;
    result.iterations = it + 1;
    if (step.norm() < 1e-4) break;
  }
  linearize(state);
  result.kappa_hat = unpack(state, init);
  result.cost = resid.squaredNorm();
  return result;
}

EstimateResult twostep_estimate_clean(const ComplexSignal& x_clean,
                                      const Scenario& scenario,
                                      const GridConfig& grid,
                                      const ReceiverState& assist) {
  if (grid.cells_per_sample < 1 || !(grid.doppler_step > 0.0) ||
      !(grid.doppler_half_span >= 0.0)) {
    throw std::invalid_argument("invalid acquisition grid configuration");
  }
  const double fs = x_clean.sample_rate;
  const double cell = 1.0 / (fs * grid.cells_per_sample);
  const double half_window = grid.window_chips > 0.0
                                 ? grid.window_chips / kCaChipRate
                                 : 0.5 * kCodePeriod;
  const auto half_samples = static_cast<long>(std::ceil(half_window * fs));

  std::vector<double> pseudoranges;
  std::vector<Vec3> positions;
  for (const auto& sat : scenario.satellites) {
    double tau_pred = delay(assist, sat);
    double fd_pred = doppler(assist, sat, scenario.carrier_freq);
    const PrnCode code = gen_ca_code(sat.prn_id);
    std::vector<double> dopplers;
    const long nd = static_cast<long>(std::floor(grid.doppler_half_span / grid.doppler_step));
    for (long k = -nd; k <= nd; ++k) dopplers.push_back(fd_pred + k * grid.doppler_step);

    // Coarse pass one cell per sample, then the fine grid over ±1 sample.
    // Axes are anchored on the sample grid so cells share sub-sample offsets.
    const double ts = 1.0 / fs;
    double center = std::round(tau_pred / ts) * ts;
    std::vector<double> taus;
    for (long k = -half_samples; k <= half_samples; ++k) taus.push_back(center + k * ts);
    AcquisitionResult acq = acquire_2sp(x_clean, code, taus, dopplers, grid.caf);
    if (grid.cells_per_sample > 1) {
      center = std::round(acq.tau_hat / ts) * ts;
      taus.clear();
      for (long k = -grid.cells_per_sample; k <= grid.cells_per_sample; ++k) {
        taus.push_back(center + k * cell);
      }
      acq = acquire_2sp(x_clean, code, taus, {acq.doppler_hat}, grid.caf);
    }
    double q = std::round((tau_pred - acq.tau_hat) / kCodePeriod);
    double tau_full = acq.tau_hat + q * kCodePeriod;
    pseudoranges.push_back(kSpeedOfLight * (tau_full + sat.clock_bias));
    positions.push_back(sat.position);
  }
  return ls_pvt(pseudoranges, positions, assist);
}

EstimateResult twostep_estimate(const ComplexSignal& x, const Scenario& scenario,
                                const RimConfig& rim, const GridConfig& grid,
                                const ReceiverState& assist) {
  scenario.validate();
  ComplexSignal clean = apply_rim(x, rim);
  EstimateResult r = twostep_estimate_clean(clean, scenario, grid, assist);
  r.rim = rim;
  return r;
}

}  // namespace rimdpe
