#include "rimdpe/analytics.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "rimdpe/signal_synth.hpp"

namespace rimdpe {

void FimInputs::validate() const {
  const auto m = static_cast<std::size_t>(jacobian.rows());
  if (mqbd.size() != m || snr.size() != m) {
    throw std::invalid_argument("FIM inputs need one ξ² and SNR per Jacobian row");
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!(snr[i] >= 0.0)) throw std::invalid_argument("SNR must be non-negative");
    if (!(mqbd[i] > 0.0)) throw std::invalid_argument("MQBD must be positive");
  }
}

double mqbd(std::span<const double> samples, double sample_rate) {
  if (samples.empty()) throw std::domain_error("MQBD of an empty sequence");
  double energy = 0.0;
  double deriv = 0.0;
  for (std::size_t n = 0; n < samples.size(); ++n) {
    energy += samples[n] * samples[n];
    if (n > 0) {
      double d = (samples[n] - samples[n - 1]) * sample_rate;
      deriv += d * d;
    }
  }
  if (!(energy > 0.0)) throw std::domain_error("MQBD of a zero-energy sequence");
  return deriv / energy;
}

double mqbd(std::span<const cplx> samples, double sample_rate) {
  if (samples.empty()) throw std::domain_error("MQBD of an empty sequence");
  double energy = 0.0;
  double deriv = 0.0;
  for (std::size_t n = 0; n < samples.size(); ++n) {
    energy += std::norm(samples[n]);
    if (n > 0) deriv += std::norm((samples[n] - samples[n - 1]) * sample_rate);
  }
  if (!(energy > 0.0)) throw std::domain_error("MQBD of a zero-energy sequence");
  return deriv / energy;
}

double pre_correlation_snr(cplx amplitude, std::span<const cplx> unit_code,
                           double noise_variance) {
  double energy = 0.0;
  for (const auto& s : unit_code) energy += std::norm(s);
  return std::norm(amplitude) * energy / noise_variance;
}

Eigen::MatrixXd with_clock_column(const Eigen::MatrixX3d& jacobian) {
  Eigen::MatrixXd out(jacobian.rows(), 4);
  out.leftCols<3>() = jacobian;
  out.col(3).setConstant(1.0 / kSpeedOfLight);
  return out;
}

Eigen::MatrixXd fim(const FimInputs& inputs) {
  inputs.validate();
  const auto& p = inputs.jacobian;
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(p.cols(), p.cols());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    auto idx = static_cast<std::size_t>(i);
    double w = 2.0 * inputs.mqbd[idx] * inputs.k_out * inputs.snr[idx];
    info.noalias() += w * p.row(i).transpose() * p.row(i);
  }
  return info;
}

Eigen::MatrixXd crb(const FimInputs& inputs) {
  Eigen::MatrixXd info = fim(inputs);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
  const auto& ev = eig.eigenvalues();
  double lo = ev.minCoeff();
  double hi = ev.maxCoeff();
  double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(hi > 0.0) || !(cond < 1e14)) {
    std::ostringstream msg;
    msg << "singular Fisher information matrix (condition number " << cond << ")";
    throw std::domain_error(msg.str());
  }
  return eig.eigenvectors() * ev.cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

double position_rmse_bound(const Eigen::MatrixXd& crb_matrix) {
  return std::sqrt(crb_matrix.topLeftCorner(3, 3).trace());
}

HuberLossFactors huber_loss_factors(double threshold, double sigma) {
  if (!(threshold > 0.0) || !(sigma > 0.0)) {
    throw std::invalid_argument("Huber threshold and sigma must be positive");
  }
  const double u = threshold / (std::sqrt(2.0) * sigma);
  const double inside = -std::expm1(-u * u);
  HuberLossFactors f;
  f.var_factor = inside;
  f.amp_factor = inside + 0.5 * std::sqrt(std::numbers::pi) * u * std::erfc(u);
  return f;
}

double loe_db(double threshold, double sigma, LoeMode mode) {
  HuberLossFactors f = huber_loss_factors(threshold, sigma);
  double ratio = f.amp_factor * f.amp_factor / f.var_factor;
  if (mode == LoeMode::dual_domain) ratio = ratio * ratio;
  return -10.0 * std::log10(ratio);
}

double predicted_rmse_ratio(double loe_db_value) {
  return std::sqrt(std::pow(10.0, loe_db_value / 10.0));
}

std::vector<LoePoint> loe_curve(std::span<const double> th_over_sigma_axis,
                                LoeMode mode) {
  std::vector<LoePoint> curve;
  curve.reserve(th_over_sigma_axis.size());
  for (double t : th_over_sigma_axis) {
    if (!(t > 0.0)) throw std::invalid_argument("threshold axis must be positive");
    curve.push_back({t, loe_db(t, 1.0, mode)});
  }
  return curve;
}

std::vector<LoeRow> loe_table(std::span<const double> th_over_sigma_axis) {
  std::vector<LoeRow> rows;
  for (double t : th_over_sigma_axis) {
    if (!(t > 0.0)) throw std::invalid_argument("threshold axis must be positive");
    rows.push_back({t, loe_db(t, 1.0, LoeMode::single_domain),
                    loe_db(t, 1.0, LoeMode::dual_domain)});
  }
  return rows;
}

void write_loe_csv(std::ostream& out, const std::vector<LoeRow>& rows) {
  out << "th_over_sigma,loe_db_single,loe_db_dual\n";
  out.precision(10);
  for (const auto& r : rows) {
    out << r.th_over_sigma << ',' << r.loe_db_single << ',' << r.loe_db_dual << '\n';
  }
}

std::vector<double> linear_axis(double first, double last, std::size_t count) {
  std::vector<double> axis;
  if (count == 0) return axis;
  if (count == 1) return {first};
  for (std::size_t i = 0; i < count; ++i) {
    axis.push_back(first + (last - first) * static_cast<double>(i) /
                               static_cast<double>(count - 1));
  }
  return axis;
}

FimInputs scenario_fim_inputs(const Scenario& scenario, std::size_t n_samples,
                              bool with_clock) {
  scenario.validate();
  FimInputs in;
  Eigen::MatrixX3d jac = geometry_jacobian(scenario.receiver, scenario.satellites);
  in.jacobian = with_clock ? with_clock_column(jac) : Eigen::MatrixXd(jac);

  Scenario single = scenario;
  single.duration = static_cast<double>(n_samples) / scenario.sample_rate;
  single.cn0_dbhz.clear();
  for (std::size_t i = 0; i < scenario.satellites.size(); ++i) {
    SatelliteState sat = scenario.satellites[i];
    // Unit amplitude, no carrier: the code envelope as the receiver sees it.
    sat.amplitude = 1.0;
    sat.carrier_phase = 0.0;
    sat.velocity = scenario.receiver.velocity;
    single.satellites = {sat};
    ComplexSignal code = scenario.frontend_bandwidth > 0.0
                             ? synthesize_noiseless_frontend(single)
                             : synthesize_noiseless(single);
    in.mqbd.push_back(mqbd(std::span<const cplx>(code.samples), scenario.sample_rate));
    in.snr.push_back(pre_correlation_snr(effective_amplitude(scenario, i),
                                         code.samples, scenario.noise_variance));
  }
  return in;
}

}  // namespace rimdpe
