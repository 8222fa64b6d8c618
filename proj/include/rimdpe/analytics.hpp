#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rimdpe/constellation.hpp"
#include "rimdpe/signal.hpp"

namespace rimdpe {

struct FimInputs {
  Eigen::MatrixXd jacobian;  // M×3 (position) or M×4 (position, c·δt)
  std::vector<double> mqbd;  // ξ_i², rad²/s²
  std::vector<double> snr;   // pre-correlation SNR_i
  double k_out = 1.0;        // correlation-form scale, cancels in every LoE ratio

  void validate() const;
};

/// Distortion of a unit-amplitude signal and unit noise variance after the
/// complex Huber nonlinearity: ᾱ/α and σ̄²/σ².
struct HuberLossFactors {
  double amp_factor = 1.0;
  double var_factor = 1.0;
};

enum class LoeMode { single_domain, dual_domain };

/// ξ² = Σ s′[n]² / Σ s[n]², s′ the first difference scaled by the sample rate.
/// Throws std::domain_error for a zero-energy input.
double mqbd(std::span<const double> samples, double sample_rate);
double mqbd(std::span<const cplx> samples, double sample_rate);

/// SNR_i = |α|² Σ s[n]² / σ_n².
double pre_correlation_snr(cplx amplitude, std::span<const cplx> unit_code,
                           double noise_variance);

/// Appends the clock-bias column (1/c per row, bias in meters) to a
/// position Jacobian.
Eigen::MatrixXd with_clock_column(const Eigen::MatrixX3d& jacobian);

/// I = 2 Pᵀ Ξ Γ P with Γ = k_out · diag(SNR).
Eigen::MatrixXd fim(const FimInputs& inputs);

/// Inverse of the FIM. Throws std::domain_error, reporting the condition
/// number, when the FIM is singular.
Eigen::MatrixXd crb(const FimInputs& inputs);

/// √trace of the position block (first three rows/columns) of a CRB.
double position_rmse_bound(const Eigen::MatrixXd& crb_matrix);

/// Huber factors for threshold `threshold` and per-component noise std
/// `sigma` (the scale the MAD rule estimates).
HuberLossFactors huber_loss_factors(double threshold, double sigma);

/// Loss of efficiency in dB, −10·log10(ᾱ²/σ̄²) for one domain; dual domain
/// squares both factors.
double loe_db(double threshold, double sigma, LoeMode mode);

/// Predicted RMSE ratio robust / non-robust, √(10^{LoE/10}).
double predicted_rmse_ratio(double loe_db_value);

struct LoePoint {
  double th_over_sigma = 0.0;
  double loe_db = 0.0;
};

struct LoeRow {
  double th_over_sigma = 0.0;
  double loe_db_single = 0.0;
  double loe_db_dual = 0.0;
};

std::vector<LoePoint> loe_curve(std::span<const double> th_over_sigma_axis,
                                LoeMode mode);
std::vector<LoeRow> loe_table(std::span<const double> th_over_sigma_axis);
void write_loe_csv(std::ostream& out, const std::vector<LoeRow>& rows);

/// Evenly spaced axis [first, last] with `count` points.
std::vector<double> linear_axis(double first, double last, std::size_t count);

/// FIM inputs for a scenario: ξ² and SNR from each satellite's noiseless,
/// Doppler-free, front-end band-limited replica over `n_samples` samples.
FimInputs scenario_fim_inputs(const Scenario& scenario, std::size_t n_samples,
                              bool with_clock);

}  // namespace rimdpe
