#pragma once

#include <span>
#include <vector>

#include "rimdpe/constellation.hpp"
#include "rimdpe/rim.hpp"
#include "rimdpe/signal.hpp"
#include "rimdpe/signal_synth.hpp"

namespace rimdpe {

struct CafValue {
  cplx value{0.0, 0.0};
  double tau = 0.0;      // s
  double doppler = 0.0;  // Hz
  int prn_id = 0;
};

/// Dense delay-Doppler search surface; values are row-major with one row per
/// Doppler bin: values[d * tau_axis.size() + t].
struct CafGrid {
  std::vector<double> tau_axis;
  std::vector<double> doppler_axis;
  std::vector<cplx> values;
  int prn_id = 0;

  [[nodiscard]] const cplx& at(std::size_t doppler_idx, std::size_t tau_idx) const {
    return values[doppler_idx * tau_axis.size() + tau_idx];
  }
  cplx& at(std::size_t doppler_idx, std::size_t tau_idx) {
    return values[doppler_idx * tau_axis.size() + tau_idx];
  }
};

/// Coherent/noncoherent integration layout. A block is one coherent
/// integration; block costs add noncoherently.
struct CafOptions {
  std::size_t block_samples = 0;  // 0 → one C/A code period
  std::size_t max_blocks = 0;     // 0 → every full block of the signal
  // DPE delay table half width in meters of pseudorange; 0 → sized from
  // the ARS radius.
  double table_half_window_m = 0.0;
  // > 0: the DPE replica is the chip waveform band-limited to ±this many Hz
  // (chip_harmonics) instead of sampled chips. Needs blocks of whole code
  // periods, each a whole number of samples.
  double replica_bandwidth = 0.0;
};

/// Σ_n x[n] c(nT_s − τ) e^{−j2π f_d n T_s} over all samples of `x`, n counted
/// from the first sample. Throws std::invalid_argument when `x` is shorter
/// than one code period.
CafValue caf(const ComplexSignal& x, const PrnCode& code, double tau,
             double doppler);

/// Same sum restricted to samples [first, first + count), time still
/// referenced to sample 0.
cplx caf_span(std::span<const cplx> x, double sample_rate, std::size_t first,
              std::size_t count, const PrnCode& code, double tau,
              double doppler);

/// caf applied to apply_rim(x, rim).
CafValue robust_caf(const ComplexSignal& x, const RimConfig& rim,
                    const PrnCode& code, double tau, double doppler);

/// Dense CAF over the grid. When the signal spans whole code periods the
/// delay dimension is computed by circular correlation through the DFT, one
/// correlation per distinct sub-sample delay offset; otherwise pointwise.
CafGrid caf_grid(const ComplexSignal& x, const PrnCode& code,
                 const std::vector<double>& tau_axis,
                 const std::vector<double>& doppler_axis);

/// caf_grid with the band-limited chip waveform (chip_harmonics at
/// `bandwidth`) as replica: Σ_k conj(C_k) X(k/T) e^{j2πkτ/T} per cell, X the
/// DFT of the Doppler-wiped signal. Needs whole code periods of whole
/// samples and 0 < bandwidth < sample_rate / 2.
CafGrid bandlimited_caf_grid(const ComplexSignal& x, const PrnCode& code,
                             const std::vector<double>& tau_axis,
                             const std::vector<double>& doppler_axis, double bandwidth);

/// Σ_i Σ_blocks |caf_block(x, code_i, τ_i(κ), f_{d,i}(κ))|², evaluated
/// directly sample by sample.
double dpe_cost(const ComplexSignal& x_clean, const ReceiverState& kappa,
                const Scenario& scenario, const CafOptions& options = {});

/// Fast evaluator of dpe_cost for one cleaned signal. Each block is
/// Doppler-wiped at the reference state's Doppler and turned into prefix
/// sums; an evaluation then costs one complex multiply-add per chip. The
/// residual Doppler of a candidate is applied per chip at the chip centre,
/// which differs from the sample-exact cost by O((π δf T_c)²).
///
/// With options.replica_bandwidth > 0 the replica is the band-limited chip
/// waveform instead: each block keeps conj(C_k)·X_b(k/T) for the code
/// harmonics in band, and a block correlation is the trigonometric sum
/// Σ_k conj(C_k) X_b(k/T) e^{j2πkτ/T}. The Doppler then stays at the
/// reference.
class DpeCostEvaluator {
 public:
  DpeCostEvaluator(const ComplexSignal& x_clean, const Scenario& scenario,
                   const ReceiverState& reference, const CafOptions& options = {});

  double operator()(const ReceiverState& kappa) const;

  /// |CAF|² summed over blocks for one satellite.
  [[nodiscard]] double channel_power(std::size_t sat_index,
                                     const ReceiverState& kappa) const;

  [[nodiscard]] std::size_t num_blocks() const { return num_blocks_; }

  /// Tabulates every satellite's power over delays within ±`half_window_m`
  /// (meters of pseudorange) of the reference state, Doppler held at the
  /// reference. The power is then piecewise constant in τ on a grid of
  /// T_s/1023 (exact when a code period is a whole number of samples), and
  /// the table holds its value on each cell. After this call, operator()
  /// and channel_power use the tables, falling back to direct evaluation at
  /// the reference Doppler outside the window.
  ///
  /// For the band-limited replica the tables hold each block correlation
  /// and its first two delay derivatives on a grid three times finer than
  /// the highest harmonic needs, and evaluations interpolate with quintic
  /// Hermite polynomials (error below 1e-6 of the peak). These tables span
  /// at least ±5 km.
  void tabulate(double half_window_m);
  [[nodiscard]] bool tabulated() const { return !tables_.empty(); }

  /// |CAF|² summed over blocks for one satellite at delay `tau`, with the
  /// Doppler offset by `residual_doppler` from the reference. The
  /// band-limited replica accepts only a zero offset.
  [[nodiscard]] double channel_power_at(std::size_t sat_index, double tau,
                                        double residual_doppler) const;

 private:
  struct Table {
    double u0 = 0.0;  // first cell edge, samples (fs·τ)
    std::vector<double> power;
    // Band-limited replica: grid points g0, g0 + 1, ... at τ = g·step, each
    // holding (z, step·z', step²·z'') per block.
    double g0 = 0.0;
    std::vector<cplx> corr;
  };
  struct Channel {
    SatelliteState sat;
    std::array<double, kCaCodeLength> chips{};
    double ref_doppler = 0.0;
    double ref_delay = 0.0;
    // (num_blocks_ × (block_samples_ + 1)) prefix sums.
    std::vector<cplx> prefix;
    // Band-limited replica: (num_blocks_ × (2H + 1)) harmonic products.
    std::vector<cplx> spectra;
  };

  [[nodiscard]] double matched_power_at(const Channel& ch, double tau) const;
  [[nodiscard]] double matched_power_table(const Table& t, double tau, bool& hit) const;
  void tabulate_matched(double half_window_m);

  double sample_rate_ = 0.0;
  double carrier_freq_ = 0.0;
  std::size_t block_samples_ = 0;
  std::size_t num_blocks_ = 0;
  bool matched_ = false;
  long harmonics_ = 0;          // H
  std::size_t grid_points_ = 0; // per code period
  double grid_step_ = 0.0;      // s
  std::vector<Channel> channels_;
  std::vector<Table> tables_;
};

/// Resolved (block length, block count) for a signal of `n_samples`.
std::pair<std::size_t, std::size_t> resolve_blocks(std::size_t n_samples,
                                                   double sample_rate,
                                                   const CafOptions& options);

}  // namespace rimdpe
