#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rimdpe/constellation.hpp"
#include "rimdpe/estimators.hpp"
#include "rimdpe/interference.hpp"
#include "rimdpe/rim.hpp"

namespace rimdpe {

enum class EstimatorKind { dpe, twostep };
enum class SweepKind { threshold, jn };
enum class InterferenceKind { none, cw, dme };

/// One estimator fed by one RIM scheme ("none", "td", "fd", "dd-tf", "dd-ft").
struct MethodSpec {
  EstimatorKind estimator = EstimatorKind::dpe;
  std::string scheme = "none";

  /// "dpe/td", "2sp/none", ...
  [[nodiscard]] std::string label() const;
  static MethodSpec parse(const std::string& label);
  bool operator==(const MethodSpec&) const = default;
};

struct SweepSpec {
  SweepKind kind = SweepKind::threshold;
  InterferenceKind interference = InterferenceKind::none;
  // Normalized Huber threshold Th/σ̂ (threshold sweeps) or JN in dB.
  std::vector<double> axis;
};

/// Receiver-side processing shared by every method of an experiment.
struct ReceiverConfig {
  ArsParams ars;            // seed replaced per trial
  GridConfig grid;
  CafOptions caf;
  double rim_block_seconds = 1e-3;
  double huber_scale = kHuberTuning;       // Th/σ̂ for JN sweeps
  double mad_consistency = kMadConsistency;
  double init_offset_m = 1e3;              // DPE/2SP start, distance from truth
  double init_clock_offset_m = 0.0;        // max |c·δt| offset of the start
};

struct ExperimentConfig {
  Scenario scenario;
  std::vector<MethodSpec> methods;
  SweepSpec sweep;
  int trials = 1;
  std::uint64_t base_seed = 1;
  std::string output_path;         // aggregate CSV
  std::string trials_output_path;  // optional per-trial CSV stream
  int workers = 1;
  ReceiverConfig receiver;
  CwSpec cw;
  DmeSpec dme;

  void validate() const;
};

struct TrialResult {
  double sweep_value = 0.0;
  std::string method;
  double position_error = 0.0;  // m
  ReceiverState kappa_hat;
  double elapsed = 0.0;  // s
  std::uint64_t seed = 0;
  int trial_index = 0;
};

struct RmseRow {
  double sweep_value = 0.0;
  std::string method;
  int trials = 0;
  double rmse_m = 0.0;
  double stderr_m = 0.0;
};

struct MonteCarloResult {
  std::vector<double> sweep_axis;
  std::vector<std::string> methods;
  // errors[sweep][method][trial], position error in meters.
  std::vector<std::vector<std::vector<double>>> errors;
  std::vector<RmseRow> rows;
};

struct LoeRowEmpirical {
  double th_over_sigma = 0.0;
  std::string method;
  double empirical_loe_db = 0.0;
  double stderr_db = 0.0;
  double theory_loe_db = 0.0;
};

struct LoeExperimentResult {
  MonteCarloResult monte_carlo;
  std::vector<LoeRowEmpirical> loe;
};

/// Per-trial seed derived from (base_seed, sweep_index, trial_index).
std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t sweep_index,
                         std::size_t trial_index);

/// Received signal of one trial: satellites + noise (+ interference scaled
/// to `jn_db`). With a front end configured, the codes are band-limited
/// before sampling and noise plus interference go through lowpass_frontend.
ComplexSignal trial_signal(const ExperimentConfig& config, double jn_db,
                           std::mt19937_64& rng);

/// RMSE and its delta-method standard error over a set of errors.
RmseRow aggregate(double sweep_value, const std::string& method,
                  const std::vector<double>& errors);

/// Runs every (sweep value, trial) with every method on the same realization.
/// Per-trial results go to `config.trials_output_path` as they complete;
/// aggregates are computed in trial order, independent of worker count.
MonteCarloResult run_monte_carlo(const ExperimentConfig& config);

/// Threshold sweep without interference; adds the non-robust baselines when
/// missing and reports paired empirical LoE next to the closed form.
/// Throws std::invalid_argument when interference is configured.
LoeExperimentResult run_loe_experiment(ExperimentConfig config);

/// JN sweep with CW or DME interference. Throws std::invalid_argument for a
/// threshold sweep or missing interference.
MonteCarloResult run_interference_sweep(const ExperimentConfig& config);

/// Paired-seed LoE of `errors_rim` against `errors_ref`:
/// 10·log10(mean e_rim² / mean e_ref²) and its delta-method standard error.
std::pair<double, double> paired_loe_db(const std::vector<double>& errors_rim,
                                        const std::vector<double>& errors_ref);

void write_rmse_csv(std::ostream& out, const std::vector<RmseRow>& rows);
void write_loe_experiment_csv(std::ostream& out,
                              const std::vector<LoeRowEmpirical>& rows);

/// Desk-scale defaults of the three experiments.
ExperimentConfig default_loe_config();
ExperimentConfig default_cw_config();
ExperimentConfig default_dme_config();

}  // namespace rimdpe
