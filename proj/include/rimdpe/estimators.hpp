#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "rimdpe/caf.hpp"
#include "rimdpe/constellation.hpp"
#include "rimdpe/rim.hpp"

namespace rimdpe {

/// Accelerated Random Search schedule.
struct ArsParams {
  double initial_radius = 10e3;  // m
  double min_radius = 0.1;       // m
  double contraction = 2.0;
  int max_iterations = 5000;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class Method { dpe, dpe_rim, twostep };

struct EstimateResult {
  ReceiverState kappa_hat;
  double cost = 0.0;
  int iterations = 0;
  Method method = Method::dpe;
  RimConfig rim;
};

using CostFunction = std::function<double(const ReceiverState&)>;

/// Maximizes `cost` over position and clock bias (the bias searched in meters,
/// c·δt); velocity and drift stay at the centre's values. Candidates are drawn
/// uniformly in a 4-ball of the current radius around the best point; an
/// improvement resets the radius, a failure divides it by `contraction`, and
/// falling under `min_radius` restarts at `initial_radius`.
/// Throws std::invalid_argument when the cost at `center` is not finite.
EstimateResult ars_maximize(const CostFunction& cost, const ReceiverState& center,
                            const ArsParams& params);

/// DPE on an already cleaned signal: ARS over the DPE cost.
EstimateResult dpe_estimate_clean(const ComplexSignal& x_clean,
                                  const Scenario& scenario, const ArsParams& ars,
                                  const ReceiverState& init,
                                  const CafOptions& caf_options = {});

/// apply_rim once, then dpe_estimate_clean.
EstimateResult dpe_estimate(const ComplexSignal& x, const Scenario& scenario,
                            const RimConfig& rim, const ArsParams& ars,
                            const ReceiverState& init,
                            const CafOptions& caf_options = {});

struct AcquisitionResult {
  double tau_hat = 0.0;
  double doppler_hat = 0.0;
  double peak_power = 0.0;
  // Peak over mean grid power. No detection decision is taken.
  double peak_to_mean = 0.0;
};

/// Argmax of Σ_blocks |caf_grid|², delay refined by a parabola through the
/// peak cell and its two delay neighbours. Throws std::invalid_argument for
/// empty axes.
AcquisitionResult acquire_2sp(const ComplexSignal& x, const PrnCode& code,
                              const std::vector<double>& tau_axis,
                              const std::vector<double>& doppler_axis,
                              const CafOptions& caf_options = {});

/// Gauss–Newton solve of ρ_i = ‖p − p_i‖ + c·δt for (p, c·δt). Stops when the
/// step norm drops below 1e-4 m or after 20 iterations. Throws
/// std::invalid_argument for fewer than four satellites and std::domain_error
/// for a singular geometry.
EstimateResult ls_pvt(const std::vector<double>& pseudoranges,
                      const std::vector<Vec3>& sat_positions,
                      const ReceiverState& init);

/// Acquisition search layout for the two-step receiver.
struct GridConfig {
  int cells_per_sample = 4;       // delay resolution T_s / cells_per_sample
  double window_chips = 0.0;      // half-width around the predicted delay; 0 → full code period
  double doppler_half_span = 0.0; // Hz around the predicted Doppler
  double doppler_step = 250.0;    // Hz
  CafOptions caf;
};

/// Two-step positioning on an already cleaned signal. Delays and Dopplers are
/// predicted from `assist`, which also resolves the 1 ms code ambiguity and
/// seeds the least-squares solve.
EstimateResult twostep_estimate_clean(const ComplexSignal& x_clean,
                                      const Scenario& scenario,
                                      const GridConfig& grid,
                                      const ReceiverState& assist);

EstimateResult twostep_estimate(const ComplexSignal& x, const Scenario& scenario,
                                const RimConfig& rim, const GridConfig& grid,
                                const ReceiverState& assist);

}  // namespace rimdpe
