#pragma once

#include <span>
#include <string>
#include <vector>

#include "rimdpe/signal.hpp"

namespace rimdpe {

/// Gaussian consistency constant of the median absolute deviation.
inline constexpr double kMadConsistency = 0.6745;
/// Huber tuning constant giving ~95% efficiency under Gaussian noise.
inline constexpr double kHuberTuning = 1.345;

enum class ZmnlKind { identity, huber, complex_signum, myriad };
enum class Domain { time, frequency };

struct ThresholdRule {
  enum class Kind { fixed, mad_scaled };
  Kind kind = Kind::fixed;
  // Th = scale · σ̂, σ̂ = MAD / consistency over the block's pooled
  // real and imaginary parts.
  double scale = kHuberTuning;
  double consistency = kMadConsistency;
};

struct ZmnlSpec {
  ZmnlKind kind = ZmnlKind::identity;
  double threshold = 1.0;        // Th, huber only (fixed rule)
  double linearity_param = 1.0;  // K_C, myriad only
  ThresholdRule rule;

  static ZmnlSpec identity() { return {}; }
  static ZmnlSpec huber(double threshold);
  static ZmnlSpec huber_mad(double scale = kHuberTuning);
  static ZmnlSpec complex_signum();
  static ZmnlSpec myriad(double linearity_param);

  void validate() const;
};

struct RimStage {
  Domain domain = Domain::time;
  ZmnlSpec zmnl;
};

/// An ordered chain of at most two (domain, nonlinearity) stages applied per
/// block. The empty chain is a passthrough.
struct RimConfig {
  std::vector<RimStage> chain;
  std::size_t block_size = 0;  // samples; 0 processes the whole signal at once

  void validate() const;

  /// Scheme names: "none", "td", "fd", "dd-tf", "dd-ft".
  static RimConfig scheme(const std::string& name, const ZmnlSpec& zmnl,
                          std::size_t block_size);
  [[nodiscard]] std::string label() const;
};

cplx huber_zmnl(cplx z, double threshold);
cplx complex_signum_zmnl(cplx z);
cplx myriad_zmnl(cplx z, double linearity_param);

/// Per-component scale: MAD of the pooled {Re x} ∪ {Im x} divided by 0.6745.
double estimate_component_sigma(std::span<const cplx> x);

/// Complex-envelope scale √2 · estimate_component_sigma(x).
/// Throws std::invalid_argument for an empty input.
double estimate_sigma_mad(std::span<const cplx> x);
double estimate_sigma_mad(const ComplexSignal& x);

/// Threshold the spec resolves to on this block (fixed or MAD-derived).
double resolve_threshold(const ZmnlSpec& spec, std::span<const cplx> block);

/// Elementwise nonlinearity over the whole input, thresholds resolved on it.
void apply_zmnl_inplace(std::span<cplx> x, const ZmnlSpec& spec);
ComplexSignal apply_zmnl(const ComplexSignal& x, const ZmnlSpec& spec);

/// Unitary DFT (1/√N both directions).
ComplexSignal forward_transform(const ComplexSignal& x);
ComplexSignal inverse_transform(const ComplexSignal& x);
void forward_transform_inplace(std::span<cplx> x);
void inverse_transform_inplace(std::span<cplx> x);

/// Block-wise RIM processing of `x` through `config.chain`.
ComplexSignal apply_rim(const ComplexSignal& x, const RimConfig& config);

}  // namespace rimdpe
