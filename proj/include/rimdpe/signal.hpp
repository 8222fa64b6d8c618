#pragma once

#include <complex>
#include <span>
#include <vector>

namespace rimdpe {

using cplx = std::complex<double>;

/// Uniformly sampled complex baseband sequence.
struct ComplexSignal {
  std::vector<cplx> samples;
  double sample_rate = 0.0;

  [[nodiscard]] std::size_t size() const { return samples.size(); }
  [[nodiscard]] bool empty() const { return samples.empty(); }
  [[nodiscard]] std::span<const cplx> view() const { return samples; }

  /// Throws std::invalid_argument when empty, sample_rate <= 0 or a sample is
  /// not finite.
  void validate() const;
};

/// Mean of |x[n]|².
double mean_power(std::span<const cplx> x);

}  // namespace rimdpe
