#pragma once

#include <span>

#include "rimdpe/signal.hpp"

namespace rimdpe::fft {

// Thin FFTW wrappers. Plans are cached per (size, direction) and executed
// with the new-array interface, so concurrent callers only contend on the
// first plan creation for a given size.

/// Unnormalized forward DFT, X[k] = Σ x[n] e^{-j2πkn/N}. `out` may alias `in`.
void forward(std::span<const cplx> in, std::span<cplx> out);

/// Unnormalized backward DFT, x[n] = Σ X[k] e^{+j2πkn/N}.
void backward(std::span<const cplx> in, std::span<cplx> out);

}  // namespace rimdpe::fft
