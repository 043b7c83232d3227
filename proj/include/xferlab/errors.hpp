#pragma once

#include <stdexcept>
#include <string>

namespace xferlab {

/// Operands live on different carriers (state counts or degree bounds differ).
struct carrier_mismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A circle operation would leave the configured Fourier truncation.
struct degree_overflow : std::domain_error {
  using std::domain_error::domain_error;
};

/// The operation needs an endomorphism r and the carrier has none.
struct missing_endomorphism : std::logic_error {
  using std::logic_error::logic_error;
};

/// Positivity or unitality (R1 = 1) of a transfer operator fails.
struct not_markov : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A kernel fails its normalization against the quadrature measure.
struct normalization_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A measure assigns zero mass where the operation divides by it.
struct zero_mass : std::domain_error {
  using std::domain_error::domain_error;
};

struct not_harmonic : std::domain_error {
  using std::domain_error::domain_error;
};

struct depth_cap_exceeded : std::length_error {
  using std::length_error::length_error;
};

/// A black-box path function was given without a sample ensemble.
struct needs_samples : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct length_underflow : std::length_error {
  using std::length_error::length_error;
};

struct divergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct singular_filter : std::domain_error {
  using std::domain_error::domain_error;
};

struct graph_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace xferlab
