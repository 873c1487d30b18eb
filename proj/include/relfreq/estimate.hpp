#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace relfreq {

enum class ErrorMode { multiplicative, additive };

inline const char* to_string(ErrorMode mode) noexcept {
  return mode == ErrorMode::multiplicative ? "multiplicative" : "additive";
}

/// Result of a randomized estimator.
struct Estimate {
  double value = 0.0;
  ErrorMode error_mode = ErrorMode::multiplicative;
  std::optional<double> epsilon;  // error factor the run was sized for
  std::optional<double> delta;    // error probability the run was sized for
  std::uint64_t samples = 0;      // total trials across all batches
  double elapsed = 0.0;           // wall time, seconds
  std::vector<std::string> notes;
};

/// How batch means are drawn. `per_trial` literally simulates each trial.
/// `grouped` draws the same batch-mean distribution but samples the
/// deterministic bulk of a batch (trials whose contribution is fixed) through
/// binomial counts, simulating only the remaining trials one by one.
enum class SamplingMode { per_trial, grouped };

}  // namespace relfreq
