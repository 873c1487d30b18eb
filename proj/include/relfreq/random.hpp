#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace relfreq {

/// Default random stream. All sampling routines accept any generator that
/// produces full-range 64-bit words.
using RandomStream = std::mt19937_64;

template <class G>
concept Random64 = std::uniform_random_bit_generator<G> &&
    std::same_as<typename G::result_type, std::uint64_t> &&
    (G::min() == 0) && (G::max() == std::numeric_limits<std::uint64_t>::max());

/// Deterministic stream for (seed, stream_id); distinct ids give independent
/// streams for batches or sub-runs.
inline RandomStream make_stream(std::uint64_t seed, std::uint64_t stream_id = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32)};
  return RandomStream(seq);
}

/// Uniform double in [0, 1) with 53 random bits.
template <Random64 Rng>
double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <Random64 Rng>
std::int64_t binomial(Rng& rng, std::int64_t trials, double prob) {
  if (trials <= 0 || prob <= 0.0) return 0;
  if (prob >= 1.0) return trials;
  std::binomial_distribution<std::int64_t> dist(trials, prob);
  return dist(rng);
}

/// Lower median (element (T-1)/2 of the sorted values).
inline double lower_median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

/// ceil(x) that ignores upward rounding noise of a few ulps, so that e.g.
/// 12*ln(1/e^-1) yields 12 rather than 13.
inline std::uint64_t guarded_ceil(double x) {
  if (!(x > 0.0)) return 0;
  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, std::abs(x))) {
    return static_cast<std::uint64_t>(nearest);
  }
  return static_cast<std::uint64_t>(std::ceil(x));
}

/// T = ceil(12 ln(1/delta)), the number of independent batches whose median
/// gives error probability at most delta.
inline std::uint64_t batches_for(double delta) {
  return std::max<std::uint64_t>(1, guarded_ceil(12.0 * std::log(1.0 / delta)));
}

}  // namespace relfreq
