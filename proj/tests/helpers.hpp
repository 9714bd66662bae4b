#pragma once

#include <cstdint>
#include <random>

#include "bmtl/fields.hpp"

namespace testing {

inline double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; }

inline bmtl::SampledField random_field(const bmtl::TorusGrid& g, int channels, std::uint64_t seed, bool real = true) {
  std::mt19937_64 rng(seed);
  bmtl::SampledField f(g, channels);
  for (bmtl::Index k = 0; k < g.size(); ++k)
    for (int c = 0; c < channels; ++c) f.values(k, c) = {uniform(rng), real ? 0.0 : uniform(rng)};
  return f;
}

inline double rel_diff(const bmtl::SampledField& a, const bmtl::SampledField& b) {
  return (a.values - b.values).norm() / std::max(b.values.norm(), 1e-300);
}

}  // namespace testing
