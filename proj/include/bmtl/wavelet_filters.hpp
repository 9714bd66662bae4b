#pragma once

#include <span>

#include "bmtl/common.hpp"

namespace bmtl {

// Orthonormal Daubechies reconstruction low-pass filter with `order` vanishing moments (2..10).
std::span<const double> daubechies_lowpass(int order);

}  // namespace bmtl
