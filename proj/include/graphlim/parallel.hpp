#pragma once

#include <cstddef>
#include <span>

namespace graphlim {

/// Caps the OpenMP worker pool. Values < 1 leave the runtime default.
void set_thread_count(int threads);
int thread_count();

/// Sum whose rounding does not depend on the number of threads: the input is
/// cut into fixed-size blocks, each block is summed left to right, and the
/// block partials are combined by pairwise summation.
double deterministic_sum(std::span<const double> values);

inline constexpr std::size_t kReductionBlock = 1024;

}  // namespace graphlim
