#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "axsym/grid.hpp"
#include "axsym/params.hpp"

namespace axsym {

// Both operate on one realization stored as T consecutive time slices of
// `phi.size()` pixels. phi is the per-pixel AR coefficient (ARCoefficients::expand).

/// H_1 = D_1, H_t = D_t - phi o D_{t-1}.
std::vector<double> whiten(std::span<const double> series, std::span<const double> phi);

/// Inverse of whiten: D_1 = H_1, D_t = H_t + phi o D_{t-1}.
std::vector<double> color(std::span<const double> innovations, std::span<const double> phi);

/// Whitens every realization of a tensor; result has the tensor's layout.
std::vector<double> whiten_tensor(const EnsembleTensor& e, const ARCoefficients& ar);

} // namespace axsym
