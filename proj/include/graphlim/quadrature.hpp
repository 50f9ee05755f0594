#pragma once

#include <vector>

namespace graphlim {

/// Gauss-Legendre rule mapped to [0,1]; weights sum to 1.
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
  int order() const { return static_cast<int>(nodes.size()); }
};

/// Rule with `order` points, exact for polynomials of degree <= 2*order-1.
/// Throws std::invalid_argument for order < 1 or order > 64.
const GaussLegendre& gauss_legendre(int order);

}  // namespace graphlim
