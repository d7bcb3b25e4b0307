#pragma once

#include <vector>

namespace iga {

/// Gauss-Legendre rule mapped to [0,1]; weights sum to 1.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    static const GaussRule& legendre(int n);

    int size() const noexcept { return static_cast<int>(nodes.size()); }
};

} // namespace iga
