#pragma once

#include <Eigen/Dense>
#include <string>

#include "iga/assembly.hpp"

namespace iga {

struct KornEstimate {
    double alpha = 0.0; // in (0, 1]
    int dimension = 0;  // size of the constrained space
    std::string constraint;
    Eigen::VectorXd minimizer; // coefficients of the extremal discrete field
};

/// |eps(u)| / |u|_H1 for a field with exact gradient, by quadrature.
double korn_quotient(const MultiPatchDomain& domain, const MatrixField& gradient);

/// Discrete Korn constant on the Dirichlet-constrained conforming space:
/// alpha^2 is the smallest eigenvalue of (strain-Gram) v = theta (grad-Gram) v.
KornEstimate korn_global(const DofMap& dofmap, int dense_cap = kDenseEigCap);

/// Patch-local constant on the floating patch under the zero-mean-curl
/// constraint, translations deflated.
KornEstimate korn_local_curlfree(const GeometryMap& map, const TensorSplineSpace& space,
                                 int dense_cap = kDenseEigCap);

} // namespace iga
