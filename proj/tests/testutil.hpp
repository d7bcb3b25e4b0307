#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "iga/geometry.hpp"

namespace testutil {

using Eigen::Vector2d;
using iga::BoundaryTag;
using iga::GeometryMap;
using iga::MultiPatchDomain;
using iga::Side;

inline GeometryMap unit_square(double x0 = 0.0, double y0 = 0.0, double w = 1.0,
                               double h = 1.0) {
    return GeometryMap::bilinear({Vector2d(x0, y0), Vector2d(x0 + w, y0),
                                  Vector2d(x0, y0 + h), Vector2d(x0 + w, y0 + h)});
}

inline std::array<BoundaryTag, 4> all_neumann() {
    return {BoundaryTag::neumann, BoundaryTag::neumann, BoundaryTag::neumann,
            BoundaryTag::neumann};
}

// Two unit squares sharing the edge x = 1.
inline MultiPatchDomain two_squares(int degree, int levels, bool west_dirichlet) {
    std::vector<GeometryMap> maps{unit_square(0, 0), unit_square(1, 0)};
    std::vector<std::array<BoundaryTag, 4>> tags{all_neumann(), all_neumann()};
    if (west_dirichlet) tags[0][static_cast<int>(Side::west)] = BoundaryTag::dirichlet;
    tags[1][static_cast<int>(Side::east)] = BoundaryTag::neumann_load;
    std::vector<iga::TensorSplineSpace> spaces(2, iga::make_uniform_space(degree, levels));
    return iga::build_topology(std::move(maps), std::move(tags), std::move(spaces));
}

// Single unit square with Dirichlet conditions on all four sides.
inline MultiPatchDomain all_dirichlet_square(int degree, int levels) {
    std::vector<GeometryMap> maps{unit_square()};
    std::vector<std::array<BoundaryTag, 4>> tags{{BoundaryTag::dirichlet, BoundaryTag::dirichlet,
                                                  BoundaryTag::dirichlet, BoundaryTag::dirichlet}};
    std::vector<iga::TensorSplineSpace> spaces{iga::make_uniform_space(degree, levels)};
    return iga::build_topology(std::move(maps), std::move(tags), std::move(spaces));
}

// Degree (2,1) curved patch between two concentric arcs (polynomial, not an
// exact annulus).
inline GeometryMap curved_patch() {
    iga::TensorSplineSpace basis(iga::KnotVector::uniform(2, 0), iga::KnotVector::uniform(1, 0));
    std::vector<Vector2d> cps{Vector2d(1, 0), Vector2d(1, 1), Vector2d(0, 1),
                              Vector2d(2, 0), Vector2d(2, 2), Vector2d(0, 2)};
    return GeometryMap(std::move(basis), std::move(cps));
}

} // namespace testutil
