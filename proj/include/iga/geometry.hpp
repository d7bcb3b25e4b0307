#pragma once

#include <Eigen/Dense>
#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "iga/bspline.hpp"

namespace iga {

/// Parameter-square edges.
enum class Side : int { west = 0, east = 1, south = 2, north = 3 };

constexpr std::array<Side, 4> kAllSides{Side::west, Side::east, Side::south, Side::north};

enum class BoundaryTag { dirichlet, neumann, neumann_load };

std::string to_string(Side side);
std::string to_string(BoundaryTag tag);
Side parse_side(const std::string& name);
BoundaryTag parse_boundary_tag(const std::string& name);

/// Tensor B-spline map from (0,1)^2 onto one physical patch.
/// Control points are stored row-major: index = j * dim(0) + i.
class GeometryMap {
public:
    GeometryMap(TensorSplineSpace basis, std::vector<Eigen::Vector2d> control_points);

    /// Bilinear patch through the four corners (sw, se, nw, ne).
    static GeometryMap bilinear(const std::array<Eigen::Vector2d, 4>& corners);

    Eigen::Vector2d operator()(double xh, double yh) const;
    Eigen::Matrix2d jacobian(double xh, double yh) const;

    const TensorSplineSpace& basis() const { return basis_; }
    const std::vector<Eigen::Vector2d>& control_points() const { return cps_; }

    /// Image of a parameter corner; c in 0..3 as (sw, se, nw, ne).
    Eigen::Vector2d corner(int c) const;

    /// Control points along one side, in increasing trace parameter.
    std::vector<Eigen::Vector2d> side_control_polygon(Side side) const;

    /// Control-net diameter (bounds the patch diameter).
    double diameter() const;

private:
    TensorSplineSpace basis_;
    std::vector<Eigen::Vector2d> cps_;
};

Eigen::Matrix2d jacobian(const GeometryMap& map, const Eigen::Vector2d& xhat);

struct Interface {
    int patch_a = -1, patch_b = -1; // patch_a < patch_b
    Side side_a{}, side_b{};
    bool reversed = false; // trace of b runs against the trace of a
};

struct CornerJunction {
    Eigen::Vector2d point;
    std::vector<std::pair<int, int>> members; // (patch, parameter corner 0..3)
};

/// Multi-patch domain: geometry maps, displacement spaces, interface and
/// corner topology, boundary tags. Immutable once built.
class MultiPatchDomain {
public:
    int patch_count() const { return static_cast<int>(maps_.size()); }
    const GeometryMap& map(int k) const { return maps_[k]; }
    const TensorSplineSpace& space(int k) const { return spaces_[k]; }

    const std::vector<Interface>& interfaces() const { return interfaces_; }
    const std::vector<CornerJunction>& corners() const { return corners_; }

    /// Interface index if the side is interior, otherwise empty.
    std::optional<int> interface_at(int k, Side side) const;
    /// Boundary tag if the side is on the domain boundary, otherwise empty.
    std::optional<BoundaryTag> boundary_tag(int k, Side side) const;

    /// Patches sharing an edge with patch k.
    std::vector<int> edge_neighbors(int k) const;

    bool has_dirichlet() const;
    int max_corner_valence() const; // C1

    friend MultiPatchDomain build_topology(std::vector<GeometryMap> maps,
                                           std::vector<std::array<BoundaryTag, 4>> tags,
                                           std::vector<TensorSplineSpace> spaces);

private:
    std::vector<GeometryMap> maps_;
    std::vector<TensorSplineSpace> spaces_;
    std::vector<std::array<BoundaryTag, 4>> tags_;
    std::vector<std::array<int, 4>> interface_of_side_; // -1 on boundary sides
    std::vector<Interface> interfaces_;
    std::vector<CornerJunction> corners_;
};

/// Detects interfaces and shared corners, verifies admissibility (no
/// T-junctions) and the fully-matching condition on displacement traces.
MultiPatchDomain build_topology(std::vector<GeometryMap> maps,
                                std::vector<std::array<BoundaryTag, 4>> tags,
                                std::vector<TensorSplineSpace> spaces);

/// K unit squares in a row on (0,K)x(0,1); Dirichlet at x=0, load tag at x=K.
MultiPatchDomain make_cantilever(int patches, int degree = 1, int levels = 0);

/// kx-by-ky grid of congruent rectangles filling (0,length)x(0,1);
/// Dirichlet at x=0, load tag on the far-end sides.
MultiPatchDomain make_strip_grid(int kx, int ky, double length, int degree = 1,
                                 int levels = 0);

/// Same geometry and tags with all displacement spaces replaced.
MultiPatchDomain with_spaces(const MultiPatchDomain& domain, int degree, int levels);

struct PatchGeometryStats {
    double diameter = 0.0;       // H_k
    double sup_grad = 0.0;       // sup |grad G|
    double sup_grad_inv = 0.0;   // sup |(grad G)^-1|
    double c2 = 0.0;             // max(sup_grad / H, sup_grad_inv * H)
    double h_hat = 0.0;          // parameter grid size
    double h = 0.0;              // H_k * h_hat
    double quasi_uniformity = 0.0;
};

struct GeometryReport {
    std::vector<PatchGeometryStats> patches;
    int sample_resolution = 0;
    int c1 = 0;
    double c2 = 0.0;
    double c3 = 0.0;
};

/// Sampled geometry constants on a fixed tensor grid per patch.
GeometryReport geometry_report(const MultiPatchDomain& domain, int resolution = 33);

struct GeometryFile {
    std::vector<GeometryMap> maps;
    std::vector<std::array<BoundaryTag, 4>> tags;
};

void write_geometry(std::ostream& out, const MultiPatchDomain& domain);
GeometryFile read_geometry(std::istream& in);
MultiPatchDomain load_domain(const std::string& path, int degree, int levels);

} // namespace iga
