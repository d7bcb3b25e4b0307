#include "iga/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "iga/errors.hpp"
#include "iga/quadrature.hpp"

namespace iga {

namespace {

constexpr double kDegenerateJacobian = 1e-14;

int trace_direction(Side side) {
    return (side == Side::west || side == Side::east) ? 1 : 0;
}

std::vector<double> merge_breakpoints(const KnotVector& a, const KnotVector& b) {
    std::vector<double> out = a.breakpoints();
    for (double v : b.breakpoints()) out.push_back(v);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Cached 1D basis data at the Gauss points of every span.
struct DirectionCache {
    std::vector<double> breaks;
    int q = 0;
    // [span * q + point]
    std::vector<double> coords, base_weights;
    std::vector<int> disp_first, geo_first;
    std::vector<double> disp_v, disp_d, geo_v, geo_d; // stride degree+1 per point

    DirectionCache(const KnotVector& disp, const KnotVector& geo, int points) {
        breaks = merge_breakpoints(disp, geo);
        q = points;
        const GaussRule& rule = GaussRule::legendre(points);
        const int spans = static_cast<int>(breaks.size()) - 1;
        const int pd = disp.degree() + 1, pg = geo.degree() + 1;
        coords.resize(spans * q);
        base_weights.resize(spans * q);
        disp_first.resize(spans * q);
        geo_first.resize(spans * q);
        disp_v.resize(spans * q * pd);
        disp_d.resize(spans * q * pd);
        geo_v.resize(spans * q * pg);
        geo_d.resize(spans * q * pg);
        for (int s = 0; s < spans; ++s) {
            const double lo = breaks[s], hi = breaks[s + 1];
            for (int i = 0; i < q; ++i) {
                const int idx = s * q + i;
                const double x = lo + (hi - lo) * rule.nodes[i];
                coords[idx] = x;
                base_weights[idx] = (hi - lo) * rule.weights[i];
                disp.eval_with_derivative(x, disp_first[idx],
                                          {&disp_v[idx * pd], static_cast<std::size_t>(pd)},
                                          {&disp_d[idx * pd], static_cast<std::size_t>(pd)});
                geo.eval_with_derivative(x, geo_first[idx],
                                         {&geo_v[idx * pg], static_cast<std::size_t>(pg)},
                                         {&geo_d[idx * pg], static_cast<std::size_t>(pg)});
            }
        }
    }

    int spans() const { return static_cast<int>(breaks.size()) - 1; }
};

struct GeometrySample {
    Eigen::Vector2d point;
    Eigen::Matrix2d jacobian;
    double det = 0.0;
};

GeometrySample geometry_at(const GeometryMap& map, const DirectionCache& cx,
                           const DirectionCache& cy, int ix, int iy) {
    const int pg_x = map.basis().direction(0).degree() + 1;
    const int pg_y = map.basis().direction(1).degree() + 1;
    const int nx = map.basis().dim(0);
    GeometrySample s;
    s.point.setZero();
    s.jacobian.setZero();
    for (int j = 0; j < pg_y; ++j) {
        for (int i = 0; i < pg_x; ++i) {
            const double v = cx.geo_v[ix * pg_x + i] * cy.geo_v[iy * pg_y + j];
            const double du = cx.geo_d[ix * pg_x + i] * cy.geo_v[iy * pg_y + j];
            const double dv = cx.geo_v[ix * pg_x + i] * cy.geo_d[iy * pg_y + j];
            const Eigen::Vector2d& cp =
                map.control_points()[(cy.geo_first[iy] + j) * nx + (cx.geo_first[ix] + i)];
            s.point += v * cp;
            s.jacobian.col(0) += du * cp;
            s.jacobian.col(1) += dv * cp;
        }
    }
    s.det = s.jacobian.determinant();
    return s;
}

// kernel(ga, gb) gives the 2x2 component block for one pair of scalar
// gradients (physical).
using BlockKernel = std::function<Eigen::Matrix2d(const Eigen::Vector2d&, const Eigen::Vector2d&)>;

Eigen::Matrix2d elasticity_block(double mu, double lambda, const Eigen::Vector2d& ga,
                                 const Eigen::Vector2d& gb) {
    const double dot = ga.dot(gb);
    Eigen::Matrix2d block;
    for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d)
            block(c, d) = mu * ((c == d ? dot : 0.0) + ga(d) * gb(c)) + lambda * ga(c) * gb(d);
    return block;
}

Eigen::Matrix2d grad_block(const Eigen::Vector2d& ga, const Eigen::Vector2d& gb) {
    return ga.dot(gb) * Eigen::Matrix2d::Identity();
}

// Runs the tensor Gauss loop over one patch and hands every element matrix
// entry (full local vector DOF indexing) to the sink.
void assemble_patch_matrix(const MultiPatchDomain& domain, int k, const BlockKernel& kernel,
                           const std::function<void(int, int, double)>& sink) {
    const GeometryMap& map = domain.map(k);
    const TensorSplineSpace& space = domain.space(k);
    const int p = std::max(space.direction(0).degree(), space.direction(1).degree());
    const DirectionCache cx(space.direction(0), map.basis().direction(0), p + 1);
    const DirectionCache cy(space.direction(1), map.basis().direction(1), p + 1);
    const int pd_x = space.direction(0).degree() + 1;
    const int pd_y = space.direction(1).degree() + 1;
    const int nx = space.dim(0);
    const int m = pd_x * pd_y; // scalars per element

    Eigen::MatrixXd element(2 * m, 2 * m);
    std::vector<Eigen::Vector2d> grads(m);
    std::vector<int> scalars(m);
    double orientation = 0.0;

    for (int sy = 0; sy < cy.spans(); ++sy) {
        for (int sx = 0; sx < cx.spans(); ++sx) {
            element.setZero();
            for (int qy = 0; qy < cy.q; ++qy) {
                for (int qx = 0; qx < cx.q; ++qx) {
                    const int ix = sx * cx.q + qx, iy = sy * cy.q + qy;
                    const GeometrySample g = geometry_at(map, cx, cy, ix, iy);
                    if (std::abs(g.det) < kDegenerateJacobian)
                        throw AssemblyError("degenerate geometry Jacobian on patch " +
                                            std::to_string(k));
                    if (orientation == 0.0) orientation = g.det > 0 ? 1.0 : -1.0;
                    if (g.det * orientation < 0.0)
                        throw AssemblyError("geometry Jacobian changes sign on patch " +
                                            std::to_string(k));
                    const Eigen::Matrix2d jinv_t = g.jacobian.inverse().transpose();
                    const double w =
                        cx.base_weights[ix] * cy.base_weights[iy] * std::abs(g.det);
                    for (int j = 0; j < pd_y; ++j) {
                        for (int i = 0; i < pd_x; ++i) {
                            const int a = j * pd_x + i;
                            const Eigen::Vector2d ghat(
                                cx.disp_d[ix * pd_x + i] * cy.disp_v[iy * pd_y + j],
                                cx.disp_v[ix * pd_x + i] * cy.disp_d[iy * pd_y + j]);
                            grads[a] = jinv_t * ghat;
                            if (qx == 0 && qy == 0)
                                scalars[a] =
                                    (cy.disp_first[iy] + j) * nx + (cx.disp_first[ix] + i);
                        }
                    }
                    for (int a = 0; a < m; ++a) {
                        for (int b = 0; b < m; ++b) {
                            const Eigen::Matrix2d block = kernel(grads[a], grads[b]);
                            element.block<2, 2>(2 * a, 2 * b) += w * block;
                        }
                    }
                }
            }
            for (int a = 0; a < m; ++a)
                for (int b = 0; b < m; ++b)
                    for (int c = 0; c < 2; ++c)
                        for (int d = 0; d < 2; ++d)
                            sink(DofMap::local_dof(scalars[a], c), DofMap::local_dof(scalars[b], d),
                                 element(2 * a + c, 2 * b + d));
        }
    }
}

Eigen::Vector2d param_outward_normal(Side side) {
    switch (side) {
        case Side::west: return {-1.0, 0.0};
        case Side::east: return {1.0, 0.0};
        case Side::south: return {0.0, -1.0};
        case Side::north: return {0.0, 1.0};
    }
    return {};
}

// Integrates g against the trace basis functions of one side with the
// physical arc-length measure; sink receives (local vector DOF, value).
void assemble_side_load(const MultiPatchDomain& domain, int k, Side side, const TractionField& g,
                        const std::function<void(int, double)>& sink) {
    if (!g) return;
    const GeometryMap& map = domain.map(k);
    const TensorSplineSpace& space = domain.space(k);
    const int dir = trace_direction(side);
    const KnotVector& kt = space.direction(dir);
    const KnotVector& kg = map.basis().direction(dir);
    const int p = std::max(space.direction(0).degree(), space.direction(1).degree());
    const GaussRule& rule = GaussRule::legendre(p + 1);
    const std::vector<double> breaks = merge_breakpoints(kt, kg);

    const double fixed = (side == Side::east || side == Side::north) ? 1.0 : 0.0;
    const int nx = space.dim(0);
    const Eigen::Vector2d nhat = param_outward_normal(side);

    for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
        const double lo = breaks[s], hi = breaks[s + 1];
        for (int qi = 0; qi < rule.size(); ++qi) {
            const double t = lo + (hi - lo) * rule.nodes[qi];
            const double xh = dir == 0 ? t : fixed;
            const double yh = dir == 0 ? fixed : t;
            const Eigen::Matrix2d J = map.jacobian(xh, yh);
            const double arc = J.col(dir).norm();
            Eigen::Vector2d normal = J.inverse().transpose() * nhat;
            const double nn = normal.norm();
            if (nn < kDegenerateJacobian || arc < kDegenerateJacobian)
                throw AssemblyError("degenerate boundary Jacobian on patch " + std::to_string(k));
            normal /= nn;
            const Eigen::Vector2d traction = g(map(xh, yh), normal);
            const double w = (hi - lo) * rule.weights[qi] * arc;

            const auto [fx, vx] = space.direction(0).eval_basis(xh, 0);
            const auto [fy, vy] = space.direction(1).eval_basis(yh, 0);
            for (std::size_t j = 0; j < vy.size(); ++j) {
                for (std::size_t i = 0; i < vx.size(); ++i) {
                    const double value = vx[i] * vy[j];
                    if (value == 0.0) continue;
                    const int scalar = (fy + static_cast<int>(j)) * nx + fx + static_cast<int>(i);
                    for (int c = 0; c < 2; ++c)
                        sink(DofMap::local_dof(scalar, c), w * value * traction(c));
                }
            }
        }
    }
}

void assemble_body_load(const MultiPatchDomain& domain, int k, const VectorField& f,
                        const std::function<void(int, double)>& sink) {
    if (!f) return;
    const GeometryMap& map = domain.map(k);
    const TensorSplineSpace& space = domain.space(k);
    const int p = std::max(space.direction(0).degree(), space.direction(1).degree());
    const DirectionCache cx(space.direction(0), map.basis().direction(0), p + 1);
    const DirectionCache cy(space.direction(1), map.basis().direction(1), p + 1);
    const int pd_x = space.direction(0).degree() + 1;
    const int pd_y = space.direction(1).degree() + 1;
    const int nx = space.dim(0);

    for (int sy = 0; sy < cy.spans(); ++sy) {
        for (int sx = 0; sx < cx.spans(); ++sx) {
            for (int qy = 0; qy < cy.q; ++qy) {
                for (int qx = 0; qx < cx.q; ++qx) {
                    const int ix = sx * cx.q + qx, iy = sy * cy.q + qy;
                    const GeometrySample g = geometry_at(map, cx, cy, ix, iy);
                    const double w =
                        cx.base_weights[ix] * cy.base_weights[iy] * std::abs(g.det);
                    const Eigen::Vector2d force = f(g.point);
                    for (int j = 0; j < pd_y; ++j) {
                        for (int i = 0; i < pd_x; ++i) {
                            const double v =
                                cx.disp_v[ix * pd_x + i] * cy.disp_v[iy * pd_y + j];
                            const int scalar =
                                (cy.disp_first[iy] + j) * nx + (cx.disp_first[ix] + i);
                            for (int c = 0; c < 2; ++c)
                                sink(DofMap::local_dof(scalar, c), w * v * force(c));
                        }
                    }
                }
            }
        }
    }
}

void assemble_patch_load(const MultiPatchDomain& domain, int k, const ProblemData& data,
                         const std::function<void(int, double)>& sink) {
    assemble_body_load(domain, k, data.body_force, sink);
    for (Side side : kAllSides) {
        const auto tag = domain.boundary_tag(k, side);
        if (!tag) continue;
        if (*tag == BoundaryTag::neumann) assemble_side_load(domain, k, side, data.neumann, sink);
        if (*tag == BoundaryTag::neumann_load)
            assemble_side_load(domain, k, side, data.neumann_load, sink);
    }
}

} // namespace

ProblemData ProblemData::end_load(double g0) {
    ProblemData data;
    data.neumann_load = [g0](const Eigen::Vector2d&, const Eigen::Vector2d&) {
        return Eigen::Vector2d(0.0, -g0);
    };
    return data;
}

int DofMap::side_scalar(int nx, int ny, Side side, int t) {
    switch (side) {
        case Side::west: return t * nx;
        case Side::east: return t * nx + nx - 1;
        case Side::south: return t;
        case Side::north: return (ny - 1) * nx + t;
    }
    return -1;
}

int DofMap::corner_scalar(int nx, int ny, int corner) {
    switch (corner) {
        case 0: return 0;
        case 1: return nx - 1;
        case 2: return (ny - 1) * nx;
        case 3: return nx * ny - 1;
    }
    return -1;
}

DofMap::DofMap(const MultiPatchDomain& domain) : domain_(&domain) {
    const int K = domain.patch_count();
    scalar_dims_.resize(K);
    classes_.resize(K);
    class_index_.resize(K);
    n_gamma_.assign(K, 0);
    n_interior_.assign(K, 0);
    global_scalar_.resize(K);
    scalar_multiplicity_.resize(K);

    std::vector<int> offset(K + 1, 0);
    for (int k = 0; k < K; ++k) {
        scalar_dims_[k] = {domain.space(k).dim(0), domain.space(k).dim(1)};
        offset[k + 1] = offset[k] + scalar_count(k);
    }

    for (int k = 0; k < K; ++k) {
        const auto [nx, ny] = scalar_dims_[k];
        std::vector<bool> dirichlet(scalar_count(k), false);
        std::vector<bool> gamma(scalar_count(k), false);
        for (Side side : kAllSides) {
            const int count = (trace_direction(side) == 0) ? nx : ny;
            if (domain.boundary_tag(k, side) == BoundaryTag::dirichlet)
                for (int t = 0; t < count; ++t) dirichlet[side_scalar(nx, ny, side, t)] = true;
            if (domain.interface_at(k, side))
                for (int t = 0; t < count; ++t) gamma[side_scalar(nx, ny, side, t)] = true;
        }
        // shared-corner coefficients belong to the interface block even when
        // the contact is a single corner
        for (const CornerJunction& corner : domain.corners())
            for (const auto& [patch, c] : corner.members)
                if (patch == k) gamma[corner_scalar(nx, ny, c)] = true;
        classes_[k].resize(scalar_count(k));
        for (int s = 0; s < scalar_count(k); ++s) {
            classes_[k][s] = dirichlet[s] ? DofClass::eliminated
                             : gamma[s]   ? DofClass::gamma
                                          : DofClass::interior;
        }
    }

    // matched trace pairs per interface
    pairs_.resize(domain.interfaces().size());
    for (std::size_t idx = 0; idx < domain.interfaces().size(); ++idx) {
        const Interface& it = domain.interfaces()[idx];
        const auto [nxa, nya] = scalar_dims_[it.patch_a];
        const auto [nxb, nyb] = scalar_dims_[it.patch_b];
        const int m = (trace_direction(it.side_a) == 0) ? nxa : nya;
        for (int t = 0; t < m; ++t) {
            const int tb = it.reversed ? m - 1 - t : t;
            pairs_[idx].push_back({side_scalar(nxa, nya, it.side_a, t),
                                   side_scalar(nxb, nyb, it.side_b, tb),
                                   t == 0 || t == m - 1});
        }
    }

    // conforming identification across interfaces
    std::vector<int> parent(offset[K]);
    std::iota(parent.begin(), parent.end(), 0);
    const std::function<int(int)> find = [&](int i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t idx = 0; idx < pairs_.size(); ++idx) {
        const Interface& it = domain.interfaces()[idx];
        for (const TracePair& pair : pairs_[idx])
            parent[find(offset[it.patch_a] + pair.scalar_a)] =
                find(offset[it.patch_b] + pair.scalar_b);
    }

    std::vector<int> class_size(offset[K], 0);
    std::vector<bool> class_eliminated(offset[K], false);
    for (int k = 0; k < K; ++k) {
        for (int s = 0; s < scalar_count(k); ++s) {
            const int root = find(offset[k] + s);
            ++class_size[root];
            if (classes_[k][s] == DofClass::eliminated) class_eliminated[root] = true;
        }
    }

    // a class touching the Dirichlet boundary is eliminated on every patch
    for (int k = 0; k < K; ++k)
        for (int s = 0; s < scalar_count(k); ++s)
            if (class_eliminated[find(offset[k] + s)]) classes_[k][s] = DofClass::eliminated;

    for (int k = 0; k < K; ++k) {
        class_index_[k].assign(scalar_count(k), -1);
        for (int s = 0; s < scalar_count(k); ++s) {
            if (classes_[k][s] == DofClass::gamma) {
                class_index_[k][s] = n_gamma_[k];
                n_gamma_[k] += 2;
            } else if (classes_[k][s] == DofClass::interior) {
                class_index_[k][s] = n_interior_[k];
                n_interior_[k] += 2;
            }
        }
    }

    std::vector<int> global_of_root(offset[K], -1);
    int next = 0;
    for (int k = 0; k < K; ++k) {
        global_scalar_[k].assign(scalar_count(k), -1);
        scalar_multiplicity_[k].assign(scalar_count(k), 1);
        for (int s = 0; s < scalar_count(k); ++s) {
            const int root = find(offset[k] + s);
            scalar_multiplicity_[k][s] = class_size[root];
            if (class_eliminated[root]) continue;
            if (global_of_root[root] < 0) global_of_root[root] = next++;
            global_scalar_[k][s] = global_of_root[root];
        }
    }
    global_dim_ = 2 * next;
}

int DofMap::gamma_index(int k, int scalar, int component) const {
    if (classes_[k][scalar] != DofClass::gamma) return -1;
    return class_index_[k][scalar] + component;
}

int DofMap::interior_index(int k, int scalar, int component) const {
    if (classes_[k][scalar] != DofClass::interior) return -1;
    return class_index_[k][scalar] + component;
}

int DofMap::global_index(int k, int scalar, int component) const {
    const int g = global_scalar_[k][scalar];
    return g < 0 ? -1 : 2 * g + component;
}

int DofMap::multiplicity(int k, int scalar) const { return scalar_multiplicity_[k][scalar]; }

LocalSystem assemble_local(const DofMap& dofmap, int k, const Material& material,
                           const ProblemData& data) {
    if (material.mu <= 0.0 || material.lambda < 0.0)
        throw AssemblyError("material needs mu > 0 and lambda >= 0");
    const MultiPatchDomain& domain = dofmap.domain();
    const int ng = dofmap.n_gamma(k), ni = dofmap.n_interior(k);
    std::vector<Eigen::Triplet<double>> gg, gi, ig, ii;

    const auto sink = [&](int a, int b, double value) {
        const int sa = a / 2, ca = a % 2, sb = b / 2, cb = b % 2;
        const DofClass cls_a = dofmap.dof_class(k, sa), cls_b = dofmap.dof_class(k, sb);
        if (cls_a == DofClass::eliminated || cls_b == DofClass::eliminated) return;
        if (cls_a == DofClass::gamma && cls_b == DofClass::gamma)
            gg.emplace_back(dofmap.gamma_index(k, sa, ca), dofmap.gamma_index(k, sb, cb), value);
        else if (cls_a == DofClass::gamma)
            gi.emplace_back(dofmap.gamma_index(k, sa, ca), dofmap.interior_index(k, sb, cb), value);
        else if (cls_b == DofClass::gamma)
            ig.emplace_back(dofmap.interior_index(k, sa, ca), dofmap.gamma_index(k, sb, cb), value);
        else
            ii.emplace_back(dofmap.interior_index(k, sa, ca), dofmap.interior_index(k, sb, cb),
                            value);
    };
    const double mu = material.mu, lambda = material.lambda;
    assemble_patch_matrix(domain, k,
                          [mu, lambda](const Eigen::Vector2d& ga, const Eigen::Vector2d& gb) {
                              return elasticity_block(mu, lambda, ga, gb);
                          },
                          sink);

    LocalSystem local;
    local.a_gg.resize(ng, ng);
    local.a_gi.resize(ng, ni);
    local.a_ig.resize(ni, ng);
    local.a_ii.resize(ni, ni);
    local.a_gg.setFromTriplets(gg.begin(), gg.end());
    local.a_gi.setFromTriplets(gi.begin(), gi.end());
    local.a_ig.setFromTriplets(ig.begin(), ig.end());
    local.a_ii.setFromTriplets(ii.begin(), ii.end());

    local.f_gamma = Eigen::VectorXd::Zero(ng);
    local.f_interior = Eigen::VectorXd::Zero(ni);
    assemble_patch_load(domain, k, data, [&](int dof, double value) {
        const int s = dof / 2, c = dof % 2;
        switch (dofmap.dof_class(k, s)) {
            case DofClass::gamma: local.f_gamma(dofmap.gamma_index(k, s, c)) += value; break;
            case DofClass::interior:
                local.f_interior(dofmap.interior_index(k, s, c)) += value;
                break;
            case DofClass::eliminated: break;
        }
    });
    return local;
}

namespace {

SparseMatrix assemble_global_matrix(const DofMap& dofmap, const BlockKernel& kernel) {
    const MultiPatchDomain& domain = dofmap.domain();
    const int n = dofmap.global_dim();
    std::vector<Eigen::Triplet<double>> triplets;
    for (int k = 0; k < domain.patch_count(); ++k) {
        assemble_patch_matrix(domain, k, kernel, [&](int a, int b, double value) {
            const int ga = dofmap.global_index(k, a / 2, a % 2);
            const int gb = dofmap.global_index(k, b / 2, b % 2);
            if (ga >= 0 && gb >= 0) triplets.emplace_back(ga, gb, value);
        });
    }
    SparseMatrix a(n, n);
    a.setFromTriplets(triplets.begin(), triplets.end());
    return a;
}

} // namespace

std::pair<SparseMatrix, Eigen::VectorXd> assemble_global(const DofMap& dofmap,
                                                         const Material& material,
                                                         const ProblemData& data) {
    const MultiPatchDomain& domain = dofmap.domain();
    if (!domain.has_dirichlet())
        throw SingularSystemError("global system needs a nonempty Dirichlet boundary");
    if (material.mu <= 0.0 || material.lambda < 0.0)
        throw AssemblyError("material needs mu > 0 and lambda >= 0");
    const double mu = material.mu, lambda = material.lambda;
    SparseMatrix a = assemble_global_matrix(
        dofmap, [mu, lambda](const Eigen::Vector2d& ga, const Eigen::Vector2d& gb) {
            return elasticity_block(mu, lambda, ga, gb);
        });
    Eigen::VectorXd f = Eigen::VectorXd::Zero(dofmap.global_dim());
    for (int k = 0; k < domain.patch_count(); ++k) {
        assemble_patch_load(domain, k, data, [&](int dof, double value) {
            const int g = dofmap.global_index(k, dof / 2, dof % 2);
            if (g >= 0) f(g) += value;
        });
    }
    return {std::move(a), std::move(f)};
}

SparseMatrix assemble_grad_gram(const DofMap& dofmap) {
    return assemble_global_matrix(dofmap, grad_block);
}

SparseMatrix assemble_strain_gram(const DofMap& dofmap) {
    return assemble_global_matrix(dofmap,
                                  [](const Eigen::Vector2d& ga, const Eigen::Vector2d& gb) {
                                      return elasticity_block(0.5, 0.0, ga, gb);
                                  });
}

namespace {

SparseMatrix patch_gram(const MultiPatchDomain& domain, int k, const BlockKernel& kernel) {
    const int n = 2 * domain.space(k).total_dim();
    std::vector<Eigen::Triplet<double>> triplets;
    assemble_patch_matrix(domain, k, kernel, [&](int a, int b, double value) {
        triplets.emplace_back(a, b, value);
    });
    SparseMatrix out(n, n);
    out.setFromTriplets(triplets.begin(), triplets.end());
    return out;
}

} // namespace

SparseMatrix patch_strain_gram(const MultiPatchDomain& domain, int k) {
    return patch_gram(domain, k, [](const Eigen::Vector2d& ga, const Eigen::Vector2d& gb) {
        return elasticity_block(0.5, 0.0, ga, gb);
    });
}

SparseMatrix patch_grad_gram(const MultiPatchDomain& domain, int k) {
    return patch_gram(domain, k, grad_block);
}

Eigen::VectorXd patch_curl_functional(const MultiPatchDomain& domain, int k) {
    const GeometryMap& map = domain.map(k);
    const TensorSplineSpace& space = domain.space(k);
    const int p = std::max(space.direction(0).degree(), space.direction(1).degree());
    const DirectionCache cx(space.direction(0), map.basis().direction(0), p + 1);
    const DirectionCache cy(space.direction(1), map.basis().direction(1), p + 1);
    const int pd_x = space.direction(0).degree() + 1;
    const int pd_y = space.direction(1).degree() + 1;
    const int nx = space.dim(0);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * space.total_dim());

    for (int sy = 0; sy < cy.spans(); ++sy) {
        for (int sx = 0; sx < cx.spans(); ++sx) {
            for (int qy = 0; qy < cy.q; ++qy) {
                for (int qx = 0; qx < cx.q; ++qx) {
                    const int ix = sx * cx.q + qx, iy = sy * cy.q + qy;
                    const GeometrySample g = geometry_at(map, cx, cy, ix, iy);
                    const Eigen::Matrix2d jinv_t = g.jacobian.inverse().transpose();
                    const double w =
                        cx.base_weights[ix] * cy.base_weights[iy] * std::abs(g.det);
                    for (int j = 0; j < pd_y; ++j) {
                        for (int i = 0; i < pd_x; ++i) {
                            const Eigen::Vector2d ghat(
                                cx.disp_d[ix * pd_x + i] * cy.disp_v[iy * pd_y + j],
                                cx.disp_v[ix * pd_x + i] * cy.disp_d[iy * pd_y + j]);
                            const Eigen::Vector2d grad = jinv_t * ghat;
                            const int scalar =
                                (cy.disp_first[iy] + j) * nx + (cx.disp_first[ix] + i);
                            // curl(phi e1) = -d phi/dy, curl(phi e2) = d phi/dx
                            out(DofMap::local_dof(scalar, 0)) -= w * grad(1);
                            out(DofMap::local_dof(scalar, 1)) += w * grad(0);
                        }
                    }
                }
            }
        }
    }
    return out;
}

PatchwiseField zero_field(const DofMap& dofmap) {
    PatchwiseField field;
    for (int k = 0; k < dofmap.patch_count(); ++k)
        field.coeffs.push_back(Eigen::VectorXd::Zero(2 * dofmap.scalar_count(k)));
    return field;
}

PatchwiseField field_from_global(const DofMap& dofmap, const Eigen::VectorXd& u) {
    PatchwiseField field = zero_field(dofmap);
    for (int k = 0; k < dofmap.patch_count(); ++k)
        for (int s = 0; s < dofmap.scalar_count(k); ++s)
            for (int c = 0; c < 2; ++c) {
                const int g = dofmap.global_index(k, s, c);
                if (g >= 0) field.coeffs[k](DofMap::local_dof(s, c)) = u(g);
            }
    return field;
}

Eigen::Vector2d eval_field(const MultiPatchDomain& domain, const PatchwiseField& field, int k,
                           double xh, double yh) {
    const TensorSplineSpace& space = domain.space(k);
    const auto [fx, vx] = space.direction(0).eval_basis(xh, 0);
    const auto [fy, vy] = space.direction(1).eval_basis(yh, 0);
    const int nx = space.dim(0);
    Eigen::Vector2d out = Eigen::Vector2d::Zero();
    for (std::size_t j = 0; j < vy.size(); ++j)
        for (std::size_t i = 0; i < vx.size(); ++i) {
            const int s = (fy + static_cast<int>(j)) * nx + fx + static_cast<int>(i);
            const double v = vx[i] * vy[j];
            out(0) += v * field.coeffs[k](2 * s);
            out(1) += v * field.coeffs[k](2 * s + 1);
        }
    return out;
}

Eigen::Matrix2d eval_field_gradient(const MultiPatchDomain& domain, const PatchwiseField& field,
                                    int k, double xh, double yh) {
    const TensorSplineSpace& space = domain.space(k);
    const int px = space.direction(0).degree(), py = space.direction(1).degree();
    std::vector<double> vx(px + 1), dx(px + 1), vy(py + 1), dy(py + 1);
    int fx = 0, fy = 0;
    space.direction(0).eval_with_derivative(xh, fx, vx, dx);
    space.direction(1).eval_with_derivative(yh, fy, vy, dy);
    const int nx = space.dim(0);
    Eigen::Matrix2d ghat = Eigen::Matrix2d::Zero(); // parameter gradient per component
    for (int j = 0; j <= py; ++j)
        for (int i = 0; i <= px; ++i) {
            const int s = (fy + j) * nx + fx + i;
            const double du = dx[i] * vy[j], dv = vx[i] * dy[j];
            ghat(0, 0) += du * field.coeffs[k](2 * s);
            ghat(0, 1) += dv * field.coeffs[k](2 * s);
            ghat(1, 0) += du * field.coeffs[k](2 * s + 1);
            ghat(1, 1) += dv * field.coeffs[k](2 * s + 1);
        }
    const Eigen::Matrix2d jinv = domain.map(k).jacobian(xh, yh).inverse();
    return ghat * jinv;
}

namespace {

double h1_seminorm_error_impl(const MultiPatchDomain& domain, const PatchwiseField& field,
                              const MatrixField& exact_gradient) {
    double total = 0.0;
    for (int k = 0; k < domain.patch_count(); ++k) {
        const TensorSplineSpace& space = domain.space(k);
        const GeometryMap& map = domain.map(k);
        const int p = std::max(space.direction(0).degree(), space.direction(1).degree());
        const GaussRule& rule = GaussRule::legendre(p + 2);
        const std::vector<double> bx =
            merge_breakpoints(space.direction(0), map.basis().direction(0));
        const std::vector<double> by =
            merge_breakpoints(space.direction(1), map.basis().direction(1));
        for (std::size_t sy = 0; sy + 1 < by.size(); ++sy) {
            for (std::size_t sx = 0; sx + 1 < bx.size(); ++sx) {
                for (int qy = 0; qy < rule.size(); ++qy) {
                    for (int qx = 0; qx < rule.size(); ++qx) {
                        const double xh = bx[sx] + (bx[sx + 1] - bx[sx]) * rule.nodes[qx];
                        const double yh = by[sy] + (by[sy + 1] - by[sy]) * rule.nodes[qy];
                        const Eigen::Matrix2d J = map.jacobian(xh, yh);
                        const double w = (bx[sx + 1] - bx[sx]) * (by[sy + 1] - by[sy]) *
                                         rule.weights[qx] * rule.weights[qy] *
                                         std::abs(J.determinant());
                        Eigen::Matrix2d diff = eval_field_gradient(domain, field, k, xh, yh);
                        if (exact_gradient) diff -= exact_gradient(map(xh, yh));
                        total += w * diff.squaredNorm();
                    }
                }
            }
        }
    }
    return std::sqrt(total);
}

} // namespace

double h1_seminorm_error(const MultiPatchDomain& domain, const PatchwiseField& field,
                         const MatrixField& exact_gradient) {
    return h1_seminorm_error_impl(domain, field, exact_gradient);
}

double h1_seminorm(const MultiPatchDomain& domain, const PatchwiseField& field) {
    return h1_seminorm_error_impl(domain, field, nullptr);
}

PatchwiseField interpolate(const MultiPatchDomain& domain, const VectorField& u) {
    PatchwiseField field;
    for (int k = 0; k < domain.patch_count(); ++k) {
        const TensorSplineSpace& space = domain.space(k);
        const int nx = space.dim(0), ny = space.dim(1);
        const auto gx = space.direction(0).greville();
        const auto gy = space.direction(1).greville();
        Eigen::MatrixXd bx = Eigen::MatrixXd::Zero(nx, nx), by = Eigen::MatrixXd::Zero(ny, ny);
        for (int i = 0; i < nx; ++i) {
            const auto [first, vals] = space.direction(0).eval_basis(gx[i], 0);
            for (std::size_t j = 0; j < vals.size(); ++j) bx(i, first + j) = vals[j];
        }
        for (int i = 0; i < ny; ++i) {
            const auto [first, vals] = space.direction(1).eval_basis(gy[i], 0);
            for (std::size_t j = 0; j < vals.size(); ++j) by(i, first + j) = vals[j];
        }
        const Eigen::PartialPivLU<Eigen::MatrixXd> lux(bx), luy(by);
        Eigen::VectorXd coeffs(2 * nx * ny);
        for (int c = 0; c < 2; ++c) {
            Eigen::MatrixXd values(nx, ny);
            for (int i = 0; i < nx; ++i)
                for (int j = 0; j < ny; ++j)
                    values(i, j) = u(domain.map(k)(gx[i], gy[j]))(c);
            // tensor collocation: B_x C B_y^T = V
            const Eigen::MatrixXd tmp = lux.solve(values);
            const Eigen::MatrixXd cmat = luy.solve(tmp.transpose()).transpose();
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i < nx; ++i)
                    coeffs(DofMap::local_dof(j * nx + i, c)) = cmat(i, j);
        }
        field.coeffs.push_back(std::move(coeffs));
    }
    return field;
}

PatchwiseField solve_monolithic(const DofMap& dofmap, const Material& material,
                                const ProblemData& data) {
    auto [a, f] = assemble_global(dofmap, material, data);
    const Factorization factor(a, "monolithic system");
    return field_from_global(dofmap, factor.solve(f));
}

ProblemData ManufacturedSolution::data(const Material& material) const {
    ProblemData out;
    const double mu = material.mu, lambda = material.lambda;
    const auto s1 = second_u1, s2 = second_u2;
    out.body_force = [mu, lambda, s1, s2](const Eigen::Vector2d& x) {
        const Eigen::Vector3d d1 = s1(x); // (u1xx, u1xy, u1yy)
        const Eigen::Vector3d d2 = s2(x);
        const double div_eps_1 = d1(0) + 0.5 * (d1(2) + d2(1));
        const double div_eps_2 = 0.5 * (d2(0) + d1(1)) + d2(2);
        const double grad_div_1 = d1(0) + d2(1);
        const double grad_div_2 = d1(1) + d2(2);
        return Eigen::Vector2d(-2.0 * mu * div_eps_1 - lambda * grad_div_1,
                               -2.0 * mu * div_eps_2 - lambda * grad_div_2);
    };
    const auto grad = gradient;
    const TractionField traction = [mu, lambda, grad](const Eigen::Vector2d& x,
                                                      const Eigen::Vector2d& n) {
        const Eigen::Matrix2d g = grad(x);
        const Eigen::Matrix2d eps = 0.5 * (g + g.transpose());
        return Eigen::Vector2d(2.0 * mu * eps * n + lambda * g.trace() * n);
    };
    out.neumann = traction;
    out.neumann_load = traction;
    return out;
}

ManufacturedSolution ManufacturedSolution::trig() {
    using std::cos;
    using std::sin;
    constexpr double pi = std::numbers::pi;
    ManufacturedSolution m;
    m.value = [](const Eigen::Vector2d& x) {
        return Eigen::Vector2d(sin(pi * x(0)) * sin(pi * x(1)),
                               sin(0.5 * pi * x(0)) * cos(pi * x(1)));
    };
    m.gradient = [](const Eigen::Vector2d& x) {
        Eigen::Matrix2d g;
        g(0, 0) = pi * cos(pi * x(0)) * sin(pi * x(1));
        g(0, 1) = pi * sin(pi * x(0)) * cos(pi * x(1));
        g(1, 0) = 0.5 * pi * cos(0.5 * pi * x(0)) * cos(pi * x(1));
        g(1, 1) = -pi * sin(0.5 * pi * x(0)) * sin(pi * x(1));
        return g;
    };
    m.second_u1 = [](const Eigen::Vector2d& x) {
        return Eigen::Vector3d(-pi * pi * sin(pi * x(0)) * sin(pi * x(1)),
                               pi * pi * cos(pi * x(0)) * cos(pi * x(1)),
                               -pi * pi * sin(pi * x(0)) * sin(pi * x(1)));
    };
    m.second_u2 = [](const Eigen::Vector2d& x) {
        return Eigen::Vector3d(-0.25 * pi * pi * sin(0.5 * pi * x(0)) * cos(pi * x(1)),
                               -0.5 * pi * pi * cos(0.5 * pi * x(0)) * sin(pi * x(1)),
                               -pi * pi * sin(0.5 * pi * x(0)) * cos(pi * x(1)));
    };
    return m;
}

} // namespace iga
