#include "iga/ieti.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "iga/errors.hpp"
#include "iga/quadrature.hpp"

namespace iga {

std::string to_string(PrimalMode mode) {
    switch (mode) {
        case PrimalMode::corners: return "corners";
        case PrimalMode::corners_normal_averages: return "corners+normal";
        case PrimalMode::corners_edge_averages: return "corners+edge";
    }
    return "?";
}

PrimalMode parse_primal_mode(const std::string& name) {
    for (PrimalMode m : {PrimalMode::corners, PrimalMode::corners_normal_averages,
                         PrimalMode::corners_edge_averages})
        if (to_string(m) == name) return m;
    throw ConfigError("unknown primal mode: " + name);
}

namespace {

int trace_direction(Side side) {
    return (side == Side::west || side == Side::east) ? 1 : 0;
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

// Weights of the edge functionals over the trace scalars of one side:
// plain[t] = int phi_t ds, normal(t, c) = int phi_t n_c ds.
struct EdgeFunctional {
    std::vector<double> plain;
    Eigen::MatrixX2d normal;
};

EdgeFunctional edge_functional(const MultiPatchDomain& domain, int k, Side side) {
    const GeometryMap& map = domain.map(k);
    const TensorSplineSpace& space = domain.space(k);
    const int dir = trace_direction(side);
    const KnotVector& kt = space.direction(dir);
    const int m = kt.size();
    const int p = std::max(space.direction(0).degree(), space.direction(1).degree());
    const GaussRule& rule = GaussRule::legendre(p + 1);

    EdgeFunctional out;
    out.plain.assign(m, 0.0);
    out.normal = Eigen::MatrixX2d::Zero(m, 2);

    std::vector<double> breaks = kt.breakpoints();
    for (double b : map.basis().direction(dir).breakpoints()) breaks.push_back(b);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    const double fixed = (side == Side::east || side == Side::north) ? 1.0 : 0.0;
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
            normal.normalize();
            const double w = (hi - lo) * rule.weights[qi] * arc;
            const auto [first, vals] = kt.eval_basis(t, 0);
            for (std::size_t j = 0; j < vals.size(); ++j) {
                out.plain[first + j] += w * vals[j];
                out.normal.row(first + j) += w * vals[j] * normal.transpose();
            }
        }
    }
    return out;
}

} // namespace

PrimalSet build_primal_constraints(const DofMap& dofmap, PrimalMode mode) {
    const MultiPatchDomain& domain = dofmap.domain();
    const int K = domain.patch_count();
    const int corners = static_cast<int>(domain.corners().size());
    const int edges = static_cast<int>(domain.interfaces().size());

    PrimalSet set;
    set.count = 2 * corners;
    if (mode == PrimalMode::corners_normal_averages) set.count += edges;
    if (mode == PrimalMode::corners_edge_averages) set.count += 2 * edges;
    set.c.resize(K);
    set.global_of_row.resize(K);

    std::vector<std::vector<Eigen::Triplet<double>>> triplets(K);

    for (int j = 0; j < corners; ++j) {
        const CornerJunction& corner = domain.corners()[j];
        for (const auto& [k, c] : corner.members) {
            const int nx = domain.space(k).dim(0), ny = domain.space(k).dim(1);
            const int scalar = DofMap::corner_scalar(nx, ny, c);
            for (int comp = 0; comp < 2; ++comp) {
                const int gi = dofmap.gamma_index(k, scalar, comp);
                if (gi < 0)
                    throw ConfigError("corner coefficient is not an interface DOF on patch " +
                                      std::to_string(k));
                const int row = static_cast<int>(set.global_of_row[k].size());
                triplets[k].emplace_back(row, gi, 1.0);
                set.global_of_row[k].push_back(2 * j + comp);
            }
        }
    }

    if (mode != PrimalMode::corners) {
        for (int e = 0; e < edges; ++e) {
            const Interface& it = domain.interfaces()[e];
            for (const int k : {it.patch_a, it.patch_b}) {
                const Side side = (k == it.patch_a) ? it.side_a : it.side_b;
                // both functionals use the outward normal of the lower patch
                const double orientation = (k == it.patch_a) ? 1.0 : -1.0;
                const EdgeFunctional fn = edge_functional(domain, k, side);
                const int nx = domain.space(k).dim(0), ny = domain.space(k).dim(1);
                const int m = static_cast<int>(fn.plain.size());
                if (mode == PrimalMode::corners_normal_averages) {
                    const int row = static_cast<int>(set.global_of_row[k].size());
                    for (int t = 0; t < m; ++t) {
                        const int scalar = DofMap::side_scalar(nx, ny, side, t);
                        for (int comp = 0; comp < 2; ++comp) {
                            const int gi = dofmap.gamma_index(k, scalar, comp);
                            if (gi < 0) continue; // eliminated endpoint
                            triplets[k].emplace_back(row, gi,
                                                     orientation * fn.normal(t, comp));
                        }
                    }
                    set.global_of_row[k].push_back(2 * corners + e);
                } else {
                    for (int comp = 0; comp < 2; ++comp) {
                        const int row = static_cast<int>(set.global_of_row[k].size());
                        for (int t = 0; t < m; ++t) {
                            const int scalar = DofMap::side_scalar(nx, ny, side, t);
                            const int gi = dofmap.gamma_index(k, scalar, comp);
                            if (gi < 0) continue;
                            triplets[k].emplace_back(row, gi, fn.plain[t]);
                        }
                        set.global_of_row[k].push_back(2 * corners + 2 * e + comp);
                    }
                }
            }
        }
    }

    for (int k = 0; k < K; ++k) {
        set.c[k].resize(static_cast<int>(set.global_of_row[k].size()), dofmap.n_gamma(k));
        set.c[k].setFromTriplets(triplets[k].begin(), triplets[k].end());
    }
    return set;
}

void JumpOperator::accumulate(int k, const Eigen::VectorXd& u_gamma,
                              Eigen::VectorXd& lambda) const {
    for (const Entry& e : rows[k]) lambda(e.multiplier) += e.sign * u_gamma(e.gamma);
}

void JumpOperator::accumulate_transpose(int k, const Eigen::VectorXd& lambda,
                                        Eigen::VectorXd& u_gamma) const {
    for (const Entry& e : rows[k]) u_gamma(e.gamma) += e.sign * lambda(e.multiplier);
}

JumpOperator build_jump_operator(const DofMap& dofmap, const PrimalSet&) {
    const MultiPatchDomain& domain = dofmap.domain();
    JumpOperator jump;
    jump.rows.resize(domain.patch_count());
    for (std::size_t e = 0; e < domain.interfaces().size(); ++e) {
        const Interface& it = domain.interfaces()[e];
        for (const DofMap::TracePair& pair : dofmap.interface_pairs(static_cast<int>(e))) {
            if (pair.at_corner) continue; // corner values are primal
            if (dofmap.dof_class(it.patch_a, pair.scalar_a) == DofClass::eliminated) continue;
            for (int comp = 0; comp < 2; ++comp) {
                const int ga = dofmap.gamma_index(it.patch_a, pair.scalar_a, comp);
                const int gb = dofmap.gamma_index(it.patch_b, pair.scalar_b, comp);
                if (ga < 0 || gb < 0)
                    throw ConfigError("matched interface coefficient is not a gamma DOF");
                const int m = jump.count++;
                jump.rows[it.patch_a].push_back({m, ga, 1.0});
                jump.rows[it.patch_b].push_back({m, gb, -1.0});
                jump.provenance.push_back({it.patch_a, ga, it.patch_b, gb});
            }
        }
    }
    return jump;
}

IetiOperator::IetiOperator(const DofMap& dofmap, std::vector<LocalSystem> locals,
                           PrimalSet primal, JumpOperator jump)
    : dofmap_(&dofmap), primal_(std::move(primal)), jump_(std::move(jump)) {
    const MultiPatchDomain& domain = dofmap.domain();
    const int K = domain.patch_count();
    if (static_cast<int>(locals.size()) != K)
        throw ConfigError("one local system per patch expected");

    patches_.resize(K);
    const int n_pi = primal_.count;
    a_pi_ = Eigen::MatrixXd::Zero(n_pi, n_pi);
    f_pi_ = Eigen::VectorXd::Zero(n_pi);
    b_pi_ = Eigen::MatrixXd::Zero(jump_.count, n_pi);

    for (int k = 0; k < K; ++k) {
        Patch& patch = patches_[k];
        patch.local = std::move(locals[k]);
        const int ng = static_cast<int>(patch.local.a_gg.rows());
        const int ni = static_cast<int>(patch.local.a_ii.rows());
        const int nc = static_cast<int>(primal_.c[k].rows());

        std::vector<Eigen::Triplet<double>> triplets;
        const auto add_block = [&](const SparseMatrix& block, int row0, int col0) {
            for (int outer = 0; outer < block.outerSize(); ++outer)
                for (SparseMatrix::InnerIterator entry(block, outer); entry; ++entry)
                    triplets.emplace_back(row0 + static_cast<int>(entry.row()),
                                          col0 + static_cast<int>(entry.col()), entry.value());
        };
        add_block(patch.local.a_gg, 0, 0);
        add_block(patch.local.a_gi, 0, ng);
        add_block(patch.local.a_ig, ng, 0);
        add_block(patch.local.a_ii, ng, ng);
        add_block(primal_.c[k], ng + ni, 0);
        add_block(SparseMatrix(primal_.c[k].transpose()), 0, ng + ni);
        SparseMatrix saddle(ng + ni + nc, ng + ni + nc);
        saddle.setFromTriplets(triplets.begin(), triplets.end());
        try {
            patch.saddle =
                std::make_unique<Factorization>(saddle, "patch " + std::to_string(k) + " saddle");
        } catch (const SingularMatrixError& e) {
            throw ConfigError(std::string(e.what()) +
                              "; the primal constraints do not control the local kernel");
        }
        if (ni > 0)
            patch.interior = std::make_unique<Factorization>(
                patch.local.a_ii, "patch " + std::to_string(k) + " interior block");

        patch.f_bar = Eigen::VectorXd::Zero(ng + ni + nc);
        patch.f_bar.head(ng) = patch.local.f_gamma;
        patch.f_bar.segment(ng, ni) = patch.local.f_interior;

        // energy-minimizing primal basis
        if (nc > 0) {
            Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(ng + ni + nc, nc);
            rhs.bottomRows(nc).setIdentity();
            const Eigen::MatrixXd basis = patch.saddle->solve(rhs);
            patch.psi_gamma = basis.topRows(ng);
            patch.psi_interior = basis.middleRows(ng, ni);
            patch.phi = basis.bottomRows(nc);
        } else {
            patch.psi_gamma.resize(ng, 0);
            patch.psi_interior.resize(ni, 0);
            patch.phi.resize(0, 0);
        }

        // multiplicity scaling
        patch.scaling = Eigen::VectorXd::Ones(ng);
        for (int s = 0; s < dofmap.scalar_count(k); ++s) {
            if (dofmap.dof_class(k, s) != DofClass::gamma) continue;
            for (int comp = 0; comp < 2; ++comp)
                patch.scaling(dofmap.gamma_index(k, s, comp)) = dofmap.multiplicity(k, s);
        }

        if (nc > 0) {
            const Eigen::MatrixXd w_gamma = patch.local.a_gg * patch.psi_gamma +
                                            patch.local.a_gi * patch.psi_interior;
            const Eigen::MatrixXd w_interior = patch.local.a_ig * patch.psi_gamma +
                                               patch.local.a_ii * patch.psi_interior;
            const Eigen::MatrixXd energy = patch.psi_gamma.transpose() * w_gamma +
                                           patch.psi_interior.transpose() * w_interior;
            const Eigen::VectorXd load = patch.psi_gamma.transpose() * patch.local.f_gamma +
                                         patch.psi_interior.transpose() * patch.local.f_interior;
            for (int r = 0; r < nc; ++r) {
                f_pi_(primal_.global_of_row[k][r]) += load(r);
                for (int c = 0; c < nc; ++c)
                    a_pi_(primal_.global_of_row[k][r], primal_.global_of_row[k][c]) +=
                        energy(r, c);
            }
            for (const JumpOperator::Entry& e : jump_.rows[k])
                for (int c = 0; c < nc; ++c)
                    b_pi_(e.multiplier, primal_.global_of_row[k][c]) +=
                        e.sign * patch.psi_gamma(e.gamma, c);
        }
    }

    if (n_pi > 0) {
        a_pi_llt_.compute(a_pi_);
        if (a_pi_llt_.info() != Eigen::Success)
            throw ConfigError("primal system is not positive definite");
    }
}

Eigen::VectorXd IetiOperator::apply_F(const Eigen::VectorXd& lambda) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(jump_.count);
    if (primal_.count > 0)
        out += b_pi_ * a_pi_llt_.solve(b_pi_.transpose() * lambda);
    for (std::size_t k = 0; k < patches_.size(); ++k) {
        const Patch& patch = patches_[k];
        const int ng = static_cast<int>(patch.local.a_gg.rows());
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(patch.f_bar.size());
        Eigen::VectorXd head = Eigen::VectorXd::Zero(ng);
        jump_.accumulate_transpose(static_cast<int>(k), lambda, head);
        rhs.head(ng) = head;
        const Eigen::VectorXd sol = patch.saddle->solve(rhs);
        jump_.accumulate(static_cast<int>(k), sol.head(ng), out);
    }
    return out;
}

Eigen::VectorXd IetiOperator::schur_apply(int k, const Eigen::VectorXd& v) const {
    const Patch& patch = patches_[k];
    Eigen::VectorXd out = patch.local.a_gg * v;
    if (patch.interior) {
        const Eigen::VectorXd t = patch.interior->solve(Eigen::VectorXd(patch.local.a_ig * v));
        out -= patch.local.a_gi * t;
    }
    return out;
}

Eigen::VectorXd IetiOperator::apply_MsD(const Eigen::VectorXd& lambda) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(jump_.count);
    for (std::size_t k = 0; k < patches_.size(); ++k) {
        const Patch& patch = patches_[k];
        const int ng = static_cast<int>(patch.local.a_gg.rows());
        Eigen::VectorXd v = Eigen::VectorXd::Zero(ng);
        jump_.accumulate_transpose(static_cast<int>(k), lambda, v);
        v.array() /= patch.scaling.array();
        Eigen::VectorXd w = schur_apply(static_cast<int>(k), v);
        w.array() /= patch.scaling.array();
        jump_.accumulate(static_cast<int>(k), w, out);
    }
    return out;
}

Eigen::VectorXd IetiOperator::rhs() const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(jump_.count);
    if (primal_.count > 0) g += b_pi_ * a_pi_llt_.solve(f_pi_);
    for (std::size_t k = 0; k < patches_.size(); ++k) {
        const Patch& patch = patches_[k];
        const int ng = static_cast<int>(patch.local.a_gg.rows());
        const Eigen::VectorXd sol = patch.saddle->solve(patch.f_bar);
        jump_.accumulate(static_cast<int>(k), sol.head(ng), g);
    }
    return g;
}

IetiOperator::Solution IetiOperator::solve(double tol, unsigned seed, int max_it) const {
    const MultiPatchDomain& domain = dofmap_->domain();
    Solution solution;
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(jump_.count);
    if (jump_.count > 0) {
        const Eigen::VectorXd g = rhs();
        std::mt19937 rng(seed);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        // random start scaled to the data so the residual reduction carries
        // over to the solution accuracy
        const double scale = g.lpNorm<Eigen::Infinity>();
        Eigen::VectorXd x0(jump_.count);
        for (int i = 0; i < x0.size(); ++i) x0(i) = scale * dist(rng);
        auto [x, report] = pcg([this](const Eigen::VectorXd& v) { return apply_F(v); },
                               [this](const Eigen::VectorXd& v) { return apply_MsD(v); }, g,
                               x0, tol, max_it);
        lambda = std::move(x);
        solution.report = std::move(report);
    } else {
        solution.report.converged = true;
    }
    solution.multipliers = lambda;

    Eigen::VectorXd x_pi;
    if (primal_.count > 0)
        x_pi = a_pi_llt_.solve(f_pi_ - b_pi_.transpose() * lambda);

    solution.field = zero_field(*dofmap_);
    for (int k = 0; k < domain.patch_count(); ++k) {
        const Patch& patch = patches_[k];
        const int ng = static_cast<int>(patch.local.a_gg.rows());
        const int ni = static_cast<int>(patch.local.a_ii.rows());
        const int nc = static_cast<int>(primal_.c[k].rows());
        Eigen::VectorXd rhs_bar = patch.f_bar;
        Eigen::VectorXd head = Eigen::VectorXd::Zero(ng);
        jump_.accumulate_transpose(k, lambda, head);
        rhs_bar.head(ng) -= head;
        const Eigen::VectorXd sol = patch.saddle->solve(rhs_bar);
        Eigen::VectorXd u_gamma = sol.head(ng);
        Eigen::VectorXd u_interior = sol.segment(ng, ni);
        // the local multiplier block sol.tail(nc) is diagnostic only
        if (nc > 0) {
            Eigen::VectorXd x_local(nc);
            for (int r = 0; r < nc; ++r) x_local(r) = x_pi(primal_.global_of_row[k][r]);
            u_gamma += patch.psi_gamma * x_local;
            u_interior += patch.psi_interior * x_local;
        }
        for (int s = 0; s < dofmap_->scalar_count(k); ++s) {
            for (int comp = 0; comp < 2; ++comp) {
                switch (dofmap_->dof_class(k, s)) {
                    case DofClass::gamma:
                        solution.field.coeffs[k](DofMap::local_dof(s, comp)) =
                            u_gamma(dofmap_->gamma_index(k, s, comp));
                        break;
                    case DofClass::interior:
                        solution.field.coeffs[k](DofMap::local_dof(s, comp)) =
                            u_interior(dofmap_->interior_index(k, s, comp));
                        break;
                    case DofClass::eliminated: break;
                }
            }
        }
    }
    return solution;
}

IetiOperator build_ieti(const DofMap& dofmap, const Material& material, const ProblemData& data,
                        PrimalMode mode) {
    const MultiPatchDomain& domain = dofmap.domain();
    std::vector<LocalSystem> locals;
    locals.reserve(domain.patch_count());
    for (int k = 0; k < domain.patch_count(); ++k)
        locals.push_back(assemble_local(dofmap, k, material, data));
    PrimalSet primal = build_primal_constraints(dofmap, mode);
    JumpOperator jump = build_jump_operator(dofmap, primal);
    return IetiOperator(dofmap, std::move(locals), std::move(primal), std::move(jump));
}

JumpStats interface_jumps(const DofMap& dofmap, const PatchwiseField& field) {
    const MultiPatchDomain& domain = dofmap.domain();
    JumpStats stats;
    for (std::size_t e = 0; e < domain.interfaces().size(); ++e) {
        const Interface& it = domain.interfaces()[e];
        for (const DofMap::TracePair& pair : dofmap.interface_pairs(static_cast<int>(e))) {
            for (int comp = 0; comp < 2; ++comp) {
                const double diff =
                    std::abs(field.coeffs[it.patch_a](DofMap::local_dof(pair.scalar_a, comp)) -
                             field.coeffs[it.patch_b](DofMap::local_dof(pair.scalar_b, comp)));
                stats.max_all = std::max(stats.max_all, diff);
                if (pair.at_corner) stats.max_corner = std::max(stats.max_corner, diff);
            }
        }
    }
    return stats;
}

} // namespace iga
