#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "iga/errors.hpp"
#include "iga/ieti.hpp"
#include "iga/quadrature.hpp"
#include "testutil.hpp"

using namespace testutil;
using iga::DofClass;
using iga::DofMap;
using iga::IetiOperator;
using iga::JumpOperator;
using iga::Material;
using iga::PatchwiseField;
using iga::PrimalMode;
using iga::PrimalSet;
using iga::ProblemData;

namespace {

Eigen::VectorXd gamma_coefficients(const DofMap& dm, int k, const Eigen::VectorXd& coeffs) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dm.n_gamma(k));
    for (int s = 0; s < dm.scalar_count(k); ++s)
        if (dm.dof_class(k, s) == DofClass::gamma)
            for (int c = 0; c < 2; ++c)
                out(dm.gamma_index(k, s, c)) = coeffs(DofMap::local_dof(s, c));
    return out;
}

Eigen::MatrixXd dense_full_local(const iga::LocalSystem& local) {
    const int ng = static_cast<int>(local.a_gg.rows());
    const int ni = static_cast<int>(local.a_ii.rows());
    Eigen::MatrixXd a(ng + ni, ng + ni);
    a.topLeftCorner(ng, ng) = Eigen::MatrixXd(local.a_gg);
    a.topRightCorner(ng, ni) = Eigen::MatrixXd(local.a_gi);
    a.bottomLeftCorner(ni, ng) = Eigen::MatrixXd(local.a_ig);
    a.bottomRightCorner(ni, ni) = Eigen::MatrixXd(local.a_ii);
    return a;
}

Eigen::MatrixXd dense_jump(const JumpOperator& jump, const DofMap& dm, int k) {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(jump.count, dm.n_gamma(k));
    for (const auto& e : jump.rows[k]) b(e.multiplier, e.gamma) += e.sign;
    return b;
}

// a(u, v) recomputed from scratch by quadrature on the displacement grid
double energy_by_quadrature(const MultiPatchDomain& d, const PatchwiseField& u,
                            const PatchwiseField& v, double mu, double lambda) {
    double total = 0.0;
    for (int k = 0; k < d.patch_count(); ++k) {
        const auto& space = d.space(k);
        const int p = std::max(space.direction(0).degree(), space.direction(1).degree());
        const iga::GaussRule& rule = iga::GaussRule::legendre(p + 1);
        const auto bx = space.direction(0).breakpoints();
        const auto by = space.direction(1).breakpoints();
        for (std::size_t sy = 0; sy + 1 < by.size(); ++sy)
            for (std::size_t sx = 0; sx + 1 < bx.size(); ++sx)
                for (int qy = 0; qy < rule.size(); ++qy)
                    for (int qx = 0; qx < rule.size(); ++qx) {
                        const double xh = bx[sx] + (bx[sx + 1] - bx[sx]) * rule.nodes[qx];
                        const double yh = by[sy] + (by[sy + 1] - by[sy]) * rule.nodes[qy];
                        const Eigen::Matrix2d J = d.map(k).jacobian(xh, yh);
                        const double w = (bx[sx + 1] - bx[sx]) * (by[sy + 1] - by[sy]) *
                                         rule.weights[qx] * rule.weights[qy] *
                                         std::abs(J.determinant());
                        const Eigen::Matrix2d gu = iga::eval_field_gradient(d, u, k, xh, yh);
                        const Eigen::Matrix2d gv = iga::eval_field_gradient(d, v, k, xh, yh);
                        const Eigen::Matrix2d eu = 0.5 * (gu + gu.transpose());
                        const Eigen::Matrix2d ev = 0.5 * (gv + gv.transpose());
                        total += w * (2.0 * mu * (eu.array() * ev.array()).sum() +
                                      lambda * gu.trace() * gv.trace());
                    }
    }
    return total;
}

PatchwiseField primal_basis_field(const IetiOperator& op, int global_dof) {
    const DofMap& dm = op.dofmap();
    PatchwiseField field = iga::zero_field(dm);
    for (int k = 0; k < dm.patch_count(); ++k) {
        const auto& rows = op.primal().global_of_row[k];
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r] != global_dof) continue;
            for (int s = 0; s < dm.scalar_count(k); ++s)
                for (int c = 0; c < 2; ++c) {
                    if (dm.dof_class(k, s) == DofClass::gamma)
                        field.coeffs[k](DofMap::local_dof(s, c)) =
                            op.psi_gamma(k)(dm.gamma_index(k, s, c), static_cast<int>(r));
                    else if (dm.dof_class(k, s) == DofClass::interior)
                        field.coeffs[k](DofMap::local_dof(s, c)) =
                            op.psi_interior(k)(dm.interior_index(k, s, c), static_cast<int>(r));
                }
        }
    }
    return field;
}

} // namespace

TEST_CASE("floating interior patch has eight corner constraints") {
    const MultiPatchDomain d = iga::make_cantilever(3, 2, 1);
    const DofMap dm(d);
    const PrimalSet primal = iga::build_primal_constraints(dm, PrimalMode::corners);
    CHECK(primal.c[1].rows() == 8);
    CHECK(primal.count == 2 * 4); // 4 shared corners, 2 components each
    // patch 0 touches only the corners at x=1
    CHECK(primal.c[0].rows() == 4);
}

TEST_CASE("normal-average functionals agree across an interface") {
    const MultiPatchDomain d = two_squares(2, 1, true);
    const DofMap dm(d);
    const PrimalSet primal =
        iga::build_primal_constraints(dm, PrimalMode::corners_normal_averages);
    const PatchwiseField constant = iga::interpolate(d, [](const Eigen::Vector2d&) {
        return Eigen::Vector2d(1.0, 0.0);
    });
    // the enrichment row is the last one on each patch
    const int row0 = static_cast<int>(primal.c[0].rows()) - 1;
    const int row1 = static_cast<int>(primal.c[1].rows()) - 1;
    CHECK(primal.global_of_row[0][row0] == primal.global_of_row[1][row1]);
    const Eigen::VectorXd v0 = primal.c[0] * gamma_coefficients(dm, 0, constant.coeffs[0]);
    const Eigen::VectorXd v1 = primal.c[1] * gamma_coefficients(dm, 1, constant.coeffs[1]);
    // both evaluate int (1,0) . n_ref over the unit-length edge
    CHECK(v0(row0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(v1(row1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("edge-average rows vanish on functions with zero interface trace") {
    const MultiPatchDomain d = two_squares(2, 2, true);
    const DofMap dm(d);
    const PrimalSet primal = iga::build_primal_constraints(dm, PrimalMode::corners_edge_averages);
    const PatchwiseField u = iga::interpolate(d, [](const Eigen::Vector2d& x) {
        const double z = (1.0 - x(0)) * (1.0 - x(0));
        return Eigen::Vector2d(z, 0.5 * z);
    });
    const Eigen::VectorXd values = primal.c[0] * gamma_coefficients(dm, 0, u.coeffs[0]);
    // last two rows are the edge averages
    CHECK(std::abs(values(values.size() - 1)) <= 1e-12);
    CHECK(std::abs(values(values.size() - 2)) <= 1e-12);
}

TEST_CASE("jump operator: nullity, counting, single-entry perturbation") {
    const MultiPatchDomain d = two_squares(2, 1, true);
    const DofMap dm(d);
    const PrimalSet primal = iga::build_primal_constraints(dm, PrimalMode::corners);
    const JumpOperator jump = iga::build_jump_operator(dm, primal);
    // n = 4 matched trace coefficients, 2 corner pairs excluded
    CHECK(jump.count == 2 * (4 - 2));

    const PatchwiseField smooth = iga::interpolate(d, [](const Eigen::Vector2d& x) {
        return Eigen::Vector2d(std::sin(x(0) + x(1)), x(0) * x(1));
    });
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(jump.count);
    for (int k = 0; k < 2; ++k)
        jump.accumulate(k, gamma_coefficients(dm, k, smooth.coeffs[k]), lambda);
    CHECK(lambda.lpNorm<Eigen::Infinity>() <= 1e-12);

    // perturb one matched non-corner coefficient
    PatchwiseField perturbed = smooth;
    const auto& prov = jump.provenance[1];
    Eigen::VectorXd pg = gamma_coefficients(dm, prov.patch_plus, perturbed.coeffs[prov.patch_plus]);
    pg(prov.gamma_plus) += 1.0;
    Eigen::VectorXd lambda2 = Eigen::VectorXd::Zero(jump.count);
    jump.accumulate(prov.patch_plus, pg, lambda2);
    jump.accumulate(prov.patch_minus,
                    gamma_coefficients(dm, prov.patch_minus, perturbed.coeffs[prov.patch_minus]),
                    lambda2);
    const Eigen::VectorXd diff = lambda2 - lambda;
    int changed = 0;
    for (int i = 0; i < diff.size(); ++i)
        if (std::abs(diff(i)) > 1e-13) ++changed;
    CHECK(changed == 1);
    CHECK(std::abs(diff(1)) == doctest::Approx(1.0));
}

TEST_CASE("primal basis satisfies the constraint block exactly") {
    const MultiPatchDomain d = two_squares(2, 2, true);
    const DofMap dm(d);
    const IetiOperator op = iga::build_ieti(dm, {1.0, 1.0}, ProblemData::end_load(1e-5),
                                            PrimalMode::corners);
    const PrimalSet& primal = op.primal();
    for (int k = 0; k < 2; ++k) {
        const int nc = static_cast<int>(primal.c[k].rows());
        if (nc == 0) continue;
        const Eigen::MatrixXd residual =
            Eigen::MatrixXd(primal.c[k]) * op.psi_gamma(k) - Eigen::MatrixXd::Identity(nc, nc);
        CHECK(residual.lpNorm<Eigen::Infinity>() <= 1e-10);
    }
}

TEST_CASE("primal system matches the dense basis energy and quadrature") {
    const MultiPatchDomain d = two_squares(2, 1, true);
    const DofMap dm(d);
    const Material material{1.0, 1.0};
    const IetiOperator op = iga::build_ieti(dm, material, ProblemData::end_load(1e-5),
                                            PrimalMode::corners);
    const int n_pi = op.primal_count();
    REQUIRE(n_pi == 4);

    // dense oracle: Psi^T A Psi with dense blocks and dense scatter
    Eigen::MatrixXd a_pi = Eigen::MatrixXd::Zero(n_pi, n_pi);
    for (int k = 0; k < 2; ++k) {
        const iga::LocalSystem local = assemble_local(dm, k, material, ProblemData::zero());
        const Eigen::MatrixXd a = dense_full_local(local);
        const int ng = dm.n_gamma(k);
        const int nc = static_cast<int>(op.primal().c[k].rows());
        Eigen::MatrixXd psi(a.rows(), nc);
        psi.topRows(ng) = op.psi_gamma(k);
        psi.bottomRows(a.rows() - ng) = op.psi_interior(k);
        const Eigen::MatrixXd local_energy = psi.transpose() * a * psi;
        for (int r = 0; r < nc; ++r)
            for (int c = 0; c < nc; ++c)
                a_pi(op.primal().global_of_row[k][r], op.primal().global_of_row[k][c]) +=
                    local_energy(r, c);
    }
    CHECK((a_pi - op.primal_matrix()).lpNorm<Eigen::Infinity>() <=
          1e-9 * std::max(1.0, op.primal_matrix().norm()));

    // energy identity recomputed by quadrature
    for (int i = 0; i < n_pi; ++i) {
        const PatchwiseField fi = primal_basis_field(op, i);
        for (int j = i; j < n_pi; ++j) {
            const PatchwiseField fj = primal_basis_field(op, j);
            const double quad = energy_by_quadrature(d, fi, fj, material.mu, material.lambda);
            CHECK(op.primal_matrix()(i, j) ==
                  doctest::Approx(quad).epsilon(1e-8).scale(std::abs(quad) + 1.0));
        }
    }

    // positive definite
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.primal_matrix());
    CHECK(es.eigenvalues()(0) > 0.0);
}

TEST_CASE("operator algebra against dense inverses on a two-patch problem") {
    const MultiPatchDomain d = two_squares(2, 3, true);
    const DofMap dm(d);
    const Material material{1.0, 1.0};
    const IetiOperator op = iga::build_ieti(dm, material, ProblemData::end_load(1e-5),
                                            PrimalMode::corners);
    const int nl = op.multiplier_count();
    REQUIRE(nl == 2 * (10 - 2));

    // dense F and M_sD via dense saddle inverses and dense Schur complements
    Eigen::MatrixXd f_dense = Eigen::MatrixXd::Zero(nl, nl);
    Eigen::MatrixXd m_dense = Eigen::MatrixXd::Zero(nl, nl);
    f_dense += op.primal_jump_matrix() *
               op.primal_matrix().ldlt().solve(op.primal_jump_matrix().transpose());
    for (int k = 0; k < 2; ++k) {
        const iga::LocalSystem local = assemble_local(dm, k, material, ProblemData::zero());
        const int ng = dm.n_gamma(k), ni = dm.n_interior(k);
        const int nc = static_cast<int>(op.primal().c[k].rows());
        Eigen::MatrixXd saddle = Eigen::MatrixXd::Zero(ng + ni + nc, ng + ni + nc);
        saddle.topLeftCorner(ng + ni, ng + ni) = dense_full_local(local);
        saddle.block(ng + ni, 0, nc, ng) = Eigen::MatrixXd(op.primal().c[k]);
        saddle.block(0, ng + ni, ng, nc) = Eigen::MatrixXd(op.primal().c[k]).transpose();
        Eigen::MatrixXd b_bar = Eigen::MatrixXd::Zero(nl, ng + ni + nc);
        b_bar.leftCols(ng) = dense_jump(op.jump(), dm, k);
        f_dense += b_bar * saddle.fullPivLu().solve(b_bar.transpose());

        const Eigen::MatrixXd a_ii = Eigen::MatrixXd(local.a_ii);
        const Eigen::MatrixXd schur =
            Eigen::MatrixXd(local.a_gg) -
            Eigen::MatrixXd(local.a_gi) * a_ii.ldlt().solve(Eigen::MatrixXd(local.a_ig));
        const Eigen::VectorXd dinv = op.scaling(k).cwiseInverse();
        const Eigen::MatrixXd b = dense_jump(op.jump(), dm, k);
        m_dense += b * dinv.asDiagonal() * schur * dinv.asDiagonal() * b.transpose();
    }

    double f_err = 0.0, m_err = 0.0;
    for (int i = 0; i < nl; ++i) {
        const Eigen::VectorXd unit = Eigen::VectorXd::Unit(nl, i);
        f_err = std::max(f_err,
                         (op.apply_F(unit) - f_dense.col(i)).lpNorm<Eigen::Infinity>());
        m_err = std::max(m_err,
                         (op.apply_MsD(unit) - m_dense.col(i)).lpNorm<Eigen::Infinity>());
    }
    CHECK(f_err <= 1e-9 * std::max(1.0, f_dense.norm()));
    CHECK(m_err <= 1e-9 * std::max(1.0, m_dense.norm()));

    // zero maps to zero, symmetry and positivity on seeded vectors
    CHECK(op.apply_F(Eigen::VectorXd::Zero(nl)).norm() == 0.0);
    CHECK(op.apply_MsD(Eigen::VectorXd::Zero(nl)).norm() == 0.0);
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd u(nl), v(nl);
        for (int i = 0; i < nl; ++i) {
            u(i) = dist(rng);
            v(i) = dist(rng);
        }
        const double fu_v = op.apply_F(u).dot(v);
        const double u_fv = u.dot(op.apply_F(v));
        CHECK(std::abs(fu_v - u_fv) <= 1e-11 * (std::abs(fu_v) + 1.0));
        const double mu_v = op.apply_MsD(u).dot(v);
        const double u_mv = u.dot(op.apply_MsD(v));
        CHECK(std::abs(mu_v - u_mv) <= 1e-11 * (std::abs(mu_v) + 1.0));
        CHECK(op.apply_MsD(u).dot(u) > 0.0);
        CHECK(op.apply_F(u).dot(u) > 0.0);
    }

    // PCG kappa estimate vs the dense essential condition number
    const auto solution = op.solve(1e-12, 42);
    CHECK(solution.report.converged);
    const Eigen::LLT<Eigen::MatrixXd> llt(m_dense);
    REQUIRE(llt.info() == Eigen::Success);
    const Eigen::MatrixXd l = llt.matrixL();
    const Eigen::MatrixXd sym = l.transpose() * f_dense * l;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (sym + sym.transpose()));
    const double lmax = es.eigenvalues()(nl - 1);
    double lmin = lmax;
    for (int i = 0; i < nl; ++i)
        if (es.eigenvalues()(i) > 1e-10 * lmax) {
            lmin = es.eigenvalues()(i);
            break;
        }
    const double kappa_dense = lmax / lmin;
    CHECK(solution.report.kappa_est == doctest::Approx(kappa_dense).epsilon(0.10));
}

TEST_CASE("single all-Dirichlet patch reduces to the direct solve") {
    const MultiPatchDomain d = all_dirichlet_square(2, 2);
    const DofMap dm(d);
    const ProblemData data{[](const Eigen::Vector2d& x) {
                               return Eigen::Vector2d(std::sin(x(0)), std::cos(x(1)));
                           },
                           nullptr, nullptr};
    const IetiOperator op = iga::build_ieti(dm, {1.0, 1.0}, data, PrimalMode::corners);
    CHECK(op.multiplier_count() == 0);
    CHECK(op.primal_count() == 0);
    const auto solution = op.solve(1e-10, 42);
    CHECK(solution.report.iterations == 0);
    const PatchwiseField direct = iga::solve_monolithic(dm, {1.0, 1.0}, data);
    CHECK((solution.field.coeffs[0] - direct.coeffs[0]).lpNorm<Eigen::Infinity>() <=
          1e-12 * direct.coeffs[0].lpNorm<Eigen::Infinity>());
}

TEST_CASE("ieti solve matches the monolithic solve on the cantilever") {
    const MultiPatchDomain d = iga::make_cantilever(4, 2, 2);
    const DofMap dm(d);
    const Material material{1.0, 1.0};
    const ProblemData data = ProblemData::end_load(1e-5);
    const IetiOperator op = iga::build_ieti(dm, material, data, PrimalMode::corners);
    const auto solution = op.solve(1e-10, 42);
    CHECK(solution.report.converged);

    const PatchwiseField mono = iga::solve_monolithic(dm, material, data);
    PatchwiseField diff = solution.field;
    for (int k = 0; k < d.patch_count(); ++k) diff.coeffs[k] -= mono.coeffs[k];
    const double rel = iga::h1_seminorm(d, diff) / iga::h1_seminorm(d, mono);
    CHECK(rel <= 1e-8);

    double scale = 0.0;
    for (const auto& c : solution.field.coeffs)
        scale = std::max(scale, c.lpNorm<Eigen::Infinity>());
    const iga::JumpStats jumps = iga::interface_jumps(dm, solution.field);
    CHECK(jumps.max_all <= 1e-8 * scale);
    CHECK(jumps.max_corner <= 1e-12 * std::max(scale, 1.0));
}

TEST_CASE("kappa follows the polylog bound in levels and degree") {
    double prev = 0.0;
    double ratio_min = 1e300, ratio_max = 0.0;
    for (int levels : {2, 3, 4, 5}) {
        const MultiPatchDomain d = iga::make_cantilever(8, 2, levels);
        const DofMap dm(d);
        const IetiOperator op =
            iga::build_ieti(dm, {1.0, 1.0}, ProblemData::end_load(1e-5), PrimalMode::corners);
        const auto solution = op.solve(1e-6, 42);
        CHECK(solution.report.converged);
        CHECK(solution.report.kappa_est >= prev);
        prev = solution.report.kappa_est;
        const double normalizer =
            std::pow(1.0 + std::log(2.0) + levels * std::log(2.0), 2);
        ratio_min = std::min(ratio_min, solution.report.kappa_est / normalizer);
        ratio_max = std::max(ratio_max, solution.report.kappa_est / normalizer);
    }
    CHECK(ratio_max / ratio_min <= 2.0);

    // nondecreasing in the degree at a fixed level
    double prev_degree = 0.0;
    for (int degree : {2, 3}) {
        const MultiPatchDomain d = iga::make_cantilever(8, degree, 3);
        const DofMap dm(d);
        const IetiOperator op =
            iga::build_ieti(dm, {1.0, 1.0}, ProblemData::end_load(1e-5), PrimalMode::corners);
        const auto solution = op.solve(1e-6, 42);
        CHECK(solution.report.kappa_est >= prev_degree);
        prev_degree = solution.report.kappa_est;
    }
}

TEST_CASE("kappa and iterations are stable in the patch count") {
    std::vector<int> its;
    std::vector<double> kappas;
    for (int patches : {8, 16, 32}) {
        const MultiPatchDomain d = iga::make_cantilever(patches, 2, 3);
        const DofMap dm(d);
        const IetiOperator op = iga::build_ieti(dm, {1.0, 1.0}, ProblemData::end_load(1e-5),
                                                PrimalMode::corners_normal_averages);
        const auto solution = op.solve(1e-6, 42);
        CHECK(solution.report.converged);
        its.push_back(solution.report.iterations);
        kappas.push_back(solution.report.kappa_est);
    }
    CHECK(*std::max_element(its.begin(), its.end()) -
              *std::min_element(its.begin(), its.end()) <=
          3);
    CHECK(*std::max_element(kappas.begin(), kappas.end()) <=
          1.2 * *std::min_element(kappas.begin(), kappas.end()));
}

TEST_CASE("insufficient primal constraints are reported") {
    const MultiPatchDomain d = two_squares(2, 1, false); // floating patches
    const DofMap dm(d);
    std::vector<iga::LocalSystem> locals;
    for (int k = 0; k < 2; ++k)
        locals.push_back(assemble_local(dm, k, {1.0, 1.0}, ProblemData::zero()));
    PrimalSet empty;
    empty.count = 0;
    empty.c.resize(2);
    empty.global_of_row.resize(2);
    for (int k = 0; k < 2; ++k) empty.c[k].resize(0, dm.n_gamma(k));
    iga::JumpOperator jump = iga::build_jump_operator(dm, empty);
    CHECK_THROWS_AS(IetiOperator(dm, std::move(locals), std::move(empty), std::move(jump)),
                    iga::ConfigError);
}

TEST_CASE("non-convergence is reported, not thrown") {
    const MultiPatchDomain d = iga::make_cantilever(6, 2, 3);
    const DofMap dm(d);
    const IetiOperator op =
        iga::build_ieti(dm, {1.0, 1.0}, ProblemData::end_load(1e-5), PrimalMode::corners);
    const auto solution = op.solve(1e-14, 42, 2);
    CHECK_FALSE(solution.report.converged);
    CHECK(solution.report.iterations == 2);
}
