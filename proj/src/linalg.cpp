#include "iga/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "iga/errors.hpp"

namespace iga {

bool is_symmetric(const SparseMatrix& a, double tol) {
    if (a.rows() != a.cols()) return false;
    SparseMatrix d = SparseMatrix(a.transpose()) - a;
    const double scale = a.coeffs().size() > 0 ? a.coeffs().abs().maxCoeff() : 0.0;
    for (int k = 0; k < d.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(d, k); it; ++it)
            if (std::abs(it.value()) > tol * std::max(scale, 1.0)) return false;
    return true;
}

Factorization::Factorization(const SparseMatrix& a, std::string context)
    : matrix_(a), context_(std::move(context)) {
    if (a.rows() != a.cols())
        throw SingularMatrixError("matrix is not square" +
                                  (context_.empty() ? "" : " (" + context_ + ")"));
    matrix_.makeCompressed();
    lu_ = std::make_unique<Eigen::SparseLU<SparseMatrix>>();
    lu_->compute(matrix_);
    const auto fail = [&](const std::string& what) {
        throw SingularMatrixError(what + (context_.empty() ? "" : " (" + context_ + ")"));
    };
    if (lu_->info() != Eigen::Success) fail("sparse LU factorization failed: matrix is singular");
    if (matrix_.rows() == 0) return;
    // LU may numerically factor a rank-deficient matrix; a residual probe on a
    // seeded right-hand side catches that case.
    std::mt19937 rng(0x5eed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::VectorXd b(matrix_.rows());
    for (int i = 0; i < b.size(); ++i) b(i) = dist(rng);
    Eigen::VectorXd x = lu_->solve(b);
    Eigen::VectorXd r = b - matrix_ * x;
    if (r.norm() > 1e-8 * b.norm()) {
        x += lu_->solve(r); // one step of iterative refinement
        r = b - matrix_ * x;
        if (r.norm() > 1e-6 * b.norm()) fail("matrix is numerically singular");
    }
}

Eigen::VectorXd Factorization::solve(const Eigen::VectorXd& rhs) const {
    return lu_->solve(rhs);
}

Eigen::MatrixXd Factorization::solve(const Eigen::MatrixXd& rhs) const {
    return lu_->solve(rhs);
}

namespace {

void lanczos_estimates(const std::vector<double>& alphas, const std::vector<double>& betas,
                       PcgReport& report) {
    const int m = static_cast<int>(alphas.size());
    if (m == 0) {
        report.lambda_min_est = report.lambda_max_est = report.kappa_est = 1.0;
        return;
    }
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    t(0, 0) = 1.0 / alphas[0];
    for (int k = 1; k < m; ++k) {
        t(k, k) = 1.0 / alphas[k] + betas[k - 1] / alphas[k - 1];
        const double off = std::sqrt(std::max(betas[k - 1], 0.0)) / alphas[k - 1];
        t(k, k - 1) = t(k - 1, k) = off;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
    report.lambda_min_est = es.eigenvalues()(0);
    report.lambda_max_est = es.eigenvalues()(m - 1);
    report.kappa_est =
        report.lambda_min_est > 0.0 ? report.lambda_max_est / report.lambda_min_est : 1.0;
}

} // namespace

std::pair<Eigen::VectorXd, PcgReport> pcg(const LinearOperator& apply_a,
                                          const LinearOperator& apply_m,
                                          const Eigen::VectorXd& b, const Eigen::VectorXd& x0,
                                          double tol, int max_it) {
    PcgReport report;
    Eigen::VectorXd x = x0;
    if (b.size() == 0) {
        report.converged = true;
        return {x, report};
    }
    Eigen::VectorXd r = b - apply_a(x);
    const double r0 = r.norm();
    report.residuals.push_back(1.0);
    if (r0 == 0.0) {
        report.converged = true;
        return {x, report};
    }
    Eigen::VectorXd z = apply_m(r);
    Eigen::VectorXd p = z;
    double rho = r.dot(z);
    std::vector<double> alphas, betas;
    for (int k = 0; k < max_it; ++k) {
        const Eigen::VectorXd q = apply_a(p);
        const double p_a_p = p.dot(q);
        if (p_a_p <= 0.0)
            throw IndefiniteOperatorError("conjugate gradients met non-positive curvature");
        const double alpha = rho / p_a_p;
        alphas.push_back(alpha);
        x += alpha * p;
        r -= alpha * q;
        report.iterations = k + 1;
        report.residuals.push_back(r.norm() / r0);
        if (k < 300) { // per-iteration estimates get quadratically expensive
            lanczos_estimates(alphas, betas, report);
            report.kappa_history.push_back(report.kappa_est);
        }
        if (r.norm() <= tol * r0) {
            report.converged = true;
            break;
        }
        z = apply_m(r);
        const double rho_next = r.dot(z);
        const double beta = rho_next / rho;
        betas.push_back(beta);
        rho = rho_next;
        p = z + beta * p;
    }
    lanczos_estimates(alphas, betas, report);
    return {x, report};
}

EigenDecomposition dense_sym_eig(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) throw DefinitenessError("matrix is not square");
    if (a.rows() > kDenseEigCap)
        throw SizeCapError("dense eigensolve refused: dimension " + std::to_string(a.rows()) +
                           " exceeds the cap " + std::to_string(kDenseEigCap));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    if (es.info() != Eigen::Success) throw DefinitenessError("dense eigensolver failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

EigenDecomposition dense_sym_eig(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
        throw DefinitenessError("matrix dimensions disagree");
    if (a.rows() > kDenseEigCap)
        throw SizeCapError("dense eigensolve refused: dimension " + std::to_string(a.rows()) +
                           " exceeds the cap " + std::to_string(kDenseEigCap));
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(b);
    const double d_max = ldlt.vectorD().maxCoeff();
    if (ldlt.info() != Eigen::Success || d_max <= 0.0 ||
        ldlt.vectorD().minCoeff() <= 1e-12 * d_max)
        throw DefinitenessError("right-hand side matrix is not positive definite");
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(a, b);
    if (es.info() != Eigen::Success) throw DefinitenessError("generalized eigensolver failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

} // namespace iga
