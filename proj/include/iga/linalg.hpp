#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace iga {

using SparseMatrix = Eigen::SparseMatrix<double>;

bool is_symmetric(const SparseMatrix& a, double tol = 1e-13);

/// Sparse LU factors of a square nonsingular matrix, reusable for repeated
/// solves. Saddle systems are handled by the partial pivoting of the LU.
class Factorization {
public:
    explicit Factorization(const SparseMatrix& a, std::string context = {});

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;

    int rows() const { return static_cast<int>(matrix_.rows()); }

private:
    SparseMatrix matrix_;
    std::unique_ptr<Eigen::SparseLU<SparseMatrix>> lu_;
    std::string context_;
};

struct PcgReport {
    int iterations = 0;
    std::vector<double> residuals;     // |r_k| / |r_0|
    std::vector<double> kappa_history; // estimate after each iteration
    double lambda_min_est = 1.0;
    double lambda_max_est = 1.0;
    double kappa_est = 1.0;
    bool converged = false;
};

using LinearOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Preconditioned conjugate gradients with Euclidean-residual stopping and
/// condition number estimation from the underlying Lanczos tridiagonal.
std::pair<Eigen::VectorXd, PcgReport> pcg(const LinearOperator& apply_a,
                                          const LinearOperator& apply_m,
                                          const Eigen::VectorXd& b, const Eigen::VectorXd& x0,
                                          double tol, int max_it);

inline constexpr int kDenseEigCap = 4000;

struct EigenDecomposition {
    Eigen::VectorXd values; // ascending
    Eigen::MatrixXd vectors;
};

EigenDecomposition dense_sym_eig(const Eigen::MatrixXd& a);
/// Generalized problem A v = theta B v with B symmetric positive definite.
EigenDecomposition dense_sym_eig(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

} // namespace iga
