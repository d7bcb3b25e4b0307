#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "iga/errors.hpp"
#include "iga/linalg.hpp"

using iga::Factorization;
using iga::SparseMatrix;

namespace {

SparseMatrix to_sparse(const Eigen::MatrixXd& a) {
    SparseMatrix s(a.rows(), a.cols());
    std::vector<Eigen::Triplet<double>> t;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            if (a(i, j) != 0.0) t.emplace_back(i, j, a(i, j));
    s.setFromTriplets(t.begin(), t.end());
    return s;
}

Eigen::MatrixXd random_spd(int n, unsigned seed, double shift) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = dist(rng);
    return m.transpose() * m + shift * Eigen::MatrixXd::Identity(n, n);
}

iga::LinearOperator matrix_op(const Eigen::MatrixXd& a) {
    return [a](const Eigen::VectorXd& x) { return Eigen::VectorXd(a * x); };
}

iga::LinearOperator identity_op() {
    return [](const Eigen::VectorXd& x) { return x; };
}

} // namespace

TEST_CASE("factorization solves identity and a hand saddle system") {
    const SparseMatrix eye = to_sparse(Eigen::MatrixXd::Identity(3, 3));
    const Factorization fi(eye);
    const Eigen::VectorXd b = Eigen::Vector3d(1.0, -2.0, 0.5);
    CHECK((fi.solve(b) - b).norm() <= 1e-15);

    Eigen::MatrixXd saddle(2, 2);
    saddle << 2, 1, 1, 0;
    const Factorization fs(to_sparse(saddle));
    const Eigen::VectorXd rhs = Eigen::Vector2d(3.0, 1.0);
    const Eigen::VectorXd x = fs.solve(rhs);
    CHECK((x - Eigen::Vector2d(1.0, 1.0)).norm() <= 1e-13);
}

TEST_CASE("factorization of a seeded random SPD system") {
    const Eigen::MatrixXd a = random_spd(200, 42, 1.0);
    const Factorization f(to_sparse(a));
    std::mt19937 rng(43);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::VectorXd b(200);
    for (int i = 0; i < 200; ++i) b(i) = dist(rng);
    const Eigen::VectorXd x = f.solve(b);
    CHECK((a * x - b).norm() <= 1e-11 * b.norm());
}

TEST_CASE("singular matrices are rejected with context") {
    Eigen::MatrixXd rank1(3, 3);
    rank1 << 1, 2, 3, 2, 4, 6, 3, 6, 9;
    CHECK_THROWS_AS(Factorization(to_sparse(rank1), "patch 7 saddle"), iga::SingularMatrixError);
    try {
        Factorization f(to_sparse(rank1), "patch 7 saddle");
    } catch (const iga::SingularMatrixError& e) {
        CHECK(std::string(e.what()).find("patch 7 saddle") != std::string::npos);
    }
}

TEST_CASE("pcg on the identity converges in one iteration") {
    const Eigen::VectorXd b = Eigen::Vector3d(1.0, 2.0, 3.0);
    auto [x, report] = iga::pcg(identity_op(), identity_op(), b, Eigen::Vector3d::Zero(), 1e-12, 10);
    CHECK(report.iterations == 1);
    CHECK(report.converged);
    CHECK(report.kappa_est == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((x - b).norm() <= 1e-14);
}

TEST_CASE("pcg on diag(1,4) finds kappa = 4 after two iterations") {
    Eigen::MatrixXd a = Eigen::Vector2d(1.0, 4.0).asDiagonal();
    const Eigen::VectorXd b = Eigen::Vector2d(1.0, 1.0);
    auto [x, report] = iga::pcg(matrix_op(a), identity_op(), b, Eigen::Vector2d::Zero(), 1e-14, 10);
    CHECK(report.iterations == 2);
    CHECK(report.kappa_est == doctest::Approx(4.0).epsilon(1e-8));
    CHECK((a * x - b).norm() <= 1e-12);
}

TEST_CASE("pcg kappa estimate matches the dense eigensolver") {
    const Eigen::MatrixXd a = random_spd(50, 7, 0.5);
    const iga::EigenDecomposition eig = iga::dense_sym_eig(a);
    const double kappa = eig.values(49) / eig.values(0);
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::VectorXd b(50);
    for (int i = 0; i < 50; ++i) b(i) = dist(rng);
    auto [x, report] = iga::pcg(matrix_op(a), identity_op(), b, Eigen::VectorXd::Zero(50), 1e-12, 200);
    CHECK(report.converged);
    CHECK(report.kappa_est == doctest::Approx(kappa).epsilon(0.05));
}

TEST_CASE("pcg with the exact inverse as preconditioner") {
    const Eigen::MatrixXd a = random_spd(30, 9, 0.5);
    const Eigen::MatrixXd ainv = a.inverse();
    Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(30, 1.0, 2.0);
    auto [x, report] = iga::pcg(matrix_op(a), matrix_op(ainv), b, Eigen::VectorXd::Zero(30), 1e-12, 50);
    CHECK(report.iterations == 1);
    CHECK((a * x - b).norm() <= 1e-10 * b.norm());
}

TEST_CASE("pcg terminates within n + 2 iterations on small systems") {
    for (unsigned seed : {11u, 12u, 13u}) {
        for (int n : {5, 12, 20}) {
            // moderate conditioning so float CG behaves like exact arithmetic
            const Eigen::MatrixXd a = random_spd(n, seed, 1.0);
            std::mt19937 rng(seed + 100);
            std::uniform_real_distribution<double> dist(-1.0, 1.0);
            Eigen::VectorXd b(n);
            for (int i = 0; i < n; ++i) b(i) = dist(rng);
            auto [x, report] =
                iga::pcg(matrix_op(a), identity_op(), b, Eigen::VectorXd::Zero(n), 1e-12, 500);
            CHECK(report.converged);
            CHECK(report.iterations <= n + 2);
        }
    }
}

TEST_CASE("lanczos kappa estimates grow monotonically") {
    for (unsigned seed : {1u, 2u, 3u, 4u, 5u}) {
        const Eigen::MatrixXd a = random_spd(40, seed, 0.2);
        std::mt19937 rng(seed + 50);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        Eigen::VectorXd b(40);
        for (int i = 0; i < 40; ++i) b(i) = dist(rng);
        auto [x, report] =
            iga::pcg(matrix_op(a), identity_op(), b, Eigen::VectorXd::Zero(40), 1e-12, 200);
        for (std::size_t i = 1; i < report.kappa_history.size(); ++i)
            CHECK(report.kappa_history[i] >= report.kappa_history[i - 1] - 1e-9);
    }
}

TEST_CASE("pcg rejects indefinite operators") {
    Eigen::MatrixXd a = Eigen::Vector2d(1.0, -1.0).asDiagonal();
    const Eigen::VectorXd b = Eigen::Vector2d(0.0, 1.0);
    CHECK_THROWS_AS(iga::pcg(matrix_op(a), identity_op(), b, Eigen::Vector2d::Zero(), 1e-10, 10),
                    iga::IndefiniteOperatorError);
}

TEST_CASE("dense symmetric eigensolver basics") {
    Eigen::MatrixXd a = Eigen::Vector3d(3.0, 1.0, 2.0).asDiagonal();
    const iga::EigenDecomposition eig = iga::dense_sym_eig(a);
    CHECK(eig.values(0) == doctest::Approx(1.0));
    CHECK(eig.values(1) == doctest::Approx(2.0));
    CHECK(eig.values(2) == doctest::Approx(3.0));

    const Eigen::MatrixXd b = random_spd(10, 21, 1.0);
    const iga::EigenDecomposition same = iga::dense_sym_eig(b, b);
    for (int i = 0; i < 10; ++i) CHECK(same.values(i) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("generalized eigenpairs: residuals and B-orthogonality") {
    const int n = 30;
    Eigen::MatrixXd a = random_spd(n, 31, 0.0);
    a = 0.5 * (a + a.transpose());
    const Eigen::MatrixXd b = random_spd(n, 32, 1.0);
    const iga::EigenDecomposition eig = iga::dense_sym_eig(a, b);
    const double scale = a.norm();
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd r = a * eig.vectors.col(i) - eig.values(i) * b * eig.vectors.col(i);
        CHECK(r.norm() <= 1e-8 * scale);
    }
    const Eigen::MatrixXd gram = eig.vectors.transpose() * b * eig.vectors;
    CHECK((gram - Eigen::MatrixXd::Identity(n, n)).norm() <= 1e-10 * n);
}

TEST_CASE("eigensolver guards: definiteness and size cap") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
    Eigen::MatrixXd b = Eigen::Vector3d(1.0, -1.0, 1.0).asDiagonal();
    CHECK_THROWS_AS(iga::dense_sym_eig(a, b), iga::DefinitenessError);

    const Eigen::MatrixXd big = Eigen::MatrixXd::Identity(4001, 4001);
    CHECK_THROWS_AS(iga::dense_sym_eig(big), iga::SizeCapError);
}

TEST_CASE("symmetry probe") {
    Eigen::MatrixXd a(2, 2);
    a << 1, 2, 2, 3;
    CHECK(iga::is_symmetric(to_sparse(a)));
    a(0, 1) = 2.1;
    CHECK_FALSE(iga::is_symmetric(to_sparse(a)));
}
