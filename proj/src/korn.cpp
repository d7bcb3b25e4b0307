#include "iga/korn.hpp"

#include <algorithm>
#include <cmath>

#include "iga/errors.hpp"
#include "iga/linalg.hpp"
#include "iga/quadrature.hpp"

namespace iga {

double korn_quotient(const MultiPatchDomain& domain, const MatrixField& gradient) {
    double strain2 = 0.0, grad2 = 0.0;
    for (int k = 0; k < domain.patch_count(); ++k) {
        const TensorSplineSpace& space = domain.space(k);
        const GeometryMap& map = domain.map(k);
        const int p = std::max(space.direction(0).degree(), space.direction(1).degree());
        const GaussRule& rule = GaussRule::legendre(p + 2);
        const auto bx = space.direction(0).breakpoints();
        const auto by = space.direction(1).breakpoints();
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
                        const Eigen::Matrix2d g = gradient(map(xh, yh));
                        const Eigen::Matrix2d eps = 0.5 * (g + g.transpose());
                        strain2 += w * eps.squaredNorm();
                        grad2 += w * g.squaredNorm();
                    }
                }
            }
        }
    }
    if (grad2 <= 0.0)
        throw QuotientError("Korn quotient undefined: field has zero H1 seminorm");
    return std::sqrt(strain2 / grad2);
}

KornEstimate korn_global(const DofMap& dofmap, int dense_cap) {
    const int n = dofmap.global_dim();
    if (n > dense_cap)
        throw SizeCapError("global Korn estimate refused: dimension " + std::to_string(n) +
                           " exceeds the cap " + std::to_string(dense_cap));
    const Eigen::MatrixXd strain = Eigen::MatrixXd(assemble_strain_gram(dofmap));
    const Eigen::MatrixXd grad = Eigen::MatrixXd(assemble_grad_gram(dofmap));
    const EigenDecomposition eig = dense_sym_eig(strain, grad);
    KornEstimate out;
    out.alpha = std::sqrt(std::max(eig.values(0), 0.0));
    out.dimension = n;
    out.constraint = "homogeneous Dirichlet trace";
    out.minimizer = eig.vectors.col(0);
    return out;
}

KornEstimate korn_local_curlfree(const GeometryMap& map, const TensorSplineSpace& space,
                                 int dense_cap) {
    std::vector<GeometryMap> maps{map};
    std::vector<std::array<BoundaryTag, 4>> tags{{BoundaryTag::neumann, BoundaryTag::neumann,
                                                  BoundaryTag::neumann, BoundaryTag::neumann}};
    std::vector<TensorSplineSpace> spaces{space};
    const MultiPatchDomain domain =
        build_topology(std::move(maps), std::move(tags), std::move(spaces));

    const int n = 2 * domain.space(0).total_dim();
    if (n > dense_cap)
        throw SizeCapError("local Korn estimate refused: dimension " + std::to_string(n) +
                           " exceeds the cap " + std::to_string(dense_cap));

    const Eigen::MatrixXd strain = Eigen::MatrixXd(patch_strain_gram(domain, 0));
    const Eigen::MatrixXd grad = Eigen::MatrixXd(patch_grad_gram(domain, 0));
    const Eigen::VectorXd curl = patch_curl_functional(domain, 0);

    // deflate the curl-constraint direction and the two translations
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, 3);
    for (int s = 0; s < n / 2; ++s) {
        w(2 * s, 0) = 1.0;
        w(2 * s + 1, 1) = 1.0;
    }
    w.col(2) = curl;
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(w);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd basis = q.rightCols(n - 3);

    const Eigen::MatrixXd ep = basis.transpose() * strain * basis;
    const Eigen::MatrixXd sp = basis.transpose() * grad * basis;
    const EigenDecomposition eig = dense_sym_eig(ep, sp);

    KornEstimate out;
    out.alpha = std::sqrt(std::max(eig.values(0), 0.0));
    out.dimension = n - 3;
    out.constraint = "zero-mean curl, translations deflated";
    out.minimizer = basis * eig.vectors.col(0);
    return out;
}

} // namespace iga
