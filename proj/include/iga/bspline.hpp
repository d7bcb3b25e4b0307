#pragma once

#include <span>
#include <utility>
#include <vector>

namespace iga {

/// Open (clamped) knot vector on [0,1] with Cox-de Boor evaluation.
class KnotVector {
public:
    KnotVector(int degree, std::vector<double> knots);

    /// Open knot vector with 2^levels equal spans, smooth interior knots.
    static KnotVector uniform(int degree, int levels);

    int degree() const noexcept { return degree_; }
    const std::vector<double>& knots() const noexcept { return knots_; }

    /// Number of basis functions.
    int size() const noexcept { return static_cast<int>(knots_.size()) - degree_ - 1; }

    double max_span() const noexcept { return max_span_; }
    double min_span() const noexcept { return min_span_; }

    /// Knot span index containing x; x = 1 resolves to the last nonempty span.
    int find_span(double x) const;

    /// The degree+1 basis values (deriv = 0) or first derivatives (deriv = 1)
    /// that may be nonzero at x, plus the index of the first of them.
    std::pair<int, std::vector<double>> eval_basis(double x, int deriv) const;

    /// Values and first derivatives in one sweep; both spans must have
    /// degree()+1 entries.
    void eval_with_derivative(double x, int& first, std::span<double> values,
                              std::span<double> derivs) const;

    /// Every nonzero span bisected; degree unchanged, old knots kept.
    KnotVector refined() const;

    /// Distinct knot values (span boundaries).
    std::vector<double> breakpoints() const;

    /// Greville abscissae; linear functions interpolate there.
    std::vector<double> greville() const;

    bool operator==(const KnotVector&) const = default;

private:
    int degree_;
    std::vector<double> knots_;
    double max_span_ = 0.0;
    double min_span_ = 1.0;
};

/// Tensor product of two univariate spline spaces on the unit square.
class TensorSplineSpace {
public:
    TensorSplineSpace(KnotVector kx, KnotVector ky);

    const KnotVector& direction(int d) const { return d == 0 ? kx_ : ky_; }
    int dim(int d) const { return direction(d).size(); }
    int total_dim() const { return dim(0) * dim(1); }

    double max_span() const;
    double min_span() const;
    double quasi_uniformity() const { return max_span() / min_span(); }

    TensorSplineSpace refined() const;

    bool operator==(const TensorSplineSpace&) const = default;

private:
    KnotVector kx_, ky_;
};

TensorSplineSpace make_uniform_space(int degree, int levels);
TensorSplineSpace uniform_refine(const TensorSplineSpace& space);

} // namespace iga
