#include "iga/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "iga/errors.hpp"

namespace iga {

namespace {

void validate(int degree, const std::vector<double>& knots) {
    const int p = degree;
    if (p < 1) throw KnotVectorError("spline degree must be at least 1");
    if (p > 15) throw KnotVectorError("spline degree larger than 15 is not supported");
    const int count = static_cast<int>(knots.size());
    if (count < 2 * (p + 1))
        throw KnotVectorError("knot vector too short for the degree");
    if (!std::is_sorted(knots.begin(), knots.end()))
        throw KnotVectorError("knots must be nondecreasing");
    for (int i = 0; i <= p; ++i) {
        if (knots[i] != 0.0 || knots[count - 1 - i] != 1.0)
            throw KnotVectorError("knot vector must be open on [0,1]");
    }
    if (knots[p + 1] == 0.0 || knots[count - p - 2] == 1.0)
        throw KnotVectorError("end knots repeated more than degree+1 times");
    // interior multiplicity at most p keeps H1 conformity
    int run = 1;
    for (int i = p + 2; i < count - p - 1; ++i) {
        run = (knots[i] == knots[i - 1]) ? run + 1 : 1;
        if (run > p)
            throw KnotVectorError(
                "interior knot " + std::to_string(knots[i]) + " repeated more than degree times");
    }
}

} // namespace

KnotVector::KnotVector(int degree, std::vector<double> knots)
    : degree_(degree), knots_(std::move(knots)) {
    validate(degree_, knots_);
    min_span_ = 1.0;
    max_span_ = 0.0;
    for (std::size_t i = 1; i < knots_.size(); ++i) {
        const double span = knots_[i] - knots_[i - 1];
        if (span > 0.0) {
            max_span_ = std::max(max_span_, span);
            min_span_ = std::min(min_span_, span);
        }
    }
}

KnotVector KnotVector::uniform(int degree, int levels) {
    if (degree < 1) throw KnotVectorError("spline degree must be at least 1");
    if (levels < 0) throw KnotVectorError("refinement level must be nonnegative");
    const int spans = 1 << levels;
    std::vector<double> knots;
    knots.reserve(2 * (degree + 1) + spans - 1);
    knots.insert(knots.end(), degree + 1, 0.0);
    for (int i = 1; i < spans; ++i)
        knots.push_back(static_cast<double>(i) / spans); // dyadic, exact
    knots.insert(knots.end(), degree + 1, 1.0);
    return KnotVector(degree, std::move(knots));
}

int KnotVector::find_span(double x) const {
    if (x < 0.0 || x > 1.0)
        throw DomainError("evaluation point " + std::to_string(x) + " outside [0,1]");
    const int n = size() - 1; // last basis index == last span index
    if (x >= knots_[n + 1]) return n;
    int lo = degree_, hi = n + 1;
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        (x < knots_[mid] ? hi : lo) = mid;
    }
    return lo;
}

void KnotVector::eval_with_derivative(double x, int& first, std::span<double> values,
                                      std::span<double> derivs) const {
    const int p = degree_;
    const int span = find_span(x);
    first = span - p;

    double left[16], right[16], lower[16];
    values[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        if (j == p) // keep the degree p-1 row for the derivative formula
            for (int r = 0; r < p; ++r) lower[r] = values[r];
        left[j] = x - knots_[span + 1 - j];
        right[j] = knots_[span + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = values[r] / (right[r + 1] + left[j - r]);
            values[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        values[j] = saved;
    }

    for (int j = 0; j <= p; ++j) {
        const int i = first + j;
        double d = 0.0;
        if (j >= 1) {
            const double den = knots_[i + p] - knots_[i];
            if (den > 0.0) d += lower[j - 1] / den;
        }
        if (j <= p - 1) {
            const double den = knots_[i + p + 1] - knots_[i + 1];
            if (den > 0.0) d -= lower[j] / den;
        }
        derivs[j] = p * d;
    }
}

std::pair<int, std::vector<double>> KnotVector::eval_basis(double x, int deriv) const {
    if (deriv != 0 && deriv != 1)
        throw DomainError("only derivative orders 0 and 1 are supported");
    std::vector<double> values(degree_ + 1), derivs(degree_ + 1);
    int first = 0;
    eval_with_derivative(x, first, values, derivs);
    return {first, deriv == 0 ? std::move(values) : std::move(derivs)};
}

KnotVector KnotVector::refined() const {
    std::vector<double> knots;
    knots.reserve(knots_.size() * 2);
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
        knots.push_back(knots_[i]);
        if (knots_[i + 1] > knots_[i])
            knots.push_back(0.5 * (knots_[i] + knots_[i + 1]));
    }
    knots.push_back(knots_.back());
    return KnotVector(degree_, std::move(knots));
}

std::vector<double> KnotVector::breakpoints() const {
    std::vector<double> out;
    for (double k : knots_)
        if (out.empty() || k > out.back()) out.push_back(k);
    return out;
}

std::vector<double> KnotVector::greville() const {
    std::vector<double> out(size());
    for (int i = 0; i < size(); ++i) {
        double sum = 0.0;
        for (int j = 1; j <= degree_; ++j) sum += knots_[i + j];
        out[i] = sum / degree_;
    }
    return out;
}

TensorSplineSpace::TensorSplineSpace(KnotVector kx, KnotVector ky)
    : kx_(std::move(kx)), ky_(std::move(ky)) {}

double TensorSplineSpace::max_span() const {
    return std::max(kx_.max_span(), ky_.max_span());
}

double TensorSplineSpace::min_span() const {
    return std::min(kx_.min_span(), ky_.min_span());
}

TensorSplineSpace TensorSplineSpace::refined() const {
    return TensorSplineSpace(kx_.refined(), ky_.refined());
}

TensorSplineSpace make_uniform_space(int degree, int levels) {
    return TensorSplineSpace(KnotVector::uniform(degree, levels),
                             KnotVector::uniform(degree, levels));
}

TensorSplineSpace uniform_refine(const TensorSplineSpace& space) {
    return space.refined();
}

} // namespace iga
