#include "torqflow/orlicz.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "torqflow/errors.hpp"

namespace torqflow {

namespace {

void check_positive_argument(double s) {
    if (!(s > 0.0))
        throw ArgumentError("gauge function argument must be positive, got " +
                            std::to_string(s));
}

// Adaptive Simpson on a smooth integrand; tol is absolute.
template <class F>
double simpson_recurse(const F& f, double a, double b, double fa, double fm, double fb,
                       double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol) {
    if (a == b) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_recurse(f, a, b, fa, fm, fb, whole, tol, 48);
}

constexpr double kQuadTol = 1e-12;

} // namespace

OrliczFunction OrliczFunction::power(double p) {
    if (!(p > 0.0))
        throw ValidationError("power gauge needs p > 0, got " + std::to_string(p));
    OrliczFunction f;
    f.kind_ = Kind::power;
    f.param_ = p;
    f.hat_base_ = p < 1.0 ? 0.0 : 1.0;
    f.convex_ = p >= 1.0;
    return f;
}

OrliczFunction OrliczFunction::exponential(double a) {
    if (!(a > 0.0))
        throw ValidationError("exponential gauge needs a > 0, got " + std::to_string(a));
    OrliczFunction f;
    f.kind_ = Kind::exponential;
    f.param_ = a;
    f.hat_base_ = 1.0;
    f.convex_ = true;
    return f;
}

OrliczFunction OrliczFunction::tabulated(std::vector<double> nodes,
                                         std::vector<double> values) {
    if (nodes.size() < 2 || nodes.size() != values.size())
        throw ValidationError("tabulated gauge needs at least two matching nodes");
    if (!(nodes.front() > 0.0) || !(values.front() > 0.0))
        throw ValidationError("tabulated gauge needs positive nodes and values");
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        if (!(nodes[i] > nodes[i - 1]))
            throw ValidationError("tabulated gauge nodes must be strictly increasing");
        if (!(values[i] > values[i - 1]))
            throw ValidationError("tabulated gauge values must be strictly increasing");
    }
    OrliczFunction f;
    f.kind_ = Kind::tabulated;
    f.param_ = 0.0;
    f.hat_base_ = 1.0;
    f.nodes_ = std::move(nodes);
    f.node_values_ = std::move(values);
    // Convex iff segment slopes are nondecreasing.
    f.convex_ = true;
    double prev_slope = -1.0;
    for (std::size_t i = 1; i < f.nodes_.size(); ++i) {
        const double slope = (f.node_values_[i] - f.node_values_[i - 1]) /
                             (f.nodes_[i] - f.nodes_[i - 1]);
        if (i > 1 && slope < prev_slope - 1e-14) f.convex_ = false;
        prev_slope = slope;
    }
    return f;
}

double OrliczFunction::operator()(double s) const {
    check_positive_argument(s);
    switch (kind_) {
    case Kind::power:
        return std::pow(s, param_);
    case Kind::exponential:
        return std::expm1(param_ * s) + s;
    case Kind::tabulated: {
        // Piecewise linear, extended by the end slopes.
        const auto& x = nodes_;
        const auto& y = node_values_;
        std::size_t hi = std::upper_bound(x.begin(), x.end(), s) - x.begin();
        if (hi == 0) hi = 1;
        if (hi == x.size()) hi = x.size() - 1;
        const double t = (s - x[hi - 1]) / (x[hi] - x[hi - 1]);
        const double v = y[hi - 1] + t * (y[hi] - y[hi - 1]);
        if (!(v > 0.0))
            throw NumericalError("tabulated gauge extrapolates to a nonpositive value at s = " +
                                 std::to_string(s));
        return v;
    }
    }
    return 0.0;
}

double OrliczFunction::deriv(double s) const {
    check_positive_argument(s);
    switch (kind_) {
    case Kind::power:
        return param_ * std::pow(s, param_ - 1.0);
    case Kind::exponential:
        return param_ * std::exp(param_ * s) + 1.0;
    case Kind::tabulated: {
        const auto& x = nodes_;
        std::size_t hi = std::upper_bound(x.begin(), x.end(), s) - x.begin();
        if (hi == 0) hi = 1;
        if (hi == x.size()) hi = x.size() - 1;
        return (node_values_[hi] - node_values_[hi - 1]) / (x[hi] - x[hi - 1]);
    }
    }
    return 0.0;
}

double OrliczFunction::hat(double s) const {
    check_positive_argument(s);
    if (kind_ == Kind::power) {
        const double p = param_;
        if (p == 1.0) return std::log(s);
        if (p < 1.0) return std::pow(s, 1.0 - p) / (1.0 - p);
        return (std::pow(s, 1.0 - p) - 1.0) / (1.0 - p);
    }
    return adaptive_simpson([this](double t) { return 1.0 / (*this)(t); }, hat_base_, s,
                            kQuadTol);
}

std::string OrliczFunction::label() const {
    std::ostringstream out;
    switch (kind_) {
    case Kind::power:
        out << "power(" << param_ << ")";
        break;
    case Kind::exponential:
        out << "exponential(" << param_ << ")";
        break;
    case Kind::tabulated:
        out << "tabulated[" << nodes_.size() << "]";
        break;
    }
    return out.str();
}

double phi_hat(const OrliczFunction& phi, double s) { return phi.hat(s); }

DensitySpec DensitySpec::fourier(double a0, std::vector<double> cos_coef,
                                 std::vector<double> sin_coef) {
    DensitySpec f;
    f.a0_ = a0;
    f.cos_coef_ = std::move(cos_coef);
    f.sin_coef_ = std::move(sin_coef);
    // Positivity on an oversampled grid; the highest harmonic present sets the
    // sampling needed to make sign changes visible.
    const int order = static_cast<int>(std::max(f.cos_coef_.size(), f.sin_coef_.size()));
    const int grid = std::max(1024, 64 * (order + 1));
    double min_v = a0;
    double min_theta = 0.0;
    for (int i = 0; i < grid; ++i) {
        const double t = 2.0 * std::numbers::pi * i / grid;
        const double v = f(t);
        if (i == 0 || v < min_v) {
            min_v = v;
            min_theta = t;
        }
    }
    if (!(min_v > 0.0))
        throw ValidationError("density is not positive, min " + std::to_string(min_v) +
                              " near theta = " + std::to_string(min_theta));
    f.min_on_grid_ = min_v;
    return f;
}

DensitySpec DensitySpec::constant(double value) { return fourier(value, {}, {}); }

double DensitySpec::operator()(double theta) const {
    double v = a0_;
    for (std::size_t k = 0; k < cos_coef_.size(); ++k)
        v += cos_coef_[k] * std::cos((k + 1.0) * theta);
    for (std::size_t k = 0; k < sin_coef_.size(); ++k)
        v += sin_coef_[k] * std::sin((k + 1.0) * theta);
    return v;
}

} // namespace torqflow
