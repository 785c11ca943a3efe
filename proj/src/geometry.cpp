#include "torqflow/geometry.hpp"

#include <algorithm>
#include <numbers>
#include <string>

#include "torqflow/errors.hpp"

namespace torqflow {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_grid_size(int n) {
    if (n < 16 || n % 2 != 0)
        throw ArgumentError("grid size must be even and at least 16, got " +
                            std::to_string(n));
}

// -------------------------------------------------------------------------
// periodic differentiation
// -------------------------------------------------------------------------

std::vector<double> central_first(const std::vector<double>& h, double dt) {
    const int n = static_cast<int>(h.size());
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        const int ip = (i + 1) % n;
        const int im = (i + n - 1) % n;
        out[i] = (h[ip] - h[im]) / (2.0 * dt);
    }
    return out;
}

std::vector<double> central_second(const std::vector<double>& h, double dt) {
    const int n = static_cast<int>(h.size());
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        const int ip = (i + 1) % n;
        const int im = (i + n - 1) % n;
        out[i] = (h[ip] - 2.0 * h[i] + h[im]) / (dt * dt);
    }
    return out;
}

double alternating_sign(int k) { return (k & 1) ? -1.0 : 1.0; }

// Trigonometric differentiation matrices for an even periodic grid, applied
// row by row. Entries depend only on i - j, so one stencil row suffices.
std::vector<double> spectral_first(const std::vector<double>& h, double dt) {
    const int n = static_cast<int>(h.size());
    std::vector<double> stencil(n, 0.0);
    for (int k = 1; k < n; ++k)
        stencil[k] = 0.5 * alternating_sign(k) / std::tan(0.5 * k * dt);
    std::vector<double> out(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
            const int k = (i - j + n) % n;
            if (k != 0) acc += stencil[k] * h[j];
        }
        out[i] = acc;
    }
    return out;
}

std::vector<double> spectral_second(const std::vector<double>& h, double dt) {
    const int n = static_cast<int>(h.size());
    std::vector<double> stencil(n);
    stencil[0] = -std::numbers::pi * std::numbers::pi / (3.0 * dt * dt) - 1.0 / 6.0;
    for (int k = 1; k < n; ++k) {
        const double s = std::sin(0.5 * k * dt);
        stencil[k] = -alternating_sign(k) / (2.0 * s * s);
    }
    std::vector<double> out(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j)
            acc += stencil[(i - j + n) % n] * h[j];
        out[i] = acc;
    }
    return out;
}

} // namespace

SupportProfile::SupportProfile(std::vector<double> values) : h_(std::move(values)) {
    check_grid_size(static_cast<int>(h_.size()));
}

double SupportProfile::step() const { return kTwoPi / size(); }

SupportProfile disk_profile(double radius, int grid_size) {
    check_grid_size(grid_size);
    return SupportProfile(std::vector<double>(grid_size, radius));
}

SupportProfile ellipse_profile(double a, double b, int grid_size) {
    check_grid_size(grid_size);
    std::vector<double> h(grid_size);
    for (int i = 0; i < grid_size; ++i) {
        const double t = kTwoPi * i / grid_size;
        const double c = a * std::cos(t);
        const double s = b * std::sin(t);
        h[i] = std::sqrt(c * c + s * s);
    }
    return SupportProfile(std::move(h));
}

SupportProfile fourier_profile(double a0, const std::vector<double>& cos_coef,
                               const std::vector<double>& sin_coef, int grid_size) {
    check_grid_size(grid_size);
    std::vector<double> h(grid_size, a0);
    for (int i = 0; i < grid_size; ++i) {
        const double t = kTwoPi * i / grid_size;
        for (std::size_t k = 0; k < cos_coef.size(); ++k)
            h[i] += cos_coef[k] * std::cos((k + 1.0) * t);
        for (std::size_t k = 0; k < sin_coef.size(); ++k)
            h[i] += sin_coef[k] * std::sin((k + 1.0) * t);
    }
    return SupportProfile(std::move(h));
}

std::vector<double> support_derivative(const SupportProfile& p, DiffScheme scheme) {
    return scheme == DiffScheme::central ? central_first(p.values(), p.step())
                                         : spectral_first(p.values(), p.step());
}

std::vector<double> support_second_derivative(const SupportProfile& p, DiffScheme scheme) {
    return scheme == DiffScheme::central ? central_second(p.values(), p.step())
                                         : spectral_second(p.values(), p.step());
}

std::vector<double> principal_radius(const SupportProfile& p, DiffScheme scheme) {
    std::vector<double> b = support_second_derivative(p, scheme);
    for (int i = 0; i < p.size(); ++i) b[i] += p[i];
    return b;
}

ConvexityReport validate_support(const SupportProfile& p, DiffScheme scheme) {
    const std::vector<double> b = principal_radius(p, scheme);
    ConvexityReport r;
    r.min_h = *std::min_element(p.values().begin(), p.values().end());
    r.min_b = *std::min_element(b.begin(), b.end());
    r.ok = r.min_h > 0.0 && r.min_b > 0.0;
    return r;
}

std::vector<double> curvature(const SupportProfile& p, DiffScheme scheme) {
    std::vector<double> b = principal_radius(p, scheme);
    const ConvexityReport r = validate_support(p, scheme);
    if (!r.ok)
        throw ConvexityError("support profile is not strictly convex (min h = " +
                                 std::to_string(r.min_h) + ", min b = " +
                                 std::to_string(r.min_b) + ")",
                             r.min_h, r.min_b);
    for (double& v : b) v = 1.0 / v;
    return b;
}

BoundaryPolygon boundary_points(const SupportProfile& p, DiffScheme scheme) {
    const std::vector<double> b = principal_radius(p, scheme);
    const double min_b = *std::min_element(b.begin(), b.end());
    if (min_b <= 0.0)
        throw ConvexityError("boundary parameterization degenerates, min b = " +
                                 std::to_string(min_b),
                             *std::min_element(p.values().begin(), p.values().end()),
                             min_b);
    const std::vector<double> dh = support_derivative(p, scheme);
    const double dt = p.step();
    BoundaryPolygon poly;
    poly.points.resize(p.size());
    poly.normals.resize(p.size());
    poly.arc_weights.resize(p.size());
    for (int i = 0; i < p.size(); ++i) {
        const double t = p.theta(i);
        const Vec2 n{std::cos(t), std::sin(t)};
        poly.normals[i] = n;
        poly.points[i] = p[i] * n + dh[i] * n.perp();
        poly.arc_weights[i] = b[i] * dt;
    }
    return poly;
}

RadialProfile radial_profile(const SupportProfile& p, DiffScheme scheme) {
    const ConvexityReport r = validate_support(p, scheme);
    if (r.min_b <= 0.0)
        throw ConvexityError("radial profile needs a strictly convex body", r.min_h,
                             r.min_b);
    if (r.min_h <= 0.0)
        throw GeometryError("radial profile needs the origin interior, min h = " +
                            std::to_string(r.min_h));
    const BoundaryPolygon poly = boundary_points(p, scheme);
    RadialProfile out;
    out.angle.resize(p.size());
    out.radius.resize(p.size());
    double prev = 0.0;
    for (int i = 0; i < p.size(); ++i) {
        const Vec2 x = poly.points[i];
        out.radius[i] = x.norm();
        double a = std::atan2(x.y, x.x);
        if (i > 0) {
            while (a < prev) a += kTwoPi;
            if (a <= prev)
                throw NumericalError("polar angle failed to advance at node " +
                                     std::to_string(i));
        }
        out.angle[i] = a;
        prev = a;
    }
    if (out.angle.back() - out.angle.front() >= kTwoPi)
        throw NumericalError("polar angle wound more than once");
    return out;
}

double profile_area(const SupportProfile& p, DiffScheme scheme) {
    const std::vector<double> b = principal_radius(p, scheme);
    double acc = 0.0;
    for (int i = 0; i < p.size(); ++i) acc += p[i] * b[i];
    return 0.5 * acc * p.step();
}

SupportProfile rescale(const SupportProfile& p, double factor) {
    if (!(factor > 0.0))
        throw ArgumentError("rescale factor must be positive, got " +
                            std::to_string(factor));
    std::vector<double> h = p.values();
    for (double& v : h) v *= factor;
    return SupportProfile(std::move(h));
}

SupportProfile resample(const SupportProfile& p, int grid_size) {
    check_grid_size(grid_size);
    const int n = p.size();
    const double dt = p.step();
    const double out_dt = kTwoPi / grid_size;
    std::vector<double> out(grid_size, 0.0);
    for (int i = 0; i < grid_size; ++i) {
        double acc = 0.0;
        bool shared = false;
        for (int j = 0; j < n; ++j) {
            const double x = std::remainder(i * out_dt - j * dt, kTwoPi);
            if (std::abs(x) < 1e-13) {
                // Coincident node: every other kernel weight is an exact
                // zero, so take the value instead of summing roundoff.
                out[i] = p[j];
                shared = true;
                break;
            }
            // Periodic sinc kernel of the even-grid interpolant.
            acc += p[j] * std::sin(0.5 * n * x) / (n * std::tan(0.5 * x));
        }
        if (!shared) out[i] = acc;
    }
    return SupportProfile(std::move(out));
}

} // namespace torqflow
