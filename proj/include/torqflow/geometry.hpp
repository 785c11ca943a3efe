#pragma once

#include <cmath>
#include <vector>

namespace torqflow {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {s * x, s * y}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double cross(Vec2 o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    // 90 degree counterclockwise rotation.
    Vec2 perp() const { return {-y, x}; }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

enum class DiffScheme { central, spectral };

// Support values h(theta_i) on the uniform angular grid theta_i = 2*pi*i/N.
// The grid size is even and at least 16; every instance in flight satisfies
// that, the constructor rejects anything else.
class SupportProfile {
public:
    explicit SupportProfile(std::vector<double> values);

    int size() const { return static_cast<int>(h_.size()); }
    double step() const;
    double theta(int i) const { return step() * i; }
    double operator[](int i) const { return h_[i]; }
    const std::vector<double>& values() const { return h_; }
    std::vector<double>& values() { return h_; }

private:
    std::vector<double> h_;
};

SupportProfile disk_profile(double radius, int grid_size);
SupportProfile ellipse_profile(double a, double b, int grid_size);
// h(theta) = a0 + sum_k cos_coef[k] cos((k+1) theta) + sin_coef[k] sin((k+1) theta).
SupportProfile fourier_profile(double a0, const std::vector<double>& cos_coef,
                               const std::vector<double>& sin_coef, int grid_size);

// Periodic derivative on the angular grid. Central differences by default;
// the spectral scheme applies the trigonometric differentiation matrix and is
// exact for band-limited profiles.
std::vector<double> support_derivative(const SupportProfile& p,
                                       DiffScheme scheme = DiffScheme::central);
std::vector<double> support_second_derivative(const SupportProfile& p,
                                              DiffScheme scheme = DiffScheme::central);

// Principal radius of curvature b = h'' + h. Positive iff the profile is the
// support function of a strictly convex body.
std::vector<double> principal_radius(const SupportProfile& p,
                                     DiffScheme scheme = DiffScheme::central);

struct ConvexityReport {
    double min_h = 0.0;
    double min_b = 0.0;
    bool ok = false; // min_h > 0 and min_b > 0
};

ConvexityReport validate_support(const SupportProfile& p,
                                 DiffScheme scheme = DiffScheme::central);

// Gauss curvature kappa = 1/b. Throws ConvexityError unless validate_support
// passes.
std::vector<double> curvature(const SupportProfile& p,
                              DiffScheme scheme = DiffScheme::central);

struct BoundaryPolygon {
    std::vector<Vec2> points;        // X(theta_i), positively oriented
    std::vector<Vec2> normals;       // outward unit normal at theta_i
    std::vector<double> arc_weights; // ds_i = b_i * (2 pi / N)
};

// Boundary parameterization X = h n + h' t with n = (cos, sin) the outward
// normal and t its counterclockwise rotation. Requires b > 0 everywhere.
BoundaryPolygon boundary_points(const SupportProfile& p,
                                DiffScheme scheme = DiffScheme::central);

struct RadialProfile {
    std::vector<double> angle;  // polar angle of X(theta_i), unwrapped, increasing
    std::vector<double> radius; // rho_i = |X(theta_i)|
};

// Polar description of the boundary as seen from the origin. Requires the
// origin interior (min h > 0); the unwrapped angle winds exactly once.
RadialProfile radial_profile(const SupportProfile& p,
                             DiffScheme scheme = DiffScheme::central);

// Enclosed area, (1/2) sum h_i b_i dtheta.
double profile_area(const SupportProfile& p, DiffScheme scheme = DiffScheme::central);

// Dilation about the origin by factor > 0.
SupportProfile rescale(const SupportProfile& p, double factor);

// Band-limited trigonometric interpolation onto a grid of the given size —
// the interpolant whose derivatives the spectral stencils compute. Source
// nodes shared with the target grid reproduce their values exactly.
SupportProfile resample(const SupportProfile& p, int grid_size);

} // namespace torqflow
