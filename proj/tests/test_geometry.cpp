#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "torqflow/errors.hpp"
#include "torqflow/geometry.hpp"
#include "torqflow/io.hpp"

using namespace torqflow;

namespace {
constexpr double kPi = std::numbers::pi;

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}
} // namespace

TEST_CASE("grid size is validated at construction") {
    CHECK_THROWS_AS(disk_profile(1.0, 14), ArgumentError);
    CHECK_THROWS_AS(disk_profile(1.0, 17), ArgumentError);
    CHECK_THROWS_AS(SupportProfile(std::vector<double>(7, 1.0)), ArgumentError);
    CHECK_NOTHROW(disk_profile(1.0, 16));
}

TEST_CASE("disk profile is exact under both schemes") {
    for (DiffScheme scheme : {DiffScheme::central, DiffScheme::spectral}) {
        const SupportProfile p = disk_profile(1.5, 64);
        const auto dh = support_derivative(p, scheme);
        const auto b = principal_radius(p, scheme);
        // The spectral stencil rows cancel only to amplified roundoff, about
        // N^2 ulps, so constants come back at the 1e-11 level rather than 1e-15.
        for (int i = 0; i < p.size(); ++i) {
            CHECK(std::abs(dh[i]) < 1e-11);
            CHECK(b[i] == doctest::Approx(1.5).epsilon(1e-10));
        }
        CHECK(profile_area(p, scheme) == doctest::Approx(kPi * 1.5 * 1.5).epsilon(1e-10));
        const BoundaryPolygon poly = boundary_points(p, scheme);
        for (int i = 0; i < p.size(); ++i) {
            CHECK(poly.points[i].norm() == doctest::Approx(1.5).epsilon(1e-13));
            CHECK(poly.arc_weights[i] == doctest::Approx(1.5 * p.step()).epsilon(1e-12));
        }
    }
}

TEST_CASE("ellipse area and minimal principal radius match closed forms") {
    const double a = 1.2;
    const double b = 0.8;
    const SupportProfile p = ellipse_profile(a, b, 512);

    // Area pi*a*b; the central scheme carries the b truncation error only.
    CHECK(profile_area(p, DiffScheme::central) ==
          doctest::Approx(kPi * a * b).epsilon(5e-4));
    CHECK(profile_area(p, DiffScheme::spectral) ==
          doctest::Approx(kPi * a * b).epsilon(1e-8));

    // Radius of curvature a^2 b^2 / h^3 is smallest at the long axis.
    const double b_min = a * a * b * b / (a * a * a);
    const ConvexityReport rep = validate_support(p, DiffScheme::spectral);
    CHECK(rep.ok);
    CHECK(rep.min_h == doctest::Approx(b).epsilon(1e-6));
    CHECK(rep.min_b == doctest::Approx(b_min).epsilon(1e-7));
    CHECK(validate_support(p, DiffScheme::central).min_b ==
          doctest::Approx(b_min).epsilon(4e-3));
}

TEST_CASE("boundary points satisfy the radial identity rho^2 = h^2 + (h')^2") {
    const SupportProfile p = ellipse_profile(1.2, 0.8, 128);
    for (DiffScheme scheme : {DiffScheme::central, DiffScheme::spectral}) {
        const auto dh = support_derivative(p, scheme);
        const BoundaryPolygon poly = boundary_points(p, scheme);
        for (int i = 0; i < p.size(); ++i) {
            const double rho2 = poly.points[i].dot(poly.points[i]);
            CHECK(rho2 == doctest::Approx(p[i] * p[i] + dh[i] * dh[i]).epsilon(1e-13));
        }
    }
}

TEST_CASE("boundary polygon of a convex profile is convex and positively oriented") {
    const SupportProfile p = ellipse_profile(1.2, 0.8, 128);
    const BoundaryPolygon poly = boundary_points(p);
    const int n = p.size();
    double area2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const Vec2 e0 = poly.points[(i + 1) % n] - poly.points[i];
        const Vec2 e1 = poly.points[(i + 2) % n] - poly.points[(i + 1) % n];
        CHECK(e0.cross(e1) > 0.0);
        area2 += poly.points[i].cross(poly.points[(i + 1) % n]);
    }
    CHECK(area2 > 0.0);
    // Shoelace area agrees with the support form of the area.
    CHECK(0.5 * area2 == doctest::Approx(profile_area(p)).epsilon(1e-3));
}

TEST_CASE("spectral differentiation is exact on band-limited profiles") {
    const int n = 64;
    const SupportProfile p = fourier_profile(1.0, {0.0, 0.0, 0.2}, {}, n);
    std::vector<double> d_exact(n), d2_exact(n);
    for (int i = 0; i < n; ++i) {
        const double t = p.theta(i);
        d_exact[i] = -0.6 * std::sin(3.0 * t);
        d2_exact[i] = -1.8 * std::cos(3.0 * t);
    }
    CHECK(max_abs_diff(support_derivative(p, DiffScheme::spectral), d_exact) < 1e-12);
    CHECK(max_abs_diff(support_second_derivative(p, DiffScheme::spectral), d2_exact) < 1e-11);
}

TEST_CASE("central differences converge at second order") {
    auto err = [](int n) {
        const SupportProfile p = fourier_profile(1.0, {0.0, 0.0, 0.2}, {}, n);
        std::vector<double> exact(n);
        for (int i = 0; i < n; ++i) exact[i] = -0.6 * std::sin(3.0 * p.theta(i));
        return max_abs_diff(support_derivative(p, DiffScheme::central), exact);
    };
    const double e1 = err(128);
    const double e2 = err(256);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("curvature is the reciprocal principal radius and scales correctly") {
    const SupportProfile p = ellipse_profile(1.2, 0.8, 64);
    const auto k = curvature(p);
    const auto b = principal_radius(p);
    for (int i = 0; i < p.size(); ++i)
        CHECK(std::abs(k[i] * b[i] - 1.0) < 4e-16);

    // Dilation by 2 is exact in floating point.
    const auto k2 = curvature(rescale(p, 2.0));
    for (int i = 0; i < p.size(); ++i)
        CHECK(k2[i] == 0.5 * k[i]);

    const auto k13 = curvature(rescale(p, 1.3));
    for (int i = 0; i < p.size(); ++i)
        CHECK(k13[i] * 1.3 == doctest::Approx(k[i]).epsilon(1e-13));

    CHECK(profile_area(rescale(p, 2.0)) == doctest::Approx(4.0 * profile_area(p)).epsilon(1e-13));
    CHECK_THROWS_AS(rescale(p, -1.0), ArgumentError);
    CHECK_THROWS_AS(rescale(p, 0.0), ArgumentError);
}

TEST_CASE("convexity loss is detected and reported") {
    // b = 1 - 2.7 cos(2 theta) dips to -1.7 at theta = 0.
    const SupportProfile p = fourier_profile(1.0, {0.0, 0.9}, {}, 256);
    const ConvexityReport rep = validate_support(p);
    CHECK_FALSE(rep.ok);
    CHECK(rep.min_b == doctest::Approx(-1.7).epsilon(5e-3));
    CHECK(rep.min_h == doctest::Approx(0.1).epsilon(1e-10));
    CHECK_THROWS_AS(curvature(p), ConvexityError);
    CHECK_THROWS_AS(boundary_points(p), ConvexityError);
    try {
        curvature(p);
    } catch (const ConvexityError& e) {
        CHECK(e.min_b() < 0.0);
        CHECK(e.min_h() > 0.0);
    }
}

TEST_CASE("radial profile requires the origin interior") {
    // Unit disk centered at (2, 0): convex, but the origin is outside.
    const SupportProfile p = fourier_profile(1.0, {2.0}, {}, 64);
    const ConvexityReport rep = validate_support(p, DiffScheme::spectral);
    CHECK(rep.min_h == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK(rep.min_b == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_THROWS_AS(radial_profile(p), GeometryError);

    // The boundary parameterization itself stays valid: it traces the circle.
    const BoundaryPolygon poly = boundary_points(p, DiffScheme::spectral);
    for (int i = 0; i < p.size(); ++i) {
        const Vec2 c = poly.points[i] - Vec2{2.0, 0.0};
        CHECK(c.norm() == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("radial profile winds once with increasing angle") {
    const SupportProfile p = ellipse_profile(1.2, 0.8, 128);
    const RadialProfile rp = radial_profile(p);
    for (int i = 1; i < p.size(); ++i)
        CHECK(rp.angle[i] > rp.angle[i - 1]);
    CHECK(rp.angle.back() - rp.angle.front() < 2.0 * kPi);
    const double rho_min = *std::min_element(rp.radius.begin(), rp.radius.end());
    const double rho_max = *std::max_element(rp.radius.begin(), rp.radius.end());
    CHECK(rho_min == doctest::Approx(0.8).epsilon(1e-6));
    CHECK(rho_max == doctest::Approx(1.2).epsilon(1e-6));
}

TEST_CASE("fourier profile evaluates the stated series") {
    const SupportProfile p = fourier_profile(2.0, {0.1, 0.0, 0.05}, {0.0, 0.2}, 32);
    const double t = p.theta(7);
    const double expect = 2.0 + 0.1 * std::cos(t) + 0.05 * std::cos(3.0 * t) +
                          0.2 * std::sin(2.0 * t);
    CHECK(p[7] == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("profile csv round trip is bit exact") {
    const SupportProfile p = ellipse_profile(1.2, 0.8, 64);
    const std::string path = "tmp_profile_roundtrip.csv";
    write_profile_csv(path, p);
    const SupportProfile q = read_profile_csv(path);
    REQUIRE(q.size() == p.size());
    for (int i = 0; i < p.size(); ++i)
        CHECK(q[i] == p[i]);
    std::remove(path.c_str());
}

TEST_CASE("profile csv reader rejects malformed input") {
    const std::string path = "tmp_profile_bad.csv";
    {
        FILE* f = std::fopen(path.c_str(), "wb");
        std::fputs("alpha,beta\n0,1\n", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(read_profile_csv(path), ValidationError);
    {
        FILE* f = std::fopen(path.c_str(), "wb");
        std::fputs("theta,h\n0,abc\n", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(read_profile_csv(path), ValidationError);
    std::remove(path.c_str());
    CHECK_THROWS_AS(read_profile_csv("no_such_file.csv"), ValidationError);
}

TEST_CASE("resample interpolates band-limited profiles exactly") {
    // The ellipse support function is smooth, so doubling the grid through
    // the trigonometric interpolant must land on the same body: shared nodes
    // bit-exactly, new nodes to spectral accuracy of the implicit equation.
    const SupportProfile coarse = ellipse_profile(1.2, 0.8, 64);
    const SupportProfile fine = resample(coarse, 128);
    REQUIRE(fine.size() == 128);
    for (int i = 0; i < coarse.size(); ++i) CHECK(fine[2 * i] == coarse[i]);
    const SupportProfile direct = ellipse_profile(1.2, 0.8, 128);
    for (int i = 0; i < fine.size(); ++i)
        CHECK(fine[i] == doctest::Approx(direct[i]).epsilon(1e-12));

    // Non-commensurate target grid, still the same body.
    const SupportProfile odd_ratio = resample(coarse, 150);
    const SupportProfile direct150 = ellipse_profile(1.2, 0.8, 150);
    for (int i = 0; i < odd_ratio.size(); ++i)
        CHECK(odd_ratio[i] == doctest::Approx(direct150[i]).epsilon(1e-10));

    CHECK_THROWS_AS(resample(coarse, 15), ArgumentError);
    CHECK_THROWS_AS(resample(coarse, 20 + 1), ArgumentError);
}
