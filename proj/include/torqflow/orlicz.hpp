#pragma once

#include <string>
#include <vector>

namespace torqflow {

// Gauge function phi: (0, inf) -> (0, inf), strictly increasing. The three
// families share one value type so configs can swap them freely; hat() is the
// antiderivative of 1/phi anchored at hat_base(), the quantity the flow's
// entropy sums against the density.
class OrliczFunction {
public:
    enum class Kind { power, exponential, tabulated };

    static OrliczFunction power(double p);
    static OrliczFunction exponential(double a);
    static OrliczFunction tabulated(std::vector<double> nodes, std::vector<double> values);

    double operator()(double s) const;
    double deriv(double s) const;
    double hat(double s) const;
    double hat_base() const { return hat_base_; }
    bool convex() const { return convex_; }

    Kind kind() const { return kind_; }
    double param() const { return param_; }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& node_values() const { return node_values_; }
    std::string label() const;

private:
    OrliczFunction() = default;

    Kind kind_ = Kind::power;
    double param_ = 1.0;
    double hat_base_ = 1.0;
    bool convex_ = true;
    std::vector<double> nodes_;
    std::vector<double> node_values_;
};

double phi_hat(const OrliczFunction& phi, double s);

// Prescribed boundary density as a truncated Fourier series,
// f(theta) = a0 + sum_k cos_coef[k] cos((k+1) theta) + sin_coef[k] sin((k+1) theta).
// Construction rejects densities that are not strictly positive on an
// oversampled grid.
class DensitySpec {
public:
    static DensitySpec fourier(double a0, std::vector<double> cos_coef,
                               std::vector<double> sin_coef);
    static DensitySpec constant(double value);

    double operator()(double theta) const;
    double min_on_grid() const { return min_on_grid_; }

    double a0() const { return a0_; }
    const std::vector<double>& cos_coef() const { return cos_coef_; }
    const std::vector<double>& sin_coef() const { return sin_coef_; }

private:
    DensitySpec() = default;

    double a0_ = 1.0;
    std::vector<double> cos_coef_;
    std::vector<double> sin_coef_;
    double min_on_grid_ = 1.0;
};

} // namespace torqflow
