#pragma once

#include <array>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mslab/fourvec.hpp"

namespace mslab {

struct InvalidPolicy : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NonConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Tolerances and node budgets for all momentum-space integrals.
struct QuadraturePolicy {
    double rel_tol = 1e-7;
    double abs_tol = 1e-10;
    double radial_cutoff = 30.0;   // momentum, natural units
    int max_subdivisions = 6000;
    int angular_order = 32;        // nodes per angular variable

    void validate() const;
};

struct IntegrationResult {
    std::complex<double> value{0.0, 0.0};
    double error_estimate = 0.0;
    long evaluations = 0;
    double truncation_bound = 0.0;
};

enum class RadialWeight { plain, inverse_abs_p };

/// Caller-declared decay class |integrand(p)| <= C (1 + s^2 |p|^2)^{-N} for
/// |p| beyond the cutoff; used only for the reported tail bound.
struct DecayClass {
    double C = 0.0;  // C == 0 means "no tail bound requested"
    double N = 3.0;
    double s = 1.0;
};

struct R3Options {
    Vec3 oscillation{0.0, 0.0, 0.0};  // dominant phase vector of the integrand, frame-alignment hint
    Vec3 center{0.0, 0.0, 0.0};       // momentum-support center; spherical coordinates around it
    DecayClass tail{};
};

using R3Integrand = std::function<std::complex<double>(const Vec3&)>;

/// Integral of w(p)*f(p) over |p| <= cutoff in spherical coordinates, the
/// 1/|p| weight absorbed into the radial Jacobian (r^2 * r^-1 = r), so the
/// integrand is never sampled at a singular weight.
IntegrationResult integrate_r3(const R3Integrand& f, RadialWeight w,
                               const QuadraturePolicy& policy, const R3Options& opt = {});

struct Box {
    std::array<double, 4> lo{};
    std::array<double, 4> hi{};
};

using RnIntegrand = std::function<std::complex<double>(const double*)>;

/// Adaptive iterated 1D rule over a finite box, n = 1..4.
IntegrationResult integrate_rn(const RnIntegrand& f, int n, const Box& box,
                               const QuadraturePolicy& policy);

/// Adaptive 1D integral on [a,b]; building block exposed for oracles/tests.
IntegrationResult integrate_1d(const std::function<std::complex<double>(double)>& f, double a,
                               double b, const QuadraturePolicy& policy);

/// Fixed-order Gauss-Legendre nodes/weights on [-1,1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Gauss-Hermite nodes/weights for the weight exp(-t^2) on the line.
void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace mslab
