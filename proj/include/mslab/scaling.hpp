#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "mslab/one_particle.hpp"
#include "mslab/quasifree.hpp"

namespace mslab {

struct ExtrapolationUnstable : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SeparationTooSmall : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// L1-normalized Gaussian mollifiers on R^4 with widths base_width * ratio^nu.
struct DeltaSequence {
    double base_width = 1.0;
    double ratio = 0.5;

    double width(int nu) const { return base_width * std::pow(ratio, nu); }

    /// h_nu(x), the 4D Gaussian with unit L1 norm.
    double density(int nu, const FourVector& x) const;
};

/// Symbolic map lambda -> FieldPolynomial: base polynomial template, per-factor
/// scale rule f -> f_lambda, optional base-level mollifiers, optional spatial
/// phase sabotage, lifted Poincare transforms u(A_i, lambda a_i), optional
/// per-lambda normalization.
class ScaledElement {
public:
    static ScaledElement unit();
    static ScaledElement field(const TestFunction& base);
    static ScaledElement from_polynomial(const FieldPolynomial& base);

    ScaledElement lift_translate(const FourVector& a) const;
    ScaledElement lift_boost(const SLTwoC& A) const;
    ScaledElement lift_gauge() const;

    /// Fast-path mollification: every base factor acquires the momentum
    /// multiplier (2pi)^2 hhat(p) before scaling.
    ScaledElement smoothed(double width) const;

    /// Spatial plane-wave phase with base wavenumber kappa/lambda; models a
    /// family whose energy-momentum transfer grows like 1/lambda^2.
    ScaledElement sabotaged(double kappa = 1.0) const;

    /// Rescale every factor by sqrt(2)/||f||_{lambda m} at instantiation
    /// (needed for exact-support witness profiles).
    ScaledElement with_per_lambda_normalization(const QuasifreeModel& model) const;

    FieldPolynomial instantiate(double lambda) const;

    bool is_single_field() const;
    bool has_boost_lift() const;
    const FieldPolynomial& base() const { return base_; }
    double sabotage_kappa() const { return sabotage_kappa_; }
    const std::vector<double>& mollifier_widths() const { return mollifier_widths_; }

    /// sup_lambda of the a-priori bound sum |c| prod 2||f_i||; evaluated at the
    /// unit scale and the massless endpoint.
    double norm_envelope(const QuasifreeModel& model) const;

private:
    FieldPolynomial base_;
    struct Lift {
        SLTwoC A;
        FourVector a;
    };
    std::vector<Lift> lifts_;
    std::vector<double> mollifier_widths_;
    double sabotage_kappa_ = 0.0;
    std::function<double(double)> per_lambda_coeff_;  // per-factor scalar

    TestFunction build_factor(const TestFunction& f, double lambda) const;
};

std::complex<double> state_at(double lambda, const ScaledElement& E, const QuasifreeModel& model);

struct FlowReport {
    std::vector<double> grid;
    std::vector<std::complex<double>> values;
    std::complex<double> extrapolated_limit{0.0, 0.0};
    double extrapolation_error = 0.0;
    double fitted_power = 0.0;
    bool monotone_tail = false;  // |F(lambda_i) - limit| decreasing over the tail
};

FlowReport limit_flow(const ScaledElement& E, const std::vector<double>& lambda_grid,
                      const QuasifreeModel& model);

struct ContinuityReport {
    double modulus = 0.0;  // max over the lambda grid
    std::vector<double> per_lambda;
    bool exact = false;  // single-factor elements: exact operator-norm dominator
};

/// max over lambda_grid of the norm dominator 2||u(A,a)f - f||_{lambda m}
/// per factor (triangle-inequality envelope for multi-factor elements).
ContinuityReport continuity_modulus(const ScaledElement& E, const SLTwoC& A, const FourVector& a,
                                    const std::vector<double>& lambda_grid,
                                    const QuasifreeModel& model);

struct DeficitParts {
    double field = 0.0;    // ||(S - F)(lambda) Omega||
    double adjoint = 0.0;  // ||(S - F)(lambda)* Omega||
    double total() const { return field + adjoint; }
};

/// Delta(nu, lambda) for a single-field family, via the mass-scaling identity
/// (one-particle quantities at mass lambda*m).
DeficitParts containment_deficit(const ScaledElement& psi_family, const DeltaSequence& seq, int nu,
                                 double lambda, const QuasifreeModel& model);

/// Independent slow path: the smoothing integral over h is evaluated by 4D
/// quadrature of translated correlators. Spot-check tool.
DeficitParts containment_deficit_slow(const ScaledElement& psi_family, const DeltaSequence& seq,
                                      int nu, double lambda, const QuasifreeModel& model,
                                      int tensor_order = 9);

enum class SabotageMode { none, phase };

struct PreservanceCell {
    int nu = 0;
    double lambda = 0.0;
    double delta = 0.0;
    double delta_adjoint = 0.0;
    bool support_ok = false;
    bool converged = false;
};

enum class Verdict { PASS, FAIL, Indeterminate };

struct PreservanceReport {
    std::vector<PreservanceCell> cells;        // nu-major order
    std::vector<double> lambda_grid;
    int nu_max = 0;
    std::vector<double> multiplet_defect;      // gns_norm(psi(f_lambda)^2 - 1) per lambda
    double multiplet_tolerance = 3e-6;
    double deficit_threshold = 1e-2;
    bool monotone_in_nu = false;
    bool deficits_small = false;
    bool multiplet_ok = false;
    bool support_ok = false;
    Verdict verdict = Verdict::Indeterminate;
};

PreservanceReport preservance_report(const SupportCone& O1, const SupportCone& O,
                                     const DeltaSequence& seq,
                                     const std::vector<double>& lambda_grid, int nu_max,
                                     const QuasifreeModel& model,
                                     WitnessProfile profile = WitnessProfile::gaussian,
                                     SabotageMode sabotage = SabotageMode::none);

struct ClusterRow {
    double x = 0.0;         // spatial separation
    double lhs = 0.0;       // |omega(F1 alpha_x F2) - omega(F1) omega(F2)|
    double lhs_error = 0.0;
    double rhs_base = 0.0;  // r^3/|x|^2 * (||F1|| ||d0 F2|| + ||d0 F1|| ||F2||) envelope
    bool usable = false;    // above the quadrature noise floor
};

struct ClusterTable {
    std::vector<ClusterRow> rows;
    double fitted_exponent = 0.0;
    double fitted_c = 0.0;
    int usable_points = 0;
    bool bounded_by_envelope = false;
};

ClusterTable cluster_bound_check(const FieldPolynomial& F1, const FieldPolynomial& F2, double r,
                                 const std::vector<Vec3>& xs, const QuasifreeModel& model);

}  // namespace mslab
