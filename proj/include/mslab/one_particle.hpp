#pragma once

#include <complex>

#include "mslab/quadrature.hpp"
#include "mslab/spinor.hpp"
#include "mslab/test_function.hpp"

namespace mslab {

/// Mass parameter plus quadrature policy; defines <.,.>_m and the shell forms.
struct QuasifreeModel {
    double m = 1.0;
    QuadraturePolicy policy{};

    QuasifreeModel with_mass(double mass) const {
        QuasifreeModel q = *this;
        q.m = mass;
        return q;
    }
};

struct FormResult {
    std::complex<double> value{0.0, 0.0};
    double error = 0.0;
    double truncation = 0.0;
    long evaluations = 0;
};

/// <f,g>_m = int d3p sum_pm fhat(pm w,p)^+ P_pm(p) ghat(pm w,p).
FormResult inner_full(const TestFunction& f, const TestFunction& g, const QuasifreeModel& model);
std::complex<double> inner(const TestFunction& f, const TestFunction& g,
                           const QuasifreeModel& model);

/// Positive-shell form <f, P+ g>_m (single + term of the shell sum).
FormResult pplus_form_full(const TestFunction& f, const TestFunction& g,
                           const QuasifreeModel& model);
std::complex<double> pplus_form(const TestFunction& f, const TestFunction& g,
                                const QuasifreeModel& model);

/// Negative-shell companion; pplus + pminus = inner.
FormResult pminus_form_full(const TestFunction& f, const TestFunction& g,
                            const QuasifreeModel& model);
std::complex<double> pminus_form(const TestFunction& f, const TestFunction& g,
                                 const QuasifreeModel& model);

double norm_m(const TestFunction& f, const QuasifreeModel& model);

/// Radial cutoff at which both envelopes have dropped below the absolute
/// tolerance; the policy cutoff acts as a floor.
double suggest_cutoff(const TestFunction& f, const TestFunction& g, const QuadraturePolicy& policy);

enum class WitnessProfile { gaussian, bump };

/// f = g (1 + i gamma^2) e1 with real scalar profile g supported (exactly or
/// effectively) in O1, rescaled so inner(f,f) = 2; Gamma f = f holds
/// structurally. The gaussian profile is energy-flat, making the
/// normalization integrand mass-independent.
TestFunction majorana_witness(const SupportCone& O1, WitnessProfile profile,
                              const QuasifreeModel& model);

}  // namespace mslab
