#include "mslab/one_particle.hpp"

#include <cmath>
#include <numbers>

#include "mslab/fock.hpp"

namespace mslab {

namespace {

using cplx = std::complex<double>;

enum class ShellSum { both, plus_only, minus_only };

/// Radius around the momentum-support center at which the envelope drops
/// below tol (absolute and relative to the envelope amplitude).
double envelope_spread(const DecayEnvelope& env, double tol) {
    if (env.C <= 0.0) return 0.0;
    const double floor_rel = std::max(tol, 1e-8 * env.C);
    double R = 4.0;
    for (int it = 0; it < 60; ++it) {
        double lhs = env.C * std::pow(1.0 + env.s * env.s * R * R, -env.N) * std::max(1.0, R);
        if (lhs < floor_rel) break;
        R *= 1.3;
    }
    return R;
}

cplx mode_inner(const ModeVector& f, const ModeVector& g, ShellSum shells) {
    // <f,g> over the 2n-dim space; P+ keeps the e-part, P- the Gamma e-part.
    cplx acc{0.0, 0.0};
    if (shells != ShellSum::minus_only) acc += f.a.dot(g.a);  // Eigen dot conjugates the left
    if (shells != ShellSum::plus_only) acc += f.b.dot(g.b);
    return acc;
}

FormResult shell_form(const TestFunction& f, const TestFunction& g, const QuasifreeModel& model,
                      ShellSum shells) {
    if (f.mode_data() || g.mode_data()) {
        const ModeVector* mf = f.mode_data();
        const ModeVector* mg = g.mode_data();
        if (!mf || !mg || mf->space != mg->space)
            throw std::invalid_argument("shell form needs both arguments on one mode space");
        FormResult r;
        r.value = mode_inner(*mf, *mg, shells);
        return r;
    }
    if (f.is_zero() || g.is_zero()) return FormResult{};

    const double m = model.m;
    QuadraturePolicy pol = model.policy;
    R3Options opt;
    // A shared far-off-origin momentum support calls for spherical coordinates
    // around the support center; otherwise probe outward from the origin.
    const Vec3 cf = spatial(f.envelope().shift), cg = spatial(g.envelope().shift);
    const double tol = std::sqrt(model.policy.abs_tol * 1e-2);
    const double spread =
        std::max(envelope_spread(f.envelope(), tol), envelope_spread(g.envelope(), tol));
    const double shift_mag = std::max(cf.norm(), cg.norm());
    if (shift_mag > 2.0 * spread && (cf - cg).norm() < 0.5 * shift_mag) {
        opt.center = (cf + cg) * 0.5;
        pol.radial_cutoff = spread + (cf - cg).norm() + 2.0;
    } else {
        pol.radial_cutoff = suggest_cutoff(f, g, model.policy);
    }

    const TestFunction ff = f, gg = g;
    R3Integrand integrand = [ff, gg, m, shells](const Vec3& q) -> cplx {
        const double w = std::sqrt(q.norm2() + m * m);
        cplx acc{0.0, 0.0};
        if (w <= 0.0) return acc;  // massless origin: measure-zero, integrable
        if (shells != ShellSum::minus_only) {
            const FourVector qp = with_energy(w, q);
            const Matrix4c P = gamma(0) * (slash(qp) + m * Matrix4c::Identity()) / (2.0 * w);
            acc += ff.eval_hat(qp).dot(P * gg.eval_hat(qp));
        }
        if (shells != ShellSum::plus_only) {
            const FourVector qm = with_energy(-w, q);
            const Matrix4c P = gamma(0) * (slash(qm) + m * Matrix4c::Identity()) / (-2.0 * w);
            acc += ff.eval_hat(qm).dot(P * gg.eval_hat(qm));
        }
        return acc;
    };

    opt.oscillation = spatial(g.position_offset() - f.position_offset());
    const DecayEnvelope& ef = f.envelope();
    const DecayEnvelope& eg = g.envelope();
    DecayClass tail;
    tail.C = 1.5 * ef.C * eg.C;  // ||P_pm|| <= 1.5
    tail.N = ef.N + eg.N;
    tail.s = std::min(ef.s, eg.s);
    opt.tail = tail;

    IntegrationResult ir = integrate_r3(integrand, RadialWeight::plain, pol, opt);
    FormResult r;
    r.value = ir.value;
    r.error = ir.error_estimate;
    r.truncation = ir.truncation_bound;
    r.evaluations = ir.evaluations;
    return r;
}

}  // namespace

namespace {

/// Largest shell amplitude of |fhat| at spatial radius R, probed over a fixed
/// direction set and a few energies covering the shells of masses <= 5.
double probe_amplitude(const TestFunction& f, double R) {
    static const Vec3 dirs[7] = {{1, 0, 0},          {0, 1, 0},          {0, 0, 1},
                                 {0.577, 0.577, 0.577}, {-0.577, 0.577, 0.577},
                                 {0.577, -0.577, 0.577}, {0.577, 0.577, -0.577}};
    double amp = 0.0;
    for (const Vec3& d : dirs) {
        const Vec3 q = d * R;
        const double w_hi = std::sqrt(R * R + 25.0);
        for (double e : {R, -R, w_hi, -w_hi})
            amp = std::max(amp, f.eval_hat(with_energy(e, q)).norm());
    }
    return amp;
}

}  // namespace

double suggest_cutoff(const TestFunction& f, const TestFunction& g,
                      const QuadraturePolicy& policy) {
    const double tol = std::sqrt(policy.abs_tol * 1e-2);
    const double shift_f = std::sqrt(f.envelope().shift.euclid_norm2());
    const double shift_g = std::sqrt(g.envelope().shift.euclid_norm2());
    const double cap =
        std::min(1e6, std::max(envelope_spread(f.envelope(), tol) + shift_f,
                               envelope_spread(g.envelope(), tol) + shift_g));
    // momentum-shifted supports are annuli: never stop probing inside them
    const double floor_shift = 1.3 * std::max(shift_f, shift_g) + policy.radial_cutoff;
    double R = policy.radial_cutoff;
    double peak = std::max(probe_amplitude(f, 0.0), probe_amplitude(g, 0.0));
    double core = 0.0;  // radius where amplitudes fall below ~peak/3
    while (R < cap) {
        const double af = probe_amplitude(f, R), ag = probe_amplitude(g, R);
        peak = std::max({peak, af, ag});
        if (core == 0.0 && std::max(af, ag) < 0.3 * peak) core = R;
        // tail beyond R contributes ~ amp^2 * 4 pi R^3; stop once that is
        // negligible against both the absolute budget and the core mass
        // ~ peak^2 * core^3 (functions may sit far below unit scale)
        const double vol = 4.0 * std::numbers::pi * R * R * R + 1.0;
        const double cr = std::max(core, policy.radial_cutoff * 0.5);
        const double abs_amp = std::sqrt(policy.abs_tol * 3e-2 / vol);
        const double rel_amp = peak * std::sqrt(policy.rel_tol * 3e-2 * cr * cr * cr / vol);
        const double thresh = std::max(rel_amp, abs_amp);
        if (R >= floor_shift && af < thresh && ag < thresh) break;
        R *= 1.4;
    }
    return std::min(R, std::max(cap, policy.radial_cutoff));
}

FormResult inner_full(const TestFunction& f, const TestFunction& g, const QuasifreeModel& model) {
    return shell_form(f, g, model, ShellSum::both);
}

cplx inner(const TestFunction& f, const TestFunction& g, const QuasifreeModel& model) {
    return inner_full(f, g, model).value;
}

FormResult pplus_form_full(const TestFunction& f, const TestFunction& g,
                           const QuasifreeModel& model) {
    return shell_form(f, g, model, ShellSum::plus_only);
}

cplx pplus_form(const TestFunction& f, const TestFunction& g, const QuasifreeModel& model) {
    return pplus_form_full(f, g, model).value;
}

FormResult pminus_form_full(const TestFunction& f, const TestFunction& g,
                            const QuasifreeModel& model) {
    return shell_form(f, g, model, ShellSum::minus_only);
}

cplx pminus_form(const TestFunction& f, const TestFunction& g, const QuasifreeModel& model) {
    return pminus_form_full(f, g, model).value;
}

double norm_m(const TestFunction& f, const QuasifreeModel& model) {
    return std::sqrt(std::max(0.0, inner(f, f, model).real()));
}

TestFunction majorana_witness(const SupportCone& O1, WitnessProfile profile,
                              const QuasifreeModel& model) {
    if (!(O1.radius > 0.0)) throw std::invalid_argument("majorana_witness: empty region");
    TestFunction f;
    if (profile == WitnessProfile::gaussian) {
        f = TestFunction::witness_profile(O1.radius / 4.0, O1.center, "witness");
    } else {
        // Box inscribed in the double cone: per-axis radius rho(1 + sqrt(3)) <= r.
        const double rho = O1.radius / (1.0 + std::sqrt(3.0));
        Vector4c e1 = Vector4c::Zero();
        e1[0] = 1.0;
        Vector4c u = e1 + charge_conjugation_matrix() * e1;
        f = TestFunction::separable_bump({rho, rho, rho, rho}, u, O1.center, 64.0,
                                         "witness_bump");
    }
    // Two-stage normalization: the raw bump amplitude is far below 1, so a
    // first pass brings the function to unit scale before the precision pass.
    const double rough = inner(f, f, model).real();
    if (!(rough > 0.0)) throw NonConvergence("witness normalization integral vanished");
    TestFunction w = std::sqrt(2.0 / rough) * f;
    const double n2 = inner(w, w, model).real();
    if (!(n2 > 0.0)) throw NonConvergence("witness normalization integral vanished");
    return std::sqrt(2.0 / n2) * w;
}

}  // namespace mslab
