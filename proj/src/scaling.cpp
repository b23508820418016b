#include "mslab/scaling.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <thread>

#include "mslab/quadrature.hpp"

namespace mslab {

namespace {

using cplx = std::complex<double>;

void run_parallel(size_t n, const std::function<void(size_t)>& body) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (n < 2 || hw < 2) {
        for (size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    const unsigned k = static_cast<unsigned>(std::min<size_t>(hw, n));
    for (unsigned t = 0; t < k; ++t)
        pool.emplace_back([&] {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= n) return;
                body(i);
            }
        });
    for (auto& th : pool) th.join();
}

double fit_power(const std::vector<double>& xs, const std::vector<double>& ys, double* r2 = nullptr) {
    // least squares on log-log
    const size_t n = xs.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < n; ++i) {
        const double lx = std::log(xs[i]), ly = std::log(ys[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        syy += ly * ly;
    }
    const double denom = n * sxx - sx * sx;
    const double slope = (n * sxy - sx * sy) / denom;
    if (r2) {
        const double num = (n * sxy - sx * sy);
        const double den = std::sqrt(denom * (n * syy - sy * sy));
        const double corr = den > 0 ? num / den : 1.0;
        *r2 = corr * corr;
    }
    return slope;
}

}  // namespace

double DeltaSequence::density(int nu, const FourVector& x) const {
    const double w = width(nu);
    const double norm = std::pow(2.0 * std::numbers::pi * w * w, -2.0);
    return norm * std::exp(-0.5 * x.euclid_norm2() / (w * w));
}

ScaledElement ScaledElement::unit() {
    ScaledElement e;
    e.base_ = FieldPolynomial::one();
    return e;
}

ScaledElement ScaledElement::field(const TestFunction& base) {
    ScaledElement e;
    e.base_ = FieldPolynomial::field(base);
    return e;
}

ScaledElement ScaledElement::from_polynomial(const FieldPolynomial& base) {
    ScaledElement e;
    e.base_ = base;
    return e;
}

ScaledElement ScaledElement::lift_translate(const FourVector& a) const {
    ScaledElement e = *this;
    if (a.euclid_norm2() > 0.0) e.lifts_.push_back(Lift{SLTwoC::identity(), a});
    return e;
}

ScaledElement ScaledElement::lift_boost(const SLTwoC& A) const {
    ScaledElement e = *this;
    e.lifts_.push_back(Lift{A, FourVector{}});
    return e;
}

ScaledElement ScaledElement::lift_gauge() const {
    ScaledElement e = *this;
    e.base_ = gauge_act(e.base_);
    return e;
}

ScaledElement ScaledElement::smoothed(double width) const {
    ScaledElement e = *this;
    e.mollifier_widths_.push_back(width);
    return e;
}

ScaledElement ScaledElement::sabotaged(double kappa) const {
    ScaledElement e = *this;
    e.sabotage_kappa_ = kappa;
    return e;
}

ScaledElement ScaledElement::with_per_lambda_normalization(const QuasifreeModel& model) const {
    ScaledElement e = *this;
    // One normalization quadrature per lambda, cached; shared across copies.
    auto cache = std::make_shared<std::map<double, double>>();
    auto mutex = std::make_shared<std::mutex>();
    // normalization refers to the plain (unmollified, unsabotaged) factor
    if (!is_single_field())
        throw std::invalid_argument("per-lambda normalization requires a single-field element");
    TestFunction f = base_.terms()[0].factors[0];
    QuasifreeModel m0 = model;
    e.per_lambda_coeff_ = [cache, mutex, f, m0](double lambda) {
        {
            std::lock_guard<std::mutex> lock(*mutex);
            auto it = cache->find(lambda);
            if (it != cache->end()) return it->second;
        }
        const double n2 = inner(f, f, m0.with_mass(lambda * m0.m)).real();
        const double c = std::sqrt(2.0 / std::max(n2, 1e-300));
        std::lock_guard<std::mutex> lock(*mutex);
        (*cache)[lambda] = c;
        return c;
    };
    return e;
}

TestFunction ScaledElement::build_factor(const TestFunction& f, double lambda) const {
    TestFunction g = f;
    if (sabotage_kappa_ != 0.0)
        g = momentum_shift(g, FourVector{0.0, sabotage_kappa_ / lambda, 0.0, 0.0});
    for (double w : mollifier_widths_) g = mollify(g, w);
    g = scale(g, lambda);
    for (const auto& l : lifts_) g = poincare_act(l.A, l.a * lambda, g);
    return g;
}

FieldPolynomial ScaledElement::instantiate(double lambda) const {
    if (!(lambda > 0.0)) throw std::invalid_argument("instantiate requires lambda > 0");
    FieldPolynomial out;
    const double c = per_lambda_coeff_ ? per_lambda_coeff_(lambda) : 1.0;
    for (const auto& t : base_.terms()) {
        FieldMonomial m;
        m.coefficient = t.coefficient * std::pow(c, static_cast<double>(t.factors.size()));
        m.factors.reserve(t.factors.size());
        for (const auto& f : t.factors) m.factors.push_back(build_factor(f, lambda));
        out.terms().push_back(std::move(m));
    }
    return out;
}

bool ScaledElement::is_single_field() const {
    return base_.terms().size() == 1 && base_.terms()[0].factors.size() == 1;
}

bool ScaledElement::has_boost_lift() const {
    for (const auto& l : lifts_)
        if ((l.A.matrix() - Matrix2c::Identity()).norm() > 1e-14) return true;
    return false;
}

double ScaledElement::norm_envelope(const QuasifreeModel& model) const {
    double env = 0.0;
    for (const auto& t : base_.terms()) {
        double prod = std::abs(t.coefficient);
        for (const auto& f : t.factors) {
            const double n1 = norm_m(f, model);
            const double n0 = norm_m(f, model.with_mass(0.0));
            prod *= 2.0 * std::max(n1, n0);
        }
        env += prod;
    }
    return env;
}

cplx state_at(double lambda, const ScaledElement& E, const QuasifreeModel& model) {
    return vacuum_expectation(E.instantiate(lambda), model);
}

FlowReport limit_flow(const ScaledElement& E, const std::vector<double>& lambda_grid,
                      const QuasifreeModel& model) {
    if (lambda_grid.size() < 4)
        throw std::invalid_argument("limit_flow requires a grid of >= 4 points");
    for (size_t i = 1; i < lambda_grid.size(); ++i)
        if (!(lambda_grid[i] < lambda_grid[i - 1]))
            throw std::invalid_argument("limit_flow grid must be strictly decreasing");

    FlowReport rep;
    rep.grid = lambda_grid;
    rep.values.resize(lambda_grid.size());
    run_parallel(lambda_grid.size(),
                 [&](size_t i) { rep.values[i] = state_at(lambda_grid[i], E, model); });

    const size_t n = rep.values.size();
    auto extrapolate_pair = [&](size_t i, double q) {
        const double la = rep.grid[i], lb = rep.grid[i + 1];
        const double wa = std::pow(la, q), wb = std::pow(lb, q);
        return (wa * rep.values[i + 1] - wb * rep.values[i]) / (wa - wb);
    };

    const double d1 = std::abs(rep.values[n - 2] - rep.values[n - 3]);
    const double d2 = std::abs(rep.values[n - 1] - rep.values[n - 2]);
    const double scale0 = std::max({std::abs(rep.values[n - 1]), 1e-12});
    if (d2 < 1e-12 * scale0 || d1 < 1e-12 * scale0) {
        // flat flow: constant limit
        rep.extrapolated_limit = rep.values[n - 1];
        rep.extrapolation_error = std::max(d1, d2) + 1e-12 * scale0;
        rep.fitted_power = 0.0;
        rep.monotone_tail = true;
        return rep;
    }
    double q = std::log(d1 / d2) / std::log(rep.grid[n - 3] / rep.grid[n - 2]);
    q = std::clamp(q, 0.25, 4.0);
    rep.fitted_power = q;
    const cplx ex_last = extrapolate_pair(n - 2, q);
    const cplx ex_prev = extrapolate_pair(n - 3, q);
    rep.extrapolated_limit = ex_last;
    rep.extrapolation_error = std::abs(ex_last - ex_prev) + 0.05 * d2;
    if (n >= 5) {
        const cplx ex_oldest = extrapolate_pair(n - 4, q);
        const double drift1 = std::abs(ex_prev - ex_oldest);
        const double drift2 = std::abs(ex_last - ex_prev);
        if (drift2 > 4.0 * drift1 && drift2 > 1e-6 * scale0 && drift1 > 0.0)
            throw ExtrapolationUnstable("limit_flow: successive extrapolants diverge");
    }
    rep.monotone_tail = true;
    for (size_t i = n - 3; i + 1 < n; ++i)
        if (std::abs(rep.values[i + 1] - rep.extrapolated_limit) >
            std::abs(rep.values[i] - rep.extrapolated_limit) * 1.2)
            rep.monotone_tail = false;
    return rep;
}

ContinuityReport continuity_modulus(const ScaledElement& E, const SLTwoC& A, const FourVector& a,
                                    const std::vector<double>& lambda_grid,
                                    const QuasifreeModel& model) {
    ContinuityReport rep;
    rep.exact = E.is_single_field();
    rep.per_lambda.resize(lambda_grid.size());
    run_parallel(lambda_grid.size(), [&](size_t i) {
        const double lambda = lambda_grid[i];
        const QuasifreeModel mm = model.with_mass(lambda * model.m);
        double acc = 0.0;
        for (const auto& t : E.base().terms()) {
            double term = 0.0;
            for (size_t j = 0; j < t.factors.size(); ++j) {
                const TestFunction& f = t.factors[j];
                TestFunction diff = linear_combination(1.0, poincare_act(A, a, f), -1.0, f);
                double contrib = 2.0 * norm_m(diff, mm);
                for (size_t k = 0; k < t.factors.size(); ++k)
                    if (k != j) contrib *= 2.0 * norm_m(t.factors[k], mm);
                term += contrib;
            }
            acc += std::abs(t.coefficient) * term;
        }
        rep.per_lambda[i] = acc;
    });
    rep.modulus = *std::max_element(rep.per_lambda.begin(), rep.per_lambda.end());
    return rep;
}

DeficitParts containment_deficit(const ScaledElement& psi_family, const DeltaSequence& seq, int nu,
                                 double lambda, const QuasifreeModel& model) {
    if (!psi_family.is_single_field())
        throw std::invalid_argument("containment_deficit: single-field families only");
    if (psi_family.has_boost_lift())
        throw std::invalid_argument("containment_deficit: boost lifts not supported");
    const double w = seq.width(nu);
    // Base factor at this lambda (sabotage included), before scaling; lifted
    // translations and the scaling map drop out of GNS-vector norms by
    // translation invariance of the vacuum and the mass-scaling identity.
    const FieldMonomial& mono = psi_family.base().terms()[0];
    TestFunction f = mono.factors[0];
    if (psi_family.sabotage_kappa() != 0.0)
        f = momentum_shift(f, FourVector{0.0, psi_family.sabotage_kappa() / lambda, 0.0, 0.0});
    for (double mw : psi_family.mollifier_widths()) f = mollify(f, mw);
    TestFunction d = linear_combination(1.0, mollify(f, w), -1.0, f);
    const QuasifreeModel mm = model.with_mass(lambda * model.m);
    const double c = std::abs(mono.coefficient);
    DeficitParts parts;
    TestFunction gd = gamma_involution(d);
    parts.field = c * std::sqrt(std::max(0.0, pplus_form(gd, gd, mm).real()));
    parts.adjoint = c * std::sqrt(std::max(0.0, pplus_form(d, d, mm).real()));
    return parts;
}

DeficitParts containment_deficit_slow(const ScaledElement& psi_family, const DeltaSequence& seq,
                                      int nu, double lambda, const QuasifreeModel& model,
                                      int tensor_order) {
    if (!psi_family.is_single_field() || psi_family.has_boost_lift())
        throw std::invalid_argument("containment_deficit_slow: single-field families only");
    const double w = seq.width(nu);
    const FieldMonomial& mono = psi_family.base().terms()[0];
    TestFunction f0 = mono.factors[0];
    if (psi_family.sabotage_kappa() != 0.0)
        f0 = momentum_shift(f0, FourVector{0.0, psi_family.sabotage_kappa() / lambda, 0.0, 0.0});
    for (double mw : psi_family.mollifier_widths()) f0 = mollify(f0, mw);
    const TestFunction f_l = scale(f0, lambda);
    const double c = std::abs(mono.coefficient);

    // ||(S-F)Omega||^2 = int A(z) W(z) d4z - 2 Re int h(z) W(-z) d4z + W(0),
    // with W(z) = omega(psi(f_l)* alpha_{lambda z} psi(f_l)), A the h-h
    // correlation (Gaussian of width w sqrt(2)) and W(-z) = conj W(z). One
    // correlator grid serves both weights. The correlator runs at reduced
    // precision; this path is a cross-check, not a production evaluator.
    QuasifreeModel wmodel = model;
    wmodel.policy.rel_tol = std::max(model.policy.rel_tol, 3e-6);
    wmodel.policy.abs_tol = std::max(model.policy.abs_tol, 1e-8);
    wmodel.policy.angular_order = std::min(model.policy.angular_order, 16);

    std::vector<double> ghn, ghw;
    gauss_hermite(tensor_order, ghn, ghw);
    const double pi_quarter = std::pow(std::numbers::pi, -2.0);  // (pi^{-1/2})^4

    const int n = tensor_order;
    std::vector<std::array<int, 4>> idx;
    idx.reserve(static_cast<size_t>(n) * n * n * n);
    for (int i0 = 0; i0 < n; ++i0)
        for (int i1 = 0; i1 < n; ++i1)
            for (int i2 = 0; i2 < n; ++i2)
                for (int i3 = 0; i3 < n; ++i3) idx.push_back({i0, i1, i2, i3});

    // E_{z ~ N(0, s)}[g] via Gauss-Hermite per axis: z = sqrt(2) s t.
    auto gaussian_mean = [&](const TestFunction& base, const TestFunction& gbase, double width,
                             const QuasifreeModel& wm) {
        std::vector<double> vals(idx.size());
        run_parallel(idx.size(), [&](size_t k) {
            const auto& q = idx[k];
            const double sc = std::sqrt(2.0) * width;
            const FourVector z{sc * ghn[q[0]], sc * ghn[q[1]], sc * ghn[q[2]], sc * ghn[q[3]]};
            vals[k] =
                two_point(gbase, translate_fn(z * lambda, base), wm).real();
        });
        double acc = 0.0;
        for (size_t k = 0; k < idx.size(); ++k) {
            const auto& q = idx[k];
            acc += ghw[q[0]] * ghw[q[1]] * ghw[q[2]] * ghw[q[3]] * vals[k];
        }
        return acc * pi_quarter;
    };

    const bool gamma_real = f_l.is_gamma_real();
    DeficitParts parts;
    for (int which = 0; which < (gamma_real ? 1 : 2); ++which) {
        const TestFunction base = which == 0 ? f_l : gamma_involution(f_l);
        const TestFunction gbase = gamma_involution(base);
        const double term_hh = gaussian_mean(base, gbase, w * std::sqrt(2.0), wmodel);
        const double term_h = gaussian_mean(base, gbase, w, wmodel);
        const double w0 = two_point(gbase, base, wmodel).real();
        const double sq = std::max(0.0, term_hh - 2.0 * term_h + w0);
        (which == 0 ? parts.field : parts.adjoint) = c * std::sqrt(sq);
    }
    if (gamma_real) parts.adjoint = parts.field;
    return parts;
}

PreservanceReport preservance_report(const SupportCone& O1, const SupportCone& O,
                                     const DeltaSequence& seq,
                                     const std::vector<double>& lambda_grid, int nu_max,
                                     const QuasifreeModel& model, WitnessProfile profile,
                                     SabotageMode sabotage) {
    if (!(O1.radius < O.radius))
        throw std::invalid_argument("preservance_report requires closure(O1) inside O");
    if (lambda_grid.size() < 2)
        throw std::invalid_argument("preservance_report requires >= 2 lambda points");

    PreservanceReport rep;
    rep.lambda_grid = lambda_grid;
    rep.nu_max = nu_max;

    TestFunction witness = majorana_witness(O1, profile, model);
    ScaledElement E = ScaledElement::field(witness);
    if (profile == WitnessProfile::bump) E = E.with_per_lambda_normalization(model);
    if (sabotage == SabotageMode::phase) E = E.sabotaged(1.0);

    const double base_radius = witness.support().radius;

    rep.cells.resize(static_cast<size_t>(nu_max) * lambda_grid.size());
    std::atomic<int> failures{0};
    run_parallel(rep.cells.size(), [&](size_t k) {
        const int nu = static_cast<int>(k / lambda_grid.size()) + 1;
        const double lambda = lambda_grid[k % lambda_grid.size()];
        PreservanceCell cell;
        cell.nu = nu;
        cell.lambda = lambda;
        cell.support_ok = base_radius + 4.0 * seq.width(nu) <= O.radius;
        try {
            DeficitParts d = containment_deficit(E, seq, nu, lambda, model);
            cell.delta = d.field;
            cell.delta_adjoint = d.adjoint;
            cell.converged = true;
        } catch (const NonConvergence&) {
            cell.converged = false;
            failures.fetch_add(1);
        }
        rep.cells[k] = cell;
    });

    // multiplet relation per lambda on the plain (unsabotaged) family
    rep.multiplet_defect.resize(lambda_grid.size());
    ScaledElement plain = ScaledElement::field(witness);
    if (profile == WitnessProfile::bump) plain = plain.with_per_lambda_normalization(model);
    run_parallel(lambda_grid.size(), [&](size_t i) {
        FieldPolynomial X = plain.instantiate(lambda_grid[i]);
        FieldPolynomial P = X * X - FieldPolynomial::one();
        rep.multiplet_defect[i] = gns_norm(P, model);
    });

    auto delta_at = [&](int nu, size_t li) {
        const PreservanceCell& c = rep.cells[(nu - 1) * lambda_grid.size() + li];
        return c.delta + c.delta_adjoint;
    };

    rep.deficits_small = true;
    for (size_t li = 0; li < lambda_grid.size(); ++li)
        if (lambda_grid[li] <= 0.01 && delta_at(nu_max, li) >= rep.deficit_threshold)
            rep.deficits_small = false;

    rep.monotone_in_nu = true;
    for (size_t li = 0; li < lambda_grid.size(); ++li)
        for (int nu = std::max(2, nu_max - 2); nu <= nu_max; ++nu)
            if (delta_at(nu, li) > delta_at(nu - 1, li) * (1.0 + 1e-9) + 1e-14)
                rep.monotone_in_nu = false;

    rep.multiplet_ok = true;
    for (double d : rep.multiplet_defect)
        if (!(d < rep.multiplet_tolerance)) rep.multiplet_ok = false;

    rep.support_ok = true;
    for (size_t li = 0; li < lambda_grid.size(); ++li) {
        const PreservanceCell& c = rep.cells[(nu_max - 1) * lambda_grid.size() + li];
        if (!c.support_ok) rep.support_ok = false;
    }

    const double failure_rate =
        static_cast<double>(failures.load()) / static_cast<double>(rep.cells.size());
    if (failure_rate > 0.10) {
        rep.verdict = Verdict::Indeterminate;
    } else if (rep.deficits_small && rep.monotone_in_nu && rep.multiplet_ok && rep.support_ok) {
        rep.verdict = Verdict::PASS;
    } else {
        rep.verdict = Verdict::FAIL;
    }
    return rep;
}

ClusterTable cluster_bound_check(const FieldPolynomial& F1, const FieldPolynomial& F2, double r,
                                 const std::vector<Vec3>& xs, const QuasifreeModel& model) {
    for (const auto& X : {&F1, &F2})
        for (const auto& t : X->terms())
            if (t.factors.size() % 2 != 0)
                throw std::invalid_argument("cluster_bound_check: even polynomials only");
    for (const Vec3& x : xs)
        if (!(x.norm() > 3.0 * r))
            throw SeparationTooSmall("cluster_bound_check requires |x| > 3r");

    auto envelope = [&](const FieldPolynomial& X) {
        double env = 0.0;
        for (const auto& t : X.terms()) {
            double prod = std::abs(t.coefficient);
            for (const auto& f : t.factors) prod *= 2.0 * norm_m(f, model);
            env += prod;
        }
        return env;
    };
    auto d0 = [](const FieldPolynomial& X) {
        FieldPolynomial out;
        for (const auto& t : X.terms())
            for (size_t j = 0; j < t.factors.size(); ++j) {
                FieldMonomial m;
                m.coefficient = t.coefficient;
                m.factors = t.factors;
                m.factors[j] = time_derivative_weight(m.factors[j]);
                out.terms().push_back(std::move(m));
            }
        return out;
    };

    const double envF1 = envelope(F1), envF2 = envelope(F2);
    const double envD1 = envelope(d0(F1)), envD2 = envelope(d0(F2));

    ExpectationResult w1 = vacuum_expectation_full(F1, model);
    ExpectationResult w2 = vacuum_expectation_full(F2, model);

    ClusterTable table;
    table.rows.resize(xs.size());
    run_parallel(xs.size(), [&](size_t i) {
        const Vec3& x = xs[i];
        ClusterRow row;
        row.x = x.norm();
        FieldPolynomial shifted = translate(with_energy(0.0, x), F2);
        ExpectationResult joint = vacuum_expectation_full(F1 * shifted, model);
        const cplx lhs = joint.value - w1.value * w2.value;
        row.lhs = std::abs(lhs);
        row.lhs_error = joint.error + std::abs(w1.value) * w2.error + std::abs(w2.value) * w1.error;
        row.rhs_base = std::pow(r, 3) / (row.x * row.x) * (envF1 * envD2 + envD1 * envF2);
        row.usable = row.lhs > std::max(50.0 * row.lhs_error, 1e-12);
        table.rows[i] = row;
    });

    std::vector<double> fx, fy;
    table.fitted_c = 0.0;
    table.bounded_by_envelope = true;
    for (const auto& row : table.rows) {
        if (!row.usable) continue;
        fx.push_back(row.x);
        fy.push_back(row.lhs);
        table.fitted_c = std::max(table.fitted_c, row.lhs / row.rhs_base);
    }
    table.usable_points = static_cast<int>(fx.size());
    if (table.usable_points >= 2) {
        table.fitted_exponent = -fit_power(fx, fy);
    } else {
        table.fitted_exponent = std::numeric_limits<double>::quiet_NaN();
    }
    for (const auto& row : table.rows)
        if (row.usable && row.lhs > table.fitted_c * row.rhs_base * (1.0 + 1e-9))
            table.bounded_by_envelope = false;
    return table;
}

}  // namespace mslab
