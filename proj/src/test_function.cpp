#include "mslab/test_function.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <numbers>
#include <random>

#include "mslab/fock.hpp"
#include "mslab/quadrature.hpp"

namespace mslab {

namespace {

using cplx = std::complex<double>;
constexpr cplx I{0.0, 1.0};

Vector4c majorana_spinor() {
    Vector4c e1 = Vector4c::Zero();
    e1[0] = 1.0;
    return e1 + charge_conjugation_matrix() * e1;  // (1 + i g2) e1 = (1,0,0,1)^t
}

/// Cached even transform of the standard bump b(t) = exp(-1/(1-t^2)) on (-1,1):
/// beta(kappa) = 2 int_0^1 cos(kappa t) b(t) dt, uniform grid + cubic
/// (Catmull-Rom) interpolation, grown geometrically when sampled past the end.
class BumpTransform {
public:
    static const BumpTransform& instance() {
        static BumpTransform t;
        return t;
    }

    double operator()(double kappa) const {
        kappa = std::abs(kappa);
        auto grid = std::atomic_load(&grid_);
        if (kappa >= grid->kmax - 2.0 * kStep) {
            extend(kappa);
            grid = std::atomic_load(&grid_);
        }
        const double u = kappa / kStep;
        const long j = std::max(1L, std::min(static_cast<long>(grid->v.size()) - 3,
                                             static_cast<long>(u)));
        const double t = u - j;
        const double m1 = grid->v[j - 1], p0 = grid->v[j], p1 = grid->v[j + 1], p2 = grid->v[j + 2];
        // Catmull-Rom
        return p0 + 0.5 * t * (p1 - m1 + t * (2 * m1 - 5 * p0 + 4 * p1 - p2 +
                                              t * (3 * (p0 - p1) + p2 - m1)));
    }

private:
    static constexpr double kStep = 0.02;

    struct Grid {
        double kmax;
        std::vector<double> v;
    };

    mutable std::shared_ptr<const Grid> grid_;
    mutable std::mutex extend_mutex_;

    BumpTransform() { grid_ = build(96.0); }

    static double value_at(double kappa) {
        // Composite Gauss-Legendre over [0,1]; panel width shrinks with kappa
        // so each panel sees at most ~half an oscillation.
        static std::vector<double> nodes, weights;
        static std::once_flag once;
        std::call_once(once, [] { gauss_legendre(16, nodes, weights); });
        const int panels = std::max(4, static_cast<int>(kappa / 3.0) + 4);
        double acc = 0.0;
        for (int p = 0; p < panels; ++p) {
            const double a = static_cast<double>(p) / panels, b = (p + 1.0) / panels;
            const double c = 0.5 * (a + b), h = 0.5 * (b - a);
            for (size_t i = 0; i < nodes.size(); ++i) {
                const double t = c + h * nodes[i];
                const double tt = t * t;
                if (tt >= 1.0) continue;
                acc += h * weights[i] * std::cos(kappa * t) * std::exp(-1.0 / (1.0 - tt));
            }
        }
        return 2.0 * acc;
    }

    static std::shared_ptr<const Grid> build(double kmax) {
        auto g = std::make_shared<Grid>();
        g->kmax = kmax;
        const size_t n = static_cast<size_t>(kmax / kStep) + 4;
        g->v.resize(n);
        for (size_t i = 0; i < n; ++i) g->v[i] = value_at(i * kStep);
        return g;
    }

    void extend(double kappa) const {
        std::lock_guard<std::mutex> lock(extend_mutex_);
        auto old = std::atomic_load(&grid_);
        if (kappa < old->kmax - 2.0 * kStep) return;
        double kmax = old->kmax;
        while (kmax - 2.0 * kStep <= kappa) kmax *= 2.0;
        auto bigger = std::make_shared<Grid>();
        bigger->kmax = kmax;
        const size_t n = static_cast<size_t>(kmax / kStep) + 4;
        bigger->v = old->v;
        bigger->v.resize(n);
        for (size_t i = old->v.size(); i < n; ++i) bigger->v[i] = value_at(i * kStep);
        std::atomic_store(&grid_, std::shared_ptr<const Grid>(bigger));
    }
};

std::shared_ptr<const SerialNode> serial_family(std::string kind,
                                                std::map<std::string, double> params,
                                                std::vector<double> payload) {
    auto n = std::make_shared<SerialNode>();
    n->kind = std::move(kind);
    n->params = std::move(params);
    n->payload = std::move(payload);
    return n;
}

std::shared_ptr<const SerialNode> serial_transform(std::string kind,
                                                   std::map<std::string, double> params,
                                                   std::vector<double> payload,
                                                   std::shared_ptr<const SerialNode> child) {
    if (!child) return nullptr;  // non-serializable parent stays non-serializable
    auto n = std::make_shared<SerialNode>();
    n->kind = std::move(kind);
    n->params = std::move(params);
    n->payload = std::move(payload);
    n->child = std::move(child);
    return n;
}

}  // namespace

struct TestFunction::Impl {
    Eval eval;
    SupportCone support{};
    DecayEnvelope envelope{};
    FourVector position_offset{};
    std::string label;
    bool zero = false;
    std::optional<ModeVector> modes;
    std::shared_ptr<const SerialNode> serial;

    // tri-state gamma-reality: -1 unknown, 0 no, 1 yes
    mutable std::atomic<int> gamma_real{-1};
};

TestFunction::TestFunction() {
    auto impl = std::make_shared<Impl>();
    impl->eval = [](const FourVector&) { return Vector4c::Zero().eval(); };
    impl->zero = true;
    impl->envelope = DecayEnvelope{0.0, 4.0, 1.0, {}};
    impl->label = "0";
    impl->gamma_real = 1;
    impl->serial = serial_family("zero", {}, {});
    impl_ = std::move(impl);
}

TestFunction::TestFunction(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

TestFunction TestFunction::zero() { return TestFunction(); }

TestFunction TestFunction::gaussian(const std::array<double, 4>& sigma, const Vector4c& spinor,
                                    const FourVector& position_center,
                                    const FourVector& momentum_center, std::string label) {
    auto impl = std::make_shared<Impl>();
    double prefactor = 1.0;
    for (double s : sigma)
        if (s > 0.0) prefactor *= s;
    const Vector4c u = spinor;
    const std::array<double, 4> sg = sigma;
    const FourVector b = position_center, k = momentum_center;
    impl->eval = [prefactor, u, sg, b, k](const FourVector& p) {
        double expo = 0.0;
        for (int mu = 0; mu < 4; ++mu) {
            const double d = p[mu] - k[mu];
            expo -= 0.5 * sg[mu] * sg[mu] * d * d;
        }
        const cplx phase = std::exp(I * minkowski_dot(p, b));
        return (prefactor * std::exp(expo) * phase * u).eval();
    };
    double smax = 0.0, rad = 0.0;
    for (double s : sg) {
        smax = std::max(smax, s);
        rad += 16.0 * s * s;  // 4-sigma per axis
    }
    impl->support = SupportCone{position_center, std::sqrt(rad), false};
    const double unorm = u.norm();
    // C such that C (1+s^2 q^2)^-N dominates prefac*e^{-smin^2 q^2/2} with
    // q measured from the momentum center; smin over the positive widths.
    double smin = smax;
    for (double s : sg)
        if (s > 0.0) smin = std::min(smin, s);
    if (smin <= 0.0) smin = 1.0;
    const double N = 5.0;
    // max of (1+t)^N e^{-a t} at t = N/a - 1 (a = smin^2/2 scaled by s^2=a/N trick);
    // simpler: pick envelope scale se with se^2 = smin^2/(2N), then
    // (1+se^2 q^2)^N <= e^{se^2 N q^2} = e^{smin^2 q^2/2}, giving C = prefac*|u|.
    const double se = smin / std::sqrt(2.0 * N);
    impl->envelope = DecayEnvelope{prefactor * unorm, N, se, momentum_center};
    impl->position_offset = position_center;
    impl->label = std::move(label);
    impl->serial = serial_family(
        "gaussian", {},
        {sg[0], sg[1], sg[2], sg[3], b.t, b.x, b.y, b.z, k.t, k.x, k.y, k.z, u[0].real(),
         u[0].imag(), u[1].real(), u[1].imag(), u[2].real(), u[2].imag(), u[3].real(), u[3].imag()});
    return TestFunction(std::move(impl));
}

TestFunction TestFunction::witness_profile(double spatial_sigma, const FourVector& position_center,
                                           std::string label) {
    auto impl = std::make_shared<Impl>();
    const double s2 = spatial_sigma * spatial_sigma;
    const double N0 = std::pow(s2 / std::numbers::pi, 0.75);
    const Vector4c u = majorana_spinor();
    const FourVector b = position_center;
    impl->eval = [N0, s2, u, b](const FourVector& p) {
        const double q2 = p.spatial_norm2();
        const cplx phase = std::exp(I * minkowski_dot(p, b));
        return (N0 * std::exp(-0.5 * s2 * q2) * phase * u).eval();
    };
    impl->support = SupportCone{position_center, 4.0 * spatial_sigma, false};
    const double N = 5.0;
    const double se = spatial_sigma / std::sqrt(2.0 * N);
    impl->envelope = DecayEnvelope{N0 * u.norm(), N, se, {}};
    impl->position_offset = position_center;
    impl->label = std::move(label);
    impl->gamma_real = 1;  // real profile times the Majorana spinor, any center
    impl->serial = serial_family("witness", {{"sigma", spatial_sigma}},
                                 {b.t, b.x, b.y, b.z});
    return TestFunction(std::move(impl));
}

TestFunction TestFunction::separable_bump(const std::array<double, 4>& radius,
                                          const Vector4c& spinor, const FourVector& center,
                                          double /*kappa_max*/, std::string label) {
    auto impl = std::make_shared<Impl>();
    const std::array<double, 4> r = radius;
    const FourVector c = center;
    const Vector4c u = spinor;
    impl->eval = [r, c, u](const FourVector& p) {
        const auto& beta = BumpTransform::instance();
        // axis 0 carries phase +p0 x0, spatial axes -p_j x_j
        const double k0 = p.t, k1 = -p.x, k2 = -p.y, k3 = -p.z;
        const double amp = r[0] * beta(k0 * r[0]) * r[1] * beta(k1 * r[1]) * r[2] *
                           beta(k2 * r[2]) * r[3] * beta(k3 * r[3]);
        const cplx phase =
            std::exp(I * (k0 * c.t + k1 * c.x + k2 * c.y + k3 * c.z));
        const double norm = 1.0 / ((2.0 * std::numbers::pi) * (2.0 * std::numbers::pi));
        return (norm * amp * phase * u).eval();
    };
    double rad = 0.0, rmin = 1e9;
    for (double rr : r) {
        rad += rr * rr;
        rmin = std::min(rmin, rr);
    }
    impl->support = SupportCone{center, std::sqrt(rad), true};
    // |beta(kappa)| <= 23.1 (1+kappa^2)^{-3/2} and beta(0) = 0.44399; the worst
    // single direction leaves three axes at their maximum.
    double Cprod = 23.1 * std::pow(0.44399382, 3) * u.norm();
    for (double rr : r) Cprod *= rr;
    impl->envelope = DecayEnvelope{Cprod / std::pow(2.0 * std::numbers::pi, 2), 1.5, rmin, {}};
    impl->position_offset = center;
    impl->label = std::move(label);
    impl->serial = serial_family("bump", {},
                                 {r[0], r[1], r[2], r[3], c.t, c.x, c.y, c.z, u[0].real(),
                                  u[0].imag(), u[1].real(), u[1].imag(), u[2].real(), u[2].imag(),
                                  u[3].real(), u[3].imag()});
    return TestFunction(std::move(impl));
}

TestFunction TestFunction::mode_vector(std::shared_ptr<const ModeSpace> space, Eigen::VectorXcd a,
                                       Eigen::VectorXcd b, std::string label) {
    auto impl = std::make_shared<Impl>();
    impl->modes = ModeVector{std::move(space), std::move(a), std::move(b)};
    impl->eval = [](const FourVector&) -> Vector4c {
        throw std::logic_error("mode-vector test functions have no momentum evaluation");
    };
    impl->label = std::move(label);
    impl->zero = impl->modes->a.isZero(0.0) && impl->modes->b.isZero(0.0);
    return TestFunction(std::move(impl));
}

Vector4c TestFunction::eval_hat(const FourVector& p) const { return impl_->eval(p); }

bool TestFunction::is_zero() const { return impl_->zero; }
const SupportCone& TestFunction::support() const { return impl_->support; }
const DecayEnvelope& TestFunction::envelope() const { return impl_->envelope; }
const FourVector& TestFunction::position_offset() const { return impl_->position_offset; }
const std::string& TestFunction::label() const { return impl_->label; }
const std::shared_ptr<const SerialNode>& TestFunction::serial() const { return impl_->serial; }
const ModeVector* TestFunction::mode_data() const {
    return impl_->modes ? &*impl_->modes : nullptr;
}
const void* TestFunction::id() const { return impl_.get(); }

bool TestFunction::is_gamma_real() const {
    int state = impl_->gamma_real.load();
    if (state >= 0) return state == 1;
    if (impl_->modes) {
        const auto& mv = *impl_->modes;
        bool ok = (mv.a - mv.b.conjugate()).norm() < 1e-10;
        impl_->gamma_real = ok ? 1 : 0;
        return ok;
    }
    std::mt19937_64 rng(0x5eed5eedULL);
    std::normal_distribution<double> dist(0.0, 2.0);
    const Matrix4c& C = charge_conjugation_matrix();
    bool ok = true;
    for (int i = 0; i < 100 && ok; ++i) {
        FourVector p{dist(rng), dist(rng), dist(rng), dist(rng)};
        Vector4c lhs = C * impl_->eval(-p).conjugate();
        Vector4c rhs = impl_->eval(p);
        if ((lhs - rhs).norm() > 1e-10 * std::max(1.0, rhs.norm())) ok = false;
    }
    impl_->gamma_real = ok ? 1 : 0;
    return ok;
}

TestFunction gamma_involution(const TestFunction& f) {
    if (const ModeVector* mv = f.mode_data()) {
        return TestFunction::mode_vector(mv->space, mv->b.conjugate(), mv->a.conjugate(),
                                         "G" + f.label());
    }
    auto base = f.impl();
    auto impl = std::make_shared<TestFunction::Impl>();
    impl->eval = [base](const FourVector& p) {
        return (charge_conjugation_matrix() * base->eval(-p).conjugate()).eval();
    };
    impl->support = base->support;
    impl->envelope = base->envelope;
    impl->envelope.shift = -base->envelope.shift;  // momentum support reflects
    impl->position_offset = base->position_offset;
    impl->label = "G" + base->label;
    impl->zero = base->zero;
    impl->serial = serial_transform("gamma", {}, {}, base->serial);
    if (base->gamma_real.load() == 1) impl->gamma_real = 1;
    return TestFunction(std::move(impl));
}

TestFunction poincare_act(const SLTwoC& A, const FourVector& a, const TestFunction& f) {
    auto base = f.impl();
    const Matrix4c S = spin_rep(A);
    const Matrix4r L = covering_map(A);
    const Matrix4r Linv = covering_map(A.inverse());
    const bool pure_translation = (L - Matrix4r::Identity()).norm() < 1e-14;
    auto impl = std::make_shared<TestFunction::Impl>();
    impl->eval = [base, S, Linv, a](const FourVector& p) {
        Eigen::Vector4d pv(p.t, p.x, p.y, p.z);
        Eigen::Vector4d q = Linv * pv;
        const cplx phase = std::exp(I * minkowski_dot(p, a));
        return (phase * (S * base->eval(FourVector{q[0], q[1], q[2], q[3]}))).eval();
    };
    Eigen::Vector4d c(base->support.center.t, base->support.center.x, base->support.center.y,
                      base->support.center.z);
    Eigen::Vector4d c2 = L * c;
    impl->support = SupportCone{FourVector{c2[0], c2[1], c2[2], c2[3]} + a, base->support.radius,
                                base->support.exact && pure_translation};
    DecayEnvelope env = base->envelope;
    const double opn = L.operatorNorm();
    env.s = env.s / opn;
    env.C = env.C * S.operatorNorm();
    {
        Eigen::Vector4d sh(env.shift.t, env.shift.x, env.shift.y, env.shift.z);
        Eigen::Vector4d sh2 = L * sh;
        env.shift = FourVector{sh2[0], sh2[1], sh2[2], sh2[3]};
    }
    impl->envelope = env;
    Eigen::Vector4d off(base->position_offset.t, base->position_offset.x, base->position_offset.y,
                        base->position_offset.z);
    Eigen::Vector4d off2 = L * off;
    impl->position_offset = FourVector{off2[0], off2[1], off2[2], off2[3]} + a;
    impl->label = "u" + base->label;
    impl->zero = base->zero;
    const Matrix2c& Am = A.matrix();
    impl->serial = serial_transform(
        "poincare", {},
        {a.t, a.x, a.y, a.z, Am(0, 0).real(), Am(0, 0).imag(), Am(0, 1).real(), Am(0, 1).imag(),
         Am(1, 0).real(), Am(1, 0).imag(), Am(1, 1).real(), Am(1, 1).imag()},
        base->serial);
    return TestFunction(std::move(impl));
}

TestFunction translate_fn(const FourVector& a, const TestFunction& f) {
    return poincare_act(SLTwoC::identity(), a, f);
}

TestFunction scale(const TestFunction& f, double lambda) {
    if (lambda <= 0.0) throw std::invalid_argument("scale requires lambda > 0");
    auto base = f.impl();
    auto impl = std::make_shared<TestFunction::Impl>();
    const double amp = std::pow(lambda, 1.5);
    impl->eval = [base, lambda, amp](const FourVector& p) {
        return (amp * base->eval(p * lambda)).eval();
    };
    impl->support =
        SupportCone{base->support.center * lambda, base->support.radius * lambda, base->support.exact};
    DecayEnvelope env = base->envelope;
    env.C *= amp;
    env.s *= lambda;
    env.shift = env.shift * (1.0 / lambda);
    impl->envelope = env;
    impl->position_offset = base->position_offset * lambda;
    impl->label = base->label + "_l";
    impl->zero = base->zero;
    if (base->gamma_real.load() == 1) impl->gamma_real = 1;
    impl->serial = serial_transform("scale", {{"lambda", lambda}}, {}, base->serial);
    return TestFunction(std::move(impl));
}

TestFunction mollify(const TestFunction& f, double width) {
    auto base = f.impl();
    auto impl = std::make_shared<TestFunction::Impl>();
    const double w2 = width * width;
    impl->eval = [base, w2](const FourVector& p) {
        return (std::exp(-0.5 * w2 * p.euclid_norm2()) * base->eval(p)).eval();
    };
    impl->support = SupportCone{base->support.center, base->support.radius + 4.0 * width, false};
    impl->envelope = base->envelope;
    impl->position_offset = base->position_offset;
    impl->label = base->label + "*h";
    impl->zero = base->zero;
    if (base->gamma_real.load() == 1) impl->gamma_real = 1;  // real even multiplier
    impl->serial = serial_transform("mollify", {{"width", width}}, {}, base->serial);
    return TestFunction(std::move(impl));
}

TestFunction momentum_shift(const TestFunction& f, const FourVector& delta) {
    auto base = f.impl();
    auto impl = std::make_shared<TestFunction::Impl>();
    const FourVector d = delta;
    impl->eval = [base, d](const FourVector& p) {
        return base->eval(FourVector{p.t - d.t, p.x - d.x, p.y - d.y, p.z - d.z});
    };
    impl->support = base->support;
    DecayEnvelope env = base->envelope;
    env.shift = env.shift + d;
    impl->envelope = env;
    impl->position_offset = base->position_offset;
    impl->label = base->label + "_k";
    impl->zero = base->zero;
    impl->serial = serial_transform("momentum_shift", {}, {d.t, d.x, d.y, d.z}, base->serial);
    return TestFunction(std::move(impl));
}

TestFunction time_derivative_weight(const TestFunction& f) {
    auto base = f.impl();
    auto impl = std::make_shared<TestFunction::Impl>();
    impl->eval = [base](const FourVector& p) { return (-I * p.t * base->eval(p)).eval(); };
    impl->support = base->support;
    DecayEnvelope env = base->envelope;
    env.N -= 0.5;  // one power of p absorbed
    env.C *= std::max(1.0, 2.0 / env.s);
    impl->envelope = env;
    impl->position_offset = base->position_offset;
    impl->label = "d0" + base->label;
    impl->zero = base->zero;
    impl->serial = serial_transform("d0", {}, {}, base->serial);
    return TestFunction(std::move(impl));
}

TestFunction linear_combination(cplx alpha, const TestFunction& f, cplx beta,
                                const TestFunction& g) {
    if (f.mode_data() || g.mode_data()) {
        const ModeVector* mf = f.mode_data();
        const ModeVector* mg = g.mode_data();
        if (!mf || !mg || mf->space != mg->space)
            throw std::invalid_argument("mode-vector combination requires one shared mode space");
        return TestFunction::mode_vector(mf->space, alpha * mf->a + beta * mg->a,
                                         alpha * mf->b + beta * mg->b,
                                         f.label() + "+" + g.label());
    }
    auto bf = f.impl(), bg = g.impl();
    auto impl = std::make_shared<TestFunction::Impl>();
    impl->eval = [bf, bg, alpha, beta](const FourVector& p) {
        return (alpha * bf->eval(p) + beta * bg->eval(p)).eval();
    };
    const FourVector cf = bf->support.center, cg = bg->support.center;
    impl->support = SupportCone{(cf + cg) * 0.5,
                                0.5 * std::sqrt((cf - cg).euclid_norm2()) +
                                    std::max(bf->support.radius, bg->support.radius),
                                bf->support.exact && bg->support.exact};
    DecayEnvelope env;
    env.N = std::min(bf->envelope.N, bg->envelope.N);
    env.s = std::min(bf->envelope.s, bg->envelope.s);
    env.shift = bf->envelope.shift.euclid_norm2() >= bg->envelope.shift.euclid_norm2()
                    ? bf->envelope.shift
                    : bg->envelope.shift;
    env.C = std::abs(alpha) * bf->envelope.C + std::abs(beta) * bg->envelope.C;
    impl->envelope = env;
    impl->position_offset = bf->position_offset;  // hint only; dominant term first
    impl->label = f.label() + "+" + g.label();
    impl->zero = bf->zero && bg->zero;
    return TestFunction(std::move(impl));
}

TestFunction operator*(cplx alpha, const TestFunction& f) {
    if (const ModeVector* mv = f.mode_data())
        return TestFunction::mode_vector(mv->space, alpha * mv->a, alpha * mv->b, f.label());
    auto base = f.impl();
    auto impl = std::make_shared<TestFunction::Impl>();
    impl->eval = [base, alpha](const FourVector& p) { return (alpha * base->eval(p)).eval(); };
    impl->support = base->support;
    impl->envelope = base->envelope;
    impl->envelope.C *= std::abs(alpha);
    impl->position_offset = base->position_offset;
    impl->label = base->label;
    impl->zero = base->zero || alpha == 0.0;
    if (base->gamma_real.load() == 1 && alpha.imag() == 0.0) impl->gamma_real = 1;
    impl->serial = serial_transform("scalar", {{"re", alpha.real()}, {"im", alpha.imag()}}, {},
                                    base->serial);
    return TestFunction(std::move(impl));
}

}  // namespace mslab
