#include "mslab/spinor.hpp"

#include <cmath>

namespace mslab {

namespace {

using cplx = std::complex<double>;
constexpr cplx I{0.0, 1.0};

Matrix2c make_pauli(int j) {
    Matrix2c s;
    switch (j) {
        case 1: s << 0, 1, 1, 0; break;
        case 2: s << 0, -I, I, 0; break;
        default: s << 1, 0, 0, -1; break;
    }
    return s;
}

Matrix4c make_gamma(int mu) {
    Matrix4c g = Matrix4c::Zero();
    if (mu == 0) {
        g.block<2, 2>(0, 2) = Matrix2c::Identity();
        g.block<2, 2>(2, 0) = Matrix2c::Identity();
    } else {
        g.block<2, 2>(0, 2) = make_pauli(mu);
        g.block<2, 2>(2, 0) = -make_pauli(mu);
    }
    return g;
}

}  // namespace

const Matrix2c& pauli(int j) {
    static const Matrix2c s[3] = {make_pauli(1), make_pauli(2), make_pauli(3)};
    return s[j - 1];
}

const Matrix4c& gamma(int mu) {
    static const Matrix4c g[4] = {make_gamma(0), make_gamma(1), make_gamma(2), make_gamma(3)};
    return g[mu];
}

Matrix4c slash(const FourVector& v) {
    return v.t * gamma(0) - v.x * gamma(1) - v.y * gamma(2) - v.z * gamma(3);
}

const Matrix4c& charge_conjugation_matrix() {
    static const Matrix4c C = (I * gamma(2)).eval();
    return C;
}

Vector4c charge_conjugate(const Vector4c& u) { return charge_conjugation_matrix() * u.conjugate(); }

const Matrix4r& minkowski_metric() {
    static const Matrix4r eta = [] {
        Matrix4r e = Matrix4r::Zero();
        e.diagonal() << 1.0, -1.0, -1.0, -1.0;
        return e;
    }();
    return eta;
}

SLTwoC::SLTwoC() : m_(Matrix2c::Identity()) {}

SLTwoC::SLTwoC(const Matrix2c& m) : m_(m) { renormalize(); }

void SLTwoC::renormalize() {
    cplx det = m_(0, 0) * m_(1, 1) - m_(0, 1) * m_(1, 0);
    if (std::abs(det - 1.0) > 1e-12) m_ /= std::sqrt(det);
}

SLTwoC SLTwoC::identity() { return SLTwoC(); }

SLTwoC SLTwoC::boost(double rapidity, const Vec3& axis) {
    const double n = axis.norm();
    Matrix2c ns = (axis.x * pauli(1) + axis.y * pauli(2) + axis.z * pauli(3)) / n;
    // exp(-(s/2) n.sigma) = cosh(s/2) - sinh(s/2) n.sigma
    Matrix2c m = std::cosh(rapidity / 2) * Matrix2c::Identity() - std::sinh(rapidity / 2) * ns;
    return SLTwoC(m);
}

SLTwoC SLTwoC::boost_z(double rapidity) { return boost(rapidity, Vec3{0.0, 0.0, 1.0}); }

SLTwoC SLTwoC::rotation(double angle, const Vec3& axis) {
    const double n = axis.norm();
    Matrix2c ns = (axis.x * pauli(1) + axis.y * pauli(2) + axis.z * pauli(3)) / n;
    Matrix2c m = std::cos(angle / 2) * Matrix2c::Identity() - I * std::sin(angle / 2) * ns;
    return SLTwoC(m);
}

SLTwoC SLTwoC::operator*(const SLTwoC& o) const { return SLTwoC(m_ * o.m_); }

SLTwoC SLTwoC::inverse() const {
    Matrix2c inv;
    inv << m_(1, 1), -m_(0, 1), -m_(1, 0), m_(0, 0);
    return SLTwoC(inv);
}

SLTwoC SLTwoC::operator-() const {
    SLTwoC r;
    r.m_ = -m_;
    return r;
}

Matrix4c spin_rep(const SLTwoC& A) {
    Matrix4c s = Matrix4c::Zero();
    s.block<2, 2>(0, 0) = A.matrix();
    s.block<2, 2>(2, 2) = A.matrix().adjoint().inverse();
    return s;
}

Matrix4r covering_map(const SLTwoC& A) {
    // Lambda^mu_nu = (1/2) tr(st^mu A st_nu A^dagger), st = (1,-sigma) in both
    // slots; this is the unique convention intertwining with spin_rep.
    static const Matrix2c st[4] = {Matrix2c::Identity(), (-make_pauli(1)).eval(),
                                   (-make_pauli(2)).eval(), (-make_pauli(3)).eval()};
    Matrix4r L;
    const Matrix2c Ad = A.matrix().adjoint();
    for (int nu = 0; nu < 4; ++nu) {
        Matrix2c mid = A.matrix() * st[nu] * Ad;
        for (int mu = 0; mu < 4; ++mu) L(mu, nu) = 0.5 * (st[mu] * mid).trace().real();
    }
    return L;
}

Matrix4r boost1_matrix(double s) {
    Matrix4r L = Matrix4r::Identity();
    L(0, 0) = L(1, 1) = std::cosh(s);
    L(0, 1) = L(1, 0) = std::sinh(s);
    return L;
}

Matrix4r rotation_matrix4(const Eigen::Matrix3d& R) {
    Matrix4r L = Matrix4r::Identity();
    L.block<3, 3>(1, 1) = R;
    return L;
}

Matrix4c energy_projection(const MomentumOnShell& p) {
    const double w = p.omega();
    if (!(w > 0.0)) throw OnShellSingularity("energy_projection at m = 0, p = 0");
    const double p0 = p.energy();
    return gamma(0) * (slash(p.four_vector()) + p.m * Matrix4c::Identity()) / (2.0 * p0);
}

Matrix4c energy_projection(double m, const Vec3& pvec, EnergySign sign) {
    return energy_projection(MomentumOnShell{pvec, m, sign});
}

LemmaA5Witness lemma_a5_witness(double m, double R) {
    if (R < 3.0 * m) throw RadiusTooSmall("lemma_a5_witness requires R >= 3m");
    // Worst case of the two-case estimate: |p1| >= |pvec|/sqrt(2) and
    // p0 <= omega_m(|pvec|), so p0/|p1| <= kappa := sqrt(2) sqrt(1 + m^2/R^2).
    // delta solves cosh(s) - kappa sinh(s) = 1/sqrt(2).
    const double kappa = std::sqrt(2.0) * std::sqrt(1.0 + (m * m) / (R * R));
    const double target = 1.0 / std::sqrt(2.0);
    double lo = 0.0, hi = 1.0;
    auto g = [&](double s) { return std::cosh(s) - kappa * std::sinh(s) - target; };
    while (g(hi) > 0.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (g(mid) > 0.0 ? lo : hi) = mid;
    }
    LemmaA5Witness w;
    w.delta = lo;
    w.kappa = kappa;
    w.checker = [](const Matrix4r& Lambda, const FourVector& p) {
        Eigen::Vector4d v(p.t, p.x, p.y, p.z);
        Eigen::Vector4d q = Lambda * v;
        const double before = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
        const double after = std::sqrt(q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
        return after > before / std::sqrt(2.0);
    };
    return w;
}

}  // namespace mslab
