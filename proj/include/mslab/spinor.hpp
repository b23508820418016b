#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <stdexcept>

#include "mslab/fourvec.hpp"

namespace mslab {

using Matrix2c = Eigen::Matrix2cd;
using Matrix4c = Eigen::Matrix4cd;
using Vector4c = Eigen::Vector4cd;
using Matrix4r = Eigen::Matrix4d;

struct OnShellSingularity : std::domain_error {
    using std::domain_error::domain_error;
};

struct RadiusTooSmall : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Pauli matrix sigma_j, j = 1..3.
const Matrix2c& pauli(int j);

/// Dirac matrices in the chiral representation:
///   gamma^0 = ((0,1),(1,0)),  gamma^j = ((0,sigma_j),(-sigma_j,0)).
const Matrix4c& gamma(int mu);

/// v-slash = v_mu gamma^mu for contravariant v, indices lowered with
/// eta = diag(+,-,-,-): v0 g0 - v1 g1 - v2 g2 - v3 g3.
Matrix4c slash(const FourVector& v);

/// The real symmetric matrix i*gamma^2 entering charge conjugation.
const Matrix4c& charge_conjugation_matrix();

/// Antilinear charge conjugation C u = i gamma^2 conj(u).
Vector4c charge_conjugate(const Vector4c& u);

/// Minkowski metric as a 4x4 matrix.
const Matrix4r& minkowski_metric();

/// Element of SL(2,C); determinant drift beyond 1e-12 is renormalized away.
class SLTwoC {
public:
    SLTwoC();  // identity
    explicit SLTwoC(const Matrix2c& m);

    static SLTwoC identity();
    /// covering_map(boost(s, n)) is the pure boost with rapidity s along n.
    static SLTwoC boost(double rapidity, const Vec3& axis);
    static SLTwoC boost_z(double rapidity);
    /// covering_map(rotation(theta, n)) is the right-handed rotation by theta about n.
    static SLTwoC rotation(double angle, const Vec3& axis);

    SLTwoC operator*(const SLTwoC& o) const;
    SLTwoC inverse() const;
    SLTwoC operator-() const;

    const Matrix2c& matrix() const { return m_; }

private:
    Matrix2c m_;
    void renormalize();
};

/// Spin representation S(A) = diag(A, (A^dagger)^{-1}).
Matrix4c spin_rep(const SLTwoC& A);

/// Covering homomorphism SL(2,C) -> L+^up, fixed by the intertwining
/// property S(A) slash(v) S(A)^{-1} = slash(covering_map(A) v).
Matrix4r covering_map(const SLTwoC& A);

/// Closed-form Lorentz boost with rapidity s along the x1 axis.
Matrix4r boost1_matrix(double rapidity);

/// Embed an SO(3) rotation into the Lorentz group.
Matrix4r rotation_matrix4(const Eigen::Matrix3d& R);

enum class EnergySign { plus, minus };

struct MomentumOnShell {
    Vec3 pvec;
    double m = 1.0;
    EnergySign sign = EnergySign::plus;

    double omega() const { return std::sqrt(pvec.norm2() + m * m); }
    double energy() const { return sign == EnergySign::plus ? omega() : -omega(); }
    FourVector four_vector() const { return with_energy(energy(), pvec); }
};

/// P+-/P-(p) = gamma^0 (p-slash + m) / (2 p0) at p0 = +-omega_m(p).
Matrix4c energy_projection(const MomentumOnShell& p);
Matrix4c energy_projection(double m, const Vec3& pvec, EnergySign sign);

/// Geometric witness for the spatial-momentum lower bound under small boosts:
/// for |s| < delta, R1 L1(s) R2 with R1,R2 in SO(3) maps any p in the closed
/// forward cone with 0 <= p^2 <= m^2, |pvec| > R, to p' with |p'vec| > |pvec|/sqrt(2).
struct LemmaA5Witness {
    double delta;
    double kappa;  // worst-case sqrt(2) * p0/|p1| ratio used in the bound
    std::function<bool(const Matrix4r& Lambda, const FourVector& p)> checker;
};

LemmaA5Witness lemma_a5_witness(double m, double R);

}  // namespace mslab
