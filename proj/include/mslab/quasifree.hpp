#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "mslab/one_particle.hpp"
#include "mslab/test_function.hpp"

namespace mslab {

struct NotSkewSymmetric : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct OddOrder : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct MonomialTooLong : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct NegativeNormBeyondTolerance : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// coefficient * B(f_1) ... B(f_k); parity = (-1)^k.
struct FieldMonomial {
    std::complex<double> coefficient{1.0, 0.0};
    std::vector<TestFunction> factors;

    int parity_sign() const { return factors.size() % 2 == 0 ? 1 : -1; }
};

/// Finite linear combination of ordered monomials. No normal ordering is
/// imposed; the CAR enters only through expectation values.
class FieldPolynomial {
public:
    FieldPolynomial() = default;

    static FieldPolynomial zero();
    static FieldPolynomial one();
    static FieldPolynomial field(const TestFunction& f);  // psi(f)

    FieldPolynomial operator+(const FieldPolynomial& o) const;
    FieldPolynomial operator-(const FieldPolynomial& o) const;
    FieldPolynomial operator*(const FieldPolynomial& o) const;
    FieldPolynomial operator*(std::complex<double> c) const;

    /// (c B(f1)..B(fk))^* = conj(c) B(Gamma fk)..B(Gamma f1).
    FieldPolynomial adjoint() const;

    const std::vector<FieldMonomial>& terms() const { return terms_; }
    std::vector<FieldMonomial>& terms() { return terms_; }

    size_t max_factors() const;

private:
    std::vector<FieldMonomial> terms_;
};

FieldPolynomial operator*(std::complex<double> c, const FieldPolynomial& X);

/// beta_k: multiplies every monomial by (-1)^{number of factors}.
FieldPolynomial gauge_act(const FieldPolynomial& X);

/// alpha_x: every factor f -> u(1,x) f.
FieldPolynomial translate(const FourVector& x, const FieldPolynomial& X);

/// Pfaffian by first-row expansion; S must be skew-symmetric of even order <= 16.
std::complex<double> pfaffian(const Eigen::MatrixXcd& S);

/// omega(B(f)B(g)) = <f, P+ Gamma g>_m; antilinear in both slots, satisfies
/// two_point(f,g) + two_point(g,f) = inner(g, Gamma f).
FormResult two_point_full(const TestFunction& f, const TestFunction& g,
                          const QuasifreeModel& model);
std::complex<double> two_point(const TestFunction& f, const TestFunction& g,
                               const QuasifreeModel& model);

/// Pair-expectation table omega_ij = two_point(f_i, f_j) together with the
/// skew part S_ij = omega_ij - (1/2) inner(f_j, Gamma f_i).
struct CovarianceMatrix {
    Eigen::MatrixXcd omega;
    Eigen::MatrixXcd skew;
    double error = 0.0;

    /// max_ij |omega_ij + omega_ji - <f_j, Gamma f_i>| over the sampled table.
    double car_consistency = 0.0;
};

CovarianceMatrix covariance_matrix(const std::vector<TestFunction>& fs,
                                   const QuasifreeModel& model);

struct ExpectationResult {
    std::complex<double> value{0.0, 0.0};
    double error = 0.0;
};

/// Quasifree vacuum functional: odd monomials vanish, even ones contribute
/// the Pfaffian of their upper-triangular pair table.
ExpectationResult vacuum_expectation_full(const FieldPolynomial& X, const QuasifreeModel& model);
std::complex<double> vacuum_expectation(const FieldPolynomial& X, const QuasifreeModel& model);

struct GnsNormResult {
    double value = 0.0;
    double error = 0.0;
    bool clamped = false;  // negative-by-noise square clamped to zero
};

/// ||X Omega|| = sqrt(omega(X* X)).
GnsNormResult gns_norm_full(const FieldPolynomial& X, const QuasifreeModel& model);
double gns_norm(const FieldPolynomial& X, const QuasifreeModel& model);

}  // namespace mslab
