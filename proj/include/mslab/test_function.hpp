#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mslab/fourvec.hpp"
#include "mslab/spinor.hpp"

namespace mslab {

struct GridExtrapolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Double-cone support descriptor in position space. Gaussian-family supports
/// are effective (4 sigma) and flagged approximate.
struct SupportCone {
    FourVector center{};
    double radius = 1.0;
    bool exact = false;
};

/// Momentum-space decay: |fhat(p)| <= C (1 + s^2 max(0,|p - shift|)^2)^{-N},
/// |.| the Euclidean 4-norm; shift is the momentum-support center.
struct DecayEnvelope {
    double C = 1.0;
    double N = 4.0;
    double s = 1.0;
    FourVector shift{};
};

class ModeSpace;

/// Exact coefficient vector over abstract orthonormal positive-shell modes:
/// f = sum_i a_i e_i + sum_i b_i (Gamma e_i).
struct ModeVector {
    std::shared_ptr<const ModeSpace> space;
    Eigen::VectorXcd a;
    Eigen::VectorXcd b;
};

/// Serialization record for reproducible CLI runs; transform nodes wrap a child.
struct SerialNode {
    std::string kind;
    std::map<std::string, double> params;
    std::vector<double> payload;
    std::shared_ptr<const SerialNode> child;
};

/// Spinor-valued momentum-space test function. Values are immutable after
/// construction; all transforms return new objects sharing subexpressions.
class TestFunction {
public:
    using Eval = std::function<Vector4c(const FourVector&)>;

    TestFunction();  // zero function

    /// Position-space Gaussian profile exp(-sum_mu x_mu^2/(2 sigma_mu^2)) times a
    /// constant spinor, expressed in momentum space with the (2pi)^-2 e^{ip.x}
    /// convention: fhat(p) = prod(sigma_mu) exp(-sum sigma_mu^2 p_mu^2 / 2) u,
    /// then translated to `position_center` and modulated to `momentum_center`.
    static TestFunction gaussian(const std::array<double, 4>& sigma, const Vector4c& spinor,
                                 const FourVector& position_center = {},
                                 const FourVector& momentum_center = {},
                                 std::string label = "gaussian");

    /// Energy-flat Majorana profile fhat(p) = N exp(-sigma^2 |pvec|^2/2) (1+i g2)e1
    /// with N = (sigma^2/pi)^{3/4}, so that ||f||_m = sqrt(2) for every mass.
    static TestFunction witness_profile(double spatial_sigma, const FourVector& position_center = {},
                                        std::string label = "witness");

    /// Separable exact-support bump: product over axes of b((x_mu - c_mu)/r_mu)
    /// with b(t) = exp(-1/(1-t^2)), times a constant spinor. The four 1D
    /// transforms are cached on a grid covering |k r| <= kappa_max and extended
    /// on demand (never clamped).
    static TestFunction separable_bump(const std::array<double, 4>& radius, const Vector4c& spinor,
                                       const FourVector& center = {}, double kappa_max = 64.0,
                                       std::string label = "bump");

    static TestFunction mode_vector(std::shared_ptr<const ModeSpace> space, Eigen::VectorXcd a,
                                    Eigen::VectorXcd b, std::string label = "mode");

    static TestFunction zero();

    Vector4c eval_hat(const FourVector& p) const;

    bool is_zero() const;
    const SupportCone& support() const;
    const DecayEnvelope& envelope() const;
    /// Dominant position-space offset; the spatial part is the oscillation
    /// hint handed to the quadrature engine.
    const FourVector& position_offset() const;
    const std::string& label() const;
    const std::shared_ptr<const SerialNode>& serial() const;

    const ModeVector* mode_data() const;

    /// Gamma-reality Gamma f = f, determined structurally where possible and
    /// otherwise by sampling at 100 pseudorandom momenta (tolerance 1e-10).
    bool is_gamma_real() const;

    /// Stable identity for pair-table memoization.
    const void* id() const;

    struct Impl;
    explicit TestFunction(std::shared_ptr<const Impl> impl);
    const std::shared_ptr<const Impl>& impl() const { return impl_; }

private:
    std::shared_ptr<const Impl> impl_;
};

/// (Gamma f)^(p) = i gamma^2 conj(fhat(-p)); antilinear involution.
TestFunction gamma_involution(const TestFunction& f);

/// (u(A,a) f)^(p) = e^{i p.a} S(A) fhat(Lambda(A)^{-1} p).
TestFunction poincare_act(const SLTwoC& A, const FourVector& a, const TestFunction& f);

TestFunction translate_fn(const FourVector& a, const TestFunction& f);

/// fhat_lambda(p) = lambda^{3/2} fhat(lambda p).
TestFunction scale(const TestFunction& f, double lambda);

/// Gaussian mollifier of width w: momentum multiplier exp(-w^2 |p|_E^2 / 2),
/// i.e. (2pi)^2 hhat(p) for the unit-mass Gaussian h on R^4.
TestFunction mollify(const TestFunction& f, double width);

/// Shift the momentum argument: fhat(p) -> fhat(p - delta) (componentwise).
TestFunction momentum_shift(const TestFunction& f, const FourVector& delta);

/// fhat -> -i p0 fhat; test-function realization of the time derivation.
TestFunction time_derivative_weight(const TestFunction& f);

TestFunction linear_combination(std::complex<double> alpha, const TestFunction& f,
                                std::complex<double> beta, const TestFunction& g);

TestFunction operator*(std::complex<double> alpha, const TestFunction& f);

}  // namespace mslab
