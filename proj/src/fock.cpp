#include "mslab/fock.hpp"

#include "mslab/quasifree.hpp"

namespace mslab {

namespace {

using cplx = std::complex<double>;

}  // namespace

ModeSpace::ModeSpace(int n) : n_(n) {
    if (n < 1 || n > 5) throw TooManyModes("ModeSpace supports 1..5 modes");
    const int d = 1 << n_;
    // Jordan-Wigner: a_i = (prod_{j<i} Z_j) (X_i + i Y_i)/2 on 2^n basis states
    // indexed by occupation bitmasks.
    a_.reserve(n_);
    for (int i = 0; i < n_; ++i) {
        Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(d, d);
        for (int s = 0; s < d; ++s) {
            if (!(s & (1 << i))) continue;
            int t = s & ~(1 << i);
            int swaps = 0;
            for (int j = 0; j < i; ++j)
                if (s & (1 << j)) ++swaps;
            a(t, s) = (swaps % 2 == 0) ? 1.0 : -1.0;
        }
        a_.push_back(std::move(a));
    }
}

const Eigen::MatrixXcd& ModeSpace::annihilator(int i) const { return a_[i]; }

TestFunction mode_basis(const std::shared_ptr<const ModeSpace>& space, int i) {
    Eigen::VectorXcd a = Eigen::VectorXcd::Zero(space->n());
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(space->n());
    a[i] = 1.0;
    return TestFunction::mode_vector(space, std::move(a), std::move(b), "e" + std::to_string(i));
}

cplx fock_oracle(const FieldPolynomial& X) {
    std::shared_ptr<const ModeSpace> space;
    for (const auto& t : X.terms())
        for (const auto& f : t.factors) {
            const ModeVector* mv = f.mode_data();
            if (!mv) throw std::invalid_argument("fock_oracle: factor is not a mode vector");
            if (!space) space = mv->space;
            if (mv->space != space)
                throw std::invalid_argument("fock_oracle: factors on different mode spaces");
        }
    if (!space) {
        // polynomial in the identity only
        cplx acc{0.0, 0.0};
        for (const auto& t : X.terms())
            if (t.factors.empty()) acc += t.coefficient;
        return acc;
    }

    const int d = space->dim();
    Eigen::VectorXcd vac = Eigen::VectorXcd::Zero(d);
    vac[0] = 1.0;

    // B(f) = a(P+ f) + a*(P+ Gamma f); with f = sum a_i e_i + b_i Gamma e_i this
    // is sum_i conj(a_i) a_i-op + conj(conj(b_i)) a*_i-op, a() antilinear.
    auto field_matrix = [&](const ModeVector& mv) {
        Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(d, d);
        for (int i = 0; i < space->n(); ++i) {
            const auto& ai = space->annihilator(i);
            if (mv.a[i] != 0.0) B += std::conj(mv.a[i]) * ai;
            // P+ Gamma f has e_i coefficient conj(b_i); a*() is linear
            if (mv.b[i] != 0.0) B += std::conj(mv.b[i]) * ai.adjoint();
        }
        return B;
    };

    cplx acc{0.0, 0.0};
    for (const auto& t : X.terms()) {
        Eigen::VectorXcd v = vac;
        for (auto it = t.factors.rbegin(); it != t.factors.rend(); ++it)
            v = field_matrix(*it->mode_data()) * v;
        acc += t.coefficient * vac.dot(v);
    }
    return acc;
}

}  // namespace mslab
