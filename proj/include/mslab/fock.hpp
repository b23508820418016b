#pragma once

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <stdexcept>
#include <vector>

#include "mslab/test_function.hpp"

namespace mslab {

struct TooManyModes : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// n abstract orthonormal modes e_1..e_n in the positive-energy subspace;
/// together with Gamma e_1..Gamma e_n they span a 2n-dimensional discretized
/// one-particle space. Exact pair values:
///   <e_i, e_j> = delta_ij,  <Gamma e_i, Gamma e_j> = delta_ij,  mixed = 0,
///   two_point(e_i, Gamma e_j) = delta_ij, all other mode pairs vanish.
class ModeSpace : public std::enable_shared_from_this<ModeSpace> {
public:
    explicit ModeSpace(int n);
    int n() const { return n_; }

    /// Jordan-Wigner annihilation matrix a_i on the 2^n Fock space.
    const Eigen::MatrixXcd& annihilator(int i) const;
    int dim() const { return 1 << n_; }

private:
    int n_;
    std::vector<Eigen::MatrixXcd> a_;
};

/// e_i as a mode-vector test function.
TestFunction mode_basis(const std::shared_ptr<const ModeSpace>& space, int i);

class FieldPolynomial;

/// Exact vacuum matrix element of a polynomial whose factors are mode vectors
/// over one shared ModeSpace, via B(f) = a(P+ f) + a*(P+ Gamma f) assembled
/// from explicit CAR matrices.
std::complex<double> fock_oracle(const FieldPolynomial& X);

}  // namespace mslab
