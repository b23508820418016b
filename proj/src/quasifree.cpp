#include "mslab/quasifree.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <map>
#include <thread>

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
    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= n) return;
            body(i);
        }
    };
    std::vector<std::thread> pool;
    const unsigned k = std::min<size_t>(hw, n);
    pool.reserve(k);
    for (unsigned t = 0; t < k; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

double double_factorial(int k) {
    double r = 1.0;
    for (int i = k; i > 1; i -= 2) r *= i;
    return r;
}

/// Pair-value memo for one expectation call, keyed by factor identity.
class PairMemo {
public:
    PairMemo(const QuasifreeModel& model) : model_(model) {}

    void request(const TestFunction& a, const TestFunction& b) {
        Key k{a.id(), b.id()};
        if (values_.count(k)) return;
        if (pending_.emplace(k, std::pair<TestFunction, TestFunction>(a, b)).second) {}
    }

    void materialize() {
        std::vector<std::pair<Key, std::pair<TestFunction, TestFunction>>> work(pending_.begin(),
                                                                                pending_.end());
        std::vector<FormResult> out(work.size());
        run_parallel(work.size(), [&](size_t i) {
            out[i] = two_point_full(work[i].second.first, work[i].second.second, model_);
        });
        for (size_t i = 0; i < work.size(); ++i) values_[work[i].first] = out[i];
        pending_.clear();
    }

    const FormResult& get(const TestFunction& a, const TestFunction& b) const {
        return values_.at(Key{a.id(), b.id()});
    }

private:
    using Key = std::pair<const void*, const void*>;
    const QuasifreeModel& model_;
    std::map<Key, std::pair<TestFunction, TestFunction>> pending_;
    std::map<Key, FormResult> values_;
};

cplx pfaffian_expand(const Eigen::MatrixXcd& S, std::vector<int>& alive, int n_alive) {
    if (n_alive == 0) return cplx{1.0, 0.0};
    // first alive row
    int first = -1;
    for (size_t i = 0; i < alive.size(); ++i)
        if (alive[i]) {
            first = static_cast<int>(i);
            break;
        }
    alive[first] = 0;
    cplx acc{0.0, 0.0};
    int sign = 1;
    for (size_t j = first + 1; j < alive.size(); ++j) {
        if (!alive[j]) continue;
        if (S(first, j) != 0.0) {
            alive[j] = 0;
            acc += static_cast<double>(sign) * S(first, j) * pfaffian_expand(S, alive, n_alive - 2);
            alive[j] = 1;
        }
        sign = -sign;
    }
    alive[first] = 1;
    return acc;
}

}  // namespace

FieldPolynomial FieldPolynomial::zero() { return FieldPolynomial(); }

FieldPolynomial FieldPolynomial::one() {
    FieldPolynomial p;
    p.terms_.push_back(FieldMonomial{cplx{1.0, 0.0}, {}});
    return p;
}

FieldPolynomial FieldPolynomial::field(const TestFunction& f) {
    FieldPolynomial p;
    p.terms_.push_back(FieldMonomial{cplx{1.0, 0.0}, {f}});
    return p;
}

FieldPolynomial FieldPolynomial::operator+(const FieldPolynomial& o) const {
    FieldPolynomial r = *this;
    r.terms_.insert(r.terms_.end(), o.terms_.begin(), o.terms_.end());
    return r;
}

FieldPolynomial FieldPolynomial::operator-(const FieldPolynomial& o) const {
    return *this + o * cplx{-1.0, 0.0};
}

FieldPolynomial FieldPolynomial::operator*(const FieldPolynomial& o) const {
    FieldPolynomial r;
    for (const auto& a : terms_)
        for (const auto& b : o.terms_) {
            FieldMonomial m;
            m.coefficient = a.coefficient * b.coefficient;
            m.factors = a.factors;
            m.factors.insert(m.factors.end(), b.factors.begin(), b.factors.end());
            r.terms_.push_back(std::move(m));
        }
    return r;
}

FieldPolynomial FieldPolynomial::operator*(cplx c) const {
    FieldPolynomial r = *this;
    for (auto& t : r.terms_) t.coefficient *= c;
    return r;
}

FieldPolynomial operator*(cplx c, const FieldPolynomial& X) { return X * c; }

FieldPolynomial FieldPolynomial::adjoint() const {
    FieldPolynomial r;
    for (const auto& t : terms_) {
        FieldMonomial m;
        m.coefficient = std::conj(t.coefficient);
        m.factors.reserve(t.factors.size());
        for (auto it = t.factors.rbegin(); it != t.factors.rend(); ++it)
            m.factors.push_back(gamma_involution(*it));
        r.terms_.push_back(std::move(m));
    }
    return r;
}

size_t FieldPolynomial::max_factors() const {
    size_t k = 0;
    for (const auto& t : terms_) k = std::max(k, t.factors.size());
    return k;
}

FieldPolynomial gauge_act(const FieldPolynomial& X) {
    FieldPolynomial r = X;
    for (auto& t : r.terms()) t.coefficient *= t.parity_sign();
    return r;
}

FieldPolynomial translate(const FourVector& x, const FieldPolynomial& X) {
    FieldPolynomial r;
    for (const auto& t : X.terms()) {
        FieldMonomial m;
        m.coefficient = t.coefficient;
        m.factors.reserve(t.factors.size());
        for (const auto& f : t.factors) m.factors.push_back(translate_fn(x, f));
        r.terms().push_back(std::move(m));
    }
    return r;
}

cplx pfaffian(const Eigen::MatrixXcd& S) {
    const int n = static_cast<int>(S.rows());
    if (n != S.cols() || n % 2 != 0) throw OddOrder("pfaffian needs an even-order square matrix");
    if (n > 16) throw MonomialTooLong("pfaffian supports order <= 16");
    double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
    if ((S + S.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw NotSkewSymmetric("pfaffian input is not skew-symmetric");
    std::vector<int> alive(n, 1);
    return pfaffian_expand(S, alive, n);
}

FormResult two_point_full(const TestFunction& f, const TestFunction& g,
                          const QuasifreeModel& model) {
    return pplus_form_full(f, gamma_involution(g), model);
}

cplx two_point(const TestFunction& f, const TestFunction& g, const QuasifreeModel& model) {
    return two_point_full(f, g, model).value;
}

CovarianceMatrix covariance_matrix(const std::vector<TestFunction>& fs,
                                   const QuasifreeModel& model) {
    const int n = static_cast<int>(fs.size());
    CovarianceMatrix cm;
    cm.omega.resize(n, n);
    cm.skew.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            FormResult r = two_point_full(fs[i], fs[j], model);
            cm.omega(i, j) = r.value;
            cm.error = std::max(cm.error, r.error + r.truncation);
        }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            cplx anti = inner(fs[j], gamma_involution(fs[i]), model);
            cm.skew(i, j) = cm.omega(i, j) - 0.5 * anti;
            cm.car_consistency =
                std::max(cm.car_consistency, std::abs(cm.omega(i, j) + cm.omega(j, i) - anti));
        }
    return cm;
}

ExpectationResult vacuum_expectation_full(const FieldPolynomial& X, const QuasifreeModel& model) {
    for (const auto& t : X.terms())
        if (t.factors.size() > 16)
            throw MonomialTooLong("vacuum_expectation: monomial length > 16");

    PairMemo memo(model);
    for (const auto& t : X.terms()) {
        const auto& fs = t.factors;
        if (fs.size() % 2 != 0) continue;
        for (size_t i = 0; i < fs.size(); ++i)
            for (size_t j = i + 1; j < fs.size(); ++j) memo.request(fs[i], fs[j]);
    }
    memo.materialize();

    ExpectationResult res;
    for (const auto& t : X.terms()) {
        const auto& fs = t.factors;
        const int k = static_cast<int>(fs.size());
        if (k % 2 != 0) continue;  // odd monomials vanish in the quasifree state
        if (k == 0) {
            res.value += t.coefficient;
            continue;
        }
        Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(k, k);
        double pair_err = 0.0, max_abs = 0.0;
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j) {
                const FormResult& r = memo.get(fs[i], fs[j]);
                S(i, j) = r.value;
                S(j, i) = -r.value;
                pair_err += r.error + r.truncation;
                max_abs = std::max(max_abs, std::abs(r.value));
            }
        std::vector<int> alive(k, 1);
        cplx pf = pfaffian_expand(S, alive, k);
        res.value += t.coefficient * pf;
        // crude first-order sensitivity: each pair enters (k-3)!! completions
        const double sens = double_factorial(std::max(1, k - 3)) *
                            std::pow(std::max(1.0, max_abs), k / 2 - 1);
        res.error += std::abs(t.coefficient) * pair_err * sens;
    }
    return res;
}

cplx vacuum_expectation(const FieldPolynomial& X, const QuasifreeModel& model) {
    return vacuum_expectation_full(X, model).value;
}

GnsNormResult gns_norm_full(const FieldPolynomial& X, const QuasifreeModel& model) {
    ExpectationResult e = vacuum_expectation_full(X.adjoint() * X, model);
    GnsNormResult r;
    r.error = e.error;
    double sq = e.value.real();
    if (sq < -10.0 * std::max(e.error, 1e-12))
        throw NegativeNormBeyondTolerance("omega(X*X) = " + std::to_string(sq) +
                                          " below -10 * error estimate");
    if (sq < 0.0) {
        sq = 0.0;
        r.clamped = true;
    }
    r.value = std::sqrt(sq);
    return r;
}

double gns_norm(const FieldPolynomial& X, const QuasifreeModel& model) {
    return gns_norm_full(X, model).value;
}

}  // namespace mslab
