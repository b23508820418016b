#include "mslab/serialize.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>
#include <vector>

namespace mslab {

namespace {

using cplx = std::complex<double>;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string join(const std::vector<double>& vs) {
    std::string s;
    for (size_t i = 0; i < vs.size(); ++i) {
        if (i) s += ',';
        s += fmt(vs[i]);
    }
    return s;
}

std::vector<double> split_csv(const std::string& s) {
    std::vector<double> out;
    size_t pos = 0;
    while (pos < s.size()) {
        size_t comma = s.find(',', pos);
        if (comma == std::string::npos) comma = s.size();
        out.push_back(std::stod(s.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return out;
}

void node_to_text(const SerialNode& n, std::ostringstream& os);

void family_text(const SerialNode& n, std::ostringstream& os) {
    if (n.kind == "gaussian") {
        const auto& p = n.payload;
        os << "gaussian sigma=" << join({p[0], p[1], p[2], p[3]})
           << " pos=" << join({p[4], p[5], p[6], p[7]}) << " mom=" << join({p[8], p[9], p[10], p[11]})
           << " spinor=" << join(std::vector<double>(p.begin() + 12, p.begin() + 20));
    } else if (n.kind == "witness") {
        os << "witness sigma=" << fmt(n.params.at("sigma")) << " pos="
           << join({n.payload[0], n.payload[1], n.payload[2], n.payload[3]});
    } else if (n.kind == "bump") {
        const auto& p = n.payload;
        os << "bump radius=" << join({p[0], p[1], p[2], p[3]})
           << " pos=" << join({p[4], p[5], p[6], p[7]})
           << " spinor=" << join(std::vector<double>(p.begin() + 8, p.begin() + 16));
    } else if (n.kind == "zero") {
        os << "zero";
    } else {
        throw ParseError("unserializable family: " + n.kind);
    }
}

void node_to_text(const SerialNode& n, std::ostringstream& os) {
    if (!n.child) {
        family_text(n, os);
        return;
    }
    node_to_text(*n.child, os);
    os << " | ";
    if (n.kind == "gamma") {
        os << "gamma";
    } else if (n.kind == "scale") {
        os << "scale lambda=" << fmt(n.params.at("lambda"));
    } else if (n.kind == "mollify") {
        os << "mollify width=" << fmt(n.params.at("width"));
    } else if (n.kind == "poincare") {
        os << "poincare a=" << join({n.payload[0], n.payload[1], n.payload[2], n.payload[3]})
           << " A=" << join(std::vector<double>(n.payload.begin() + 4, n.payload.end()));
    } else if (n.kind == "momentum_shift") {
        os << "momentum_shift delta=" << join(n.payload);
    } else if (n.kind == "d0") {
        os << "d0";
    } else if (n.kind == "scalar") {
        os << "scalar re=" << fmt(n.params.at("re")) << " im=" << fmt(n.params.at("im"));
    } else {
        throw ParseError("unserializable transform: " + n.kind);
    }
}

std::map<std::string, std::string> parse_kv(std::istringstream& is) {
    std::map<std::string, std::string> kv;
    std::string tok;
    while (is >> tok) {
        size_t eq = tok.find('=');
        if (eq == std::string::npos) throw ParseError("expected key=value, got '" + tok + "'");
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return kv;
}

FourVector to_fv(const std::vector<double>& v) { return {v[0], v[1], v[2], v[3]}; }

Vector4c to_spinor(const std::vector<double>& v) {
    Vector4c u;
    for (int i = 0; i < 4; ++i) u[i] = cplx{v[2 * i], v[2 * i + 1]};
    return u;
}

}  // namespace

std::string to_text(const TestFunction& f) {
    if (!f.serial()) throw ParseError("test function carries no serialization record");
    std::ostringstream os;
    node_to_text(*f.serial(), os);
    return os.str();
}

TestFunction test_function_from_text(const std::string& text) {
    std::vector<std::string> stages;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t bar = text.find('|', pos);
        if (bar == std::string::npos) bar = text.size();
        stages.push_back(text.substr(pos, bar - pos));
        pos = bar + 1;
    }
    TestFunction f;
    for (size_t si = 0; si < stages.size(); ++si) {
        std::istringstream is(stages[si]);
        std::string head;
        if (!(is >> head)) throw ParseError("empty stage in test-function text");
        auto kv = parse_kv(is);
        auto vec = [&](const std::string& key) {
            auto it = kv.find(key);
            if (it == kv.end()) throw ParseError("missing field '" + key + "'");
            return split_csv(it->second);
        };
        auto num = [&](const std::string& key) {
            auto it = kv.find(key);
            if (it == kv.end()) throw ParseError("missing field '" + key + "'");
            return std::stod(it->second);
        };
        if (si == 0) {
            if (head == "gaussian") {
                auto s = vec("sigma");
                f = TestFunction::gaussian({s[0], s[1], s[2], s[3]}, to_spinor(vec("spinor")),
                                           to_fv(vec("pos")), to_fv(vec("mom")));
            } else if (head == "witness") {
                f = TestFunction::witness_profile(num("sigma"), to_fv(vec("pos")));
            } else if (head == "bump") {
                auto r = vec("radius");
                f = TestFunction::separable_bump({r[0], r[1], r[2], r[3]}, to_spinor(vec("spinor")),
                                                 to_fv(vec("pos")));
            } else if (head == "zero") {
                f = TestFunction::zero();
            } else {
                throw ParseError("unknown family '" + head + "'");
            }
        } else {
            if (head == "gamma") {
                f = gamma_involution(f);
            } else if (head == "scale") {
                f = scale(f, num("lambda"));
            } else if (head == "mollify") {
                f = mollify(f, num("width"));
            } else if (head == "poincare") {
                auto a = vec("a");
                auto A = vec("A");
                Matrix2c M;
                M << cplx{A[0], A[1]}, cplx{A[2], A[3]}, cplx{A[4], A[5]}, cplx{A[6], A[7]};
                f = poincare_act(SLTwoC(M), to_fv(a), f);
            } else if (head == "momentum_shift") {
                f = momentum_shift(f, to_fv(vec("delta")));
            } else if (head == "d0") {
                f = time_derivative_weight(f);
            } else if (head == "scalar") {
                f = cplx{num("re"), num("im")} * f;
            } else {
                throw ParseError("unknown transform '" + head + "'");
            }
        }
    }
    return f;
}

namespace {

struct Tokenizer {
    const std::string& s;
    size_t pos = 0;

    std::string next() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos >= s.size()) return "";
        if (s[pos] == '(' || s[pos] == ')') return std::string(1, s[pos++]);
        size_t start = pos;
        while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos])) &&
               s[pos] != '(' && s[pos] != ')')
            ++pos;
        return s.substr(start, pos - start);
    }
};

FieldPolynomial parse_expr(Tokenizer& tk, const std::map<std::string, TestFunction>& env) {
    std::string t = tk.next();
    if (t != "(") throw ParseError("expected '(' in polynomial expression");
    std::string head = tk.next();
    auto expect_close = [&] {
        if (tk.next() != ")") throw ParseError("expected ')' after " + head);
    };
    if (head == "one") {
        expect_close();
        return FieldPolynomial::one();
    }
    if (head == "field") {
        std::string name = tk.next();
        auto it = env.find(name);
        if (it == env.end()) throw ParseError("unknown field name '" + name + "'");
        expect_close();
        return FieldPolynomial::field(it->second);
    }
    if (head == "adjoint" || head == "gauge") {
        FieldPolynomial inner = parse_expr(tk, env);
        expect_close();
        return head == "adjoint" ? inner.adjoint() : gauge_act(inner);
    }
    if (head == "scale") {
        const double re = std::stod(tk.next());
        const double im = std::stod(tk.next());
        FieldPolynomial inner = parse_expr(tk, env);
        expect_close();
        return inner * cplx{re, im};
    }
    if (head == "prod" || head == "sum") {
        std::vector<FieldPolynomial> parts;
        for (;;) {
            size_t save = tk.pos;
            std::string peek = tk.next();
            if (peek == ")") break;
            tk.pos = save;
            parts.push_back(parse_expr(tk, env));
        }
        if (parts.empty()) throw ParseError(head + " needs at least one operand");
        FieldPolynomial acc = parts[0];
        for (size_t i = 1; i < parts.size(); ++i)
            acc = (head == "prod") ? acc * parts[i] : acc + parts[i];
        return acc;
    }
    throw ParseError("unknown polynomial node '" + head + "'");
}

}  // namespace

std::string to_prefix(const FieldPolynomial& X, const std::map<std::string, TestFunction>& env) {
    auto name_of = [&](const TestFunction& f) -> std::string {
        for (const auto& [name, g] : env) {
            if (g.id() == f.id()) return "(field " + name + ")";
            // gamma of a named function
            if (f.serial() && f.serial()->kind == "gamma" && g.serial() &&
                f.serial()->child == g.serial())
                return "(adjoint (field " + name + "))";
        }
        throw ParseError("factor not resolvable against the environment: " + f.label());
    };
    std::ostringstream os;
    os << "(sum";
    for (const auto& t : X.terms()) {
        os << " (scale " << fmt(t.coefficient.real()) << " " << fmt(t.coefficient.imag());
        if (t.factors.empty()) {
            os << " (one)";
        } else if (t.factors.size() == 1) {
            os << " " << name_of(t.factors[0]);
        } else {
            os << " (prod";
            for (const auto& f : t.factors) os << " " << name_of(f);
            os << ")";
        }
        os << ")";
    }
    os << ")";
    return os.str();
}

FieldPolynomial polynomial_from_prefix(const std::string& text,
                                       const std::map<std::string, TestFunction>& env) {
    Tokenizer tk{text};
    FieldPolynomial p = parse_expr(tk, env);
    std::string rest = tk.next();
    if (!rest.empty()) throw ParseError("trailing tokens after polynomial expression");
    return p;
}

}  // namespace mslab
