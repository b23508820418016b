#pragma once

#include <map>
#include <string>

#include "mslab/quasifree.hpp"
#include "mslab/test_function.hpp"

namespace mslab {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Self-describing one-line text form of a test function: family tag plus
/// parameters, transforms appended with '|'. Example:
///   gaussian sigma=0.5,0.5,0.5,0.5 pos=0,0,0,0 mom=0,0,0,0 spinor=1,0,0,0,0,0,0,0
///       | translate a=0.1,0,0,0 | scale lambda=0.5
std::string to_text(const TestFunction& f);
TestFunction test_function_from_text(const std::string& text);

/// Prefix notation for field polynomials over named test functions:
///   (sum (scale 0.5 0 (prod (field f) (field g))) (adjoint (field f)) (one))
std::string to_prefix(const FieldPolynomial& X,
                      const std::map<std::string, TestFunction>& env);
FieldPolynomial polynomial_from_prefix(const std::string& text,
                                       const std::map<std::string, TestFunction>& env);

}  // namespace mslab
