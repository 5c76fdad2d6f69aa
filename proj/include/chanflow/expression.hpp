#pragma once

#include <memory>
#include <string>

namespace chanflow {

/// Value with first and second derivative in a single variable.
struct Jet {
    double v = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

/// Scalar expression in the variable `t`, parsed from text.
///
/// Grammar (usual precedence, `^` right-associative):
///
///     expr   := term (('+' | '-') term)*
///     term   := unary (('*' | '/') unary)*
///     unary  := ('-' | '+') unary | power
///     power  := atom ('^' unary)?
///     atom   := number | 't' | 'pi' | func '(' expr ')' | '(' expr ')'
///     func   := exp | log | sqrt | abs | sin | cos | tanh | cosh | sinh
///
/// Evaluation returns value, first and second derivative by forward-mode
/// differentiation, so custom wall profiles get exact f', f''.
class Expression {
public:
    struct Node;

    explicit Expression(const std::string& text);

    Jet eval(double t) const;
    double operator()(double t) const { return eval(t).v; }
    const std::string& text() const noexcept { return text_; }

private:
    std::string text_;
    std::shared_ptr<const Node> root_;
};

}  // namespace chanflow
