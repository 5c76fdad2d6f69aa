#include "chanflow/expression.hpp"

#include "chanflow/errors.hpp"

#include <cctype>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace chanflow {

namespace {

Jet operator+(const Jet& a, const Jet& b) { return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2}; }
Jet operator-(const Jet& a, const Jet& b) { return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2}; }
Jet operator*(const Jet& a, const Jet& b) {
    return {a.v * b.v, a.d1 * b.v + a.v * b.d1, a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2};
}

// Chain rule for y = F(x): y' = F'(x) x', y'' = F''(x) x'^2 + F'(x) x''.
Jet chain(const Jet& x, double F, double dF, double ddF) {
    return {F, dF * x.d1, ddF * x.d1 * x.d1 + dF * x.d2};
}

Jet reciprocal(const Jet& a) {
    const double inv = 1.0 / a.v;
    return chain(a, inv, -inv * inv, 2.0 * inv * inv * inv);
}

Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

Jet power(const Jet& a, const Jet& b) {
    if (b.d1 == 0.0 && b.d2 == 0.0) {
        const double p = b.v;
        if (p == 0.0) return {1.0, 0.0, 0.0};
        if (p == 1.0) return a;
        const double x = a.v;
        return chain(a, std::pow(x, p), p * std::pow(x, p - 1.0),
                     p * (p - 1.0) * std::pow(x, p - 2.0));
    }
    // a^b = exp(b log a)
    const Jet la = chain(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v));
    const Jet e = b * la;
    const double ev = std::exp(e.v);
    return chain(e, ev, ev, ev);
}

}  // namespace

struct Expression::Node {
    enum class Kind { Constant, Variable, Add, Sub, Mul, Div, Pow, Neg, Func } kind;
    double value = 0.0;
    std::string func;
    std::shared_ptr<const Node> lhs, rhs;

    Jet eval(double t) const {
        switch (kind) {
        case Kind::Constant: return {value, 0.0, 0.0};
        case Kind::Variable: return {t, 1.0, 0.0};
        case Kind::Add: return lhs->eval(t) + rhs->eval(t);
        case Kind::Sub: return lhs->eval(t) - rhs->eval(t);
        case Kind::Mul: return lhs->eval(t) * rhs->eval(t);
        case Kind::Div: return lhs->eval(t) / rhs->eval(t);
        case Kind::Pow: return power(lhs->eval(t), rhs->eval(t));
        case Kind::Neg: {
            const Jet a = lhs->eval(t);
            return {-a.v, -a.d1, -a.d2};
        }
        case Kind::Func: return apply(lhs->eval(t));
        }
        return {};
    }

    Jet apply(const Jet& x) const {
        const double v = x.v;
        if (func == "exp") {
            const double e = std::exp(v);
            return chain(x, e, e, e);
        }
        if (func == "log") return chain(x, std::log(v), 1.0 / v, -1.0 / (v * v));
        if (func == "sqrt") {
            const double s = std::sqrt(v);
            return chain(x, s, 0.5 / s, -0.25 / (s * v));
        }
        if (func == "abs") {
            // right derivative at 0
            const double sg = v < 0.0 ? -1.0 : 1.0;
            return chain(x, std::abs(v), sg, 0.0);
        }
        if (func == "sin") return chain(x, std::sin(v), std::cos(v), -std::sin(v));
        if (func == "cos") return chain(x, std::cos(v), -std::sin(v), -std::cos(v));
        if (func == "tanh") {
            const double th = std::tanh(v);
            const double s2 = 1.0 - th * th;
            return chain(x, th, s2, -2.0 * th * s2);
        }
        if (func == "cosh") return chain(x, std::cosh(v), std::sinh(v), std::cosh(v));
        if (func == "sinh") return chain(x, std::sinh(v), std::cosh(v), std::sinh(v));
        return {};
    }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    NodePtr parse() {
        NodePtr n = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return n;
    }

private:
    const std::string& s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ValidationError("expression '" + s_ + "' at column " + std::to_string(pos_ + 1) +
                              ": " + msg);
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    static NodePtr make(Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
        auto n = std::make_shared<Expression::Node>();
        n->kind = k;
        n->lhs = std::move(a);
        n->rhs = std::move(b);
        return n;
    }

    NodePtr expr() {
        NodePtr n = term();
        for (;;) {
            if (accept('+')) n = make(Kind::Add, n, term());
            else if (accept('-')) n = make(Kind::Sub, n, term());
            else return n;
        }
    }

    NodePtr term() {
        NodePtr n = unary();
        for (;;) {
            if (accept('*')) n = make(Kind::Mul, n, unary());
            else if (accept('/')) n = make(Kind::Div, n, unary());
            else return n;
        }
    }

    NodePtr unary() {
        if (accept('-')) return make(Kind::Neg, unary());
        if (accept('+')) return unary();
        return pow();
    }

    NodePtr pow() {
        NodePtr base = atom();
        if (accept('^')) return make(Kind::Pow, base, unary());
        return base;
    }

    NodePtr atom() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        const char c = s_[pos_];
        if (accept('(')) {
            NodePtr n = expr();
            if (!accept(')')) fail("expected ')'");
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(s_.substr(pos_), &used);
            } catch (const std::exception&) {
                fail("bad number");
            }
            pos_ += used;
            auto n = std::make_shared<Expression::Node>();
            n->kind = Kind::Constant;
            n->value = v;
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            const std::string id = s_.substr(start, pos_ - start);
            if (id == "t") return make(Kind::Variable);
            if (id == "pi") {
                auto n = std::make_shared<Expression::Node>();
                n->kind = Kind::Constant;
                n->value = std::numbers::pi;
                return n;
            }
            static const std::vector<std::string> funcs = {"exp", "log", "sqrt", "abs", "sin",
                                                           "cos", "tanh", "cosh", "sinh"};
            for (const auto& f : funcs) {
                if (f == id) {
                    if (!accept('(')) fail("expected '(' after " + id);
                    NodePtr arg = expr();
                    if (!accept(')')) fail("expected ')'");
                    auto n = std::make_shared<Expression::Node>();
                    n->kind = Kind::Func;
                    n->func = id;
                    n->lhs = arg;
                    return n;
                }
            }
            pos_ = start;
            fail("unknown identifier '" + id + "'");
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }
};

}  // namespace

Expression::Expression(const std::string& text) : text_(text), root_(Parser(text).parse()) {}

Jet Expression::eval(double t) const { return root_->eval(t); }

}  // namespace chanflow
