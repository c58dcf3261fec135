#pragma once

#include "invar3/jet.hpp"

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace invar3 {

struct ParseError : std::runtime_error {
    ParseError(std::size_t offset, std::vector<std::string> expected, const std::string& found);
    std::size_t offset;
    std::vector<std::string> expected;
};

struct UnknownIdentifier : std::runtime_error {
    UnknownIdentifier(std::size_t offset, std::string name);
    std::size_t offset;
    std::string name;
};

enum class ExprKind { Const, VarX, VarY, Neg, Add, Sub, Mul, Div, Pow, Exp, Ln, Sin, Cos, Sqrt, Cbrt };

struct ExprNode;

// Immutable expression tree in x and y.
class Expr {
public:
    Expr();
    Expr(double v); // NOLINT: numeric literals convert implicitly

    static Expr x();
    static Expr y();

    ExprKind kind() const;
    double constant() const;
    int exponent() const;
    Expr lhs() const;
    Expr rhs() const;

    double eval(double x, double y) const;
    double eval(Point p) const { return eval(p.x, p.y); }
    Jet2 eval_jet(Point p, int order) const;

    std::string to_string() const;
    bool is_zero_constant() const;

    friend Expr operator-(const Expr& a);
    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    friend Expr pow(const Expr& a, int n);
    friend Expr exp(const Expr& a);
    friend Expr ln(const Expr& a);
    friend Expr sin(const Expr& a);
    friend Expr cos(const Expr& a);
    friend Expr sqrt(const Expr& a);
    friend Expr cbrt(const Expr& a);

private:
    explicit Expr(std::shared_ptr<const ExprNode> n) : node_(std::move(n)) {}
    static Expr make(ExprKind k, Expr a, Expr b = Expr(), int n = 0);
    std::shared_ptr<const ExprNode> node_;
};

struct ExprNode {
    ExprKind kind = ExprKind::Const;
    double value = 0.0;
    int exponent = 0;
    std::shared_ptr<const ExprNode> a;
    std::shared_ptr<const ExprNode> b;
};

Expr parse(std::string_view text);

Jet2 eval_jet(const Expr& e, Point p, int order);

} // namespace invar3
