#include "invar3/expr.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>

namespace invar3 {

namespace {

std::string join(const std::vector<std::string>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            s += ", ";
        s += v[i];
    }
    return s;
}

bool is_function(std::string_view name)
{
    return name == "exp" || name == "ln" || name == "sin" || name == "cos" || name == "sqrt" || name == "cbrt";
}

class Parser {
public:
    explicit Parser(std::string_view t) : text_(t) {}

    Expr run()
    {
        Expr e = expr();
        skip_ws();
        if (pos_ != text_.size())
            fail({"'+'", "'-'", "'*'", "'/'", "'^'", "end of input"});
        return e;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;

    void skip_ws()
    {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
                                       text_[pos_] == '\r'))
            ++pos_;
    }

    char peek()
    {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    [[noreturn]] void fail(std::vector<std::string> expected)
    {
        std::string found = pos_ < text_.size() ? std::string("'") + text_[pos_] + "'" : "end of input";
        throw ParseError(pos_, std::move(expected), found);
    }

    Expr expr()
    {
        Expr e = term();
        for (;;) {
            const char c = peek();
            if (c == '+') {
                ++pos_;
                e = e + term();
            } else if (c == '-') {
                ++pos_;
                e = e - term();
            } else {
                return e;
            }
        }
    }

    Expr term()
    {
        Expr e = unary();
        for (;;) {
            const char c = peek();
            if (c == '*') {
                ++pos_;
                e = e * unary();
            } else if (c == '/') {
                ++pos_;
                e = e / unary();
            } else {
                return e;
            }
        }
    }

    Expr unary()
    {
        if (peek() == '-') {
            ++pos_;
            return -unary();
        }
        return power();
    }

    Expr power()
    {
        Expr base = primary();
        if (peek() != '^')
            return base;
        ++pos_;
        int sign = 1;
        char c = peek();
        if (c == '-' || c == '+') {
            sign = c == '-' ? -1 : 1;
            ++pos_;
            c = peek();
        }
        if (c < '0' || c > '9')
            fail({"integer exponent"});
        const std::size_t start = pos_;
        while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9')
            ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E'))
            fail({"integer exponent"});
        int n = 0;
        auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, n);
        if (ec != std::errc()) {
            pos_ = start;
            fail({"integer exponent"});
        }
        return pow(base, sign * n);
    }

    Expr number()
    {
        const std::size_t start = pos_;
        auto digits = [&] {
            while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9')
                ++pos_;
        };
        digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            digits();
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t q = pos_ + 1;
            if (q < text_.size() && (text_[q] == '+' || text_[q] == '-'))
                ++q;
            if (q < text_.size() && text_[q] >= '0' && text_[q] <= '9') {
                pos_ = q;
                digits();
            }
        }
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
        if (ec != std::errc() || ptr != text_.data() + pos_) {
            pos_ = start;
            fail({"number"});
        }
        return Expr(v);
    }

    Expr primary()
    {
        const char c = peek();
        if ((c >= '0' && c <= '9') || c == '.')
            return number();
        if (c == '(') {
            ++pos_;
            Expr e = expr();
            if (peek() != ')')
                fail({"')'"});
            ++pos_;
            return e;
        }
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < text_.size() && ((text_[pos_] >= 'a' && text_[pos_] <= 'z') ||
                                           (text_[pos_] >= 'A' && text_[pos_] <= 'Z') ||
                                           (text_[pos_] >= '0' && text_[pos_] <= '9') || text_[pos_] == '_'))
                ++pos_;
            const std::string_view name = text_.substr(start, pos_ - start);
            if (name == "x")
                return Expr::x();
            if (name == "y")
                return Expr::y();
            if (!is_function(name))
                throw UnknownIdentifier(start, std::string(name));
            if (peek() != '(')
                fail({"'('"});
            ++pos_;
            Expr arg = expr();
            if (peek() != ')')
                fail({"')'"});
            ++pos_;
            if (name == "exp")
                return exp(arg);
            if (name == "ln")
                return ln(arg);
            if (name == "sin")
                return sin(arg);
            if (name == "cos")
                return cos(arg);
            if (name == "sqrt")
                return sqrt(arg);
            return cbrt(arg);
        }
        fail({"number", "'x'", "'y'", "'-'", "'('", "function"});
    }
};

int precedence(ExprKind k)
{
    switch (k) {
    case ExprKind::Add:
    case ExprKind::Sub:
        return 1;
    case ExprKind::Mul:
    case ExprKind::Div:
        return 2;
    case ExprKind::Neg:
        return 3;
    case ExprKind::Pow:
        return 4;
    default:
        return 5;
    }
}

std::string format_number(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

} // namespace

ParseError::ParseError(std::size_t off, std::vector<std::string> exp, const std::string& found)
    : std::runtime_error("parse error at byte " + std::to_string(off) + ": expected " + join(exp) + ", found " +
                         found),
      offset(off), expected(std::move(exp))
{
}

UnknownIdentifier::UnknownIdentifier(std::size_t off, std::string n)
    : std::runtime_error("unknown identifier \"" + n + "\" at byte " + std::to_string(off)), offset(off),
      name(std::move(n))
{
}

Expr::Expr() : Expr(0.0) {}

Expr::Expr(double v)
{
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Const;
    n->value = v;
    node_ = std::move(n);
}

Expr Expr::make(ExprKind k, Expr a, Expr b, int n)
{
    auto node = std::make_shared<ExprNode>();
    node->kind = k;
    node->a = std::move(a.node_);
    node->b = std::move(b.node_);
    node->exponent = n;
    return Expr(std::shared_ptr<const ExprNode>(std::move(node)));
}

Expr Expr::x()
{
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::VarX;
    return Expr(std::shared_ptr<const ExprNode>(std::move(n)));
}

Expr Expr::y()
{
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::VarY;
    return Expr(std::shared_ptr<const ExprNode>(std::move(n)));
}

ExprKind Expr::kind() const { return node_->kind; }
double Expr::constant() const { return node_->value; }
int Expr::exponent() const { return node_->exponent; }
Expr Expr::lhs() const { return node_->a ? Expr(node_->a) : Expr(); }
Expr Expr::rhs() const { return node_->b ? Expr(node_->b) : Expr(); }

bool Expr::is_zero_constant() const { return node_->kind == ExprKind::Const && node_->value == 0.0; }

Expr operator-(const Expr& a) { return Expr::make(ExprKind::Neg, a); }
Expr operator+(const Expr& a, const Expr& b) { return Expr::make(ExprKind::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::make(ExprKind::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::make(ExprKind::Mul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::make(ExprKind::Div, a, b); }
Expr pow(const Expr& a, int n) { return Expr::make(ExprKind::Pow, a, Expr(), n); }
Expr exp(const Expr& a) { return Expr::make(ExprKind::Exp, a); }
Expr ln(const Expr& a) { return Expr::make(ExprKind::Ln, a); }
Expr sin(const Expr& a) { return Expr::make(ExprKind::Sin, a); }
Expr cos(const Expr& a) { return Expr::make(ExprKind::Cos, a); }
Expr sqrt(const Expr& a) { return Expr::make(ExprKind::Sqrt, a); }
Expr cbrt(const Expr& a) { return Expr::make(ExprKind::Cbrt, a); }

double Expr::eval(double x, double y) const
{
    const ExprNode& n = *node_;
    switch (n.kind) {
    case ExprKind::Const:
        return n.value;
    case ExprKind::VarX:
        return x;
    case ExprKind::VarY:
        return y;
    case ExprKind::Neg:
        return -Expr(n.a).eval(x, y);
    case ExprKind::Add:
        return Expr(n.a).eval(x, y) + Expr(n.b).eval(x, y);
    case ExprKind::Sub:
        return Expr(n.a).eval(x, y) - Expr(n.b).eval(x, y);
    case ExprKind::Mul:
        return Expr(n.a).eval(x, y) * Expr(n.b).eval(x, y);
    case ExprKind::Div: {
        const double d = Expr(n.b).eval(x, y);
        if (d == 0.0)
            throw DomainError("division by zero");
        return Expr(n.a).eval(x, y) / d;
    }
    case ExprKind::Pow: {
        const double b = Expr(n.a).eval(x, y);
        if (b == 0.0 && n.exponent < 0)
            throw DomainError("negative power of zero");
        return ipow(b, n.exponent);
    }
    case ExprKind::Exp:
        return std::exp(Expr(n.a).eval(x, y));
    case ExprKind::Ln: {
        const double u = Expr(n.a).eval(x, y);
        if (!(u > 0.0))
            throw DomainError("ln of non-positive value " + std::to_string(u));
        return std::log(u);
    }
    case ExprKind::Sin:
        return std::sin(Expr(n.a).eval(x, y));
    case ExprKind::Cos:
        return std::cos(Expr(n.a).eval(x, y));
    case ExprKind::Sqrt: {
        const double u = Expr(n.a).eval(x, y);
        if (u < 0.0)
            throw DomainError("sqrt of negative value " + std::to_string(u));
        return std::sqrt(u);
    }
    case ExprKind::Cbrt:
        return std::cbrt(Expr(n.a).eval(x, y));
    }
    return 0.0;
}

Jet2 Expr::eval_jet(Point p, int order) const
{
    const Jet2 jx = Jet2::var_x(p.x, order);
    const Jet2 jy = Jet2::var_y(p.y, order);
    std::function<Jet2(const Expr&)> go = [&](const Expr& e) -> Jet2 {
        const ExprNode& n = *e.node_;
        switch (n.kind) {
        case ExprKind::Const:
            return Jet2::constant(n.value, order);
        case ExprKind::VarX:
            return jx;
        case ExprKind::VarY:
            return jy;
        case ExprKind::Neg:
            return -go(Expr(n.a));
        case ExprKind::Add:
            return go(Expr(n.a)) + go(Expr(n.b));
        case ExprKind::Sub:
            return go(Expr(n.a)) - go(Expr(n.b));
        case ExprKind::Mul:
            return go(Expr(n.a)) * go(Expr(n.b));
        case ExprKind::Div:
            return go(Expr(n.a)) / go(Expr(n.b));
        case ExprKind::Pow:
            return ipow(go(Expr(n.a)), n.exponent);
        case ExprKind::Exp:
            return invar3::exp(go(Expr(n.a)));
        case ExprKind::Ln:
            return invar3::log(go(Expr(n.a)));
        case ExprKind::Sin:
            return invar3::sin(go(Expr(n.a)));
        case ExprKind::Cos:
            return invar3::cos(go(Expr(n.a)));
        case ExprKind::Sqrt:
            return invar3::sqrt(go(Expr(n.a)));
        case ExprKind::Cbrt:
            return invar3::cbrt(go(Expr(n.a)));
        }
        return Jet2(order);
    };
    return go(*this);
}

std::string Expr::to_string() const
{
    const ExprNode& n = *node_;
    const Expr na = n.a ? Expr(n.a) : Expr(), nb = n.b ? Expr(n.b) : Expr();
    auto wrap = [](const Expr& c, bool paren) { return paren ? "(" + c.to_string() + ")" : c.to_string(); };
    const int p = precedence(n.kind);
    switch (n.kind) {
    case ExprKind::Const:
        return n.value < 0.0 ? "(" + format_number(n.value) + ")" : format_number(n.value);
    case ExprKind::VarX:
        return "x";
    case ExprKind::VarY:
        return "y";
    case ExprKind::Neg:
        return "-" + wrap(na, precedence(na.kind()) < p);
    case ExprKind::Add:
    case ExprKind::Mul:
        return wrap(na, precedence(na.kind()) < p) + (n.kind == ExprKind::Add ? " + " : "*") +
               wrap(nb, precedence(nb.kind()) <= p);
    case ExprKind::Sub:
    case ExprKind::Div:
        return wrap(na, precedence(na.kind()) < p) + (n.kind == ExprKind::Sub ? " - " : "/") +
               wrap(nb, precedence(nb.kind()) <= p);
    case ExprKind::Pow: {
        const bool paren = precedence(na.kind()) <= p || (na.kind() == ExprKind::Const && na.constant() < 0.0);
        return wrap(na, paren) + "^" + std::to_string(n.exponent);
    }
    case ExprKind::Exp:
        return "exp(" + na.to_string() + ")";
    case ExprKind::Ln:
        return "ln(" + na.to_string() + ")";
    case ExprKind::Sin:
        return "sin(" + na.to_string() + ")";
    case ExprKind::Cos:
        return "cos(" + na.to_string() + ")";
    case ExprKind::Sqrt:
        return "sqrt(" + na.to_string() + ")";
    case ExprKind::Cbrt:
        return "cbrt(" + na.to_string() + ")";
    }
    return "";
}

Expr parse(std::string_view text) { return Parser(text).run(); }

Jet2 eval_jet(const Expr& e, Point p, int order) { return e.eval_jet(p, order); }

} // namespace invar3
