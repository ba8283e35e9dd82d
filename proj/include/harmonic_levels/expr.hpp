#pragma once

// Scalar expression trees: parsing, evaluation, exact symbolic
// differentiation and value-preserving local simplification.
//
// Grammar (whitespace-insensitive, no implicit multiplication):
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?          right-associative
//   primary := number | name | func '(' expr ')' | '(' expr ')'
//
// Names are either declared variables or the constant `pi`.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "harmonic_levels/errors.hpp"

namespace harmonic_levels {

enum class Op {
    constant,
    variable,
    neg,
    sin,
    cos,
    tan,
    exp,
    log,
    sqrt,
    sinh,
    cosh,
    tanh,
    atan,
    add,
    sub,
    mul,
    div,
    pow,
};

inline bool is_unary(Op op) noexcept { return op >= Op::neg && op <= Op::atan; }
inline bool is_binary(Op op) noexcept { return op >= Op::add; }

inline std::string_view function_name(Op op) noexcept
{
    switch (op) {
    case Op::sin: return "sin";
    case Op::cos: return "cos";
    case Op::tan: return "tan";
    case Op::exp: return "exp";
    case Op::log: return "log";
    case Op::sqrt: return "sqrt";
    case Op::sinh: return "sinh";
    case Op::cosh: return "cosh";
    case Op::tanh: return "tanh";
    case Op::atan: return "atan";
    default: return "";
    }
}

/// Immutable expression tree with shared subtrees. Copies are cheap.
class Expression {
public:
    /// Default-constructed expression is the constant 0.
    Expression() : Expression(constant(0.0)) {}

    static Expression constant(double value)
    {
        return Expression(std::make_shared<const Node>(Node{Op::constant, value, {}, -1, nullptr, nullptr}));
    }

    /// `index` is the position of the variable in the declared variable
    /// list, used by the positional evaluate overload; -1 if unknown.
    static Expression variable(std::string name, int index = -1)
    {
        return Expression(std::make_shared<const Node>(Node{Op::variable, 0.0, std::move(name), index, nullptr, nullptr}));
    }

    static Expression unary(Op op, const Expression& operand)
    {
        return Expression(std::make_shared<const Node>(Node{op, 0.0, {}, -1, operand.node_, nullptr}));
    }

    static Expression binary(Op op, const Expression& lhs, const Expression& rhs)
    {
        return Expression(std::make_shared<const Node>(Node{op, 0.0, {}, -1, lhs.node_, rhs.node_}));
    }

    Op op() const noexcept { return node_->op; }
    double value() const noexcept { return node_->value; }
    const std::string& name() const noexcept { return node_->name; }
    int index() const noexcept { return node_->index; }

    /// Operand of a unary node or left operand of a binary node.
    Expression lhs() const { return Expression(node_->lhs); }
    Expression rhs() const { return Expression(node_->rhs); }
    Expression operand() const { return lhs(); }

    bool is_constant() const noexcept { return node_->op == Op::constant; }
    bool is_constant(double v) const noexcept { return node_->op == Op::constant && node_->value == v; }

    bool same_node(const Expression& other) const noexcept { return node_ == other.node_; }

private:
    struct Node {
        Op op;
        double value;
        std::string name;
        int index;
        std::shared_ptr<const Node> lhs;
        std::shared_ptr<const Node> rhs;
    };

    explicit Expression(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

    std::shared_ptr<const Node> node_;
};

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline std::string format_number(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline int precedence(const Expression& e) noexcept
{
    switch (e.op()) {
    case Op::add:
    case Op::sub: return 1;
    case Op::mul:
    case Op::div: return 2;
    case Op::neg: return 3;
    case Op::pow: return 4;
    case Op::constant: return e.value() < 0 || std::signbit(e.value()) ? 3 : 5;
    default: return 5;
    }
}

inline void print(const Expression& e, std::string& out);

inline void print_child(const Expression& child, int min_prec, std::string& out)
{
    if (precedence(child) < min_prec) {
        out += '(';
        print(child, out);
        out += ')';
    } else {
        print(child, out);
    }
}

inline void print(const Expression& e, std::string& out)
{
    switch (e.op()) {
    case Op::constant: out += format_number(e.value()); return;
    case Op::variable: out += e.name(); return;
    case Op::neg:
        out += '-';
        print_child(e.operand(), 3, out);
        return;
    case Op::add:
    case Op::sub:
        print_child(e.lhs(), 1, out);
        out += e.op() == Op::add ? '+' : '-';
        print_child(e.rhs(), 2, out);
        return;
    case Op::mul:
    case Op::div:
        print_child(e.lhs(), 2, out);
        out += e.op() == Op::mul ? '*' : '/';
        print_child(e.rhs(), 3, out);
        return;
    case Op::pow:
        print_child(e.lhs(), 5, out);
        out += '^';
        print_child(e.rhs(), 3, out);
        return;
    default:
        out += function_name(e.op());
        out += '(';
        print(e.operand(), out);
        out += ')';
        return;
    }
}

} // namespace detail

/// Text form that parses back to an expression of identical value.
inline std::string to_string(const Expression& e)
{
    std::string out;
    detail::print(e, out);
    return out;
}

// ---------------------------------------------------------------------------
// Structural queries

inline bool structurally_equal(const Expression& a, const Expression& b)
{
    if (a.same_node(b))
        return true;
    if (a.op() != b.op())
        return false;
    switch (a.op()) {
    case Op::constant: return a.value() == b.value();
    case Op::variable: return a.name() == b.name();
    default:
        if (is_unary(a.op()))
            return structurally_equal(a.operand(), b.operand());
        return structurally_equal(a.lhs(), b.lhs()) && structurally_equal(a.rhs(), b.rhs());
    }
}

inline bool depends_on(const Expression& e, std::string_view name)
{
    if (e.op() == Op::variable)
        return e.name() == name;
    if (e.op() == Op::constant)
        return false;
    if (is_unary(e.op()))
        return depends_on(e.operand(), name);
    return depends_on(e.lhs(), name) || depends_on(e.rhs(), name);
}

inline bool is_variable_free(const Expression& e)
{
    if (e.op() == Op::variable)
        return false;
    if (e.op() == Op::constant)
        return true;
    if (is_unary(e.op()))
        return is_variable_free(e.operand());
    return is_variable_free(e.lhs()) && is_variable_free(e.rhs());
}

namespace detail {
inline void collect_variables(const Expression& e, std::vector<std::string>& out)
{
    if (e.op() == Op::variable) {
        for (const auto& n : out)
            if (n == e.name())
                return;
        out.push_back(e.name());
    } else if (is_unary(e.op())) {
        collect_variables(e.operand(), out);
    } else if (is_binary(e.op())) {
        collect_variables(e.lhs(), out);
        collect_variables(e.rhs(), out);
    }
}
} // namespace detail

/// Distinct variable names in first-occurrence order.
inline std::vector<std::string> variables_of(const Expression& e)
{
    std::vector<std::string> out;
    detail::collect_variables(e, out);
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace detail {

inline bool is_integer_valued(double x) noexcept { return std::isfinite(x) && std::floor(x) == x; }

inline double apply_unary(Op op, double x, const Expression& node)
{
    switch (op) {
    case Op::neg: return -x;
    case Op::sin: return std::sin(x);
    case Op::cos: return std::cos(x);
    case Op::tan: return std::tan(x);
    case Op::exp: return std::exp(x);
    case Op::log:
        if (!(x > 0.0))
            throw DomainError("log of non-positive value " + format_number(x), to_string(node));
        return std::log(x);
    case Op::sqrt:
        if (x < 0.0)
            throw DomainError("sqrt of negative value " + format_number(x), to_string(node));
        return std::sqrt(x);
    case Op::sinh: return std::sinh(x);
    case Op::cosh: return std::cosh(x);
    case Op::tanh: return std::tanh(x);
    case Op::atan: return std::atan(x);
    default: return x;
    }
}

inline double apply_binary(Op op, double a, double b, const Expression& node)
{
    switch (op) {
    case Op::add: return a + b;
    case Op::sub: return a - b;
    case Op::mul: return a * b;
    case Op::div:
        if (b == 0.0)
            throw DomainError("division by zero", to_string(node));
        return a / b;
    case Op::pow:
        if (a < 0.0 && !is_integer_valued(b))
            throw DomainError("non-integer power of negative base", to_string(node));
        if (a == 0.0 && b < 0.0)
            throw DomainError("negative power of zero", to_string(node));
        return std::pow(a, b);
    default: return 0.0;
    }
}

template <class Lookup>
double evaluate_with(const Expression& e, const Lookup& lookup)
{
    switch (e.op()) {
    case Op::constant: return e.value();
    case Op::variable: return lookup(e);
    default:
        if (is_unary(e.op()))
            return apply_unary(e.op(), evaluate_with(e.operand(), lookup), e);
        return apply_binary(e.op(), evaluate_with(e.lhs(), lookup), evaluate_with(e.rhs(), lookup), e);
    }
}

} // namespace detail

using Env = std::map<std::string, double, std::less<>>;

inline double evaluate(const Expression& e, const Env& env)
{
    return detail::evaluate_with(e, [&](const Expression& v) {
        auto it = env.find(v.name());
        if (it == env.end())
            throw UnboundVariableError(v.name());
        return it->second;
    });
}

/// Positional evaluation: variable with index i reads values[i]. Variables
/// must carry an index (i.e. come from parse_expression with a variable list).
inline double evaluate(const Expression& e, std::span<const double> values)
{
    return detail::evaluate_with(e, [&](const Expression& v) {
        if (v.index() < 0 || static_cast<std::size_t>(v.index()) >= values.size())
            throw UnboundVariableError(v.name());
        return values[static_cast<std::size_t>(v.index())];
    });
}

// ---------------------------------------------------------------------------
// Smart constructors. Each applies only rewrites that leave the value
// unchanged on every environment free of domain errors.

namespace detail {

inline bool try_fold(Op op, const Expression& a, const Expression* b, double& out)
{
    try {
        Expression probe = b ? Expression::binary(op, a, *b) : Expression::unary(op, a);
        if (b)
            out = apply_binary(op, a.value(), b->value(), probe);
        else
            out = apply_unary(op, a.value(), probe);
        return std::isfinite(out);
    } catch (const DomainError&) {
        return false;
    }
}

} // namespace detail

inline Expression make_neg(const Expression& a)
{
    if (a.is_constant())
        return Expression::constant(-a.value());
    if (a.op() == Op::neg)
        return a.operand();
    return Expression::unary(Op::neg, a);
}

inline Expression make_unary(Op op, const Expression& a)
{
    if (op == Op::neg)
        return make_neg(a);
    double v;
    if (a.is_constant() && detail::try_fold(op, a, nullptr, v))
        return Expression::constant(v);
    return Expression::unary(op, a);
}

inline Expression make_add(const Expression& a, const Expression& b)
{
    double v;
    if (a.is_constant() && b.is_constant() && detail::try_fold(Op::add, a, &b, v))
        return Expression::constant(v);
    if (a.is_constant(0.0))
        return b;
    if (b.is_constant(0.0))
        return a;
    if (b.op() == Op::neg)
        return Expression::binary(Op::sub, a, b.operand());
    return Expression::binary(Op::add, a, b);
}

inline Expression make_sub(const Expression& a, const Expression& b)
{
    double v;
    if (a.is_constant() && b.is_constant() && detail::try_fold(Op::sub, a, &b, v))
        return Expression::constant(v);
    if (b.is_constant(0.0))
        return a;
    if (a.is_constant(0.0))
        return make_neg(b);
    if (b.op() == Op::neg)
        return Expression::binary(Op::add, a, b.operand());
    return Expression::binary(Op::sub, a, b);
}

inline Expression make_mul(const Expression& a, const Expression& b)
{
    double v;
    if (a.is_constant() && b.is_constant() && detail::try_fold(Op::mul, a, &b, v))
        return Expression::constant(v);
    if (a.is_constant(0.0) || b.is_constant(0.0))
        return Expression::constant(0.0);
    if (a.is_constant(1.0))
        return b;
    if (b.is_constant(1.0))
        return a;
    if (a.is_constant(-1.0))
        return make_neg(b);
    if (b.is_constant(-1.0))
        return make_neg(a);
    if (a.op() == Op::neg)
        return make_neg(make_mul(a.operand(), b));
    if (b.op() == Op::neg)
        return make_neg(make_mul(a, b.operand()));
    return Expression::binary(Op::mul, a, b);
}

inline Expression make_div(const Expression& a, const Expression& b)
{
    double v;
    if (a.is_constant() && b.is_constant() && detail::try_fold(Op::div, a, &b, v))
        return Expression::constant(v);
    if (b.is_constant(1.0))
        return a;
    if (a.op() == Op::neg)
        return make_neg(make_div(a.operand(), b));
    if (b.op() == Op::neg)
        return make_neg(make_div(a, b.operand()));
    return Expression::binary(Op::div, a, b);
}

inline Expression make_pow(const Expression& a, const Expression& b)
{
    double v;
    if (a.is_constant() && b.is_constant() && detail::try_fold(Op::pow, a, &b, v))
        return Expression::constant(v);
    if (b.is_constant(1.0))
        return a;
    if (b.is_constant(0.0))
        return Expression::constant(1.0);
    return Expression::binary(Op::pow, a, b);
}

inline Expression make_binary(Op op, const Expression& a, const Expression& b)
{
    switch (op) {
    case Op::add: return make_add(a, b);
    case Op::sub: return make_sub(a, b);
    case Op::mul: return make_mul(a, b);
    case Op::div: return make_div(a, b);
    default: return make_pow(a, b);
    }
}

inline Expression operator+(const Expression& a, const Expression& b) { return make_add(a, b); }
inline Expression operator-(const Expression& a, const Expression& b) { return make_sub(a, b); }
inline Expression operator*(const Expression& a, const Expression& b) { return make_mul(a, b); }
inline Expression operator/(const Expression& a, const Expression& b) { return make_div(a, b); }
inline Expression operator-(const Expression& a) { return make_neg(a); }

/// Bottom-up rebuild through the smart constructors: 0*x -> 0, 1*x -> x,
/// x+0 -> x, constant folding and sign hoisting.
inline Expression simplify(const Expression& e)
{
    if (e.op() == Op::constant || e.op() == Op::variable)
        return e;
    if (is_unary(e.op()))
        return make_unary(e.op(), simplify(e.operand()));
    return make_binary(e.op(), simplify(e.lhs()), simplify(e.rhs()));
}

/// Replace every occurrence of variable `name` by `replacement`.
inline Expression substitute(const Expression& e, std::string_view name, const Expression& replacement)
{
    switch (e.op()) {
    case Op::constant: return e;
    case Op::variable: return e.name() == name ? replacement : e;
    default:
        if (is_unary(e.op()))
            return Expression::unary(e.op(), substitute(e.operand(), name, replacement));
        return Expression::binary(e.op(), substitute(e.lhs(), name, replacement),
                                  substitute(e.rhs(), name, replacement));
    }
}

// ---------------------------------------------------------------------------
// Differentiation

inline Expression differentiate(const Expression& e, std::string_view var)
{
    using E = Expression;
    const E zero = E::constant(0.0);
    const E one = E::constant(1.0);
    const E two = E::constant(2.0);

    switch (e.op()) {
    case Op::constant: return zero;
    case Op::variable: return e.name() == var ? one : zero;
    default: break;
    }

    if (is_unary(e.op())) {
        const E f = e.operand();
        const E df = differentiate(f, var);
        if (df.is_constant(0.0))
            return zero;
        switch (e.op()) {
        case Op::neg: return make_neg(df);
        case Op::sin: return make_mul(make_unary(Op::cos, f), df);
        case Op::cos: return make_neg(make_mul(make_unary(Op::sin, f), df));
        case Op::tan: return make_div(df, make_pow(make_unary(Op::cos, f), two));
        case Op::exp: return make_mul(e, df);
        case Op::log: return make_div(df, f);
        case Op::sqrt: return make_div(df, make_mul(two, e));
        case Op::sinh: return make_mul(make_unary(Op::cosh, f), df);
        case Op::cosh: return make_mul(make_unary(Op::sinh, f), df);
        case Op::tanh: return make_div(df, make_pow(make_unary(Op::cosh, f), two));
        case Op::atan: return make_div(df, make_add(one, make_pow(f, two)));
        default: return zero;
        }
    }

    const E f = e.lhs();
    const E g = e.rhs();
    const E df = differentiate(f, var);
    const E dg = differentiate(g, var);
    switch (e.op()) {
    case Op::add: return make_add(df, dg);
    case Op::sub: return make_sub(df, dg);
    case Op::mul: return make_add(make_mul(df, g), make_mul(f, dg));
    case Op::div:
        if (dg.is_constant(0.0))
            return make_div(df, g);
        return make_div(make_sub(make_mul(df, g), make_mul(f, dg)), make_pow(g, two));
    case Op::pow:
        if (dg.is_constant(0.0) && !depends_on(g, var)) {
            // f^c -> c * f^(c-1) * f'
            if (df.is_constant(0.0))
                return zero;
            return make_mul(make_mul(g, make_pow(f, make_sub(g, one))), df);
        }
        if (df.is_constant(0.0) && !depends_on(f, var)) {
            // a^g = exp(g log a) -> a^g * log(a) * g'
            return make_mul(make_mul(e, make_unary(Op::log, f)), dg);
        }
        // f^g (g' log f + g f'/f)
        return make_mul(e, make_add(make_mul(dg, make_unary(Op::log, f)), make_div(make_mul(g, df), f)));
    default: return zero;
    }
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

class Parser {
public:
    Parser(std::string_view text, std::span<const std::string> variables) : text_(text), variables_(variables) {}

    Expression parse()
    {
        skip_ws();
        if (pos_ == text_.size())
            throw ParseError("empty expression", pos_);
        Expression e = parse_expr();
        skip_ws();
        if (pos_ != text_.size())
            throw ParseError(std::string("unexpected '") + text_[pos_] + "'", pos_);
        return e;
    }

private:
    void skip_ws()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail_here(const std::string& what)
    {
        if (pos_ >= text_.size())
            throw ParseError(what + " (end of input)", pos_);
        throw ParseError(what + ", found '" + text_[pos_] + "'", pos_);
    }

    Expression parse_expr()
    {
        Expression lhs = parse_term();
        for (;;) {
            if (accept('+'))
                lhs = Expression::binary(Op::add, lhs, parse_term());
            else if (accept('-'))
                lhs = Expression::binary(Op::sub, lhs, parse_term());
            else
                return lhs;
        }
    }

    Expression parse_term()
    {
        Expression lhs = parse_unary();
        for (;;) {
            if (accept('*'))
                lhs = Expression::binary(Op::mul, lhs, parse_unary());
            else if (accept('/'))
                lhs = Expression::binary(Op::div, lhs, parse_unary());
            else
                return lhs;
        }
    }

    Expression parse_unary()
    {
        if (accept('-'))
            return Expression::unary(Op::neg, parse_unary());
        if (accept('+'))
            return parse_unary();
        return parse_power();
    }

    Expression parse_power()
    {
        Expression base = parse_primary();
        if (accept('^'))
            return Expression::binary(Op::pow, base, parse_unary());
        return base;
    }

    Expression parse_primary()
    {
        skip_ws();
        if (pos_ >= text_.size())
            fail_here("expected operand");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Expression inner = parse_expr();
            if (!accept(')'))
                fail_here("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
            return parse_name();
        fail_here("expected operand");
    }

    Expression parse_number()
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < text_.size() && (text_[p] == '+' || text_[p] == '-'))
                ++p;
            if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
                while (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p])))
                    ++p;
                pos_ = p;
            }
        }
        double value = 0.0;
        const char* first = text_.data() + start;
        const char* last = text_.data() + pos_;
        auto res = std::from_chars(first, last, value);
        if (res.ec != std::errc() || res.ptr != last)
            throw ParseError("malformed number '" + std::string(first, last) + "'", start);
        return Expression::constant(value);
    }

    Expression parse_name()
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string name(text_.substr(start, pos_ - start));

        for (std::size_t i = 0; i < variables_.size(); ++i)
            if (variables_[i] == name)
                return Expression::variable(name, static_cast<int>(i));

        static constexpr Op functions[] = {Op::sin,  Op::cos,  Op::tan,  Op::exp,  Op::log,
                                           Op::sqrt, Op::sinh, Op::cosh, Op::tanh, Op::atan};
        for (Op f : functions) {
            if (function_name(f) == name) {
                if (!accept('('))
                    fail_here("expected '(' after function '" + name + "'");
                Expression arg = parse_expr();
                if (!accept(')'))
                    fail_here("expected ')'");
                return Expression::unary(f, arg);
            }
        }
        if (name == "pi")
            return Expression::constant(std::numbers::pi);
        throw ParseError("unknown identifier '" + name + "'", start);
    }

    std::string_view text_;
    std::span<const std::string> variables_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline Expression parse_expression(std::string_view text, std::span<const std::string> variables)
{
    return detail::Parser(text, variables).parse();
}

inline Expression parse_expression(std::string_view text, std::initializer_list<std::string> variables)
{
    std::vector<std::string> vars(variables);
    return parse_expression(text, std::span<const std::string>(vars));
}

} // namespace harmonic_levels
