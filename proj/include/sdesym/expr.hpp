#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sdesym {

/// Variable id used for the time variable `t`. State variables use 0..n-1 (printed x1..xn).
inline constexpr int kTimeVar = -1;
/// Largest supported state dimension (x1..x8).
inline constexpr int kMaxStateDim = 8;

enum class Op : std::uint8_t {
    Const,
    Var,
    Time,
    Neg,
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Sgn,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Min,
    Max,
};

/// Immutable expression over state variables x1..xn and time t.
///
/// Nodes are shared; copying an Expr is cheap. The arithmetic operators and
/// the free functions below fold constants and drop neutral elements
/// (x+0, x*1, x*0, x^1, --x), nothing more.
class Expr {
public:
    Expr();  // the constant 0
    Expr(double c);  // NOLINT(google-explicit-constructor)

    static Expr constant(double c);
    static Expr var(int index);
    static Expr time();
    static Expr unary(Op op, Expr a);
    static Expr binary(Op op, Expr a, Expr b);

    Op op() const noexcept;
    double value() const noexcept;  // Const only
    int index() const noexcept;     // Var only
    const Expr& arg(int i) const;   // 0 or 1
    int arity() const noexcept;

    bool is_constant() const noexcept { return op() == Op::Const; }
    bool is_constant(double c) const noexcept { return is_constant() && value() == c; }
    bool is_zero() const noexcept { return is_constant(0.0); }

    bool depends_on(int var) const;
    /// Largest state index referenced, or -1 when no state variable occurs.
    int max_var_index() const;
    bool structurally_equal(const Expr& other) const;

    const void* id() const noexcept { return node_.get(); }

private:
    struct Node;
    explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& a, const Expr& b);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr tan(const Expr& a);
Expr exp(const Expr& a);
Expr log(const Expr& a);
Expr sqrt(const Expr& a);
Expr abs(const Expr& a);
Expr sgn(const Expr& a);
Expr min(const Expr& a, const Expr& b);
Expr max(const Expr& a, const Expr& b);

/// Parses `text` over state dimension `n` (1..8). Precedence, high to low:
/// `^` (right associative), unary minus, `* /`, `+ -`. `x,y,z` alias x1..x3 when n <= 3.
Expr parse(std::string_view text, int n);

/// Canonical, fully parenthesised form. parse(to_string(e), n) reproduces e.
std::string to_string(const Expr& e);

/// Throws DomainError for log/sqrt of negatives, division by zero and
/// non-integer powers of non-positive bases.
double evaluate(const Expr& e, std::span<const double> x, double t);

/// Symbolic derivative. abs' = sgn, sgn' = 0; min/max are rejected when they
/// depend on `var`.
Expr differentiate(const Expr& e, int var);

/// Simultaneous substitution. Keys are state indices or kTimeVar.
Expr substitute(const Expr& e, const std::map<int, Expr>& bindings);

/// Flattened postfix form of an Expr for repeated evaluation in hot loops.
class Program {
public:
    Program() = default;
    explicit Program(const Expr& e);

    double operator()(const double* x, double t) const;
    bool is_constant() const noexcept { return constant_; }
    double constant_value() const noexcept { return value_; }

private:
    struct Instr {
        Op op;
        int index;
        double value;
    };
    double run(const double* x, double t, double* stack) const;
    [[noreturn]] void domain_failure(std::size_t pc, const char* what) const;

    std::vector<Instr> code_;
    std::vector<Expr> source_;  // subexpression that produced each instruction
    int max_stack_ = 0;
    bool constant_ = true;
    double value_ = 0.0;
};

}  // namespace sdesym
