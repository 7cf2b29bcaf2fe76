#include "sdesym/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>

#include "sdesym/error.hpp"

namespace sdesym {

struct Expr::Node {
    Op op = Op::Const;
    double value = 0.0;
    int index = 0;
    // children start out empty; a default Expr would allocate a node of its own
    Expr a{std::shared_ptr<const Node>()};
    Expr b{std::shared_ptr<const Node>()};
};

namespace {

int arity_of(Op op) {
    switch (op) {
        case Op::Const:
        case Op::Var:
        case Op::Time:
            return 0;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div:
        case Op::Pow:
        case Op::Min:
        case Op::Max:
            return 2;
        default:
            return 1;
    }
}

const char* function_name(Op op) {
    switch (op) {
        case Op::Sin: return "sin";
        case Op::Cos: return "cos";
        case Op::Tan: return "tan";
        case Op::Exp: return "exp";
        case Op::Log: return "log";
        case Op::Sqrt: return "sqrt";
        case Op::Abs: return "abs";
        case Op::Sgn: return "sgn";
        case Op::Min: return "min";
        case Op::Max: return "max";
        default: return nullptr;
    }
}

const char* infix_symbol(Op op) {
    switch (op) {
        case Op::Add: return " + ";
        case Op::Sub: return " - ";
        case Op::Mul: return " * ";
        case Op::Div: return " / ";
        case Op::Pow: return " ^ ";
        default: return nullptr;
    }
}

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v); }

// Returns false when the operation is outside its domain.
bool apply_unary(Op op, double a, double& out) {
    switch (op) {
        case Op::Neg: out = -a; return true;
        case Op::Sin: out = std::sin(a); return true;
        case Op::Cos: out = std::cos(a); return true;
        case Op::Tan: out = std::tan(a); return true;
        case Op::Exp: out = std::exp(a); return true;
        case Op::Log:
            if (!(a > 0.0)) return false;
            out = std::log(a);
            return true;
        case Op::Sqrt:
            if (!(a >= 0.0)) return false;
            out = std::sqrt(a);
            return true;
        case Op::Abs: out = std::fabs(a); return true;
        case Op::Sgn: out = sign_of(a); return true;
        default: return false;
    }
}

bool apply_binary(Op op, double a, double b, double& out) {
    switch (op) {
        case Op::Add: out = a + b; return true;
        case Op::Sub: out = a - b; return true;
        case Op::Mul: out = a * b; return true;
        case Op::Div:
            if (b == 0.0) return false;
            out = a / b;
            return true;
        case Op::Pow:
            if (is_integer(b)) {
                if (a == 0.0 && b < 0.0) return false;
                out = std::pow(a, b);
                return true;
            }
            if (a > 0.0 || (a == 0.0 && b > 0.0)) {
                out = std::pow(a, b);
                return true;
            }
            return false;
        case Op::Min: out = std::fmin(a, b); return true;
        case Op::Max: out = std::fmax(a, b); return true;
        default: return false;
    }
}

const char* domain_message(Op op) {
    switch (op) {
        case Op::Log: return "log of non-positive value";
        case Op::Sqrt: return "sqrt of negative value";
        case Op::Div: return "division by zero";
        case Op::Pow: return "power outside its domain";
        default: return "domain error";
    }
}

std::string format_number(double v) {
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

}  // namespace

Expr::Expr() : Expr(0.0) {}

Expr::Expr(double c) {
    auto n = std::make_shared<Node>();
    n->op = Op::Const;
    n->value = c;
    node_ = std::move(n);
}

Expr Expr::constant(double c) { return Expr(c); }

Expr Expr::var(int index) {
    if (index < 0 || index >= kMaxStateDim) {
        throw ShapeError("state variable index " + std::to_string(index + 1) + " outside 1.." +
                         std::to_string(kMaxStateDim));
    }
    auto n = std::make_shared<Node>();
    n->op = Op::Var;
    n->index = index;
    return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr Expr::time() {
    auto n = std::make_shared<Node>();
    n->op = Op::Time;
    return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr Expr::unary(Op op, Expr a) {
    if (arity_of(op) != 1) throw ShapeError("not a unary operator");
    if (a.is_constant()) {
        double v = 0.0;
        if (apply_unary(op, a.value(), v)) return Expr(v);
    }
    if (op == Op::Neg && a.op() == Op::Neg) return a.arg(0);
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = std::move(a);
    return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr Expr::binary(Op op, Expr a, Expr b) {
    if (arity_of(op) != 2) throw ShapeError("not a binary operator");
    if (a.is_constant() && b.is_constant()) {
        double v = 0.0;
        if (apply_binary(op, a.value(), b.value(), v)) return Expr(v);
    }
    switch (op) {
        case Op::Add:
            if (a.is_zero()) return b;
            if (b.is_zero()) return a;
            break;
        case Op::Sub:
            if (b.is_zero()) return a;
            if (a.is_zero()) return unary(Op::Neg, std::move(b));
            break;
        case Op::Mul:
            if (a.is_zero() || b.is_zero()) return Expr(0.0);
            if (a.is_constant(1.0)) return b;
            if (b.is_constant(1.0)) return a;
            if (a.is_constant(-1.0)) return unary(Op::Neg, std::move(b));
            if (b.is_constant(-1.0)) return unary(Op::Neg, std::move(a));
            break;
        case Op::Div:
            if (b.is_constant(1.0)) return a;
            if (a.is_zero() && !b.is_zero()) return Expr(0.0);
            break;
        case Op::Pow:
            if (b.is_constant(1.0)) return a;
            if (b.is_zero()) return Expr(1.0);
            break;
        default:
            break;
    }
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Op Expr::op() const noexcept { return node_->op; }
double Expr::value() const noexcept { return node_->value; }
int Expr::index() const noexcept { return node_->index; }
int Expr::arity() const noexcept { return arity_of(node_->op); }

const Expr& Expr::arg(int i) const {
    if (i < 0 || i >= arity()) throw ShapeError("expression argument index out of range");
    return i == 0 ? node_->a : node_->b;
}

bool Expr::depends_on(int var) const {
    switch (op()) {
        case Op::Const: return false;
        case Op::Var: return var == index();
        case Op::Time: return var == kTimeVar;
        default:
            for (int i = 0; i < arity(); ++i) {
                if (arg(i).depends_on(var)) return true;
            }
            return false;
    }
}

int Expr::max_var_index() const {
    if (op() == Op::Var) return index();
    int m = -1;
    for (int i = 0; i < arity(); ++i) m = std::max(m, arg(i).max_var_index());
    return m;
}

bool Expr::structurally_equal(const Expr& other) const {
    if (node_ == other.node_) return true;
    if (op() != other.op()) return false;
    switch (op()) {
        case Op::Const: return value() == other.value();
        case Op::Var: return index() == other.index();
        case Op::Time: return true;
        default:
            for (int i = 0; i < arity(); ++i) {
                if (!arg(i).structurally_equal(other.arg(i))) return false;
            }
            return true;
    }
}

Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(Op::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(Op::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(Op::Mul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::binary(Op::Div, a, b); }
Expr operator-(const Expr& a) { return Expr::unary(Op::Neg, a); }
Expr pow(const Expr& a, const Expr& b) { return Expr::binary(Op::Pow, a, b); }
Expr sin(const Expr& a) { return Expr::unary(Op::Sin, a); }
Expr cos(const Expr& a) { return Expr::unary(Op::Cos, a); }
Expr tan(const Expr& a) { return Expr::unary(Op::Tan, a); }
Expr exp(const Expr& a) { return Expr::unary(Op::Exp, a); }
Expr log(const Expr& a) { return Expr::unary(Op::Log, a); }
Expr sqrt(const Expr& a) { return Expr::unary(Op::Sqrt, a); }
Expr abs(const Expr& a) { return Expr::unary(Op::Abs, a); }
Expr sgn(const Expr& a) { return Expr::unary(Op::Sgn, a); }
Expr min(const Expr& a, const Expr& b) { return Expr::binary(Op::Min, a, b); }
Expr max(const Expr& a, const Expr& b) { return Expr::binary(Op::Max, a, b); }

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
public:
    Parser(std::string_view text, int n) : text_(text), n_(n) {}

    Expr run() {
        skip_space();
        if (pos_ >= text_.size()) fail("empty expression");
        Expr e = parse_sum();
        skip_space();
        if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what) const { throw ParseError("syntax error: " + what, pos_); }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            if (pos_ >= text_.size()) fail(std::string("expected '") + c + "' but input ended");
            fail(std::string("expected '") + c + "'");
        }
    }

    Expr parse_sum() {
        Expr lhs = parse_product();
        for (;;) {
            if (accept('+')) {
                lhs = lhs + parse_product();
            } else if (accept('-')) {
                lhs = lhs - parse_product();
            } else {
                return lhs;
            }
        }
    }

    Expr parse_product() {
        Expr lhs = parse_unary();
        for (;;) {
            if (accept('*')) {
                lhs = lhs * parse_unary();
            } else if (accept('/')) {
                lhs = lhs / parse_unary();
            } else {
                return lhs;
            }
        }
    }

    Expr parse_unary() {
        if (accept('-')) return -parse_unary();
        if (accept('+')) return parse_unary();
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_primary();
        if (accept('^')) {
            // right associative; the exponent may carry its own sign
            return pow(base, parse_unary());
        }
        return base;
    }

    Expr parse_primary() {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = parse_sum();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        fail(std::string("unexpected character '") + c + "'");
    }

    Expr parse_number() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
            ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
            if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
                pos_ = p;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            }
        }
        const std::string token(text_.substr(start, pos_ - start));
        char* end = nullptr;
        const double v = std::strtod(token.c_str(), &end);
        if (end != token.c_str() + token.size()) {
            pos_ = start;
            fail("malformed number '" + token + "'");
        }
        return Expr(v);
    }

    Expr parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            ++pos_;
        }
        const std::string name(text_.substr(start, pos_ - start));

        static const std::map<std::string, Op> unary_functions = {
            {"sin", Op::Sin}, {"cos", Op::Cos}, {"tan", Op::Tan},   {"exp", Op::Exp},
            {"log", Op::Log}, {"sqrt", Op::Sqrt}, {"abs", Op::Abs}, {"sgn", Op::Sgn},
        };
        if (auto it = unary_functions.find(name); it != unary_functions.end()) {
            expect('(');
            Expr a = parse_sum();
            expect(')');
            return Expr::unary(it->second, a);
        }
        if (name == "min" || name == "max") {
            expect('(');
            Expr a = parse_sum();
            expect(',');
            Expr b = parse_sum();
            expect(')');
            return name == "min" ? min(a, b) : max(a, b);
        }
        if (name == "t") return Expr::time();
        if (name == "pi") return Expr(3.14159265358979323846);

        int index = -1;
        if (name.size() == 1 && (name[0] == 'x' || name[0] == 'y' || name[0] == 'z')) {
            if (n_ > 3) {
                pos_ = start;
                fail("alias '" + name + "' is only available for state dimension <= 3");
            }
            index = name[0] - 'x';
        } else if (name.size() >= 2 && name[0] == 'x') {
            int k = 0;
            auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), k);
            if (ec == std::errc() && ptr == name.data() + name.size() && k >= 1) index = k - 1;
        }
        if (index < 0) {
            pos_ = start;
            throw ParseError("unknown identifier '" + name + "'", start);
        }
        if (index >= n_) {
            pos_ = start;
            throw ParseError("variable '" + name + "' exceeds state dimension " + std::to_string(n_), start);
        }
        return Expr::var(index);
    }

    std::string_view text_;
    int n_;
    std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view text, int n) {
    if (n < 1 || n > kMaxStateDim) {
        throw ShapeError("state dimension must lie in 1.." + std::to_string(kMaxStateDim));
    }
    return Parser(text, n).run();
}

std::string to_string(const Expr& e) {
    switch (e.op()) {
        case Op::Const: {
            const std::string s = format_number(e.value());
            return e.value() < 0.0 || std::signbit(e.value()) ? "(" + s + ")" : s;
        }
        case Op::Var: return "x" + std::to_string(e.index() + 1);
        case Op::Time: return "t";
        case Op::Neg: return "(-" + to_string(e.arg(0)) + ")";
        default: break;
    }
    if (const char* sym = infix_symbol(e.op())) {
        return "(" + to_string(e.arg(0)) + sym + to_string(e.arg(1)) + ")";
    }
    const char* name = function_name(e.op());
    if (e.arity() == 2) return std::string(name) + "(" + to_string(e.arg(0)) + ", " + to_string(e.arg(1)) + ")";
    return std::string(name) + "(" + to_string(e.arg(0)) + ")";
}

// ---------------------------------------------------------------------------
// Evaluation

double evaluate(const Expr& e, std::span<const double> x, double t) {
    switch (e.op()) {
        case Op::Const: return e.value();
        case Op::Var:
            if (static_cast<std::size_t>(e.index()) >= x.size()) {
                throw ShapeError("expression references x" + std::to_string(e.index() + 1) +
                                 " but the point has dimension " + std::to_string(x.size()));
            }
            return x[static_cast<std::size_t>(e.index())];
        case Op::Time: return t;
        default: break;
    }
    double out = 0.0;
    if (e.arity() == 1) {
        if (!apply_unary(e.op(), evaluate(e.arg(0), x, t), out)) {
            throw DomainError(domain_message(e.op()), to_string(e));
        }
        return out;
    }
    const double a = evaluate(e.arg(0), x, t);
    const double b = evaluate(e.arg(1), x, t);
    if (!apply_binary(e.op(), a, b, out)) throw DomainError(domain_message(e.op()), to_string(e));
    return out;
}

// ---------------------------------------------------------------------------
// Differentiation and substitution

Expr differentiate(const Expr& e, int var) {
    if (!e.depends_on(var)) return Expr(0.0);
    switch (e.op()) {
        case Op::Var:
        case Op::Time:
            return Expr(1.0);
        case Op::Neg: return -differentiate(e.arg(0), var);
        case Op::Sin: return cos(e.arg(0)) * differentiate(e.arg(0), var);
        case Op::Cos: return -(sin(e.arg(0)) * differentiate(e.arg(0), var));
        case Op::Tan: return (Expr(1.0) + pow(tan(e.arg(0)), 2.0)) * differentiate(e.arg(0), var);
        case Op::Exp: return e * differentiate(e.arg(0), var);
        case Op::Log: return differentiate(e.arg(0), var) / e.arg(0);
        case Op::Sqrt: return differentiate(e.arg(0), var) / (Expr(2.0) * e);
        case Op::Abs: return sgn(e.arg(0)) * differentiate(e.arg(0), var);
        case Op::Sgn: return Expr(0.0);
        case Op::Add: return differentiate(e.arg(0), var) + differentiate(e.arg(1), var);
        case Op::Sub: return differentiate(e.arg(0), var) - differentiate(e.arg(1), var);
        case Op::Mul: {
            const Expr& a = e.arg(0);
            const Expr& b = e.arg(1);
            return differentiate(a, var) * b + a * differentiate(b, var);
        }
        case Op::Div: {
            const Expr& a = e.arg(0);
            const Expr& b = e.arg(1);
            const Expr da = differentiate(a, var);
            const Expr db = differentiate(b, var);
            if (db.is_zero()) return da / b;
            return (da * b - a * db) / pow(b, 2.0);
        }
        case Op::Pow: {
            const Expr& a = e.arg(0);
            const Expr& b = e.arg(1);
            if (!b.depends_on(var)) return b * pow(a, b - Expr(1.0)) * differentiate(a, var);
            return e * (differentiate(b, var) * log(a) + b * differentiate(a, var) / a);
        }
        case Op::Min:
        case Op::Max:
            throw DifferentiationError("cannot differentiate " + to_string(e) + " with respect to " +
                                       (var == kTimeVar ? std::string("t") : "x" + std::to_string(var + 1)));
        case Op::Const:
            break;
    }
    return Expr(0.0);
}

Expr substitute(const Expr& e, const std::map<int, Expr>& bindings) {
    for (const auto& [key, value] : bindings) {
        if (key != kTimeVar && (key < 0 || key >= kMaxStateDim)) {
            throw ShapeError("substitution key " + std::to_string(key) + " is not a variable");
        }
    }
    std::function<Expr(const Expr&)> go = [&](const Expr& node) -> Expr {
        switch (node.op()) {
            case Op::Const: return node;
            case Op::Var: {
                auto it = bindings.find(node.index());
                return it == bindings.end() ? node : it->second;
            }
            case Op::Time: {
                auto it = bindings.find(kTimeVar);
                return it == bindings.end() ? node : it->second;
            }
            default: break;
        }
        if (node.arity() == 1) return Expr::unary(node.op(), go(node.arg(0)));
        return Expr::binary(node.op(), go(node.arg(0)), go(node.arg(1)));
    };
    return go(e);
}

// ---------------------------------------------------------------------------
// Program

Program::Program(const Expr& e) {
    int depth = 0;
    std::function<void(const Expr&)> emit = [&](const Expr& node) {
        for (int i = 0; i < node.arity(); ++i) emit(node.arg(i));
        code_.push_back({node.op(), node.op() == Op::Var ? node.index() : 0,
                         node.op() == Op::Const ? node.value() : 0.0});
        source_.push_back(node);
        if (node.arity() == 0) {
            ++depth;
        } else {
            depth -= node.arity() - 1;
        }
        max_stack_ = std::max(max_stack_, depth);
        if (node.op() == Op::Var || node.op() == Op::Time) constant_ = false;
    };
    emit(e);
    if (constant_) value_ = evaluate(e, {}, 0.0);
}

void Program::domain_failure(std::size_t pc, const char* what) const {
    throw DomainError(what, to_string(source_[pc]));
}

double Program::operator()(const double* x, double t) const {
    if (constant_) return value_;
    constexpr int kInline = 32;
    if (max_stack_ > kInline) {
        std::vector<double> big(static_cast<std::size_t>(max_stack_));
        return run(x, t, big.data());
    }
    double small[kInline];  // left uninitialised: this is the hot loop of every simulation
    return run(x, t, small);
}

double Program::run(const double* x, double t, double* stack) const {
    int sp = 0;
    for (std::size_t pc = 0; pc < code_.size(); ++pc) {
        const Instr& in = code_[pc];
        switch (in.op) {
            case Op::Const: stack[sp++] = in.value; break;
            case Op::Var: stack[sp++] = x[in.index]; break;
            case Op::Time: stack[sp++] = t; break;
            case Op::Neg: stack[sp - 1] = -stack[sp - 1]; break;
            case Op::Sin: stack[sp - 1] = std::sin(stack[sp - 1]); break;
            case Op::Cos: stack[sp - 1] = std::cos(stack[sp - 1]); break;
            case Op::Tan: stack[sp - 1] = std::tan(stack[sp - 1]); break;
            case Op::Exp: stack[sp - 1] = std::exp(stack[sp - 1]); break;
            case Op::Log:
                if (!(stack[sp - 1] > 0.0)) domain_failure(pc, domain_message(Op::Log));
                stack[sp - 1] = std::log(stack[sp - 1]);
                break;
            case Op::Sqrt:
                if (!(stack[sp - 1] >= 0.0)) domain_failure(pc, domain_message(Op::Sqrt));
                stack[sp - 1] = std::sqrt(stack[sp - 1]);
                break;
            case Op::Abs: stack[sp - 1] = std::fabs(stack[sp - 1]); break;
            case Op::Sgn: stack[sp - 1] = sign_of(stack[sp - 1]); break;
            case Op::Add: --sp; stack[sp - 1] += stack[sp]; break;
            case Op::Sub: --sp; stack[sp - 1] -= stack[sp]; break;
            case Op::Mul: --sp; stack[sp - 1] *= stack[sp]; break;
            case Op::Div:
                --sp;
                if (stack[sp] == 0.0) domain_failure(pc, domain_message(Op::Div));
                stack[sp - 1] /= stack[sp];
                break;
            case Op::Pow:
            case Op::Min:
            case Op::Max: {
                --sp;
                double out = 0.0;
                if (!apply_binary(in.op, stack[sp - 1], stack[sp], out)) {
                    domain_failure(pc, domain_message(in.op));
                }
                stack[sp - 1] = out;
                break;
            }
        }
    }
    return stack[0];
}

}  // namespace sdesym
