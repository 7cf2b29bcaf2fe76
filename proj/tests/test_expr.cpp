#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "sdesym/error.hpp"
#include "sdesym/expr.hpp"
#include "sdesym/field.hpp"

using namespace sdesym;

namespace {

double ev(const std::string& s, std::vector<double> x, double t) {
    return evaluate(parse(s, static_cast<int>(x.size())), x, t);
}

// Expressions that are smooth on [-2,2]^n x [0,2]; used by the round-trip and
// derivative properties.
const std::vector<std::pair<std::string, int>> kCorpus = {
    {"x1^2 + t", 1},
    {"sin(x)*cos(y)", 2},
    {"exp(0.2*x1 - 0.5*t)", 1},
    {"1*exp((0.1 - 0.5*0.2^2)*t + 0.2*x)", 1},
    {"(1 - t*1^2/(1 + t*1))*x1", 1},
    {"x1^3 - 2*x1*x2 + sqrt(1 + x2^2)", 2},
    {"log(2 + sin(x1*t))", 1},
    {"tan(0.3*x1) + x2/(2 + cos(t))", 2},
    {"-x^2 + -t", 1},
    {"2^x1 * 3", 1},
    {"(1 + t)^1.5 * x3 - x1*x2*x3", 3},
    {"abs(x1 - 3) + sgn(x1 + 4)", 1},
    {"x8 - x1*t", 8},
};

}  // namespace

TEST(Parse, PrecedenceAndAliases) {
    EXPECT_EQ(to_string(parse("x1^2 + t", 1)), "((x1 ^ 2) + t)");
    EXPECT_EQ(to_string(parse("sin(x)*cos(y)", 2)), "(sin(x1) * cos(x2))");
    EXPECT_EQ(to_string(parse("-x^2", 1)), "(-(x1 ^ 2))");
    EXPECT_EQ(to_string(parse("2^3^x", 1)), "(2 ^ (3 ^ x1))");
    EXPECT_EQ(to_string(parse("x-y*z", 3)), "(x1 - (x2 * x3))");
}

TEST(Parse, SyntaxErrorReportsOffset) {
    try {
        parse("x1 +", 1);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), 4u);
    }
    EXPECT_THROW(parse("x2", 1), ParseError);
    EXPECT_THROW(parse("foo(x)", 1), ParseError);
    EXPECT_THROW(parse("y", 1), ParseError);
    EXPECT_THROW(parse("x", 4), ParseError);
    EXPECT_THROW(parse("", 1), ParseError);
    EXPECT_THROW(parse("(x", 1), ParseError);
    EXPECT_THROW(parse("min(x)", 1), ParseError);
}

TEST(Evaluate, Basics) {
    EXPECT_DOUBLE_EQ(ev("x1^2 + t", {2}, 1), 5.0);
    EXPECT_DOUBLE_EQ(ev("sgn(x1)", {-3}, 0), -1.0);
    EXPECT_DOUBLE_EQ(ev("sgn(x1)", {0}, 0), 0.0);
    EXPECT_DOUBLE_EQ(ev("(-2)^3", {0}, 0), -8.0);
    EXPECT_DOUBLE_EQ(ev("min(x, t) + max(x, t)", {3}, 1), 4.0);
    EXPECT_NEAR(ev("pi", {0}, 0), M_PI, 0.0);
}

TEST(Evaluate, DomainErrorsNameSubexpression) {
    EXPECT_THROW(ev("log(x1)", {-1}, 0), DomainError);
    EXPECT_THROW(ev("sqrt(x1)", {-1}, 0), DomainError);
    EXPECT_THROW(ev("1/x1", {0}, 0), DomainError);
    EXPECT_THROW(ev("x1^0.5", {-1}, 0), DomainError);
    try {
        ev("t + log(x1 - 1)", {0.5}, 0);
        FAIL();
    } catch (const DomainError& e) {
        EXPECT_EQ(e.subexpr(), "log((x1 - 1))");
    }
}

TEST(Differentiate, Rules) {
    EXPECT_EQ(to_string(differentiate(parse("x1^2 + t", 1), 0)), "(2 * x1)");
    EXPECT_EQ(to_string(differentiate(parse("sin(t)", 1), kTimeVar)), "cos(t)");
    EXPECT_EQ(to_string(differentiate(parse("abs(x1)", 1), 0)), "sgn(x1)");
    EXPECT_TRUE(differentiate(parse("sgn(x1)", 1), 0).is_zero());
    EXPECT_THROW(differentiate(parse("min(x1, t)", 1), 0), DifferentiationError);
    EXPECT_TRUE(differentiate(parse("min(x1, 2)", 1), kTimeVar).is_zero());
}

TEST(Substitute, Examples) {
    const Expr e = substitute(parse("x1^2", 1), {{0, parse("x1 + t", 1)}});
    EXPECT_EQ(to_string(e), "((x1 + t) ^ 2)");
    const Expr g = substitute(parse("exp(0.2*x1)", 1), {{0, parse("(1/0.2)*log(x1)", 1)}});
    for (double x : {0.5, 1.0, 2.0}) EXPECT_LT(std::fabs(evaluate(g, std::vector<double>{x}, 0.0) - x), 1e-12);
    EXPECT_EQ(to_string(substitute(parse("t", 1), {{0, parse("x1*7", 1)}})), "t");
    // simultaneous: swapping x1 and x2 is not sequential
    const Expr s = substitute(parse("x1 - x2", 2), {{0, Expr::var(1)}, {1, Expr::var(0)}});
    EXPECT_EQ(to_string(s), "(x2 - x1)");
}

TEST(Property, RoundTripPrintParse) {
    for (const auto& [text, n] : kCorpus) {
        const Expr e = parse(text, n);
        const Expr again = parse(to_string(e), n);
        EXPECT_TRUE(e.structurally_equal(again)) << text << " -> " << to_string(e);
        for (int v = -1; v < n; ++v) {
            if (text.find("abs") != std::string::npos) continue;
            const Expr d = differentiate(e, v);
            EXPECT_TRUE(d.structurally_equal(parse(to_string(d), n))) << to_string(d);
        }
    }
}

TEST(Property, DerivativeMatchesCentralDifference) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ux(-2.0, 2.0);
    std::uniform_real_distribution<double> ut(0.0, 2.0);
    for (const auto& [text, n] : kCorpus) {
        const Expr e = parse(text, n);
        for (int v = -1; v < n; ++v) {
            const Expr d = differentiate(e, v);
            for (int k = 0; k < 100; ++k) {
                std::vector<double> x(static_cast<std::size_t>(n));
                for (double& xi : x) xi = ux(rng);
                const double t = ut(rng);
                const double at = v == kTimeVar ? t : x[static_cast<std::size_t>(v)];
                const double h = 1e-5 * std::max(1.0, std::fabs(at));
                auto shifted = [&](double s) {
                    std::vector<double> y = x;
                    if (v == kTimeVar) return evaluate(e, y, t + s);
                    y[static_cast<std::size_t>(v)] += s;
                    return evaluate(e, y, t);
                };
                const double fd = (shifted(h) - shifted(-h)) / (2 * h);
                const double sym = evaluate(d, x, t);
                EXPECT_LE(std::fabs(sym - fd), 1e-6 * std::max(1.0, std::fabs(sym))) << text << " d/d" << v;
            }
        }
    }
}

TEST(Property, SubstituteCommutesWithEvaluate) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Expr e = parse("sin(x1)*x2 + exp(t*x1) - x2^2", 2);
    const Expr b0 = parse("x1*t + 1", 2);
    const Expr b1 = parse("cos(x2) - x1", 2);
    const Expr bt = parse("t^2 + 0.5", 2);
    const Expr s = substitute(e, {{0, b0}, {1, b1}, {kTimeVar, bt}});
    for (int k = 0; k < 100; ++k) {
        const std::vector<double> x = {u(rng), u(rng)};
        const double t = u(rng) + 1.0;
        const std::vector<double> y = {evaluate(b0, x, t), evaluate(b1, x, t)};
        EXPECT_NEAR(evaluate(s, x, t), evaluate(e, y, evaluate(bt, x, t)), 1e-12);
    }
}

TEST(Program, AgreesWithTreeEvaluation) {
    for (const auto& [text, n] : kCorpus) {
        const Expr e = parse(text, n);
        const Program p(e);
        std::vector<double> x(static_cast<std::size_t>(n), 0.37);
        EXPECT_EQ(p(x.data(), 0.8), evaluate(e, x, 0.8)) << text;
    }
    EXPECT_THROW(Program(parse("log(x1)", 1))(std::vector<double>{-1}.data(), 0), DomainError);
}

TEST(Field, ShapesAndAlgebra) {
    const Field a = Field::parse_matrix({{"x1", "t"}, {"1", "x2"}}, 2);
    const Field v = Field::parse_vector({"1", "x1"}, 2);
    const Field av = multiply(a, v);
    EXPECT_EQ(av.kind(), ShapeKind::Vector);
    const std::vector<double> x = {2.0, 3.0};
    const Vec r = av.evaluate_vector(x, 0.5);
    EXPECT_DOUBLE_EQ(r(0), 2.0 + 0.5 * 2.0);
    EXPECT_DOUBLE_EQ(r(1), 1.0 + 3.0 * 2.0);
    const Field vtv = multiply(transpose(v), v);
    EXPECT_EQ(vtv.kind(), ShapeKind::Scalar);
    EXPECT_DOUBLE_EQ(vtv.evaluate_scalar(x, 0), 5.0);
    EXPECT_THROW(multiply(v, v), ShapeError);
    EXPECT_THROW(Field::parse_vector({"x3"}, 2), ParseError);
}

TEST(Field, NumericMatchesSymbolic) {
    const Field s = Field::parse_vector({"sin(x1)*x2", "x1^2*t"}, 2);
    const Field num = Field::numeric(ShapeKind::Vector, 2, 1, 2,
                                     [s](std::span<const double> x, double t, std::span<double> out) {
                                         s.evaluate(x, t, out);
                                     });
    const std::vector<double> x = {0.3, -1.2};
    for (int v = -1; v < 2; ++v) {
        const Vec d1 = derivative(s, v).evaluate_vector(x, 0.7);
        const Vec d2 = derivative(num, v).evaluate_vector(x, 0.7);
        EXPECT_LT((d1 - d2).cwiseAbs().maxCoeff(), 1e-8);
        for (int w = 0; w < 2; ++w) {
            const Vec s1 = second_derivative(s, v, w).evaluate_vector(x, 0.7);
            const Vec s2 = second_derivative(num, v, w).evaluate_vector(x, 0.7);
            EXPECT_LT((s1 - s2).cwiseAbs().maxCoeff(), 1e-6);
        }
    }
    const Field c = compose(s, Field::parse_vector({"x2", "x1"}, 2), Field::parse_scalar("2*t", 2));
    const Field cn = compose(num, Field::parse_vector({"x2", "x1"}, 2), Field::parse_scalar("2*t", 2));
    EXPECT_TRUE(c.is_symbolic());
    EXPECT_FALSE(cn.is_symbolic());
    EXPECT_LT((c.evaluate_vector(x, 0.7) - cn.evaluate_vector(x, 0.7)).cwiseAbs().maxCoeff(), 1e-15);
}
