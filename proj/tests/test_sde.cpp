#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "sdesym/catalog.hpp"
#include "sdesym/error.hpp"
#include "sdesym/sde.hpp"

using namespace sdesym;

namespace {

SdeSpec bm(int n) { return *catalog_get("bm", {{"n", std::to_string(n)}}).sde; }

SdeSpec gbm() { return *catalog_get("gbm").sde; }

double at(const Field& f, std::vector<double> x, double t) { return f.evaluate_scalar(x, t); }

}  // namespace

TEST(Generator, BrownianExamples) {
    const SdeSpec b = bm(1);
    EXPECT_DOUBLE_EQ(at(generator_apply(b, Field::parse_scalar("x^2", 1)), {0.7}, 0.3), 1.0);
    EXPECT_DOUBLE_EQ(at(generator_apply(b, Field::parse_scalar("x", 1)), {0.7}, 0.3), 0.0);
}

TEST(Generator, GbmMapHasDriftMuTimesPhi) {
    const SdeSpec b = bm(1);
    const Field phi = Field::parse_scalar("1*exp((0.1 - 0.5*0.2^2)*t + 0.2*x)", 1);
    const Field L = generator_apply(b, phi);
    for (double x : {-1.5, 0.0, 0.4, 2.0}) {
        for (double t : {0.0, 0.5, 1.7}) {
            EXPECT_NEAR(at(L, {x}, t) / at(phi, {x}, t), 0.1, 1e-12);
        }
    }
}

TEST(Generator, LinearityProperty) {
    const SdeSpec s(Field::parse_vector({"sin(x2)", "x1*t"}, 2), Field::parse_matrix({{"1", "x1"}, {"0.5", "cos(x2)"}}, 2));
    const Field p1 = Field::parse_scalar("x1^2*x2 + t*x2", 2);
    const Field p2 = Field::parse_scalar("exp(0.3*x1)*sin(x2)", 2);
    const double a = 1.7;
    const double b = -0.4;
    const Field combo = add(multiply(Field::scalar(Expr(a), 2), p1), multiply(Field::scalar(Expr(b), 2), p2));
    const Field L = generator_apply(s, combo);
    const Field L1 = generator_apply(s, p1);
    const Field L2 = generator_apply(s, p2);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 100; ++k) {
        const std::vector<double> x = {u(rng), u(rng)};
        const double t = std::fabs(u(rng));
        EXPECT_LE(std::fabs(at(L, x, t) - (a * at(L1, x, t) + b * at(L2, x, t))), 1e-10);
    }
}

TEST(Generator, BrownianReducesToHeatOperator) {
    const SdeSpec b = bm(2);
    const Field phi = Field::parse_scalar("sin(x1)*exp(x2) + t*x1^2", 2);
    const Field L = generator_apply(b, phi);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 100; ++k) {
        const double x1 = u(rng);
        const double x2 = u(rng);
        const double t = std::fabs(u(rng));
        // hand-derived d_t + (1/2) Laplacian
        const double expected = x1 * x1 + 0.5 * (-std::sin(x1) * std::exp(x2) + 2 * t + std::sin(x1) * std::exp(x2));
        EXPECT_NEAR(at(L, {x1, x2}, t), expected, 1e-12);
    }
}

TEST(SigmaGrad, Examples) {
    const Field s1 = sigma_grad_apply(bm(1), Field::parse_scalar("sin(x)", 1));
    EXPECT_DOUBLE_EQ(s1.evaluate_vector(std::vector<double>{0.3}, 0)(0), std::cos(0.3));
    const Field s2 = sigma_grad_apply(gbm(), Field::parse_scalar("x", 1));
    EXPECT_DOUBLE_EQ(s2.evaluate_vector(std::vector<double>{1.5}, 0)(0), 0.2 * 1.5);
    const Field s3 = sigma_grad_apply(bm(2), Field::parse_scalar("7", 2));
    EXPECT_EQ(s3.size(), 2);
    EXPECT_EQ(s3.evaluate_vector(std::vector<double>{1, 2}, 0).cwiseAbs().maxCoeff(), 0.0);
}

TEST(LieBracket, Examples) {
    const SdeSpec b = bm(1);
    const std::vector<double> x = {0.8};
    EXPECT_EQ(lie_bracket(Field::parse_vector({"t^2"}, 1), b, BracketKind::Sigma).evaluate_matrix(x, 0.5)(0, 0), 0.0);
    EXPECT_EQ(lie_bracket(Field::parse_vector({"x"}, 1), b, BracketKind::Sigma).evaluate_matrix(x, 0.5)(0, 0), -1.0);
    EXPECT_EQ(lie_bracket(Field::parse_vector({"x"}, 1), b, BracketKind::SigmaSquared).evaluate_matrix(x, 0.5)(0, 0),
              -2.0);
    EXPECT_THROW(lie_bracket(Field::parse_vector({"x1", "x2"}, 2), b, BracketKind::Sigma), ShapeError);
}

TEST(LieBracket, SigmaSquaredIsSymmetric) {
    const SdeSpec s(Field::parse_vector({"0", "0"}, 2), Field::parse_matrix({{"1 + x2^2", "x1"}, {"sin(x1)", "2"}}, 2));
    const Field Y = Field::parse_vector({"x1*x2 + t", "cos(x1)"}, 2);
    const Field br = lie_bracket(Y, s, BracketKind::SigmaSquared);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 100; ++k) {
        const Mat m = br.evaluate_matrix(std::vector<double>{u(rng), u(rng)}, std::fabs(u(rng)));
        EXPECT_LE((m - m.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Observable, RejectsTimeDependence) {
    EXPECT_THROW(Observable::parse("x*t", 1), ValidationError);
    EXPECT_NO_THROW(Observable::parse("sin(x)*y", 2));
    EXPECT_THROW(Observable::parse("min(x, 1)", 1), DifferentiationError);
}

TEST(SdeSpec, ShapeAndBoxChecks) {
    EXPECT_THROW(SdeSpec(Field::parse_vector({"0", "0"}, 2), Field::parse_matrix({{"1"}}, 1)), ShapeError);
    const SdeSpec bad(Field::parse_vector({"log(x)"}, 1), Field::parse_matrix({{"1"}}, 1));
    EXPECT_THROW(bad.check_finite_on(WorkingBox{}), ValidationError);
    EXPECT_NO_THROW(gbm().check_finite_on(WorkingBox{}));
    const SdeSpec rect(Field::parse_vector({"0", "0"}, 2), Field::parse_matrix({{"1", "0", "x1"}, {"0", "1", "0"}}, 2));
    EXPECT_EQ(rect.d(), 3);
    EXPECT_EQ(rect.diffusion_matrix().rows(), 2);
}
