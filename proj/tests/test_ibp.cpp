#include <cmath>

#include <gtest/gtest.h>

#include "sdesym/catalog.hpp"
#include "sdesym/error.hpp"
#include "sdesym/ibp.hpp"

using namespace sdesym;

namespace {

const double kE = std::exp(-0.5);

SdeSpec bm(int n) { return *catalog_get("bm", {{"n", std::to_string(n)}}).sde; }
InfinitesimalSymmetry V(const std::string& ref) { return *catalog_get_ref(ref).symmetry; }

McConfig config(std::size_t n, std::uint64_t seed) {
    McConfig c;
    c.n_paths = n;
    c.seed = seed;
    return c;
}

bool within(const IbpTerm& t, double target) { return std::fabs(t.value - target) <= 4 * t.std_error; }

}  // namespace

TEST(IbpReport, BetaTranslationWithSine) {
    const IbpReport r = ibp_report(V("v_beta_1d:beta=t"), bm(1), Observable::parse("sin(x)", 1), config(100000, 1));
    ASSERT_EQ(r.terms.size(), 4u);
    EXPECT_EQ(r.terms[0].value, 0.0);  // m = 0
    EXPECT_TRUE(within(r.terms[1], -kE)) << r.terms[1].value << " +- " << r.terms[1].std_error;
    EXPECT_TRUE(within(r.terms[2], kE)) << r.terms[2].value;
    EXPECT_EQ(r.terms[3].value, 0.0);  // beta(0) cos(0) = 0
    EXPECT_TRUE(r.pass) << r.total << " +- " << r.se_total;
    EXPECT_TRUE(r.bounded);
    EXPECT_TRUE(r.warnings.empty());
}

TEST(IbpReport, TimeChangeWithSquare) {
    const IbpReport r = ibp_report(V("v_alpha:alpha=t"), bm(1), Observable::parse("x^2", 1), config(100000, 2));
    EXPECT_TRUE(within(r.terms[0], -1.0));
    EXPECT_TRUE(within(r.terms[2], 1.0));
    EXPECT_TRUE(r.pass) << r.total << " +- " << r.se_total;
    EXPECT_FALSE(r.bounded);
}

TEST(IbpReport, PlanarRotation) {
    const IbpReport r =
        ibp_report(V("v_beta_2d:beta=t"), bm(2), Observable::parse("x1^2 + x2^2", 2), config(100000, 3));
    EXPECT_TRUE(r.pass) << r.total << " +- " << r.se_total;
}

TEST(IbpReport, PreconditionIsEnforced) {
    const InfinitesimalSymmetry base = V("v_beta_1d:beta=t");
    const InfinitesimalSymmetry bad(base.Y(), base.m(), base.C(), Field::parse_vector({"-0.9"}, 1));
    const Observable F = Observable::parse("sin(x)", 1);
    EXPECT_THROW(ibp_report(bad, bm(1), F, config(1000, 1)), SymmetryPreconditionError);
    IbpOptions opt;
    opt.override_precondition = true;
    const IbpReport r = ibp_report(bad, bm(1), F, config(1000, 1), opt);
    ASSERT_FALSE(r.warnings.empty());
    EXPECT_NE(r.warnings[0].find("drift residual 0.1"), std::string::npos) << r.warnings[0];
}

TEST(IbpReport, HorizonMustBeOnTheGrid) {
    IbpOptions opt;
    opt.t = 0.3;
    EXPECT_THROW(ibp_report(V("v_beta_1d:beta=t"), bm(1), Observable::parse("sin(x)", 1), config(10, 1), opt),
                 ValidationError);
    const std::vector<double> x0{0.0};
    const PathEnsemble ens = simulate(bm(1), x0, 0.5, kDefaultDt, 10, 1);
    opt.t = 1.0;
    EXPECT_THROW(ibp_report(V("v_beta_1d:beta=t"), bm(1), Observable::parse("sin(x)", 1), ens, opt),
                 ValidationError);
}

TEST(IbpReport, EnsembleAndStreamingAgree) {
    const std::vector<double> x0{0.0};
    const PathEnsemble ens = simulate(bm(1), x0, 1.0, kDefaultDt, 3000, 17);
    const Observable F = Observable::parse("cos(x)", 1);
    const IbpReport a = ibp_report(V("v_alpha:alpha=t^2"), bm(1), F, ens);
    const IbpReport b = ibp_report(V("v_alpha:alpha=t^2"), bm(1), F, config(3000, 17));
    EXPECT_EQ(a.total, b.total);
    EXPECT_EQ(a.se_total, b.se_total);
}

TEST(IbpReport, StandardErrorHalvesWhenPathsQuadruple) {
    const Observable F = Observable::parse("sin(x)", 1);
    const IbpReport a = ibp_report(V("v_beta_1d:beta=t^2"), bm(1), F, config(20000, 4));
    const IbpReport b = ibp_report(V("v_beta_1d:beta=t^2"), bm(1), F, config(80000, 5));
    const double ratio = b.se_total / a.se_total;
    EXPECT_GE(ratio, 0.5 * 0.8);
    EXPECT_LE(ratio, 0.5 * 1.2);
}

TEST(IbpReport, SteinConsistency) {
    const McConfig c = config(100000, 6);
    const IbpReport sym = ibp_report(V("v_beta_1d:beta=t"), bm(1), Observable::parse("sin(x)", 1), c);
    const IbpReport id = verify_identity("stein", {"sin(x)", 1.0, 0.5}, c);
    // same identity: E[W F(W)] = -E[F int H dW] and t E[F'(W)] = E[Y(F)]
    EXPECT_LE(std::fabs(id.terms[0].value + sym.terms[1].value), 4 * id.terms[0].std_error);
    EXPECT_LE(std::fabs(id.terms[1].value - sym.terms[2].value), 4 * id.terms[1].std_error);
}

TEST(Identity, Stein) {
    const IbpReport r = verify_identity("stein", {"sin(x)", 1.0, 0.5}, config(100000, 7));
    EXPECT_TRUE(r.pass);
    EXPECT_TRUE(within(r.terms[0], kE));
    EXPECT_TRUE(within(r.terms[1], kE));
    EXPECT_EQ(r.subject, "identity:stein");
}

TEST(Identity, Covariance) {
    const IbpReport r = verify_identity("covariance", {"", 1.0, 0.5}, config(100000, 8));
    EXPECT_TRUE(within(r.terms[0], 0.5)) << r.terms[0].value;
    EXPECT_EQ(r.terms[1].value, 0.5);
    EXPECT_TRUE(r.pass);
    const IbpReport late = verify_identity("covariance", {"", 0.5, 1.0}, config(50000, 8));
    EXPECT_TRUE(within(late.terms[0], 0.5));
}

TEST(Identity, SecondOrderTimeChange) {
    const IbpReport r = verify_identity("valpha-second", {"x^2", 1.0, 0.5}, config(100000, 9));
    EXPECT_EQ(r.terms[0].value, 2.0);
    EXPECT_TRUE(within(r.terms[1], 2.0));
    EXPECT_TRUE(r.pass);
    EXPECT_TRUE(verify_identity("valpha-first", {"x^3", 1.0, 0.5}, config(100000, 9)).pass);
}

TEST(Identity, IsserlisAndLevyArea) {
    const IbpReport iss = verify_identity("isserlis", {"x*y", 1.0, 0.5}, config(100000, 10));
    EXPECT_TRUE(within(iss.terms[0], 1.0));
    EXPECT_TRUE(within(iss.terms[1], 1.0));
    EXPECT_TRUE(iss.pass);
    const IbpReport levy = verify_identity("levy-area", {"x^2 + y^2", 1.0, 0.5}, config(100000, 11));
    EXPECT_EQ(levy.terms[1].value, 0.0);
    EXPECT_TRUE(within(levy.terms[0], 0.0));
    EXPECT_TRUE(levy.pass);
}

TEST(Identity, BadParameters) {
    EXPECT_THROW(verify_identity("frobnicate", {}, config(10, 1)), ValidationError);
    EXPECT_THROW(verify_identity("stein", {"sin(", 1.0, 0.5}, config(10, 1)), ParseError);
    EXPECT_THROW(verify_identity("stein", {"sin(x)*t", 1.0, 0.5}, config(10, 1)), ValidationError);
    EXPECT_THROW(verify_identity("stein", {"sin(x)", 0.3, 0.5}, config(10, 1)), ValidationError);
}

TEST(Identity, ThreadCountDoesNotChangeTheReport) {
    McConfig a = config(5000, 12);
    McConfig b = a;
    a.threads = 1;
    b.threads = 3;
    const IbpReport r1 = verify_identity("levy-area", {"sin(x)*cos(y)", 1.0, 0.5}, a);
    const IbpReport r3 = verify_identity("levy-area", {"sin(x)*cos(y)", 1.0, 0.5}, b);
    EXPECT_EQ(r1.total, r3.total);
    EXPECT_EQ(r1.se_total, r3.se_total);
    EXPECT_EQ(r1.terms[0].value, r3.terms[0].value);
}

TEST(HypothesisA, Examples) {
    const std::vector<double> x0{0.0};
    const McConfig c = config(20000, 13);
    const HypothesisAReport beta = check_hypothesis_a(V("v_beta_1d:beta=t"), bm(1), x0, {0.5, 1.0}, c);
    EXPECT_FALSE(beta.flagged);
    EXPECT_EQ(beta.rows.size(), 14u);

    const InfinitesimalSymmetry dil(Field::parse_vector({"x"}, 1), Field::parse_scalar("0", 1),
                                    Field::parse_matrix({{"0"}}, 1), Field::parse_vector({"0"}, 1));
    const HypothesisAReport d = check_hypothesis_a(dil, bm(1), x0, {1.0}, c);
    EXPECT_FALSE(d.flagged);
    for (const auto& row : d.rows) {
        if (row.quantity == "L(Y)") EXPECT_EQ(row.value, 0.0);
        if (row.quantity == "Sigma(Y)") EXPECT_EQ(row.value, 1.0);
    }

    const InfinitesimalSymmetry heavy(Field::parse_vector({"0"}, 1), Field::parse_scalar("0", 1),
                                      Field::parse_matrix({{"0"}}, 1), Field::parse_vector({"exp(x^2)"}, 1));
    const HypothesisAReport h = check_hypothesis_a(heavy, bm(1), x0, {1.0}, c);
    EXPECT_TRUE(h.flagged);
    for (const auto& row : h.rows) {
        if (row.quantity == "H") EXPECT_FALSE(row.stable);
    }
}
