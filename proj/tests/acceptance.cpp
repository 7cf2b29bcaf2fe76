// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: acceptance [--only N[,N...]]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "sdesym/catalog.hpp"
#include "sdesym/error.hpp"
#include "sdesym/flow.hpp"
#include "sdesym/ibp.hpp"
#include "sdesym/mc.hpp"
#include "sdesym/symmetry.hpp"
#include "sdesym/transform.hpp"

using namespace sdesym;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (ok) return;
        pass = false;
        detail += (detail.empty() ? "" : "; ") + what;
    }
    void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

SdeSpec sde(const std::string& ref) { return *catalog_get_ref(ref).sde; }
StochTransformation transform(const std::string& ref) { return *catalog_get_ref(ref).transformation; }
InfinitesimalSymmetry symmetry(const std::string& ref) { return *catalog_get_ref(ref).symmetry; }

McConfig mc(std::size_t n, std::uint64_t seed) {
    McConfig c;
    c.n_paths = n;
    c.seed = seed;
    return c;
}

constexpr std::size_t kMillion = 1000000;
constexpr double kRunBudget = 60.0;

// Monte Carlo runs are timed one by one against the per-run budget.
template <class F>
auto timed_run(Outcome& o, const std::string& label, F&& f) {
    const auto t0 = Clock::now();
    auto r = f();
    const double s = seconds_since(t0);
    o.require(s <= kRunBudget, label + " took " + g(s) + " s");
    return r;
}

bool within(const IbpTerm& t, double target, double gate = 4.0) {
    return std::fabs(t.value - target) <= gate * t.std_error;
}

std::string term(const IbpTerm& t) { return g(t.value) + "+-" + g(t.std_error); }

// ---------------------------------------------------------------- 1

Outcome gbm_push_forward() {
    Outcome o;
    const SdeSpec pushed = push_forward_sde(transform("gbm_map:mu=0.1,sigma=0.2,z0=1"), sde("bm:n=1"));
    const StochTransformation T = transform("gbm_map:mu=0.1,sigma=0.2,z0=1");
    const Grid grid;
    double err = 0.0;
    std::vector<double> x;
    double t = 0.0;
    for (std::size_t k = 0; k < grid.node_count(1); ++k) {
        grid.node(1, k, x, t);
        const std::vector<double> z = T.phi().evaluate(x, t);
        const double s = T.f().evaluate_scalar(x, t);
        err = std::max(err, std::fabs(pushed.mu().evaluate_scalar(z, s) - 0.1 * z[0]));
        err = std::max(err, std::fabs(pushed.sigma().evaluate_matrix(z, s)(0, 0) - 0.2 * z[0]));
    }
    o.require(err <= 1e-9, "residual " + g(err));
    o.note("max residual against (0.1z, 0.2z) " + g(err));
    return o;
}

// ---------------------------------------------------------------- 2

Outcome bridge() {
    Outcome o;
    const StochTransformation T = transform("bridge_map:T=1,n=2");
    const ResidualReport r = check_finite(T, sde("bm:n=2"), SymmetryKind::Weak, Grid{}, 1e-9);
    o.require(r.pass && r.max_abs() <= 1e-9, "weak residual " + g(r.max_abs()));

    // f(t) = t/(1+t) rounds to exactly 1 at t = 2^53; 1024 steps reach it
    McConfig cfg = mc(10000, 2);
    cfg.t_end = std::ldexp(1.0, 53);
    cfg.dt = std::ldexp(1.0, 43);
    const std::vector<double> x0{0.0, 0.0};
    const auto table = map_paths(sde("bm:n=2"), x0, cfg, 3, [&](const PathView& p, std::span<double> out) {
        const TransformedPath tp = transform_path(T, p);
        out[0] = tp.times.back();
        out[1] = tp.X[tp.X.size() - 2];
        out[2] = tp.X.back();
    });
    std::size_t bad = 0;
    for (std::size_t p = 0; p < cfg.n_paths; ++p)
        if (table[3 * p] != 1.0 || table[3 * p + 1] != 0.0 || table[3 * p + 2] != 0.0) ++bad;
    o.require(bad == 0, std::to_string(bad) + " paths miss the endpoint");
    o.note("weak residual " + g(r.max_abs()) + ", " + std::to_string(cfg.n_paths - bad) + "/" +
           std::to_string(cfg.n_paths) + " paths exactly 0 at time 1");
    return o;
}

// ---------------------------------------------------------------- 3

Outcome reflection() {
    Outcome o;
    const SdeSpec bm2 = sde("bm:n=2");
    const ResidualReport gw = check_finite(transform("reflection:n=2,variant=gweak"), bm2, SymmetryKind::GWeak);
    o.require(gw.pass && gw.max_abs() <= 1e-12, "gweak residual " + g(gw.max_abs()));
    const ResidualReport wI = check_finite(transform("reflection:n=2,variant=gweak"), bm2, SymmetryKind::Weak);
    const double sig = wI.equation("diffusion").max_abs;
    o.require(!wI.pass && std::fabs(sig - 2.0) <= 1e-12, "weak B=I sigma residual " + g(sig));
    const ResidualReport wm = check_finite(transform("reflection:n=2,variant=weakB"), bm2, SymmetryKind::Weak);
    o.require(wm.pass, "weak B=-I residual " + g(wm.max_abs()));
    o.note("gweak " + g(gw.max_abs()) + ", weak B=I sigma " + g(sig) + ", weak B=-I " + g(wm.max_abs()));
    return o;
}

// ---------------------------------------------------------------- 4

struct Point {
    std::vector<double> x;
    double t;
};

std::vector<Point> points(int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(-2.0, 2.0);
    std::uniform_real_distribution<double> ut(0.05, 2.0);
    std::vector<Point> out;
    for (int k = 0; k < 100; ++k) {
        Point p{std::vector<double>(static_cast<std::size_t>(n)), ut(rng)};
        for (double& v : p.x) v = ux(rng);
        out.push_back(p);
    }
    return out;
}

double rel(const Mat& a, const Mat& b) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        m = std::max(m, std::fabs(a.data()[i] - b.data()[i]) / std::max(1.0, std::fabs(b.data()[i])));
    return m;
}

double distance(const StochTransformation& A, const StochTransformation& B, const std::vector<Point>& pts) {
    double m = 0.0;
    for (const auto& p : pts) {
        m = std::max(m, rel(A.phi().evaluate_matrix(p.x, p.t), B.phi().evaluate_matrix(p.x, p.t)));
        m = std::max(m, rel(A.f().evaluate_matrix(p.x, p.t), B.f().evaluate_matrix(p.x, p.t)));
        m = std::max(m, rel(A.f_prime().evaluate_matrix(p.x, p.t), B.f_prime().evaluate_matrix(p.x, p.t)));
        m = std::max(m, rel(A.B().evaluate_matrix(p.x, p.t), B.B().evaluate_matrix(p.x, p.t)));
        m = std::max(m, rel(A.h().evaluate_matrix(p.x, p.t), B.h().evaluate_matrix(p.x, p.t)));
    }
    return m;
}

std::vector<Point> image(const StochTransformation& T, const std::vector<Point>& pts) {
    std::vector<Point> out;
    for (const auto& p : pts) out.push_back({T.phi().evaluate(p.x, p.t), T.f().evaluate_scalar(p.x, p.t)});
    return out;
}

Outcome group_algebra() {
    Outcome o;
    double worst = 0.0;
    std::size_t checks = 0;
    for (int n : {1, 2}) {
        const std::string ns = std::to_string(n);
        std::vector<StochTransformation> fam{StochTransformation::identity(n, n),
                                             transform("bridge_map:T=1,n=" + ns),
                                             transform("bridge_map:T=2.5,n=" + ns),
                                             transform("reflection:variant=gweak,n=" + ns),
                                             transform("reflection:variant=weakB,n=" + ns),
                                             transform("scaling:a=2,n=" + ns),
                                             transform("scaling:a=0.7,n=" + ns)};
        std::vector<SdeSpec> sdes{sde("bm:n=" + ns)};
        if (n == 1) {
            fam.push_back(transform("gbm_map"));
            fam.push_back(transform("gbm_girsanov"));
            sdes.push_back(sde("gbm"));
        }
        const auto pts = points(n, 40 + static_cast<unsigned>(n));
        const StochTransformation id = StochTransformation::identity(n, n);
        auto record = [&](double d) {
            worst = std::max(worst, d);
            ++checks;
        };
        for (const auto& A : fam) {
            record(distance(compose(A, id), A, pts));
            record(distance(compose(id, A), A, pts));
            record(distance(compose(invert(A), A), id, pts));
            record(distance(compose(A, invert(A)), id, image(A, pts)));
            for (const auto& B : fam) {
                const StochTransformation BA = compose(B, A);
                for (const auto& C : fam) record(distance(compose(C, BA), compose(compose(C, B), A), pts));
                for (const auto& s : sdes) {
                    const SdeSpec direct = push_forward_sde(BA, s);
                    const SdeSpec stepwise = push_forward_sde(B, push_forward_sde(A, s));
                    double m = 0.0;
                    for (const auto& p : image(BA, pts)) {
                        m = std::max(m, rel(direct.mu().evaluate_matrix(p.x, p.t), stepwise.mu().evaluate_matrix(p.x, p.t)));
                        m = std::max(m, rel(direct.sigma().evaluate_matrix(p.x, p.t),
                                            stepwise.sigma().evaluate_matrix(p.x, p.t)));
                    }
                    record(m);
                }
            }
        }
    }
    o.require(worst <= 1e-9, "worst residual " + g(worst));
    o.note(std::to_string(checks) + " checks x 100 points, worst " + g(worst));
    return o;
}

// ---------------------------------------------------------------- 5

Outcome flows() {
    Outcome o;
    const InfinitesimalSymmetry scale = symmetry("v_alpha:alpha=2*t");
    const InfinitesimalSymmetry va1 = symmetry("v_alpha:alpha=t");
    const InfinitesimalSymmetry va2 = symmetry("v_alpha:alpha=t^2");
    const InfinitesimalSymmetry vb1 = symmetry("v_beta_1d:beta=t");
    const InfinitesimalSymmetry vb2 = symmetry("v_beta_1d:beta=t^2");
    const InfinitesimalSymmetry vbs = symmetry("v_beta_1d:beta=sin(t)");
    const InfinitesimalSymmetry vb2d = symmetry("v_beta_2d:beta=t");

    double worst = 0.0;
    auto cmp = [&](const FlowState& s, double phi, double f, double fp, double h) {
        worst = std::max({worst, std::fabs(s.phi(0) - phi), std::fabs(s.f - f), std::fabs(s.f_prime - fp),
                          std::fabs(s.h(0) - h)});
    };
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ux(-2.0, 2.0);
    std::uniform_real_distribution<double> ut(0.05, 0.9);
    for (int k = 0; k < 5; ++k) {
        const double x = ux(rng);
        const double y = ux(rng);
        const double t = ut(rng);
        const std::vector<double> xs{x};
        for (int i = 0; i <= 10; ++i) {
            const double l = 0.1 * i;  // every state integrates at step 1e-3 from lambda = 0
            const double e = std::exp(l);
            cmp(reconstruct_point(scale, l, xs, t), e * x, e * e * t, e * e, 0.0);
            cmp(reconstruct_point(va1, l, xs, t), std::sqrt(e) * x, e * t, e, 0.0);
            const double q = 1 - l * t;
            cmp(reconstruct_point(va2, l, xs, t), x / q, t / q, 1 / (q * q), -x * l / q);
            cmp(reconstruct_point(vb1, l, xs, t), x + l * t, t, 1, -l);
            cmp(reconstruct_point(vb2, l, xs, t), x + l * t * t, t, 1, -2 * l * t);
            cmp(reconstruct_point(vbs, l, xs, t), x + l * std::sin(t), t, 1, -l * std::cos(t));

            const double th = l * t;
            const FlowState s = reconstruct_point(vb2d, l, std::vector<double>{x, y}, t);
            Vec phi(2);
            phi << x * std::cos(th) + y * std::sin(th), -x * std::sin(th) + y * std::cos(th);
            Mat B(2, 2);
            B << std::cos(th), std::sin(th), -std::sin(th), std::cos(th);
            Vec h(2);
            h << -l * y, l * x;  // B^T H(Phi) = J x since rotations commute with J
            worst = std::max({worst, (s.phi - phi).cwiseAbs().maxCoeff(), (s.B - B).cwiseAbs().maxCoeff(),
                              std::fabs(s.f - t), (s.h - h).cwiseAbs().maxCoeff()});
        }
    }
    o.require(worst <= 1e-8, "worst deviation " + g(worst));
    o.note("7 generators, lambda in [0,1], worst deviation " + g(worst));
    return o;
}

// ---------------------------------------------------------------- 6

Outcome determining_equations() {
    Outcome o;
    std::vector<std::pair<std::string, std::string>> cases;
    for (const char* a : {"t", "t^2", "1+t", "2*t", "sin(t)"}) {
        cases.push_back({std::string("v_alpha:n=1,alpha=") + a, "bm:n=1"});
        cases.push_back({std::string("v_alpha:n=2,alpha=") + a, "bm:n=2"});
    }
    for (const char* b : {"1", "t", "t^2", "sin(t)", "min(t,0.5)"}) {
        cases.push_back({std::string("v_beta_1d:beta=") + b, "bm:n=1"});
        cases.push_back({std::string("v_beta_2d:beta=") + b, "bm:n=2"});
    }
    for (const char* plane : {"i=1,j=2", "i=1,j=3", "i=2,j=3"})
        cases.push_back({std::string("v_beta_nd:n=3,") + plane + ",beta=t^2", "bm:n=3"});
    double worst = 0.0;
    for (const auto& [v, s] : cases) {
        const ResidualReport r = check_infinitesimal(symmetry(v), sde(s), SymmetryKind::Weak, Grid{}, 1e-10);
        worst = std::max(worst, r.max_abs());
        o.require(r.pass, v + " residual " + g(r.max_abs()));
    }
    const InfinitesimalSymmetry base = symmetry("v_beta_1d:beta=t");
    const InfinitesimalSymmetry bad(base.Y(), base.m(), base.C(), Field::parse_vector({"-1 + 0.1"}, 1));
    const ResidualReport r = check_infinitesimal(bad, sde("bm:n=1"), SymmetryKind::Weak);
    const double d = r.equation("drift").max_abs;
    o.require(!r.pass && std::fabs(d - 0.1) <= 1e-12, "perturbed H residual " + g(d));
    o.note(std::to_string(cases.size()) + " symmetries, worst " + g(worst) + "; perturbed H residual " + g(d));
    return o;
}

// ---------------------------------------------------------------- 7-11

Outcome stein() {
    Outcome o;
    const double e = std::exp(-0.5);
    const IbpReport r = timed_run(o, "stein", [] { return verify_identity("stein", {"sin(x)", 1.0, 0.5}, mc(kMillion, 7)); });
    o.require(r.pass, "|LHS-RHS| = " + g(std::fabs(r.total)) + " > 4 SE");
    o.require(within(r.terms[0], e) && within(r.terms[1], e), "a side is off e^{-1/2}");
    o.note("E[W sin W] = " + term(r.terms[0]) + ", E[cos W] = " + term(r.terms[1]));
    return o;
}

Outcome covariance() {
    Outcome o;
    // beta(u) = min(u, 0.5), F = x: E[F int H dW] = -E[W_1 W_0.5], E[Y(F)(X_1)] = beta(1) = 0.5
    IbpOptions opt;
    opt.hypothesis_paths = 0;
    const IbpReport r = timed_run(o, "covariance", [&] {
        return ibp_report(symmetry("v_beta_1d:beta=min(t,0.5)"), sde("bm:n=1"), Observable::parse("x", 1),
                          mc(kMillion, 8), opt);
    });
    IbpTerm cov = r.terms[1];
    cov.value = -cov.value;
    o.require(within(cov, 0.5), "E[W_1 W_0.5] = " + term(cov));
    o.require(r.pass, "identity total " + g(r.total) + "+-" + g(r.se_total));
    o.note("E[W_1 W_0.5] = " + term(cov));
    return o;
}

Outcome levy_area() {
    Outcome o;
    const IbpReport a =
        timed_run(o, "levy E[A]", [] { return verify_identity("levy-area", {"1", 1.0, 0.5}, mc(kMillion, 9)); });
    const IbpReport b = timed_run(
        o, "levy E[A|W|^2]", [] { return verify_identity("levy-area", {"x^2 + y^2", 1.0, 0.5}, mc(kMillion, 10)); });
    o.require(within(a.terms[0], 0.0), "E[A_1] = " + term(a.terms[0]));
    o.require(within(b.terms[0], 0.0), "E[A_1 |W_1|^2] = " + term(b.terms[0]));
    o.note("E[A_1] = " + term(a.terms[0]) + ", E[A_1 |W_1|^2] = " + term(b.terms[0]));
    return o;
}

Outcome isserlis() {
    Outcome o;
    std::uint64_t seed = 11;
    for (const char* F : {"x*y", "sin(x)*sin(y)"}) {
        const IbpReport r =
            timed_run(o, std::string("isserlis ") + F, [&] { return verify_identity("isserlis", {F, 1.0, 0.5}, mc(kMillion, seed++)); });
        o.require(r.pass, std::string(F) + ": diff " + g(r.total) + "+-" + g(r.se_total));
        o.note(std::string(F) + ": diff " + g(r.total) + "+-" + g(r.se_total));
    }
    return o;
}

Outcome valpha() {
    Outcome o;
    std::uint64_t seed = 13;
    for (const char* F : {"sin(x)", "x^3"}) {
        const IbpReport r = timed_run(o, std::string("valpha-first ") + F,
                                      [&] { return verify_identity("valpha-first", {F, 1.0, 0.5}, mc(kMillion, seed++)); });
        o.require(r.pass, std::string(F) + ": diff " + g(r.total) + "+-" + g(r.se_total));
        o.note(std::string("first ") + F + ": diff " + g(r.total) + "+-" + g(r.se_total));
    }
    const IbpReport r = timed_run(o, "valpha-second",
                                  [&] { return verify_identity("valpha-second", {"x^2", 1.0, 0.5}, mc(kMillion, seed)); });
    o.require(r.pass, "second: diff " + g(r.total) + "+-" + g(r.se_total));
    o.require(r.terms[0].value == 2.0 || within(r.terms[0], 2.0), "t^2 E[F''] = " + term(r.terms[0]));
    o.require(within(r.terms[1], 2.0), "E[F(W^2-t)] = " + term(r.terms[1]));
    o.note("second: " + term(r.terms[0]) + " vs " + term(r.terms[1]));
    return o;
}

// ---------------------------------------------------------------- 12

Outcome generality() {
    Outcome o;
    const auto t0 = Clock::now();
    const std::vector<std::string> Fs{"sin(x)", "x^2", "x^3", "cos(x)"};
    std::vector<std::string> refs;
    for (const char* b : {"1", "t", "t^2", "sin(t)", "min(t,0.5)"}) refs.push_back(std::string("v_beta_1d:beta=") + b);
    for (const char* a : {"t", "t^2", "1+t"}) refs.push_back(std::string("v_alpha:alpha=") + a);
    std::size_t passed = 0;
    std::size_t total = 0;
    std::string failing;
    std::uint64_t seed = 100;
    for (const auto& ref : refs) {
        for (const auto& F : Fs) {
            ++total;
            const IbpReport r = ibp_report(symmetry(ref), sde("bm:n=1"), Observable::parse(F, 1), mc(100000, seed++));
            if (r.pass) {
                ++passed;
            } else {
                failing += (failing.empty() ? "" : ", ") + ref.substr(ref.find(':') + 1) + " F=" + F + " (" +
                           g(r.total / r.se_total) + " SE)";
            }
        }
    }
    const double s = seconds_since(t0);
    o.require(s <= 600.0, "suite took " + g(s) + " s");
    o.require(passed == total, "failing: " + failing);
    o.detail = std::to_string(passed) + "/" + std::to_string(total) + " cells within 4 SE" +
               (o.detail.empty() ? "" : "; " + o.detail);
    return o;
}

// ---------------------------------------------------------------- 13

Outcome determinism() {
    Outcome o;
    const std::vector<std::vector<std::string>> runs{
        {"identity", "stein", "--F", "sin(x)", "--paths", "20000", "--seed", "7"},
        {"identity", "levy-area", "--F", "x^2 + y^2", "--paths", "20000", "--seed", "9"},
        {"ibp", "--catalog-symmetry", "v_beta_1d:beta=min(t,0.5)", "--F", "x", "--paths", "20000", "--seed", "8"},
        {"ibp", "--catalog-symmetry", "v_alpha:alpha=t", "--F", "x^2", "--paths", "20000", "--seed", "3"},
        {"simulate", "--catalog-transform", "bridge_map:T=1,n=2", "--paths", "2000", "--seed", "2"},
        {"hypothesis-a", "--catalog-symmetry", "v_beta_2d:beta=t", "--paths", "8192", "--seed", "4"},
        {"check-symmetry", "--catalog-transform", "reflection:n=2,variant=weakB"},
        {"reconstruct-flow", "--catalog-symmetry", "v_beta_2d:beta=sin(t)", "--x", "0.3,-0.2", "--t", "0.7"},
    };
    std::size_t compared = 0;
    for (const auto& base : runs) {
        std::string reference;
        for (const char* threads : {"1", "1", "2", "8"}) {  // 1 twice: plain repetition
            std::vector<std::string> args = base;
            args.insert(args.end(), {"--threads", threads, "--no-timestamp"});
            std::ostringstream out, err;
            const int code = run_cli(args, out, err);
            if (code != 0) {
                o.require(false, base[0] + " exited " + std::to_string(code) + ": " + err.str());
                break;
            }
            if (reference.empty()) {
                reference = out.str();
            } else {
                o.require(out.str() == reference, base[0] + " differs under " + threads + " threads");
                ++compared;
            }
        }
    }
    o.note(std::to_string(runs.size()) + " reports, " + std::to_string(compared) +
           " byte comparisons across 1, 2 and 8 threads");
    return o;
}

struct Criterion {
    int id;
    const char* title;
    double budget;  // seconds, whole criterion; MC runs also have their own budget
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) {
            std::stringstream in(argv[++i]);
            std::string item;
            while (std::getline(in, item, ',')) only.insert(std::stoi(item));
        } else {
            std::cerr << "usage: acceptance [--only N[,N...]]\n";
            return 2;
        }
    }

    const std::vector<Criterion> criteria{
        {1, "GBM push-forward", 1.0, gbm_push_forward},
        {2, "bridge map", 5.0, bridge},
        {3, "reflection dichotomy", 1.0, reflection},
        {4, "group algebra", 5.0, group_algebra},
        {5, "flow reconstruction", 10.0, flows},
        {6, "infinitesimal determining equations", 2.0, determining_equations},
        {7, "Stein identity", 0.0, stein},
        {8, "covariance via min(u, 0.5)", 0.0, covariance},
        {9, "Levy area", 0.0, levy_area},
        {10, "Isserlis", 0.0, isserlis},
        {11, "time-change identities", 0.0, valpha},
        {12, "IBP generality sweep", 0.0, generality},
        {13, "determinism across thread counts", 0.0, determinism},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("threw: ") + e.what();
        }
        const double s = seconds_since(t0);
        if (c.budget > 0.0 && s > c.budget) o.require(false, "took " + g(s) + " s, budget " + g(c.budget) + " s");
        if (!o.pass) ++failures;
        std::printf("%s %2d %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str(), s);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
