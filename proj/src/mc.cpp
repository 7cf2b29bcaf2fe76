#include "sdesym/mc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <ostream>

#include "sdesym/error.hpp"
#include "sdesym/parallel.hpp"
#include "sdesym/rng.hpp"

namespace sdesym {

namespace {

constexpr double kExplosion = 1e10;
constexpr double kMaxLogWeight = 700.0;

bool all_constant(const Field& f) {
    if (!f.is_symbolic()) return false;
    for (const Expr& e : f.entries()) {
        if (!e.is_constant()) return false;
    }
    return true;
}

std::vector<double> uniform_times(std::size_t steps, double dt) {
    std::vector<double> t(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) t[k] = static_cast<double>(k) * dt;
    return t;
}

// Everything a worker needs to simulate one path into its own buffers.
class PathSimulator {
public:
    PathSimulator(const SdeSpec& sde, std::span<const double> x0, const std::vector<double>& times, double dt,
                  std::uint64_t seed)
        : sde_(sde), x0_(x0.begin(), x0.end()), times_(times), dt_(dt), seed_(seed), n_(sde.n()), d_(sde.d()) {
        steps_ = times.size() - 1;
        X_.resize((steps_ + 1) * n_);
        W_.resize((steps_ + 1) * d_);
        dW_.resize(steps_ * d_);
        mu_.resize(n_);
        sigma_.resize(static_cast<std::size_t>(n_) * d_);
        constant_ = all_constant(sde.mu()) && all_constant(sde.sigma());
        if (constant_) {
            sde.mu().evaluate(x0_, 0.0, mu_);
            sde.sigma().evaluate(x0_, 0.0, sigma_);
        }
        if (steps_ * static_cast<std::size_t>(d_) >= (std::size_t{1} << 32)) {
            throw ValidationError("too many increments per path for the counter layout");
        }
    }

    PathView run(std::size_t path) {
        NormalStream normals(seed_, path);
        normals.fill(dW_.data(), dW_.size());
        const double sq = std::sqrt(dt_);
        for (double& z : dW_) z *= sq;

        std::copy(x0_.begin(), x0_.end(), X_.begin());
        std::fill(W_.begin(), W_.begin() + d_, 0.0);
        for (std::size_t k = 0; k < steps_; ++k) {
            const double* x = X_.data() + k * n_;
            double* xn = X_.data() + (k + 1) * n_;
            const double* dw = dW_.data() + k * d_;
            for (int j = 0; j < d_; ++j) W_[(k + 1) * d_ + j] = W_[k * d_ + j] + dw[j];
            if (!constant_) {
                const std::span<const double> xs(x, n_);
                sde_.mu().evaluate(xs, times_[k], mu_);
                sde_.sigma().evaluate(xs, times_[k], sigma_);
            }
            for (int i = 0; i < n_; ++i) {
                double v = x[i] + mu_[i] * dt_;
                for (int j = 0; j < d_; ++j) v += sigma_[i * d_ + j] * dw[j];
                if (!(std::fabs(v) <= kExplosion)) throw SimulationError("path exploded (|X| > 1e10)", path, k + 1);
                xn[i] = v;
            }
        }
        PathView view;
        view.index = path;
        view.n = n_;
        view.d = d_;
        view.times = times_;
        view.X = X_.data();
        view.W = W_.data();
        view.dW = dW_.data();
        return view;
    }

private:
    const SdeSpec& sde_;
    std::vector<double> x0_;
    const std::vector<double>& times_;
    double dt_;
    std::uint64_t seed_;
    int n_;
    int d_;
    std::size_t steps_ = 0;
    bool constant_ = false;
    std::vector<double> X_, W_, dW_, mu_, sigma_;
};

void check_x0(const SdeSpec& sde, std::span<const double> x0) {
    if (static_cast<int>(x0.size()) != sde.n()) {
        throw ShapeError("x0 has " + std::to_string(x0.size()) + " entries, the SDE has n = " + std::to_string(sde.n()));
    }
}

// Runs body(p, worker) over paths; on failure rethrows the error of the lowest
// failing path so the reported error does not depend on the thread count.
void for_paths(std::size_t count, int threads, const std::function<void(std::size_t, std::size_t, int)>& chunk) {
    const int workers = threads > 0 ? threads : default_threads();
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    parallel_for(count, workers, [&](std::size_t begin, std::size_t end, int w) {
        try {
            chunk(begin, end, w);
        } catch (...) {
            errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
    });
    // chunks are contiguous and ascending, so the first recorded error is the lowest path
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace

std::size_t step_count(double t_end, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("dt must be positive");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ValidationError("t_end must be positive");
    const double r = t_end / dt;
    const double k = std::round(r);
    if (k < 1.0 || std::fabs(r - k) > 1e-9 * std::max(1.0, k)) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "dt = %.17g does not divide t_end = %.17g", dt, t_end);
        throw ValidationError(buf);
    }
    return static_cast<std::size_t>(k);
}

Estimate estimate(std::span<const double> samples, double dt) {
    return estimate_column(samples, 1, 0, dt);
}

Estimate estimate_column(std::span<const double> table, std::size_t cols, std::size_t col, double dt) {
    const std::size_t N = cols == 0 ? 0 : table.size() / cols;
    if (N == 0) throw ValidationError("estimate of an empty sample");
    std::vector<double> buf(N);
    for (std::size_t p = 0; p < N; ++p) buf[p] = table[p * cols + col];
    Estimate e;
    e.n_paths = N;
    e.dt = dt;
    e.value = pairwise_sum(buf.data(), N) / static_cast<double>(N);
    if (N > 1) {
        for (double& v : buf) v = (v - e.value) * (v - e.value);
        e.std_error = std::sqrt(pairwise_sum(buf.data(), N) / static_cast<double>(N - 1) / static_cast<double>(N));
    }
    return e;
}

std::size_t grid_index(std::span<const double> times, double t) {
    auto it = std::lower_bound(times.begin(), times.end(), t - 1e-9 * std::max(1.0, std::fabs(t)));
    if (it != times.end() && std::fabs(*it - t) <= 1e-9 * std::max(1.0, std::fabs(t))) {
        return static_cast<std::size_t>(it - times.begin());
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "time %.17g is not a node of the simulation grid", t);
    throw ValidationError(buf);
}

std::vector<double> state_at(const PathView& p, double t) {
    const auto& ts = p.times;
    if (t < ts.front() || t > ts.back()) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "time %.17g is outside the simulated horizon", t);
        throw ValidationError(buf);
    }
    std::size_t hi = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), t) - ts.begin());
    if (hi > p.steps()) hi = p.steps();
    const std::size_t lo = hi - 1;
    const double span = ts[hi] - ts[lo];
    const double a = span > 0.0 ? (t - ts[lo]) / span : 1.0;
    std::vector<double> out(p.n);
    for (int i = 0; i < p.n; ++i) {
        const double x0 = p.X[lo * p.n + i];
        const double x1 = p.X[hi * p.n + i];
        out[i] = a == 0.0 ? x0 : (a == 1.0 ? x1 : x0 + a * (x1 - x0));
    }
    return out;
}

std::vector<double> map_paths(const SdeSpec& sde, std::span<const double> x0, const McConfig& cfg, int n_out,
                              const PathFn& fn) {
    check_x0(sde, x0);
    if (cfg.n_paths < 1) throw ValidationError("n_paths must be at least 1");
    if (n_out < 0) throw ValidationError("negative statistic count");
    const std::size_t steps = step_count(cfg.t_end, cfg.dt);
    const std::vector<double> times = uniform_times(steps, cfg.dt);
    std::vector<double> table(cfg.n_paths * static_cast<std::size_t>(n_out));
    for_paths(cfg.n_paths, cfg.threads, [&](std::size_t begin, std::size_t end, int) {
        PathSimulator sim(sde, x0, times, cfg.dt, cfg.seed);
        for (std::size_t p = begin; p < end; ++p) {
            const PathView view = sim.run(p);
            fn(view, std::span<double>(table.data() + p * n_out, static_cast<std::size_t>(n_out)));
        }
    });
    return table;
}

PathView PathEnsemble::path(std::size_t p) const {
    if (p >= n_paths) throw ValidationError("path index out of range");
    const std::size_t K = steps();
    PathView v;
    v.index = p;
    v.n = n;
    v.d = d;
    v.times = times;
    v.X = X.data() + p * (K + 1) * n;
    v.W = W.data() + p * (K + 1) * d;
    v.dW = dW.data() + p * K * d;
    v.weight = weights.empty() ? 1.0 : weights[p];
    return v;
}

PathEnsemble simulate(const SdeSpec& sde, std::span<const double> x0, double t_end, double dt, std::size_t n_paths,
                      std::uint64_t seed, int threads) {
    check_x0(sde, x0);
    if (n_paths < 1) throw ValidationError("n_paths must be at least 1");
    const std::size_t steps = step_count(t_end, dt);
    PathEnsemble ens;
    ens.times = uniform_times(steps, dt);
    ens.n = sde.n();
    ens.d = sde.d();
    ens.n_paths = n_paths;
    ens.seed = seed;
    ens.X.resize(n_paths * (steps + 1) * ens.n);
    ens.W.resize(n_paths * (steps + 1) * ens.d);
    ens.dW.resize(n_paths * steps * ens.d);
    ens.weights.assign(n_paths, 1.0);
    for_paths(n_paths, threads, [&](std::size_t begin, std::size_t end, int) {
        PathSimulator sim(sde, x0, ens.times, dt, seed);
        for (std::size_t p = begin; p < end; ++p) {
            const PathView v = sim.run(p);
            std::copy(v.X, v.X + (steps + 1) * ens.n, ens.X.begin() + p * (steps + 1) * ens.n);
            std::copy(v.W, v.W + (steps + 1) * ens.d, ens.W.begin() + p * (steps + 1) * ens.d);
            std::copy(v.dW, v.dW + steps * ens.d, ens.dW.begin() + p * steps * ens.d);
        }
    });
    return ens;
}

TransformedPath transform_path(const StochTransformation& T, const PathView& path) {
    if (T.phi().state_dim() != path.n) throw ShapeError("transformation and paths have different state dimensions");
    if (T.d() != path.d) throw ShapeError("transformation and paths have different noise dimensions");
    const std::size_t K = path.steps();
    const int d = path.d;
    const int m = T.phi().size();
    TransformedPath out;
    out.times.resize(K + 1);
    out.X.resize((K + 1) * m);
    out.W.assign((K + 1) * d, 0.0);
    out.dW.resize(K * d);
    std::vector<double> Bk(static_cast<std::size_t>(d) * d);
    std::vector<double> hk(d);
    std::vector<double> fk(1);
    for (std::size_t k = 0; k <= K; ++k) {
        const std::span<const double> x = path.x(k);
        const double t = path.times[k];
        T.f().evaluate(x, t, fk);
        out.times[k] = fk[0];
        if (!std::isfinite(fk[0]) || (k > 0 && fk[0] < out.times[k - 1])) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "sampled time change is not monotone at t = %.17g", t);
            throw ValidationError(buf);
        }
        T.phi().evaluate(x, t, std::span<double>(out.X.data() + k * m, static_cast<std::size_t>(m)));
        if (k == K) break;

        const double fp = T.f_prime().evaluate_scalar(x, t);
        T.B().evaluate(x, t, Bk);
        T.h().evaluate(x, t, hk);
        // orthogonality of B at this node
        for (int r = 0; r < d; ++r) {
            for (int c = 0; c < d; ++c) {
                double s = 0.0;
                for (int j = 0; j < d; ++j) s += Bk[r * d + j] * Bk[c * d + j];
                if (std::fabs(s - (r == c ? 1.0 : 0.0)) > 1e-8) {
                    throw ValidationError("B is not orthogonal along the path at t = " + std::to_string(t));
                }
            }
        }
        const double dt = path.times[k + 1] - t;
        const double root = std::sqrt(fp);
        for (int r = 0; r < d; ++r) {
            double v = 0.0;
            for (int j = 0; j < d; ++j) v += Bk[r * d + j] * (path.dw(k, j) - hk[j] * dt);
            out.dW[k * d + r] = root * v;
            out.W[(k + 1) * d + r] = out.W[k * d + r] + out.dW[k * d + r];
        }
        for (int j = 0; j < d; ++j) out.log_weight += hk[j] * path.dw(k, j) - 0.5 * hk[j] * hk[j] * dt;
    }
    return out;
}

PathEnsemble transform_paths(const StochTransformation& T, const PathEnsemble& ens, int threads) {
    const std::size_t K = ens.steps();
    PathEnsemble out;
    out.n = T.phi().size();
    out.d = ens.d;
    out.n_paths = ens.n_paths;
    out.seed = ens.seed;
    out.X.resize(ens.n_paths * (K + 1) * out.n);
    out.W.resize(ens.n_paths * (K + 1) * out.d);
    out.dW.resize(ens.n_paths * K * out.d);
    out.weights.resize(ens.n_paths);
    std::vector<std::vector<double>> grids(ens.n_paths);
    for_paths(ens.n_paths, threads, [&](std::size_t begin, std::size_t end, int) {
        for (std::size_t p = begin; p < end; ++p) {
            TransformedPath tp = transform_path(T, ens.path(p));
            if (std::fabs(tp.log_weight) > kMaxLogWeight) {
                throw NumericalError("Girsanov weight overflow on path " + std::to_string(p) +
                                     "; use a shorter horizon or a smaller drift h");
            }
            std::copy(tp.X.begin(), tp.X.end(), out.X.begin() + p * (K + 1) * out.n);
            std::copy(tp.W.begin(), tp.W.end(), out.W.begin() + p * (K + 1) * out.d);
            std::copy(tp.dW.begin(), tp.dW.end(), out.dW.begin() + p * K * out.d);
            out.weights[p] = (ens.weights.empty() ? 1.0 : ens.weights[p]) * std::exp(tp.log_weight);
            grids[p] = std::move(tp.times);
        }
    });
    // f depends on t only, so every path shares the image grid
    out.times = std::move(grids.front());
    const bool reweighted = T.h().is_symbolic() ? std::any_of(T.h().entries().begin(), T.h().entries().end(),
                                                               [](const Expr& e) { return !e.is_zero(); })
                                                : true;
    out.measure = reweighted ? "Q(h)" : ens.measure;
    return out;
}

double girsanov_log_weight(const Field& h, const PathView& path, std::size_t k_end) {
    if (h.size() != path.d) throw ShapeError("h must have one entry per noise dimension");
    if (k_end > path.steps()) throw ValidationError("horizon beyond the simulated grid");
    std::vector<double> hk(path.d);
    double lw = 0.0;
    for (std::size_t k = 0; k < k_end; ++k) {
        h.evaluate(path.x(k), path.times[k], hk);
        const double dt = path.times[k + 1] - path.times[k];
        for (int j = 0; j < path.d; ++j) lw += hk[j] * path.dw(k, j) - 0.5 * hk[j] * hk[j] * dt;
    }
    if (!(std::fabs(lw) <= kMaxLogWeight)) {
        throw NumericalError("Girsanov weight overflow on path " + std::to_string(path.index) +
                             "; use a shorter horizon or a smaller drift h");
    }
    return lw;
}

std::vector<double> girsanov_weights(const Field& h, const PathEnsemble& ens, int threads) {
    std::vector<double> w(ens.n_paths);
    for_paths(ens.n_paths, threads, [&](std::size_t begin, std::size_t end, int) {
        for (std::size_t p = begin; p < end; ++p) w[p] = std::exp(girsanov_log_weight(h, ens.path(p), ens.steps()));
    });
    return w;
}

double ito_integral(const Field& G, const PathView& path, std::size_t k_end) {
    if (G.size() != path.d) throw ShapeError("integrand must have one entry per noise dimension");
    if (k_end > path.steps()) throw ValidationError("horizon beyond the simulated grid");
    std::vector<double> g(path.d);
    double s = 0.0;
    for (std::size_t k = 0; k < k_end; ++k) {
        G.evaluate(path.x(k), path.times[k], g);
        for (int j = 0; j < path.d; ++j) s += g[j] * path.dw(k, j);
    }
    return s;
}

std::vector<double> ito_integral(const Field& G, const PathEnsemble& ens, std::size_t k_end, int threads) {
    std::vector<double> out(ens.n_paths);
    for_paths(ens.n_paths, threads, [&](std::size_t begin, std::size_t end, int) {
        for (std::size_t p = begin; p < end; ++p) out[p] = ito_integral(G, ens.path(p), k_end);
    });
    return out;
}

void write_paths_csv(std::ostream& out, const PathEnsemble& ens) {
    out << "path,k,t";
    for (int i = 1; i <= ens.n; ++i) out << ",x" << i;
    for (int j = 1; j <= ens.d; ++j) out << ",w" << j;
    out << ",weight\n";
    char buf[32];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << ',' << buf;
    };
    for (std::size_t p = 0; p < ens.n_paths; ++p) {
        const double weight = ens.weights.empty() ? 1.0 : ens.weights[p];
        for (std::size_t k = 0; k <= ens.steps(); ++k) {
            out << p << ',' << k;
            num(ens.times[k]);
            for (int i = 0; i < ens.n; ++i) num(ens.x(p, k, i));
            for (int j = 0; j < ens.d; ++j) num(ens.w(p, k, j));
            num(weight);
            out << '\n';
        }
    }
}

}  // namespace sdesym
