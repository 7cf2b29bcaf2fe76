#include "sdesym/flow.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <memory>
#include <mutex>
#include <unordered_map>

#include "sdesym/error.hpp"

namespace sdesym {

namespace {

struct Layout {
    int n;
    int d;
    int phi() const { return 0; }
    int f() const { return n; }
    int fp() const { return n + 1; }
    int B() const { return n + 2; }
    int h() const { return n + 2 + d * d; }
    int size() const { return n + 2 + d * d + d; }
};

class FlowRhs {
public:
    explicit FlowRhs(const InfinitesimalSymmetry& V)
        : V_(V), L_{V.n(), V.d()}, y_(static_cast<std::size_t>(L_.n)), c_(static_cast<std::size_t>(L_.d * L_.d)),
          H_(static_cast<std::size_t>(L_.d)) {}

    void operator()(const Vec& z, Vec& dz) {
        const int n = L_.n;
        const int d = L_.d;
        const std::span<const double> phi(z.data(), static_cast<std::size_t>(n));
        const double f = z(L_.f());
        const double fp = z(L_.fp());
        V_.Y().evaluate(phi, f, y_);
        V_.C().evaluate(phi, f, c_);
        V_.H().evaluate(phi, f, H_);
        for (int i = 0; i < n; ++i) dz(i) = y_[static_cast<std::size_t>(i)];
        dz(L_.f()) = V_.m().evaluate_scalar(phi, f);
        dz(L_.fp()) = V_.m_prime().evaluate_scalar(phi, f) * fp;
        const double* B = z.data() + L_.B();
        for (int r = 0; r < d; ++r) {
            for (int c = 0; c < d; ++c) {
                double acc = 0.0;
                for (int k = 0; k < d; ++k) acc += c_[static_cast<std::size_t>(r * d + k)] * B[k * d + c];
                dz(L_.B() + r * d + c) = acc;
            }
        }
        const double s = std::sqrt(fp);
        for (int r = 0; r < d; ++r) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k) acc += B[k * d + r] * H_[static_cast<std::size_t>(k)];
            dz(L_.h() + r) = s * acc;
        }
    }

private:
    const InfinitesimalSymmetry& V_;
    Layout L_;
    std::vector<double> y_;
    std::vector<double> c_;
    std::vector<double> H_;
};

// Modified Gram-Schmidt on the rows of the row-major d x d block.
void reorthonormalise(double* B, int d) {
    for (int r = 0; r < d; ++r) {
        double* row = B + r * d;
        for (int q = 0; q < r; ++q) {
            const double* prev = B + q * d;
            double dot = 0.0;
            for (int k = 0; k < d; ++k) dot += row[k] * prev[k];
            for (int k = 0; k < d; ++k) row[k] -= dot * prev[k];
        }
        double norm = 0.0;
        for (int k = 0; k < d; ++k) norm += row[k] * row[k];
        norm = std::sqrt(norm);
        if (!(norm > 0.0)) throw NumericalError("flow rotation became singular");
        for (int k = 0; k < d; ++k) row[k] /= norm;
    }
}

}  // namespace

FlowState reconstruct_point(const InfinitesimalSymmetry& V, double lambda, std::span<const double> x, double t,
                            const FlowOptions& opt) {
    const Layout L{V.n(), V.d()};
    if (static_cast<int>(x.size()) != L.n) throw ShapeError("flow start point has the wrong dimension");
    if (!(opt.step > 0.0)) throw ValidationError("flow step must be positive");
    Vec z = Vec::Zero(L.size());
    for (int i = 0; i < L.n; ++i) z(i) = x[static_cast<std::size_t>(i)];
    z(L.f()) = t;
    z(L.fp()) = 1.0;
    for (int i = 0; i < L.d; ++i) z(L.B() + i * L.d + i) = 1.0;

    const long steps = lambda == 0.0 ? 0 : static_cast<long>(std::ceil(std::fabs(lambda) / opt.step - 1e-9));
    const double hs = steps > 0 ? lambda / static_cast<double>(steps) : 0.0;
    FlowRhs rhs(V);
    Vec k1(L.size()), k2(L.size()), k3(L.size()), k4(L.size()), tmp(L.size());
    for (long s = 0; s < steps; ++s) {
        const double reached = hs * static_cast<double>(s);
        try {
            rhs(z, k1);
            tmp = z + 0.5 * hs * k1;
            rhs(tmp, k2);
            tmp = z + 0.5 * hs * k2;
            rhs(tmp, k3);
            tmp = z + hs * k3;
            rhs(tmp, k4);
        } catch (const DomainError&) {
            throw FlowBlowUp(reached);
        }
        z += (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!z.allFinite() || z.cwiseAbs().maxCoeff() > opt.blow_up || !(z(L.fp()) > 0.0)) {
            throw FlowBlowUp(hs * static_cast<double>(s + 1));
        }
        reorthonormalise(z.data() + L.B(), L.d);
    }

    FlowState out;
    out.lambda = lambda;
    out.phi = z.head(L.n);
    out.f = z(L.f());
    out.f_prime = z(L.fp());
    out.B.resize(L.d, L.d);
    for (int r = 0; r < L.d; ++r) {
        for (int c = 0; c < L.d; ++c) out.B(r, c) = z(L.B() + r * L.d + c);
    }
    out.h = z.segment(L.h(), L.d);
    return out;
}

namespace {

struct Key {
    double lambda;
    double t;
    std::array<double, kMaxStateDim> x{};
    bool operator==(const Key&) const = default;
};

struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
        std::size_t h = std::hash<double>{}(k.lambda) ^ (std::hash<double>{}(k.t) * 0x9e3779b97f4a7c15ULL);
        for (double v : k.x) h = (h ^ std::hash<double>{}(v)) * 0x100000001b3ULL;
        return h;
    }
};

double quantise(double v) { return std::nearbyint(v * 1e12); }

class FlowCache {
public:
    FlowCache(InfinitesimalSymmetry V, FlowOptions opt) : V_(std::move(V)), opt_(opt) {}

    FlowState get(double lambda, std::span<const double> x, double t) {
        Key key{lambda, quantise(t), {}};
        for (std::size_t i = 0; i < x.size(); ++i) key.x[i] = quantise(x[i]);
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto it = memo_.find(key);
            if (it != memo_.end()) return it->second;
        }
        FlowState s = reconstruct_point(V_, lambda, x, t, opt_);
        std::lock_guard<std::mutex> lock(mu_);
        if (memo_.size() >= kCapacity) memo_.clear();
        memo_.emplace(key, s);
        return s;
    }

    int n() const { return V_.n(); }
    int d() const { return V_.d(); }

private:
    static constexpr std::size_t kCapacity = 1 << 18;
    InfinitesimalSymmetry V_;
    FlowOptions opt_;
    std::mutex mu_;
    std::unordered_map<Key, FlowState, KeyHash> memo_;
};

void copy_vec(const Vec& v, std::span<double> out) {
    for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = v(i);
}

}  // namespace

StochTransformation as_transformation(const InfinitesimalSymmetry& V, double lambda, const FlowOptions& opt) {
    auto cache = std::make_shared<FlowCache>(V, opt);
    const int n = V.n();
    const int d = V.d();
    // f depends on t alone, so its evaluations share the x = 0 trajectory
    auto time_state = [cache, n](double lam, double t) {
        const std::vector<double> zero(static_cast<std::size_t>(n), 0.0);
        return cache->get(lam, zero, t);
    };
    StochTransformation::Parts p;
    p.d = d;
    p.phi = Field::numeric(ShapeKind::Vector, n, 1, n, [cache, lambda](std::span<const double> x, double t, std::span<double> out) {
        copy_vec(cache->get(lambda, x, t).phi, out);
    });
    p.f = Field::numeric(ShapeKind::Scalar, 1, 1, n, [time_state, lambda](std::span<const double>, double t, std::span<double> out) {
        out[0] = time_state(lambda, t).f;
    });
    p.f_prime = Field::numeric(ShapeKind::Scalar, 1, 1, n,
                               [time_state, lambda](std::span<const double>, double t, std::span<double> out) {
                                   out[0] = time_state(lambda, t).f_prime;
                               });
    p.f_inv = Field::numeric(ShapeKind::Scalar, 1, 1, n, [time_state, lambda](std::span<const double>, double t, std::span<double> out) {
        out[0] = time_state(-lambda, t).f;
    });
    p.phi_inv = Field::numeric(ShapeKind::Vector, n, 1, n,
                               [cache, time_state, lambda](std::span<const double> y, double t, std::span<double> out) {
                                   const double ft = time_state(lambda, t).f;
                                   copy_vec(cache->get(-lambda, y, ft).phi, out);
                               });
    p.B = Field::numeric(ShapeKind::Matrix, d, d, n, [cache, lambda, d](std::span<const double> x, double t, std::span<double> out) {
        const Mat B = cache->get(lambda, x, t).B;
        for (int r = 0; r < d; ++r) {
            for (int c = 0; c < d; ++c) out[static_cast<std::size_t>(r * d + c)] = B(r, c);
        }
    });
    p.h = Field::numeric(ShapeKind::Vector, d, 1, n, [cache, lambda](std::span<const double> x, double t, std::span<double> out) {
        copy_vec(cache->get(lambda, x, t).h, out);
    });
    return StochTransformation(std::move(p));
}

std::string flow_csv_header(int n, int d) {
    std::string s = "lambda";
    for (int i = 1; i <= n; ++i) s += ",x" + std::to_string(i);
    s += ",t";
    for (int i = 1; i <= n; ++i) s += ",phi" + std::to_string(i);
    s += ",f,f_prime";
    for (int r = 1; r <= d; ++r) {
        for (int c = 1; c <= d; ++c) s += ",B" + std::to_string(r) + std::to_string(c);
    }
    for (int i = 1; i <= d; ++i) s += ",h" + std::to_string(i);
    return s;
}

std::string flow_csv_row(const FlowState& s, std::span<const double> x, double t) {
    std::string out;
    char buf[32];
    auto put = [&](double v, bool first = false) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        if (!first) out += ',';
        out += buf;
    };
    put(s.lambda, true);
    for (double v : x) put(v);
    put(t);
    for (Eigen::Index i = 0; i < s.phi.size(); ++i) put(s.phi(i));
    put(s.f);
    put(s.f_prime);
    for (Eigen::Index r = 0; r < s.B.rows(); ++r) {
        for (Eigen::Index c = 0; c < s.B.cols(); ++c) put(s.B(r, c));
    }
    for (Eigen::Index i = 0; i < s.h.size(); ++i) put(s.h(i));
    return out;
}

}  // namespace sdesym
