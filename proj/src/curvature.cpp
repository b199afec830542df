#include "nete/curvature.hpp"

#include <cmath>

#include "nete/error.hpp"
#include "nete/rng.hpp"

namespace nete::curvature {

namespace {

double checked_eval(const AnalyticFunction& f, std::span<const double> x, const char* what, std::size_t draw) {
    const double v = f.eval(x);
    if (!std::isfinite(v))
        throw Error(f.name + " returned a non-finite value at " + what + " (draw " + std::to_string(draw) + ")");
    return v;
}

void check_point(const AnalyticFunction& f, std::span<const double> x) {
    if (!f.eval) throw InvalidArgument("analytic function has no evaluator");
    if (x.size() != f.dim)
        throw InvalidArgument("point has dimension " + std::to_string(x.size()) + ", function expects " +
                              std::to_string(f.dim));
}

void fill_noise(Rng& rng, Noise noise, Vector& z) {
    for (auto& v : z) v = noise == Noise::rademacher ? rng.rademacher() : rng.gaussian();
}

double hutchinson_draw(const AnalyticFunction& f, std::span<const double> x, double fx, double h,
                       std::uint64_t seed, std::size_t i, Noise noise, Vector& z, Vector& plus, Vector& minus) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(i));
    fill_noise(rng, noise, z);
    for (std::size_t d = 0; d < x.size(); ++d) {
        plus[d] = x[d] + h * z[d];
        minus[d] = x[d] - h * z[d];
    }
    const double fp = checked_eval(f, plus, "x + h z", i);
    const double fm = checked_eval(f, minus, "x - h z", i);
    return (fp + fm - 2.0 * fx) / (h * h);
}

double shifted_draw(const AnalyticFunction& f, std::span<const double> x, std::uint64_t seed, std::size_t i,
                    Noise noise, Vector& z, Vector& shifted) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(i));
    fill_noise(rng, noise, z);
    for (std::size_t d = 0; d < x.size(); ++d) shifted[d] = x[d] + z[d];
    return checked_eval(f, shifted, "x + z", i);
}

struct MeanSe {
    double mean;
    double se;
};

// Index-ordered reduction shared by the parallel and serial paths.
MeanSe mean_and_se(const Vector& draws) {
    const auto m = static_cast<double>(draws.size());
    double sum = 0.0;
    for (double v : draws) sum += v;
    const double mean = sum / m;
    double ss = 0.0;
    for (double v : draws) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (m - 1.0)) / std::sqrt(m)};
}

void check_args(std::size_t m, double h) {
    if (m < 2) throw InvalidArgument("need at least two Monte-Carlo draws");
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("finite-difference step must be > 0");
}

IdentityReport finish_identity(const AnalyticFunction& f, std::span<const double> x, double fx,
                               const Vector& draws) {
    const auto stats = mean_and_se(draws);
    IdentityReport r;
    r.lhs = fx - stats.mean;
    r.rhs = -fd_trace(f, x, default_fd_step) / 2.0;
    r.abs_gap = std::abs(r.lhs - r.rhs);
    r.std_err = stats.se;
    return r;
}

}  // namespace

TraceEstimate hutchinson_trace(const AnalyticFunction& f, std::span<const double> x, std::size_t m, double h,
                               std::uint64_t seed, Noise noise) {
    check_point(f, x);
    check_args(m, h);
    const double fx = checked_eval(f, x, "x", 0);
    Vector draws(m);
    std::string failure;
    const auto n = static_cast<std::int64_t>(m);
#pragma omp parallel
    {
        Vector z(x.size()), plus(x.size()), minus(x.size());
#pragma omp for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) {
            try {
                draws[i] = hutchinson_draw(f, x, fx, h, seed, static_cast<std::size_t>(i), noise, z, plus, minus);
            } catch (const std::exception& e) {
#pragma omp critical(nete_curvature_failure)
                if (failure.empty()) failure = e.what();
            }
        }
    }
    if (!failure.empty()) throw Error(failure);
    const auto stats = mean_and_se(draws);
    return {stats.mean, m, stats.se};
}

double fd_trace(const AnalyticFunction& f, std::span<const double> x, double h) {
    check_point(f, x);
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("finite-difference step must be > 0");
    const double fx = checked_eval(f, x, "x", 0);
    Vector p(x.begin(), x.end());
    double trace = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
        p[d] = x[d] + h;
        const double fp = checked_eval(f, p, "x + h e_i", d);
        p[d] = x[d] - h;
        const double fm = checked_eval(f, p, "x - h e_i", d);
        p[d] = x[d];
        trace += (fp + fm - 2.0 * fx) / (h * h);
    }
    return trace;
}

IdentityReport identity_check(const AnalyticFunction& f, std::span<const double> x, std::size_t m,
                              std::uint64_t seed, Noise noise) {
    check_point(f, x);
    check_args(m, 1.0);
    const double fx = checked_eval(f, x, "x", 0);
    Vector draws(m);
    std::string failure;
    const auto n = static_cast<std::int64_t>(m);
#pragma omp parallel
    {
        Vector z(x.size()), shifted(x.size());
#pragma omp for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) {
            try {
                draws[i] = shifted_draw(f, x, seed, static_cast<std::size_t>(i), noise, z, shifted);
            } catch (const std::exception& e) {
#pragma omp critical(nete_curvature_failure)
                if (failure.empty()) failure = e.what();
            }
        }
    }
    if (!failure.empty()) throw Error(failure);
    return finish_identity(f, x, fx, draws);
}

namespace serial {

TraceEstimate hutchinson_trace(const AnalyticFunction& f, std::span<const double> x, std::size_t m, double h,
                               std::uint64_t seed, Noise noise) {
    check_point(f, x);
    check_args(m, h);
    const double fx = checked_eval(f, x, "x", 0);
    Vector draws(m), z(x.size()), plus(x.size()), minus(x.size());
    for (std::size_t i = 0; i < m; ++i) draws[i] = hutchinson_draw(f, x, fx, h, seed, i, noise, z, plus, minus);
    const auto stats = mean_and_se(draws);
    return {stats.mean, m, stats.se};
}

IdentityReport identity_check(const AnalyticFunction& f, std::span<const double> x, std::size_t m,
                              std::uint64_t seed, Noise noise) {
    check_point(f, x);
    check_args(m, 1.0);
    const double fx = checked_eval(f, x, "x", 0);
    Vector draws(m), z(x.size()), shifted(x.size());
    for (std::size_t i = 0; i < m; ++i) draws[i] = shifted_draw(f, x, seed, i, noise, z, shifted);
    return finish_identity(f, x, fx, draws);
}

}  // namespace serial

AnalyticFunction constant_function(std::size_t dim, double value) {
    return {"constant", dim, [value](std::span<const double>) { return value; },
            [](std::span<const double>) { return 0.0; }};
}

AnalyticFunction linear_function(Vector coefficients, double offset) {
    const std::size_t dim = coefficients.size();
    return {"linear", dim,
            [c = std::move(coefficients), offset](std::span<const double> x) {
                double s = offset;
                for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * x[i];
                return s;
            },
            [](std::span<const double>) { return 0.0; }};
}

AnalyticFunction diagonal_quadratic(Vector a, double scale) {
    double trace = 0.0;
    for (double v : a) trace += v;
    trace *= scale;
    const std::size_t dim = a.size();
    return {"diagonal_quadratic", dim,
            [a = std::move(a), scale](std::span<const double> x) {
                double s = 0.0;
                for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * x[i] * x[i];
                return scale * 0.5 * s;
            },
            [trace](std::span<const double>) { return trace; }};
}

AnalyticFunction bilinear_function(std::size_t dim) {
    if (dim < 2) throw InvalidArgument("bilinear function needs dim >= 2");
    return {"bilinear", dim, [](std::span<const double> x) { return x[0] * x[1]; },
            [](std::span<const double>) { return 0.0; }};
}

AnalyticFunction cosine_sum(std::size_t dim) {
    return {"cosine_sum", dim,
            [](std::span<const double> x) {
                double s = 0.0;
                for (double v : x) s += std::cos(v);
                return s;
            },
            [](std::span<const double> x) {
                double s = 0.0;
                for (double v : x) s -= std::cos(v);
                return s;
            }};
}

}  // namespace nete::curvature
