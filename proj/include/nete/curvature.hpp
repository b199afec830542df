#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

// Estimators behind the curvature reading of the perturbation discrepancy:
// Hutchinson's trace estimator with central second differences, a
// per-coordinate finite-difference trace, and the check that
// f(x) - E_z f(x + z) approaches -tr(H_f(x)) / 2 for unit-variance z.
namespace nete::curvature {

using Vector = std::vector<double>;
using ScalarField = std::function<double(std::span<const double>)>;

struct AnalyticFunction {
    std::string name;
    std::size_t dim = 0;
    ScalarField eval;
    // Exact Hessian trace, known for oracle functions only.
    std::optional<ScalarField> hessian_trace_at;
};

enum class Noise { rademacher, gaussian };

struct TraceEstimate {
    double value = 0.0;
    std::size_t num_samples = 0;
    double standard_error = 0.0;
};

struct IdentityReport {
    double lhs = 0.0;      // f(x) - mean of f(x + z)
    double rhs = 0.0;      // -fd_trace(f, x, 1e-3) / 2
    double abs_gap = 0.0;
    double std_err = 0.0;  // standard error of lhs

    bool within(double num_std_errors) const noexcept { return abs_gap <= num_std_errors * std_err; }
};

inline constexpr double default_fd_step = 1e-3;

// Mean over m draws of (f(x + h z) + f(x - h z) - 2 f(x)) / h^2. Draw i uses
// the substream (seed, i), so the result does not depend on thread count.
TraceEstimate hutchinson_trace(const AnalyticFunction& f, std::span<const double> x, std::size_t m, double h,
                               std::uint64_t seed, Noise noise = Noise::rademacher);

// Sum over coordinates of central second differences.
double fd_trace(const AnalyticFunction& f, std::span<const double> x, double h = default_fd_step);

IdentityReport identity_check(const AnalyticFunction& f, std::span<const double> x, std::size_t m,
                              std::uint64_t seed, Noise noise = Noise::gaussian);

namespace serial {

TraceEstimate hutchinson_trace(const AnalyticFunction& f, std::span<const double> x, std::size_t m, double h,
                               std::uint64_t seed, Noise noise = Noise::rademacher);
IdentityReport identity_check(const AnalyticFunction& f, std::span<const double> x, std::size_t m,
                              std::uint64_t seed, Noise noise = Noise::gaussian);

}  // namespace serial

// Oracle functions with closed-form traces.
AnalyticFunction constant_function(std::size_t dim, double value);
AnalyticFunction linear_function(Vector coefficients, double offset = 0.0);
// scale * 0.5 * sum a_i x_i^2; trace = scale * sum a_i.
AnalyticFunction diagonal_quadratic(Vector a, double scale = 1.0);
// x_0 * x_1 (traceless); dim >= 2.
AnalyticFunction bilinear_function(std::size_t dim);
// sum cos(x_i); trace = -sum cos(x_i).
AnalyticFunction cosine_sum(std::size_t dim);

}  // namespace nete::curvature
