#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmcast/error.hpp"
#include "llmcast/nelder_mead.hpp"

namespace llmcast {

/// ARMA(1,1) mean with GARCH(1,1) conditional variance:
///   r_t = c + phi r_{t-1} + theta e_{t-1} + e_t
///   h_t = omega + alpha e_{t-1}^2 + beta h_{t-1}
struct ArmaGarchParams {
    double c = 0.0;
    double phi = 0.0;
    double theta = 0.0;
    double omega = 0.1;
    double alpha = 0.05;
    double beta = 0.9;

    [[nodiscard]] bool valid() const {
        return std::isfinite(c) && std::isfinite(theta) && omega > 0.0 && std::isfinite(omega) && alpha >= 0.0 &&
               beta >= 0.0 && alpha + beta < 1.0 && std::abs(phi) < 1.0;
    }

    void validate() const {
        if (!valid()) {
            throw PreconditionError("ArmaGarchParams violate omega>0, alpha,beta>=0, alpha+beta<1, |phi|<1");
        }
    }

    [[nodiscard]] double unconditional_variance() const { return omega / (1.0 - alpha - beta); }
};

inline nlohmann::json to_json(const ArmaGarchParams& p) {
    return {{"c", p.c}, {"phi", p.phi}, {"theta", p.theta}, {"omega", p.omega}, {"alpha", p.alpha}, {"beta", p.beta}};
}

inline ArmaGarchParams arma_garch_params_from_json(const nlohmann::json& j) {
    ArmaGarchParams p{j.at("c").get<double>(),     j.at("phi").get<double>(),   j.at("theta").get<double>(),
                      j.at("omega").get<double>(), j.at("alpha").get<double>(), j.at("beta").get<double>()};
    p.validate();
    return p;
}

/// Filter state after the last observation; input to the one-step forecast.
struct ArmaGarchState {
    double last_return = 0.0;
    double last_residual = 0.0;
    double last_variance = 0.0;
};

struct ArmaGarchForecast {
    double mean = 0.0;
    double variance = 0.0;
};

namespace detail {

inline double sample_mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

inline double sample_variance(std::span<const double> x) {
    const double m = sample_mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return ss / static_cast<double>(x.size() - 1);
}

/// Runs the recursion; returns NaN on a non-finite intermediate. Pre-sample
/// values: r_0 = sample mean, e_0 = 0, h_0 = sample variance.
inline double filter_loglik(std::span<const double> r, const ArmaGarchParams& p, ArmaGarchState* state) {
    constexpr double kLog2Pi = 1.8378770664093454836;
    double r_prev = sample_mean(r);
    double e_prev = 0.0;
    double h_prev = sample_variance(r);
    double ll = 0.0;
    for (double rt : r) {
        const double h = p.omega + p.alpha * e_prev * e_prev + p.beta * h_prev;
        const double e = rt - p.c - p.phi * r_prev - p.theta * e_prev;
        if (!(h > 0.0) || !std::isfinite(h) || !std::isfinite(e)) return std::numeric_limits<double>::quiet_NaN();
        ll -= 0.5 * (kLog2Pi + std::log(h) + e * e / h);
        r_prev = rt;
        e_prev = e;
        h_prev = h;
    }
    if (state != nullptr) *state = {r_prev, e_prev, h_prev};
    return ll;
}

}  // namespace detail

/// Gaussian quasi log-likelihood of `returns` under `params`.
inline double arma_garch_loglik(std::span<const double> returns, const ArmaGarchParams& params) {
    if (returns.size() < 10) throw PreconditionError("arma_garch_loglik: need at least 10 returns");
    params.validate();
    const double ll = detail::filter_loglik(returns, params, nullptr);
    if (!std::isfinite(ll)) throw NumericalError("arma_garch_loglik: non-finite intermediate");
    return ll;
}

/// Final filter state (last return, residual, conditional variance).
inline ArmaGarchState arma_garch_filter(std::span<const double> returns, const ArmaGarchParams& params) {
    if (returns.size() < 2) throw PreconditionError("arma_garch_filter: need at least 2 returns");
    params.validate();
    ArmaGarchState s;
    if (!std::isfinite(detail::filter_loglik(returns, params, &s))) {
        throw NumericalError("arma_garch_filter: non-finite intermediate");
    }
    return s;
}

inline ArmaGarchForecast arma_garch_forecast(const ArmaGarchParams& p, const ArmaGarchState& s) {
    p.validate();
    return {p.c + p.phi * s.last_return + p.theta * s.last_residual,
            p.omega + p.alpha * s.last_residual * s.last_residual + p.beta * s.last_variance};
}

/// Expected conditional variance k = 1..steps ahead; tends to omega/(1-alpha-beta).
inline std::vector<double> arma_garch_variance_path(const ArmaGarchParams& p, const ArmaGarchState& s, int steps) {
    std::vector<double> out;
    double h = arma_garch_forecast(p, s).variance;
    for (int k = 0; k < steps; ++k) {
        out.push_back(h);
        h = p.omega + (p.alpha + p.beta) * h;
    }
    return out;
}

struct FitReport {
    ArmaGarchParams params;
    double log_likelihood = -std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    std::vector<ArmaGarchParams> starts;  // the fixed multi-start seed points
};

/// Unconstrained coordinates: omega = exp(u3), phi = tanh(u1),
/// alpha + beta = logistic(u4), alpha share = logistic(u5).
struct ArmaGarchTransform {
    static double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
    static double logit(double p) { return std::log(p / (1.0 - p)); }

    static ArmaGarchParams to_params(const std::vector<double>& u) {
        const double persistence = logistic(u[4]);
        const double share = logistic(u[5]);
        return {u[0], std::tanh(u[1]), u[2], std::exp(u[3]), persistence * share, persistence * (1.0 - share)};
    }

    static std::vector<double> from_params(const ArmaGarchParams& p) {
        const double persistence = p.alpha + p.beta;
        return {p.c, std::atanh(p.phi), p.theta, std::log(p.omega), logit(persistence), logit(p.alpha / persistence)};
    }
};

/// Maximizes the quasi-likelihood by Nelder-Mead from three fixed starts,
/// each followed by one restart at its optimum.
inline FitReport arma_garch_fit(std::span<const double> returns, const NelderMeadOptions& options = {}) {
    if (returns.size() < 50) throw PreconditionError("arma_garch_fit: need at least 50 returns");
    const double mean = detail::sample_mean(returns);
    const double var = detail::sample_variance(returns);
    if (!(var > 0.0)) throw NumericalError("arma_garch_fit: zero-variance returns");

    FitReport report;
    report.starts = {
        {mean, 0.0, 0.0, 0.10 * var, 0.05, 0.85},
        {mean, 0.2, -0.1, 0.05 * var, 0.10, 0.85},
        {mean, -0.2, 0.2, 0.30 * var, 0.20, 0.50},
    };

    auto objective = [&](const std::vector<double>& u) {
        const ArmaGarchParams p = ArmaGarchTransform::to_params(u);
        if (!p.valid()) return std::numeric_limits<double>::infinity();
        const double ll = detail::filter_loglik(returns, p, nullptr);
        return std::isfinite(ll) ? -ll : std::numeric_limits<double>::infinity();
    };

    for (const auto& start : report.starts) {
        auto res = nelder_mead(objective, ArmaGarchTransform::from_params(start), options);
        report.iterations += res.iterations;
        if (!std::isfinite(res.value)) continue;
        auto polish = nelder_mead(objective, res.x, options);
        report.iterations += polish.iterations;
        if (polish.value <= res.value) res = std::move(polish);
        if (-res.value > report.log_likelihood) {
            report.log_likelihood = -res.value;
            report.params = ArmaGarchTransform::to_params(res.x);
            report.converged = res.converged;
        }
    }
    if (!std::isfinite(report.log_likelihood)) {
        throw NumericalError("arma_garch_fit: no start produced a finite likelihood");
    }
    return report;
}

/// Simulates n observations (after `burn_in` discarded draws) with Gaussian innovations.
inline std::vector<double> simulate_arma_garch(const ArmaGarchParams& p, std::size_t n, std::uint64_t seed,
                                               std::size_t burn_in = 500) {
    p.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    double r_prev = p.c / (1.0 - p.phi);
    double e_prev = 0.0;
    double h_prev = p.unconditional_variance();
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t t = 0; t < n + burn_in; ++t) {
        const double h = p.omega + p.alpha * e_prev * e_prev + p.beta * h_prev;
        const double e = std::sqrt(h) * z(rng);
        const double r = p.c + p.phi * r_prev + p.theta * e_prev + e;
        if (t >= burn_in) out.push_back(r);
        r_prev = r;
        e_prev = e;
        h_prev = h;
    }
    return out;
}

}  // namespace llmcast
