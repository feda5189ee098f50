#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "overlap/gamma.hpp"
#include "overlap/quadrature.hpp"
#include "overlap/rng.hpp"

namespace overlap {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Standard normal helpers
// ---------------------------------------------------------------------------

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) * 0.3989422804014326779;
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.70710678118654752440);
}

/// Inverse standard normal cdf (Acklam's rational approximation with one
/// Halley refinement; accurate to ~1e-15 over (0,1)).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("normal_quantile: p must lie in (0,1)");
    static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                    -2.759285104469687e+02, 1.383577518672690e+02,
                                    -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                    -1.556989798598866e+02, 6.680131188771972e+01,
                                    -1.328068155288572e+01};
    static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                    -2.400758277161838e+00, -2.549732539343734e+00,
                                    4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                    2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // One Halley step against the exact cdf.
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

// ---------------------------------------------------------------------------
// Distribution specifications
// ---------------------------------------------------------------------------

struct Exponential {
    double rate;
};

struct Erlang {
    int shape;
    double rate;
};

struct Gamma {
    double shape;
    double rate;
};

struct Deterministic {
    double value;
};

struct DeterministicMixture {
    std::vector<double> weights;
    std::vector<double> values;
};

struct Uniform {
    double a;
    double b;
};

struct TruncatedNormal {
    double a;
    double b;
    double location;
    double scale;
};

/// Lognormal parameterized by its target mean and variance; the log-space
/// location and scale are solved analytically.
struct LogNormal {
    double mean;
    double variance;
    double sigma_log() const { return std::sqrt(std::log1p(variance / (mean * mean))); }
    double mu_log() const {
        const double s2 = std::log1p(variance / (mean * mean));
        return std::log(mean) - 0.5 * s2;
    }
};

struct HyperExponential {
    std::vector<double> weights;
    std::vector<double> rates;
};

using DistSpec = std::variant<Exponential, Erlang, Gamma, Deterministic,
                              DeterministicMixture, Uniform, TruncatedNormal,
                              LogNormal, HyperExponential>;

namespace detail {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

inline void check_weights(const std::vector<double>& w, std::size_t other_size,
                          const char* who) {
    if (w.empty() || w.size() != other_size)
        throw std::invalid_argument(std::string(who) + ": weights/values size mismatch");
    double sum = 0.0;
    for (double x : w) {
        if (!(x >= 0.0)) throw std::invalid_argument(std::string(who) + ": negative weight");
        sum += x;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
        throw std::invalid_argument(std::string(who) + ": weights must sum to 1");
}

inline std::size_t pick_index(const std::vector<double>& weights, double u) {
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < weights.size(); ++j) {
        acc += weights[j];
        if (u <= acc) return j;
    }
    return weights.size() - 1;
}

struct TruncNormMoments {
    double alpha, beta, z, phi_a, phi_b;
};

inline TruncNormMoments trunc_norm_terms(const TruncatedNormal& tn) {
    TruncNormMoments m;
    m.alpha = (tn.a - tn.location) / tn.scale;
    m.beta = (tn.b - tn.location) / tn.scale;
    m.z = normal_cdf(m.beta) - normal_cdf(m.alpha);
    m.phi_a = normal_pdf(m.alpha);
    m.phi_b = normal_pdf(m.beta);
    return m;
}

}  // namespace detail

inline void validate(const DistSpec& spec) {
    std::visit(detail::Overloaded{
                   [](const Exponential& d) {
                       if (!(d.rate > 0.0)) throw std::invalid_argument("Exponential: rate must be positive");
                   },
                   [](const Erlang& d) {
                       if (d.shape < 1) throw std::invalid_argument("Erlang: shape must be a positive integer");
                       if (!(d.rate > 0.0)) throw std::invalid_argument("Erlang: rate must be positive");
                   },
                   [](const Gamma& d) {
                       if (!(d.shape > 0.0) || !(d.rate > 0.0))
                           throw std::invalid_argument("Gamma: shape and rate must be positive");
                   },
                   [](const Deterministic& d) {
                       if (!(d.value >= 0.0)) throw std::invalid_argument("Deterministic: value must be nonnegative");
                   },
                   [](const DeterministicMixture& d) {
                       detail::check_weights(d.weights, d.values.size(), "DeterministicMixture");
                       for (double v : d.values)
                           if (!(v >= 0.0))
                               throw std::invalid_argument("DeterministicMixture: values must be nonnegative");
                   },
                   [](const Uniform& d) {
                       if (!(d.a >= 0.0) || !(d.b > d.a))
                           throw std::invalid_argument("Uniform: need 0 <= a < b");
                   },
                   [](const TruncatedNormal& d) {
                       if (!(d.a >= 0.0) || !(d.b > d.a))
                           throw std::invalid_argument("TruncatedNormal: need 0 <= a < b");
                       if (!(d.scale > 0.0)) throw std::invalid_argument("TruncatedNormal: scale must be positive");
                       if (detail::trunc_norm_terms(d).z <= 0.0)
                           throw std::invalid_argument("TruncatedNormal: interval has no mass");
                   },
                   [](const LogNormal& d) {
                       if (!(d.mean > 0.0) || !(d.variance > 0.0))
                           throw std::invalid_argument("LogNormal: mean and variance must be positive");
                   },
                   [](const HyperExponential& d) {
                       detail::check_weights(d.weights, d.rates.size(), "HyperExponential");
                       for (double r : d.rates)
                           if (!(r > 0.0)) throw std::invalid_argument("HyperExponential: rates must be positive");
                   }},
               spec);
}

inline double mean(const DistSpec& spec) {
    return std::visit(
        detail::Overloaded{
            [](const Exponential& d) { return 1.0 / d.rate; },
            [](const Erlang& d) { return d.shape / d.rate; },
            [](const Gamma& d) { return d.shape / d.rate; },
            [](const Deterministic& d) { return d.value; },
            [](const DeterministicMixture& d) {
                double m = 0.0;
                for (std::size_t j = 0; j < d.values.size(); ++j) m += d.weights[j] * d.values[j];
                return m;
            },
            [](const Uniform& d) { return 0.5 * (d.a + d.b); },
            [](const TruncatedNormal& d) {
                const auto m = detail::trunc_norm_terms(d);
                return d.location + d.scale * (m.phi_a - m.phi_b) / m.z;
            },
            [](const LogNormal& d) { return d.mean; },
            [](const HyperExponential& d) {
                double m = 0.0;
                for (std::size_t j = 0; j < d.rates.size(); ++j) m += d.weights[j] / d.rates[j];
                return m;
            }},
        spec);
}

inline double variance(const DistSpec& spec) {
    return std::visit(
        detail::Overloaded{
            [](const Exponential& d) { return 1.0 / (d.rate * d.rate); },
            [](const Erlang& d) { return d.shape / (d.rate * d.rate); },
            [](const Gamma& d) { return d.shape / (d.rate * d.rate); },
            [](const Deterministic&) { return 0.0; },
            [](const DeterministicMixture& d) {
                double m = 0.0, m2 = 0.0;
                for (std::size_t j = 0; j < d.values.size(); ++j) {
                    m += d.weights[j] * d.values[j];
                    m2 += d.weights[j] * d.values[j] * d.values[j];
                }
                return m2 - m * m;
            },
            [](const Uniform& d) { return (d.b - d.a) * (d.b - d.a) / 12.0; },
            [](const TruncatedNormal& d) {
                const auto m = detail::trunc_norm_terms(d);
                const double r1 = (m.phi_a - m.phi_b) / m.z;
                const double r2 = (m.alpha * m.phi_a - m.beta * m.phi_b) / m.z;
                return d.scale * d.scale * (1.0 + r2 - r1 * r1);
            },
            [](const LogNormal& d) { return d.variance; },
            [](const HyperExponential& d) {
                double m = 0.0, m2 = 0.0;
                for (std::size_t j = 0; j < d.rates.size(); ++j) {
                    m += d.weights[j] / d.rates[j];
                    m2 += 2.0 * d.weights[j] / (d.rates[j] * d.rates[j]);
                }
                return m2 - m * m;
            }},
        spec);
}

inline double cdf(const DistSpec& spec, double x) {
    return std::visit(
        detail::Overloaded{
            [x](const Exponential& d) { return x <= 0.0 ? 0.0 : -std::expm1(-d.rate * x); },
            [x](const Erlang& d) {
                return x <= 0.0 ? 0.0 : reg_lower_gamma(static_cast<double>(d.shape), d.rate * x);
            },
            [x](const Gamma& d) { return x <= 0.0 ? 0.0 : reg_lower_gamma(d.shape, d.rate * x); },
            [x](const Deterministic& d) { return x >= d.value ? 1.0 : 0.0; },
            [x](const DeterministicMixture& d) {
                double f = 0.0;
                for (std::size_t j = 0; j < d.values.size(); ++j)
                    if (x >= d.values[j]) f += d.weights[j];
                return f;
            },
            [x](const Uniform& d) {
                if (x <= d.a) return 0.0;
                if (x >= d.b) return 1.0;
                return (x - d.a) / (d.b - d.a);
            },
            [x](const TruncatedNormal& d) {
                if (x <= d.a) return 0.0;
                if (x >= d.b) return 1.0;
                const auto m = detail::trunc_norm_terms(d);
                return (normal_cdf((x - d.location) / d.scale) - normal_cdf(m.alpha)) / m.z;
            },
            [x](const LogNormal& d) {
                if (x <= 0.0) return 0.0;
                return normal_cdf((std::log(x) - d.mu_log()) / d.sigma_log());
            },
            [x](const HyperExponential& d) {
                if (x <= 0.0) return 0.0;
                double f = 0.0;
                for (std::size_t j = 0; j < d.rates.size(); ++j)
                    f += d.weights[j] * -std::expm1(-d.rates[j] * x);
                return f;
            }},
        spec);
}

/// Survival function P(S > x); computed directly where that is more accurate
/// than 1 - cdf.
inline double sf(const DistSpec& spec, double x) {
    return std::visit(
        detail::Overloaded{
            [x](const Exponential& d) { return x <= 0.0 ? 1.0 : std::exp(-d.rate * x); },
            [x](const Erlang& d) {
                return x <= 0.0 ? 1.0 : reg_upper_gamma(static_cast<double>(d.shape), d.rate * x);
            },
            [x](const Gamma& d) { return x <= 0.0 ? 1.0 : reg_upper_gamma(d.shape, d.rate * x); },
            [x](const HyperExponential& d) {
                if (x <= 0.0) return 1.0;
                double s = 0.0;
                for (std::size_t j = 0; j < d.rates.size(); ++j)
                    s += d.weights[j] * std::exp(-d.rates[j] * x);
                return s;
            },
            [&spec, x](const auto&) { return 1.0 - cdf(spec, x); }},
        spec);
}

/// Density of the continuous part (zero for the atom-only variants).
inline double pdf(const DistSpec& spec, double x) {
    return std::visit(
        detail::Overloaded{
            [x](const Exponential& d) { return x < 0.0 ? 0.0 : d.rate * std::exp(-d.rate * x); },
            [x](const Erlang& d) {
                if (x <= 0.0) return d.shape == 1 && x == 0.0 ? d.rate : 0.0;
                const double a = static_cast<double>(d.shape);
                return std::exp(a * std::log(d.rate) + (a - 1.0) * std::log(x) - d.rate * x -
                                std::lgamma(a));
            },
            [x](const Gamma& d) {
                if (x <= 0.0) return 0.0;
                return std::exp(d.shape * std::log(d.rate) + (d.shape - 1.0) * std::log(x) -
                                d.rate * x - std::lgamma(d.shape));
            },
            [](const Deterministic&) { return 0.0; },
            [](const DeterministicMixture&) { return 0.0; },
            [x](const Uniform& d) { return (x >= d.a && x <= d.b) ? 1.0 / (d.b - d.a) : 0.0; },
            [x](const TruncatedNormal& d) {
                if (x < d.a || x > d.b) return 0.0;
                const auto m = detail::trunc_norm_terms(d);
                return normal_pdf((x - d.location) / d.scale) / (d.scale * m.z);
            },
            [x](const LogNormal& d) {
                if (x <= 0.0) return 0.0;
                const double s = d.sigma_log();
                return normal_pdf((std::log(x) - d.mu_log()) / s) / (x * s);
            },
            [x](const HyperExponential& d) {
                if (x < 0.0) return 0.0;
                double f = 0.0;
                for (std::size_t j = 0; j < d.rates.size(); ++j)
                    f += d.weights[j] * d.rates[j] * std::exp(-d.rates[j] * x);
                return f;
            }},
        spec);
}

/// Point masses of the distribution (empty for the continuous variants).
inline std::vector<std::pair<double, double>> atoms(const DistSpec& spec) {
    if (const auto* det = std::get_if<Deterministic>(&spec)) return {{det->value, 1.0}};
    if (const auto* mix = std::get_if<DeterministicMixture>(&spec)) {
        std::vector<std::pair<double, double>> out;
        for (std::size_t j = 0; j < mix->values.size(); ++j)
            out.emplace_back(mix->values[j], mix->weights[j]);
        return out;
    }
    return {};
}

inline bool has_continuous_part(const DistSpec& spec) {
    return !std::holds_alternative<Deterministic>(spec) &&
           !std::holds_alternative<DeterministicMixture>(spec);
}

inline double support_lower(const DistSpec& spec) {
    if (const auto* u = std::get_if<Uniform>(&spec)) return u->a;
    if (const auto* tn = std::get_if<TruncatedNormal>(&spec)) return tn->a;
    if (const auto* det = std::get_if<Deterministic>(&spec)) return det->value;
    if (const auto* mix = std::get_if<DeterministicMixture>(&spec))
        return *std::min_element(mix->values.begin(), mix->values.end());
    return 0.0;
}

/// Smallest x with P(S > x) <= eps (exact upper endpoint for bounded supports).
inline double upper_quantile(const DistSpec& spec, double eps) {
    if (const auto* u = std::get_if<Uniform>(&spec)) return u->b;
    if (const auto* tn = std::get_if<TruncatedNormal>(&spec)) return tn->b;
    if (const auto* det = std::get_if<Deterministic>(&spec)) return det->value;
    if (const auto* mix = std::get_if<DeterministicMixture>(&spec))
        return *std::max_element(mix->values.begin(), mix->values.end());
    double hi = std::max(mean(spec), 1.0);
    while (sf(spec, hi) > eps) {
        hi *= 2.0;
        if (hi > 1e300) return hi;
    }
    double lo = 0.0;
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        (sf(spec, mid) > eps ? lo : hi) = mid;
    }
    return hi;
}

/// Points where the density or survival function is non-smooth; used to
/// pre-split quadratures.
inline std::vector<double> density_kinks(const DistSpec& spec) {
    if (const auto* u = std::get_if<Uniform>(&spec)) return {u->a, u->b};
    if (const auto* tn = std::get_if<TruncatedNormal>(&spec)) return {tn->a, tn->b};
    auto at = atoms(spec);
    std::vector<double> out;
    for (const auto& [v, w] : at) {
        (void)w;
        out.push_back(v);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

namespace detail {

inline double sample_gamma(double shape, double rate, RandomStream& rs) {
    if (shape < 1.0) {
        // Boost to shape+1, then scale back by u^{1/shape}.
        const double boost = std::pow(rs.uniform(), 1.0 / shape);
        return sample_gamma(shape + 1.0, rate, rs) * boost;
    }
    // Marsaglia-Tsang squeeze method.
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        const double z = normal_quantile(rs.uniform());
        const double t = 1.0 + c * z;
        if (t <= 0.0) continue;
        const double v = t * t * t;
        const double u = rs.uniform();
        if (u < 1.0 - 0.0331 * z * z * z * z) return d * v / rate;
        if (std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
}

}  // namespace detail

/// One draw from the distribution. Deterministic given the stream position.
inline double sample(const DistSpec& spec, RandomStream& rs) {
    return std::visit(
        detail::Overloaded{
            [&rs](const Exponential& d) { return -std::log(rs.uniform()) / d.rate; },
            [&rs](const Erlang& d) {
                if (d.shape <= 64) {
                    double log_prod = 0.0;
                    for (int i = 0; i < d.shape; ++i) log_prod += std::log(rs.uniform());
                    return -log_prod / d.rate;
                }
                return detail::sample_gamma(static_cast<double>(d.shape), d.rate, rs);
            },
            [&rs](const Gamma& d) { return detail::sample_gamma(d.shape, d.rate, rs); },
            [](const Deterministic& d) { return d.value; },
            [&rs](const DeterministicMixture& d) {
                return d.values[detail::pick_index(d.weights, rs.uniform())];
            },
            [&rs](const Uniform& d) { return d.a + (d.b - d.a) * rs.uniform(); },
            [&rs](const TruncatedNormal& d) {
                const auto m = detail::trunc_norm_terms(d);
                const double lo = normal_cdf(m.alpha);
                const double p = lo + rs.uniform() * m.z;
                const double x = d.location + d.scale * normal_quantile(std::clamp(p, 1e-300, 1.0 - 1e-16));
                return std::clamp(x, d.a, d.b);
            },
            [&rs](const LogNormal& d) {
                return std::exp(d.mu_log() + d.sigma_log() * normal_quantile(rs.uniform()));
            },
            [&rs](const HyperExponential& d) {
                const std::size_t j = detail::pick_index(d.weights, rs.uniform());
                return -std::log(rs.uniform()) / d.rates[j];
            }},
        spec);
}

// ---------------------------------------------------------------------------
// Expectations and survival integrals
// ---------------------------------------------------------------------------

/// E[h(S)] for bounded h: atom sum plus adaptive quadrature of h * pdf over the
/// effective support (truncated where P(S > x) < 1e-14).
inline double expectation(const DistSpec& spec, const std::function<double(double)>& h,
                          double abs_tol = 1e-10) {
    double total = 0.0;
    for (const auto& [v, w] : atoms(spec)) total += w * h(v);
    if (has_continuous_part(spec)) {
        const double lo = support_lower(spec);
        const double hi = upper_quantile(spec, 1e-14);
        auto integrand = [&](double x) { return h(x) * pdf(spec, x); };
        total += integrate_with_kinks(integrand, lo, hi, density_kinks(spec), abs_tol);
    }
    return total;
}

/// Integral of the survival function over [lo, hi] (hi may be +inf). Closed
/// forms where available, kink-aware quadrature otherwise.
inline double integrate_sf(const DistSpec& spec, double lo, double hi,
                           double abs_tol = 1e-10) {
    if (!(hi > lo)) return 0.0;
    if (lo < 0.0) {
        const double below = std::min(hi, 0.0) - lo;
        return below + integrate_sf(spec, 0.0, std::max(hi, 0.0), abs_tol);
    }
    if (const auto* e = std::get_if<Exponential>(&spec)) {
        const double upper = std::isinf(hi) ? 0.0 : std::exp(-e->rate * hi);
        return (std::exp(-e->rate * lo) - upper) / e->rate;
    }
    if (const auto* h = std::get_if<HyperExponential>(&spec)) {
        double s = 0.0;
        for (std::size_t j = 0; j < h->rates.size(); ++j) {
            const double upper = std::isinf(hi) ? 0.0 : std::exp(-h->rates[j] * hi);
            s += h->weights[j] * (std::exp(-h->rates[j] * lo) - upper) / h->rates[j];
        }
        return s;
    }
    if (const auto* det = std::get_if<Deterministic>(&spec))
        return std::max(0.0, std::min(hi, det->value) - std::min(lo, det->value));
    if (const auto* mix = std::get_if<DeterministicMixture>(&spec)) {
        double s = 0.0;
        for (std::size_t j = 0; j < mix->values.size(); ++j)
            s += mix->weights[j] *
                 std::max(0.0, std::min(hi, mix->values[j]) - std::min(lo, mix->values[j]));
        return s;
    }
    if (const auto* u = std::get_if<Uniform>(&spec)) {
        // sf is 1 on [0,a], linear on [a,b], 0 beyond.
        auto anti = [&](double x) {
            if (x <= u->a) return x;
            if (x >= u->b) return u->a + 0.5 * (u->b - u->a);
            const double t = x - u->a;
            return u->a + t - 0.5 * t * t / (u->b - u->a);
        };
        return anti(std::min(hi, u->b)) - anti(std::min(lo, u->b));
    }
    auto gamma_mean_excess = [](double shape, double rate, double x) {
        if (x <= 0.0) return shape / rate;
        return (shape / rate) * reg_upper_gamma(shape + 1.0, rate * x) -
               x * reg_upper_gamma(shape, rate * x);
    };
    if (const auto* g = std::get_if<Gamma>(&spec)) {
        const double upper = std::isinf(hi) ? 0.0 : gamma_mean_excess(g->shape, g->rate, hi);
        return gamma_mean_excess(g->shape, g->rate, lo) - upper;
    }
    if (const auto* er = std::get_if<Erlang>(&spec)) {
        const double a = static_cast<double>(er->shape);
        const double upper = std::isinf(hi) ? 0.0 : gamma_mean_excess(a, er->rate, hi);
        return gamma_mean_excess(a, er->rate, lo) - upper;
    }
    const double cap = std::isinf(hi) ? upper_quantile(spec, 1e-15) : hi;
    if (!(cap > lo)) return 0.0;
    return integrate_with_kinks([&](double x) { return sf(spec, x); }, lo, cap,
                                density_kinks(spec), abs_tol);
}

/// E[(S - delta)^+].
inline double mean_excess(const DistSpec& spec, double delta) {
    if (delta < 0.0) throw std::domain_error("mean_excess: delta must be nonnegative");
    return integrate_sf(spec, delta, kInf);
}

/// E[((S - delta)^+)^2] = 2 * integral of (u - delta) * sf(u) over [delta, inf).
inline double second_moment_excess(const DistSpec& spec, double delta) {
    if (delta < 0.0) throw std::domain_error("second_moment_excess: delta must be nonnegative");
    if (const auto* e = std::get_if<Exponential>(&spec))
        return 2.0 * std::exp(-e->rate * delta) / (e->rate * e->rate);
    const double cap = upper_quantile(spec, 1e-15);
    if (!(cap > delta)) return 0.0;
    return 2.0 * integrate_with_kinks(
                     [&](double u) { return (u - delta) * sf(spec, u); }, delta, cap,
                     density_kinks(spec), 1e-10);
}

/// Stationary-excess cdf G_e(t) = (1/E[S]) * integral of sf over [0,t].
inline double excess_cdf(const DistSpec& spec, double t) {
    if (t < 0.0) throw std::domain_error("excess_cdf: t must be nonnegative");
    if (t == 0.0) return 0.0;
    const double m = mean(spec);
    if (!(m > 0.0)) throw std::domain_error("excess_cdf: distribution mean must be positive");
    return std::min(1.0, integrate_sf(spec, 0.0, t) / m);
}

// ---------------------------------------------------------------------------
// Law of Exp(mu) minus Erlang(k, lambda)
// ---------------------------------------------------------------------------

enum class DiffBranch {
    kDensity,     // z > 0: a genuine probability density value
    kCumulative,  // z <= 0: the printed expression, which evaluates as a cumulative value
};

struct DiffLawValue {
    double value;
    DiffBranch branch;
};

/// Mass of the positive part: P(Exp(mu) - Erlang(k,lambda) > 0).
inline double exp_minus_erlang_positive_mass(double mu, int k, double lambda) {
    if (!(mu > 0.0) || !(lambda > 0.0)) throw std::domain_error("exp_minus_erlang: rates must be positive");
    if (k < 1) throw std::domain_error("exp_minus_erlang: k must be >= 1");
    return std::pow(lambda / (lambda + mu), k);
}

/// Two-branch law of Z = Exp(mu) - Erlang(k,lambda). For z > 0 this is the
/// density mu * (lambda/(lambda+mu))^k * exp(-mu z). For z <= 0 it returns the
/// source expression verbatim, tagged kCumulative: the "1 - ..." form evaluates
/// to a probability (e.g. 1/2 at z = 0 when lambda = mu), not a density.
inline DiffLawValue exp_minus_erlang_law(double mu, int k, double lambda, double z) {
    if (!(mu > 0.0) || !(lambda > 0.0)) throw std::domain_error("exp_minus_erlang_law: rates must be positive");
    if (k < 1) throw std::domain_error("exp_minus_erlang_law: k must be >= 1");
    const double coeff = mu * std::pow(lambda / (lambda + mu), k);
    if (z > 0.0) return {coeff * std::exp(-mu * z), DiffBranch::kDensity};
    double series = 0.0;
    double term = 1.0;
    for (int j = 0; j < k; ++j) {
        series += term;
        term *= (lambda + mu) * z / static_cast<double>(j + 1);
    }
    return {1.0 - coeff * std::exp(-lambda * z) * series, DiffBranch::kCumulative};
}

// ---------------------------------------------------------------------------
// k-fold convolution cdf
// ---------------------------------------------------------------------------

namespace detail {

inline double irwin_hall_cdf(int k, double y) {
    if (y <= 0.0) return 0.0;
    if (y >= static_cast<double>(k)) return 1.0;
    // (1/k!) * sum_j (-1)^j C(k,j) (y-j)^k; stable for the k <= 12 in use here.
    double sum = 0.0;
    double binom = 1.0;
    for (int j = 0; j <= static_cast<int>(y); ++j) {
        const double term = binom * std::pow(y - j, k);
        sum += (j % 2 == 0) ? term : -term;
        binom *= static_cast<double>(k - j) / static_cast<double>(j + 1);
    }
    double kfact = 1.0;
    for (int i = 2; i <= k; ++i) kfact *= i;
    return std::clamp(sum / kfact, 0.0, 1.0);
}

inline void mixture_fold_enumerate(const DeterministicMixture& mix, std::size_t from,
                                   int remaining, double value, double log_prob_coeff,
                                   std::vector<std::pair<double, double>>& out) {
    if (from + 1 == mix.values.size()) {
        const double lp = log_prob_coeff + remaining * std::log(std::max(mix.weights[from], 1e-300)) -
                          std::lgamma(remaining + 1.0);
        out.emplace_back(value + remaining * mix.values[from], std::exp(lp));
        return;
    }
    for (int n = 0; n <= remaining; ++n) {
        const double lp = log_prob_coeff + n * std::log(std::max(mix.weights[from], 1e-300)) -
                          std::lgamma(n + 1.0);
        mixture_fold_enumerate(mix, from + 1, remaining - n, value + n * mix.values[from], lp,
                               out);
    }
}

inline double kfold_numeric(const DistSpec& spec, int m, double x) {
    if (m == 1) return cdf(spec, x);
    const double lo = support_lower(spec);
    if (x <= m * lo) return 0.0;
    const double hi = std::min(upper_quantile(spec, 1e-13), x - (m - 1) * lo);
    if (!(hi > lo)) return 0.0;
    auto integrand = [&](double u) { return pdf(spec, u) * kfold_numeric(spec, m - 1, x - u); };
    return std::min(1.0, integrate_with_kinks(integrand, lo, hi, density_kinks(spec), 1e-9));
}

}  // namespace detail

/// F^{(k)}(x): cdf of the sum of k i.i.d. draws. Closed forms for the
/// exponential/gamma family, deterministic values, and uniform sums (k <= 12);
/// recursive quadrature otherwise at a documented tolerance of 1e-8.
inline double kfold_convolution_cdf(const DistSpec& spec, int k, double x) {
    if (k < 1) throw std::domain_error("kfold_convolution_cdf: k must be >= 1");
    validate(spec);
    if (k == 1) return cdf(spec, x);
    if (const auto* e = std::get_if<Exponential>(&spec))
        return x <= 0.0 ? 0.0 : reg_lower_gamma(static_cast<double>(k), e->rate * x);
    if (const auto* er = std::get_if<Erlang>(&spec))
        return x <= 0.0 ? 0.0
                        : reg_lower_gamma(static_cast<double>(k) * er->shape, er->rate * x);
    if (const auto* g = std::get_if<Gamma>(&spec))
        return x <= 0.0 ? 0.0 : reg_lower_gamma(k * g->shape, g->rate * x);
    if (const auto* det = std::get_if<Deterministic>(&spec))
        return x >= k * det->value ? 1.0 : 0.0;
    if (const auto* mix = std::get_if<DeterministicMixture>(&spec)) {
        std::vector<std::pair<double, double>> sums;
        detail::mixture_fold_enumerate(*mix, 0, k, 0.0, std::lgamma(k + 1.0), sums);
        double f = 0.0;
        for (const auto& [v, p] : sums)
            if (v <= x) f += p;
        return std::min(f, 1.0);
    }
    if (const auto* u = std::get_if<Uniform>(&spec); u != nullptr && k <= 12)
        return detail::irwin_hall_cdf(k, (x - k * u->a) / (u->b - u->a));
    return detail::kfold_numeric(spec, k, x);
}

}  // namespace overlap
