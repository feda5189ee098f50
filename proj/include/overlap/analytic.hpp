#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "overlap/dist.hpp"
#include "overlap/gamma.hpp"

namespace overlap {

// ---------------------------------------------------------------------------
// Parameter and carrier types
// ---------------------------------------------------------------------------

struct MMParams {
    double lambda;
    double mu;
    double rho() const { return lambda / (lambda + mu); }
    void validate() const {
        if (!(lambda > 0.0) || !(mu > 0.0))
            throw std::invalid_argument("MMParams: lambda and mu must be positive");
    }
};

/// Piecewise-constant arrival-rate profile. The last piece extends beyond the
/// final breakpoint; `horizon`, when set, bounds the domain of transient
/// queue-length queries.
struct RateProfile {
    std::vector<double> breaks;  // starts at 0, strictly increasing
    std::vector<double> rates;   // rate on [breaks[i], breaks[i+1])
    std::optional<double> horizon;

    static RateProfile constant(double rate) { return RateProfile{{0.0}, {rate}, {}}; }

    void validate() const {
        if (breaks.empty() || breaks.size() != rates.size())
            throw std::invalid_argument("RateProfile: breaks/rates size mismatch");
        if (breaks.front() != 0.0) throw std::invalid_argument("RateProfile: first break must be 0");
        for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
            if (!(breaks[i] < breaks[i + 1]))
                throw std::invalid_argument("RateProfile: breaks must be strictly increasing");
        for (double r : rates)
            if (!(r >= 0.0)) throw std::invalid_argument("RateProfile: rates must be nonnegative");
        if (horizon && !(*horizon > 0.0))
            throw std::invalid_argument("RateProfile: horizon must be positive");
    }

    double rate_at(double t) const {
        if (t < 0.0) return 0.0;
        std::size_t i = breaks.size() - 1;
        while (i > 0 && breaks[i] > t) --i;
        return rates[i];
    }

    double max_rate() const { return *std::max_element(rates.begin(), rates.end()); }

    /// Exact integral of the rate over [t0, t1] (rate is 0 before time 0).
    double integral(double t0, double t1) const {
        t0 = std::max(t0, 0.0);
        if (!(t1 > t0)) return 0.0;
        double total = 0.0;
        for (std::size_t i = 0; i < breaks.size(); ++i) {
            const double lo = std::max(t0, breaks[i]);
            const double hi = (i + 1 < breaks.size()) ? std::min(t1, breaks[i + 1]) : t1;
            if (hi > lo) total += rates[i] * (hi - lo);
        }
        return total;
    }
};

/// Discrete law over counts k = 0..K plus the mass beyond K.
struct Pmf {
    std::vector<double> p;
    double tail = 0.0;

    double sum() const {
        double s = tail;
        for (double x : p) s += x;
        return s;
    }
    double mean() const {
        double m = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) m += static_cast<double>(k) * p[k];
        return m;
    }
    double variance() const {
        double m = mean(), m2 = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k)
            m2 += static_cast<double>(k) * static_cast<double>(k) * p[k];
        return m2 - m * m;
    }
};

/// Tail probability P(O > t) on a grid, with the discrete mass at zero.
struct TailCurve {
    std::vector<double> t;
    std::vector<double> value;
    double atom_at_zero = 0.0;
};

// ---------------------------------------------------------------------------
// Pmf builders
// ---------------------------------------------------------------------------

inline constexpr double kPmfTailBound = 1e-12;

/// Smallest K with P(Poisson(m) > K) below eps.
inline long long poisson_truncation_point(double m, double eps = kPmfTailBound) {
    if (m <= 0.0) return 0;
    auto tail = [m](long long k) {
        return reg_lower_gamma(static_cast<double>(k) + 1.0, m);
    };
    long long hi = static_cast<long long>(std::ceil(m + 10.0 * std::sqrt(m + 1.0) + 20.0));
    while (tail(hi) >= eps) hi *= 2;
    long long lo = 0;
    while (lo < hi) {
        const long long mid = lo + (hi - lo) / 2;
        if (tail(mid) < eps) hi = mid;
        else lo = mid + 1;
    }
    return hi;
}

inline Pmf geometric_pmf(double rho, double eps = kPmfTailBound) {
    if (!(rho >= 0.0 && rho < 1.0)) throw std::domain_error("geometric_pmf: rho must be in [0,1)");
    Pmf out;
    if (rho == 0.0) {
        out.p = {1.0};
        return out;
    }
    const long long K = static_cast<long long>(std::ceil(std::log(eps) / std::log(rho)));
    out.p.resize(static_cast<std::size_t>(K + 1));
    double term = 1.0 - rho;
    for (long long k = 0; k <= K; ++k) {
        out.p[static_cast<std::size_t>(k)] = term;
        term *= rho;
    }
    out.tail = std::pow(rho, static_cast<double>(K + 1));
    return out;
}

inline Pmf poisson_pmf_vec(double m, double eps = kPmfTailBound) {
    if (!(m >= 0.0)) throw std::domain_error("poisson_pmf_vec: mean must be nonnegative");
    Pmf out;
    const long long K = poisson_truncation_point(m, eps);
    out.p.resize(static_cast<std::size_t>(K + 1));
    for (long long k = 0; k <= K; ++k) out.p[static_cast<std::size_t>(k)] = poisson_pmf(k, m);
    out.tail = m == 0.0 ? 0.0 : reg_lower_gamma(static_cast<double>(K) + 1.0, m);
    return out;
}

inline Pmf convolve(const Pmf& a, const Pmf& b) {
    Pmf out;
    out.p.assign(a.p.size() + b.p.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.p.size(); ++i)
        for (std::size_t j = 0; j < b.p.size(); ++j) out.p[i + j] += a.p[i] * b.p[j];
    out.tail = std::max(0.0, 1.0 - (out.sum() - out.tail));
    return out;
}

inline Pmf mixture(const std::vector<double>& weights, const std::vector<Pmf>& parts) {
    if (weights.size() != parts.size() || parts.empty())
        throw std::invalid_argument("mixture: weights/parts size mismatch");
    std::size_t len = 0;
    for (const auto& q : parts) len = std::max(len, q.p.size());
    Pmf out;
    out.p.assign(len, 0.0);
    for (std::size_t j = 0; j < parts.size(); ++j) {
        for (std::size_t k = 0; k < parts[j].p.size(); ++k) out.p[k] += weights[j] * parts[j].p[k];
        out.tail += weights[j] * parts[j].tail;
    }
    return out;
}

/// Pmf of a Poisson count whose mean is a function of an independent mixing
/// draw S: p_k = E[ Poisson(mean_of(S)) = k ]. Atoms are summed exactly; the
/// continuous part uses a Gauss-Kronrod rule on a partition adapted to the
/// density. Truncation K is the smallest point with the Poisson tail at the
/// largest node mean below 1e-13; the remainder is carried in `tail`.
inline Pmf mixed_poisson_pmf(const DistSpec& mixing,
                             const std::function<double(double)>& mean_of) {
    struct Component {
        double weight;
        double mean;
    };
    std::vector<Component> comps;
    for (const auto& [v, w] : atoms(mixing)) comps.push_back({w, mean_of(v)});
    if (has_continuous_part(mixing)) {
        const double lo = support_lower(mixing);
        const double hi = upper_quantile(mixing, 1e-14);
        auto dens = [&](double x) { return pdf(mixing, x); };
        std::vector<double> kinks = density_kinks(mixing);
        kinks.push_back(lo);
        kinks.push_back(hi);
        std::sort(kinks.begin(), kinks.end());
        for (std::size_t i = 0; i + 1 < kinks.size(); ++i) {
            const double a = std::max(lo, kinks[i]);
            const double b = std::min(hi, kinks[i + 1]);
            if (!(b > a)) continue;
            for (const auto& [pa, pb] : adaptive_panels(dens, a, b, 1e-11))
                for (const auto& [x, w] : gk15_nodes(pa, pb))
                    comps.push_back({w * pdf(mixing, x), mean_of(x)});
        }
    }
    double max_mean = 0.0;
    for (const auto& c : comps) max_mean = std::max(max_mean, c.mean);
    const long long K = poisson_truncation_point(max_mean, 1e-13);
    Pmf out;
    out.p.assign(static_cast<std::size_t>(K + 1), 0.0);
    std::vector<double> lg(static_cast<std::size_t>(K + 2));
    for (long long k = 0; k <= K + 1; ++k) lg[static_cast<std::size_t>(k)] = std::lgamma(k + 1.0);
    for (const auto& c : comps) {
        if (c.weight == 0.0) continue;
        if (c.mean <= 0.0) {
            out.p[0] += c.weight;
            continue;
        }
        const double lm = std::log(c.mean);
        for (long long k = 0; k <= K; ++k)
            out.p[static_cast<std::size_t>(k)] +=
                c.weight * std::exp(k * lm - c.mean - lg[static_cast<std::size_t>(k)]);
    }
    out.tail = std::max(0.0, 1.0 - (out.sum() - out.tail));
    return out;
}

// ---------------------------------------------------------------------------
// Steady-state overlap-time laws
// ---------------------------------------------------------------------------

/// P(O_k > t) in the M/M/inf queue: (lambda/(lambda+mu))^k * exp(-2 mu t).
inline double overlap_tail_mm(const MMParams& p, int k, double t) {
    p.validate();
    if (k < 1) throw std::domain_error("overlap_tail_mm: k must be >= 1");
    if (t < 0.0) throw std::domain_error("overlap_tail_mm: t must be nonnegative");
    return std::pow(p.rho(), k) * std::exp(-2.0 * p.mu * t);
}

/// P(O_k = 0) = 1 - (lambda/(lambda+mu))^k.
inline double overlap_atom_mm(const MMParams& p, int k) {
    p.validate();
    if (k < 1) throw std::domain_error("overlap_atom_mm: k must be >= 1");
    return 1.0 - std::pow(p.rho(), k);
}

inline TailCurve overlap_tail_mm_curve(const MMParams& p, int k, double t_max, int points) {
    if (points < 2) throw std::invalid_argument("overlap_tail_mm_curve: need >= 2 points");
    TailCurve c;
    c.atom_at_zero = overlap_atom_mm(p, k);
    for (int i = 0; i < points; ++i) {
        const double t = t_max * i / (points - 1);
        c.t.push_back(t);
        c.value.push_back(overlap_tail_mm(p, k, t));
    }
    return c;
}

/// P(O_k > t) in the GI/D/inf queue with deterministic service `delta`:
/// F^{(k)}((delta - t)^+), zero once t reaches delta.
inline double overlap_tail_gid(const DistSpec& interarrival, int k, double delta, double t) {
    if (k < 1) throw std::domain_error("overlap_tail_gid: k must be >= 1");
    if (!(delta > 0.0)) throw std::domain_error("overlap_tail_gid: service value must be positive");
    if (t < 0.0) throw std::domain_error("overlap_tail_gid: t must be nonnegative");
    if (t >= delta) return 0.0;
    return kfold_convolution_cdf(interarrival, k, delta - t);
}

inline TailCurve overlap_tail_gid_curve(const DistSpec& interarrival, int k, double delta,
                                        double t_max, int points) {
    if (points < 2) throw std::invalid_argument("overlap_tail_gid_curve: need >= 2 points");
    TailCurve c;
    c.atom_at_zero = 1.0 - kfold_convolution_cdf(interarrival, k, delta);
    for (int i = 0; i < points; ++i) {
        const double t = t_max * i / (points - 1);
        c.t.push_back(t);
        c.value.push_back(overlap_tail_gid(interarrival, k, delta, t));
    }
    return c;
}

// ---------------------------------------------------------------------------
// Mean queue length
// ---------------------------------------------------------------------------

/// Mean M/M/inf queue length from the linear ODE: q0 e^{-mu t} + (lambda/mu)(1 - e^{-mu t}).
inline double qinf_mm(const MMParams& p, double q0, double t) {
    p.validate();
    if (q0 < 0.0) throw std::domain_error("qinf_mm: q0 must be nonnegative");
    const double decay = std::exp(-p.mu * t);
    return q0 * decay + (p.lambda / p.mu) * (1.0 - decay);
}

/// Transient mean queue length of the Mt/G/inf queue started empty:
/// integral over [0,t] of sf(t-u) * lambda(u) du, piecewise-exact in the rate.
inline double qinf_general(const RateProfile& profile, const DistSpec& service, double t) {
    profile.validate();
    if (t < 0.0) throw std::domain_error("qinf_general: t must be nonnegative");
    if (profile.horizon && t > *profile.horizon * (1.0 + 1e-12))
        throw std::domain_error("qinf_general: t exceeds profile horizon");
    double total = 0.0;
    for (std::size_t i = 0; i < profile.breaks.size(); ++i) {
        const double lo = std::min(profile.breaks[i], t);
        const double hi = (i + 1 < profile.breaks.size()) ? std::min(profile.breaks[i + 1], t) : t;
        if (!(hi > lo)) continue;
        // integral of sf(t-u) over u in [lo,hi] equals integral of sf over [t-hi, t-lo]
        total += profile.rates[i] * integrate_sf(service, t - hi, t - lo);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Number of arrivals during service
// ---------------------------------------------------------------------------

/// General route: P(N = k) = (lambda^k / k!) E[S^k e^{-lambda S}], evaluated as
/// the expectation of a Poisson pmf over the service distribution.
inline double during_service_pmf_general(double lambda, const DistSpec& service, long long k) {
    if (!(lambda > 0.0)) throw std::domain_error("during_service_pmf: lambda must be positive");
    if (k < 0) throw std::domain_error("during_service_pmf: k must be nonnegative");
    return expectation(service, [&](double s) { return poisson_pmf(k, lambda * s); });
}

/// P(N(t+S) - N(t) = k) when arrivals are Poisson(lambda) and S follows the
/// service distribution. Dispatches to the closed form for the exponential /
/// Erlang / gamma / uniform / hyper-exponential cases, and to the general
/// expectation route otherwise.
inline double during_service_pmf(double lambda, const DistSpec& service, long long k) {
    if (!(lambda > 0.0)) throw std::domain_error("during_service_pmf: lambda must be positive");
    if (k < 0) throw std::domain_error("during_service_pmf: k must be nonnegative");
    validate(service);
    const double kk = static_cast<double>(k);
    if (const auto* e = std::get_if<Exponential>(&service)) {
        const double rho = lambda / (lambda + e->rate);
        return (1.0 - rho) * std::pow(rho, kk);
    }
    if (const auto* er = std::get_if<Erlang>(&service)) {
        const double rho = lambda / (lambda + er->rate);
        const double alpha = static_cast<double>(er->shape);
        return std::exp(std::lgamma(kk + alpha) - std::lgamma(alpha) - std::lgamma(kk + 1.0) +
                        alpha * std::log1p(-rho) + kk * std::log(rho));
    }
    if (const auto* g = std::get_if<Gamma>(&service)) {
        const double rho = lambda / (lambda + g->rate);
        return std::exp(std::lgamma(kk + g->shape) - std::lgamma(g->shape) -
                        std::lgamma(kk + 1.0) + g->shape * std::log1p(-rho) + kk * std::log(rho));
    }
    if (const auto* u = std::get_if<Uniform>(&service)) {
        // [gamma(k+1, lambda b) - gamma(k+1, lambda a)] / (lambda (b-a) k!) in
        // regularized form, exact for all k.
        const double pb = reg_lower_gamma(kk + 1.0, lambda * u->b);
        const double pa = u->a > 0.0 ? reg_lower_gamma(kk + 1.0, lambda * u->a) : 0.0;
        return (pb - pa) / (lambda * (u->b - u->a));
    }
    if (const auto* h = std::get_if<HyperExponential>(&service)) {
        double p = 0.0;
        for (std::size_t j = 0; j < h->rates.size(); ++j) {
            const double rho_j = lambda / (lambda + h->rates[j]);
            p += h->weights[j] * (1.0 - rho_j) * std::pow(rho_j, kk);
        }
        return p;
    }
    return during_service_pmf_general(lambda, service, k);
}

/// Full pmf of the during-service count, truncated where the tail drops below
/// the pmf tail bound.
inline Pmf during_service_pmf_vec(double lambda, const DistSpec& service) {
    if (!(lambda > 0.0)) throw std::domain_error("during_service_pmf_vec: lambda must be positive");
    validate(service);
    if (const auto* e = std::get_if<Exponential>(&service))
        return geometric_pmf(lambda / (lambda + e->rate));
    if (const auto* h = std::get_if<HyperExponential>(&service)) {
        std::vector<Pmf> parts;
        for (double r : h->rates) parts.push_back(geometric_pmf(lambda / (lambda + r)));
        return mixture(h->weights, parts);
    }
    return mixed_poisson_pmf(service, [lambda](double s) { return lambda * s; });
}

// ---------------------------------------------------------------------------
// Total overlap count O(t)
// ---------------------------------------------------------------------------

/// Transient law of the total overlap count in the Mt/G/inf queue:
/// P(O(t) = k) = E_S[ Poisson(Lambda(t,S) + qinf(t)) = k ].
inline double total_overlap_pmf_transient(const RateProfile& profile, const DistSpec& service,
                                          double t, long long k) {
    if (k < 0) throw std::domain_error("total_overlap_pmf_transient: k must be nonnegative");
    const double q = qinf_general(profile, service, t);
    return expectation(service,
                       [&](double s) { return poisson_pmf(k, profile.integral(t, t + s) + q); });
}

inline Pmf total_overlap_pmf_transient_vec(const RateProfile& profile, const DistSpec& service,
                                           double t) {
    const double q = qinf_general(profile, service, t);
    return mixed_poisson_pmf(service,
                             [&](double s) { return profile.integral(t, t + s) + q; });
}

/// Closed M/M/inf form via the regularized upper incomplete gamma:
/// rho^k (1-rho) e^{(mu/lambda) q} Gamma(k+1, ((lambda+mu)/lambda) q) / Gamma(k+1).
inline double total_overlap_pmf_mm(const MMParams& p, double t, long long k) {
    p.validate();
    if (k < 0) throw std::domain_error("total_overlap_pmf_mm: k must be nonnegative");
    if (t < 0.0) throw std::domain_error("total_overlap_pmf_mm: t must be nonnegative");
    const double q = (p.lambda / p.mu) * -std::expm1(-p.mu * t);
    const double rho = p.rho();
    return std::pow(rho, static_cast<double>(k)) * (1.0 - rho) *
           std::exp((p.mu / p.lambda) * q) *
           reg_upper_gamma(static_cast<double>(k) + 1.0, q * (p.lambda + p.mu) / p.lambda);
}

/// Same law by the explicit Geometric(rho) (+) Poisson(qinf(t)) convolution.
inline double total_overlap_pmf_mm_convolution(const MMParams& p, double t, long long k) {
    p.validate();
    if (k < 0) throw std::domain_error("total_overlap_pmf_mm_convolution: k must be nonnegative");
    const double q = (p.lambda / p.mu) * -std::expm1(-p.mu * t);
    const double rho = p.rho();
    double pois = std::exp(-q);  // Poisson(q) pmf at 0, advanced by recurrence
    double geo = (1.0 - rho) * std::pow(rho, static_cast<double>(k));
    double total = 0.0;
    for (long long j = 0; j <= k; ++j) {
        // j indexes the Poisson part; geometric part sits at k - j.
        total += geo * pois;
        pois *= q / static_cast<double>(j + 1);
        geo /= rho;
        if (j + 1 <= k && geo == 0.0) break;
    }
    return total;
}

inline Pmf total_overlap_pmf_mm_vec(const MMParams& p, double t) {
    p.validate();
    const double q = (p.lambda / p.mu) * -std::expm1(-p.mu * t);
    return convolve(geometric_pmf(p.rho()), poisson_pmf_vec(q));
}

enum class VarianceConvention {
    kProofChain,        // lambda^2/mu^2 + (lambda/mu)(2 - e^{-mu t}); follows the proof
    kPrintedStatement,  // lambda^2/mu^2 + (lambda/mu)(1 - e^{-mu t}); as printed
};

struct MeanVar {
    double mean;
    double variance;
};

/// Mean and variance of O(t) for M/M/inf. The variance follows the
/// geometric-plus-Poisson decomposition by default; the printed-statement
/// variant is available behind the explicit convention flag.
inline MeanVar total_overlap_mean_var_mm(const MMParams& p, double t,
                                         VarianceConvention convention =
                                             VarianceConvention::kProofChain) {
    p.validate();
    if (t < 0.0) throw std::domain_error("total_overlap_mean_var_mm: t must be nonnegative");
    const double r = p.lambda / p.mu;
    const double decay = std::exp(-p.mu * t);
    MeanVar out;
    out.mean = r * (2.0 - decay);
    out.variance = convention == VarianceConvention::kProofChain
                       ? r * r + r * (2.0 - decay)
                       : r * r + r * (1.0 - decay);
    return out;
}

// ---------------------------------------------------------------------------
// Total overlap count, hyper-exponential service
// ---------------------------------------------------------------------------

inline void check_hyper_params(const std::vector<double>& weights,
                               const std::vector<double>& rates) {
    detail::check_weights(weights, rates.size(), "total_overlap_mh");
    for (double r : rates)
        if (!(r > 0.0)) throw std::invalid_argument("total_overlap_mh: rates must be positive");
}

/// Mean M/H_l/inf queue length: lambda * sum_j p_j (1 - e^{-mu_j t}) / mu_j.
inline double qinf_mh(const std::vector<double>& weights, const std::vector<double>& rates,
                      double lambda, double t) {
    check_hyper_params(weights, rates);
    double q = 0.0;
    for (std::size_t j = 0; j < rates.size(); ++j)
        q += weights[j] * -std::expm1(-rates[j] * t) / rates[j];
    return lambda * q;
}

/// O(t) pmf for hyper-exponential service, by conditioning on the branch:
/// sum_j p_j [Geometric(rho_j) (+) Poisson(qinf(t))](k), with qinf(t) the
/// mixture queue length.
inline double total_overlap_pmf_mh(const std::vector<double>& weights,
                                   const std::vector<double>& rates, double lambda, double t,
                                   long long k) {
    if (k < 0) throw std::domain_error("total_overlap_pmf_mh: k must be nonnegative");
    const double q = qinf_mh(weights, rates, lambda, t);
    double total = 0.0;
    for (std::size_t j = 0; j < rates.size(); ++j) {
        const double rho_j = lambda / (lambda + rates[j]);
        double pois = std::exp(-q);
        double geo = (1.0 - rho_j) * std::pow(rho_j, static_cast<double>(k));
        double branch = 0.0;
        for (long long i = 0; i <= k; ++i) {
            branch += geo * pois;
            pois *= q / static_cast<double>(i + 1);
            geo /= rho_j;
        }
        total += weights[j] * branch;
    }
    return total;
}

inline Pmf total_overlap_pmf_mh_vec(const std::vector<double>& weights,
                                    const std::vector<double>& rates, double lambda, double t) {
    const double q = qinf_mh(weights, rates, lambda, t);
    const Pmf pois = poisson_pmf_vec(q);
    std::vector<Pmf> parts;
    for (double r : rates)
        parts.push_back(convolve(geometric_pmf(lambda / (lambda + r)), pois));
    return mixture(weights, parts);
}

/// E[O(t)] for hyper-exponential service; equals the conditioning form's mean.
inline double total_overlap_mean_mh(const std::vector<double>& weights,
                                    const std::vector<double>& rates, double lambda, double t) {
    check_hyper_params(weights, rates);
    double m = 0.0;
    for (std::size_t j = 0; j < rates.size(); ++j)
        m += weights[j] * (lambda / rates[j]) * (2.0 - std::exp(-rates[j] * t));
    return m;
}

// ---------------------------------------------------------------------------
// Residual overlap
// ---------------------------------------------------------------------------

/// Mean and variance of the residual overlap count O(t, delta), per the
/// displayed four-term variance expression. The expression treats the
/// during-service sum and the indicator-scaled queue term as independent even
/// though both depend on the tagged service; the verification suites quantify
/// the resulting gap rather than hiding it.
inline MeanVar residual_mean_var(double lambda, const DistSpec& service, double t, double delta) {
    if (!(lambda > 0.0)) throw std::domain_error("residual_mean_var: lambda must be positive");
    if (delta < 0.0) throw std::domain_error("residual_mean_var: delta must be nonnegative");
    if (t < 0.0) throw std::domain_error("residual_mean_var: t must be nonnegative");
    validate(service);
    const double ew = mean_excess(service, delta);
    const double varw = second_moment_excess(service, delta) - ew * ew;
    const double surv = sf(service, delta);
    const double g = cdf(service, delta);
    const double qint = integrate_sf(service, delta, t + delta);
    const double qmean = lambda * qint;  // E[Q(t,delta)] = Var[Q(t,delta)] (Poisson)
    MeanVar out;
    out.mean = lambda * ew * surv + lambda * surv * qint;
    out.variance = (lambda * lambda * varw + lambda * ew) * surv * surv +
                   surv * g * lambda * ew + qmean * (surv * g + surv * surv) +
                   surv * g * qmean * qmean;
    return out;
}

/// Law of N((S - delta)^+): arrivals during the delta-truncated service window.
/// Closed form for exponential service, the Poisson-mixture expectation
/// otherwise. delta = 0 reduces exactly to during_service_pmf.
inline double residual_during_pmf(double lambda, const DistSpec& service, double delta,
                                  long long k) {
    if (!(lambda > 0.0)) throw std::domain_error("residual_during_pmf: lambda must be positive");
    if (delta < 0.0) throw std::domain_error("residual_during_pmf: delta must be nonnegative");
    if (k < 0) throw std::domain_error("residual_during_pmf: k must be nonnegative");
    if (delta == 0.0) return during_service_pmf(lambda, service, k);
    validate(service);
    if (const auto* e = std::get_if<Exponential>(&service)) {
        const double rho = lambda / (lambda + e->rate);
        const double decay = std::exp(-e->rate * delta);
        if (k == 0) return 1.0 - rho * decay;
        return (1.0 - rho) * std::pow(rho, static_cast<double>(k)) * decay;
    }
    return expectation(service,
                       [&](double s) { return poisson_pmf(k, lambda * std::max(s - delta, 0.0)); });
}

inline Pmf residual_during_pmf_vec(double lambda, const DistSpec& service, double delta) {
    if (delta < 0.0) throw std::domain_error("residual_during_pmf_vec: delta must be nonnegative");
    if (delta == 0.0) return during_service_pmf_vec(lambda, service);
    validate(service);
    if (const auto* e = std::get_if<Exponential>(&service)) {
        const double rho = lambda / (lambda + e->rate);
        const double decay = std::exp(-e->rate * delta);
        Pmf geo = geometric_pmf(rho);
        Pmf out;
        out.p.resize(geo.p.size());
        for (std::size_t k = 1; k < geo.p.size(); ++k) out.p[k] = geo.p[k] * decay;
        out.p[0] = 1.0 - rho * decay;
        out.tail = geo.tail * decay;
        return out;
    }
    return mixed_poisson_pmf(service,
                             [&](double s) { return lambda * std::max(s - delta, 0.0); });
}

/// Law of Z(t,delta): arrivals during the tagged customer's Exp(mu) service
/// that themselves stay at least delta. The printed expression carries total
/// mass e^{-mu delta} over k >= 0; the mass from {S <= delta} is absorbed into
/// k = 0 as the complement so the pmf sums to one.
inline double residual_z_pmf(double lambda, double mu, const DistSpec& cohort_service,
                             double delta, long long k) {
    if (!(lambda > 0.0) || !(mu > 0.0))
        throw std::domain_error("residual_z_pmf: rates must be positive");
    if (delta < 0.0) throw std::domain_error("residual_z_pmf: delta must be nonnegative");
    if (k < 0) throw std::domain_error("residual_z_pmf: k must be nonnegative");
    validate(cohort_service);
    const double rho = lambda / (lambda + mu);
    const double g = cdf(cohort_service, delta);
    const double surv = sf(cohort_service, delta);
    const double decay = std::exp(-mu * delta);
    const double denom = 1.0 - rho * g;
    if (k == 0) return 1.0 - decay + (1.0 - rho) * decay / denom;
    return std::pow(surv * rho / denom, static_cast<double>(k)) * (1.0 - rho) * decay / denom;
}

inline Pmf residual_z_pmf_vec(double lambda, double mu, const DistSpec& cohort_service,
                              double delta) {
    const double rho = lambda / (lambda + mu);
    const double g = cdf(cohort_service, delta);
    const double surv = sf(cohort_service, delta);
    const double denom = 1.0 - rho * g;
    const double ratio = surv * rho / denom;
    const double coeff = (1.0 - rho) * std::exp(-mu * delta) / denom;
    long long K = 1;
    if (ratio > 0.0)
        K = std::max<long long>(
            1, static_cast<long long>(
                   std::ceil(std::log(kPmfTailBound * (1.0 - ratio) / coeff) / std::log(ratio))));
    Pmf out;
    out.p.resize(static_cast<std::size_t>(K + 1));
    out.p[0] = residual_z_pmf(lambda, mu, cohort_service, delta, 0);
    for (long long k = 1; k <= K; ++k)
        out.p[static_cast<std::size_t>(k)] = coeff * std::pow(ratio, static_cast<double>(k));
    out.tail = ratio > 0.0 ? coeff * std::pow(ratio, static_cast<double>(K + 1)) / (1.0 - ratio)
                           : 0.0;
    return out;
}

}  // namespace overlap
