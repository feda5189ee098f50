#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "overlap/analytic.hpp"
#include "overlap/sim.hpp"
#include "overlap/verify.hpp"

namespace overlap {

/// Scale, seed and thresholds for the figure-verification suites. Thresholds
/// default to the published tolerances and are always echoed into the reports.
struct SuiteOptions {
    std::int64_t n = 100000;
    std::uint64_t seed = 424242;
    ComparePolicy policy{};
    double ks_fixed_threshold = 0.012;
    double atom_abs_window = 0.01;
    double mle_rate_window = 0.05;
    double mean_rel_window = 0.02;
    double residual_mean_rel_window = 0.03;
    double lognormal_tv_threshold = 0.03;
    std::int64_t variance_arbitration_n = 1000000;
};

namespace detail {

inline ComparePolicy with_fixed_ks(const SuiteOptions& opts) {
    ComparePolicy policy = opts.policy;
    if (!policy.ks_threshold) policy.ks_threshold = opts.ks_fixed_threshold;
    return policy;
}

inline Pmf pmf_from_pointwise(const std::function<double(long long)>& fn, long long max_k) {
    Pmf out;
    out.p.resize(static_cast<std::size_t>(max_k) + 1);
    for (long long k = 0; k <= max_k; ++k) out.p[static_cast<std::size_t>(k)] = fn(k);
    out.tail = std::max(0.0, 1.0 - (out.sum() - out.tail));
    return out;
}

template <class Samples, class Get>
std::vector<std::int64_t> pluck(const Samples& samples, Get get) {
    std::vector<std::int64_t> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(get(s));
    return out;
}

inline double mean_of(const std::vector<std::int64_t>& xs) {
    double acc = 0.0;
    for (auto x : xs) acc += static_cast<double>(x);
    return acc / static_cast<double>(xs.size());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// fig1-2: steady-state pairwise overlaps, M/M regime (lambda=.5, mu=1)
// ---------------------------------------------------------------------------

/// Per lag k in 1..4: atom z-test and absolute window against 1-(1/3)^k, KS of
/// the positive overlaps against Exp(2 mu), and the exponential MLE rate.
inline std::vector<VerificationReport> run_fig12(const SuiteOptions& opts) {
    const MMParams p{0.5, 1.0};
    const ComparePolicy policy = detail::with_fixed_ks(opts);
    const std::int64_t burn = default_burnin(p.lambda, p.mu);
    RunConfig cfg;
    cfg.arrival = PoissonConstant{p.lambda};
    cfg.service = Exponential{p.mu};
    cfg.stop_customers = burn + opts.n + 4;
    cfg.seed = opts.seed;
    const auto records = run(cfg);
    std::span<const CustomerRecord> tail(records.data() + burn, records.size() - burn);
    std::vector<VerificationReport> reports;
    for (int k = 1; k <= 4; ++k) {
        std::ostringstream params;
        params << "lambda=0.5 mu=1 k=" << k << " pairs=" << tail.size() - k;
        const auto pairs = overlap_pairs(tail, k);
        std::vector<double> positives;
        for (const auto& s : pairs)
            if (s.value > 0.0) positives.push_back(s.value);
        const auto zeros = static_cast<std::int64_t>(pairs.size() - positives.size());
        const double atom = overlap_atom_mm(p, k);
        const std::string tag = "fig1-2/k" + std::to_string(k);
        reports.push_back(compare_atom(tag + "/atom-z", params.str(), zeros,
                                       static_cast<std::int64_t>(pairs.size()), atom, policy,
                                       opts.seed));
        reports.push_back(compare_abs(tag + "/atom-window", params.str(),
                                      static_cast<std::int64_t>(pairs.size()),
                                      1.0 - static_cast<double>(zeros) / pairs.size(),
                                      1.0 - atom, opts.atom_abs_window, opts.seed));
        // The positive-part sample thins by (1/3)^k; below ~20k positives the
        // fixed threshold drops under the alpha=0.01 critical value, so the
        // larger of the two applies (recorded in the report either way).
        ComparePolicy ks_policy = policy;
        ks_policy.ks_threshold =
            std::max(*policy.ks_threshold,
                     1.63 / std::sqrt(static_cast<double>(std::max<std::size_t>(positives.size(), 1))));
        reports.push_back(compare_continuous(
            tag + "/positive-ks", params.str(), positives,
            [&p](double t) { return t <= 0.0 ? 0.0 : 1.0 - std::exp(-2.0 * p.mu * t); }, ks_policy,
            opts.seed));
        reports.push_back(compare_abs(tag + "/mle-rate", params.str(),
                                      static_cast<std::int64_t>(positives.size()),
                                      mle_exponential_rate(positives), 2.0 * p.mu,
                                      opts.mle_rate_window, opts.seed));
    }
    return reports;
}

// ---------------------------------------------------------------------------
// fig3: M/D overlap cdf against the k-fold convolution law (lambda=.5, D=1)
// ---------------------------------------------------------------------------

inline std::vector<VerificationReport> run_fig3(const SuiteOptions& opts) {
    const double lambda = 0.5;
    const double delta = 1.0;
    const ComparePolicy policy = detail::with_fixed_ks(opts);
    const std::int64_t burn = default_burnin(lambda, 1.0);
    RunConfig cfg;
    cfg.arrival = PoissonConstant{lambda};
    cfg.service = Deterministic{delta};
    cfg.stop_customers = burn + opts.n + 4;
    cfg.seed = opts.seed;
    const auto records = run(cfg);
    std::span<const CustomerRecord> tail(records.data() + burn, records.size() - burn);
    const DistSpec interarrival = Exponential{lambda};
    std::vector<VerificationReport> reports;
    for (int k = 1; k <= 4; ++k) {
        std::ostringstream params;
        params << "lambda=0.5 Delta=1 k=" << k;
        const auto pairs = overlap_pairs(tail, k);
        std::vector<double> values;
        values.reserve(pairs.size());
        for (const auto& s : pairs) values.push_back(s.value);
        auto cdf_fn = [&, k](double t) {
            return t < 0.0 ? 0.0 : 1.0 - overlap_tail_gid(interarrival, k, delta, t);
        };
        reports.push_back(compare_continuous("fig3/k" + std::to_string(k) + "/cdf-sup",
                                             params.str(), values, cdf_fn, policy, opts.seed));
    }
    return reports;
}

// ---------------------------------------------------------------------------
// fig4-5: total / during / upon counts, M/M regime (lambda=10, mu=1)
// ---------------------------------------------------------------------------

inline std::vector<VerificationReport> run_fig45(const SuiteOptions& opts) {
    const MMParams p{10.0, 1.0};
    RunConfig cfg;
    cfg.arrival = PoissonConstant{p.lambda};
    cfg.service = Exponential{p.mu};
    const std::int64_t warmup = 2000;
    cfg.stop_customers = warmup + opts.n + 2000;
    cfg.seed = opts.seed;
    cfg.warmup_customers = warmup;
    const auto records = run(cfg);
    TagFilter filter;
    filter.warmup_customers = warmup;
    auto counts = count_overlaps(records, filter);
    if (static_cast<std::int64_t>(counts.size()) > opts.n)
        counts.resize(static_cast<std::size_t>(opts.n));
    const auto totals = detail::pluck(counts, [](const CountSample& c) { return c.total; });
    const auto during = detail::pluck(counts, [](const CountSample& c) { return c.during; });
    // Consecutive arrivals see nearly the same queue, so the GOF test runs on
    // a spaced subsample (2.5 service times apart) where the serial
    // correlation is negligible and the chi-square null applies.
    std::vector<std::int64_t> upon_spaced;
    for (std::size_t i = 0; i < counts.size(); i += 25) upon_spaced.push_back(counts[i].upon);
    const std::string params = "lambda=10 mu=1 tagged=" + std::to_string(counts.size());
    std::vector<VerificationReport> reports;
    reports.push_back(compare_rel("fig4-5/total-mean", params,
                                  static_cast<std::int64_t>(totals.size()),
                                  detail::mean_of(totals), 2.0 * p.lambda / p.mu,
                                  opts.mean_rel_window, opts.seed));
    reports.push_back(compare_pmf_tv("fig4-5/during-geometric-tv", params, during,
                                     geometric_pmf(p.rho()), opts.policy, opts.seed));
    reports.push_back(compare_counts_chi2("fig4-5/upon-poisson-chi2",
                                          params + " (every 25th tagged arrival)", upon_spaced,
                                          poisson_pmf_vec(p.lambda / p.mu), opts.policy,
                                          opts.seed));
    reports.push_back(compare_pmf_tv("fig4-5/total-pmf-tv", params, totals,
                                     total_overlap_pmf_mm_vec(p, kInf), opts.policy, opts.seed));
    return reports;
}

// ---------------------------------------------------------------------------
// mtd: Mt/D total-overlap law, Poisson with the window integral as mean
// ---------------------------------------------------------------------------

/// Constant-rate sanity check (Poisson(2 lambda Delta)) plus a two-piece rate
/// profile probed at five tag epochs with virtual tagged arrivals.
inline std::vector<VerificationReport> run_mtd(const SuiteOptions& opts) {
    std::vector<VerificationReport> reports;
    const std::int64_t reps = std::max<std::int64_t>(opts.n / 10, 1000);
    {
        const double lambda = 10.0, delta = 1.0, epoch = 3.0;
        const ArrivalSpec arrival = PoissonConstant{lambda};
        const DistSpec service = Deterministic{delta};
        const auto tags =
            sample_virtual_tags(arrival, service, service, epoch, 0.0, opts.seed, reps);
        const auto totals = detail::pluck(tags, [](const ResidualCountSample& c) { return c.total; });
        std::ostringstream params;
        params << "lambda=10 Delta=1 t=3 reps=" << reps;
        reports.push_back(compare_counts_chi2("mtd/constant-rate-poisson-chi2", params.str(),
                                              totals, poisson_pmf_vec(2.0 * lambda * delta),
                                              opts.policy, opts.seed));
    }
    RateProfile profile;
    profile.breaks = {0.0, 1.0};
    profile.rates = {5.0, 10.0};
    const double delta = 0.5;
    const ArrivalSpec arrival = PoissonProfile{profile};
    const DistSpec service = Deterministic{delta};
    const double epochs[] = {0.25, 0.75, 1.25, 2.0, 4.0};
    for (std::size_t i = 0; i < 5; ++i) {
        const double t = epochs[i];
        const auto tags = sample_virtual_tags(arrival, service, service, t, 0.0,
                                              opts.seed + 7700 + i, reps);
        const auto totals = detail::pluck(tags, [](const ResidualCountSample& c) { return c.total; });
        const double m = profile.integral(std::max(t - delta, 0.0), t + delta);
        std::ostringstream params;
        params << "profile=[5 on [0,1), 10 after] Delta=0.5 t=" << t << " mean=" << m
               << " reps=" << reps;
        std::ostringstream name;
        name << "mtd/profile-t" << t << "-poisson-chi2";
        reports.push_back(compare_counts_chi2(name.str(), params.str(), totals,
                                              poisson_pmf_vec(m), opts.policy,
                                              opts.seed + 7700 + i));
    }
    return reports;
}

// ---------------------------------------------------------------------------
// fig6: lognormal service counts (mean = variance = 1, lambda = 10)
// ---------------------------------------------------------------------------

inline std::vector<VerificationReport> run_fig6(const SuiteOptions& opts) {
    const double lambda = 10.0;
    const DistSpec service = LogNormal{1.0, 1.0};
    RunConfig cfg;
    cfg.arrival = PoissonConstant{lambda};
    cfg.service = service;
    const std::int64_t warmup = 2000;
    cfg.stop_customers = warmup + opts.n + 2000;
    cfg.seed = opts.seed;
    const auto records = run(cfg);
    TagFilter filter;
    filter.warmup_customers = warmup;
    auto counts = count_overlaps(records, filter);
    if (static_cast<std::int64_t>(counts.size()) > opts.n)
        counts.resize(static_cast<std::size_t>(opts.n));
    const auto during = detail::pluck(counts, [](const CountSample& c) { return c.during; });
    const std::string params = "lambda=10 service=lognormal(mean=1,var=1) tagged=" +
                               std::to_string(counts.size());
    ComparePolicy policy = opts.policy;
    policy.tv_threshold = opts.lognormal_tv_threshold;
    std::vector<VerificationReport> reports;
    reports.push_back(compare_pmf_tv("fig6/during-pmf-tv", params, during,
                                     during_service_pmf_vec(lambda, service), policy, opts.seed));
    // Heavy-tail note: the lognormal's worst during-service count across 20
    // replications versus the exponential regime's. Reported, not asserted.
    std::int64_t max_ln = 0, max_exp = 0;
    TagFilter short_filter;
    short_filter.warmup_customers = 500;
    for (std::int64_t rep = 0; rep < 20; ++rep) {
        RunConfig small = cfg;
        small.stop_customers = 20000;
        for (const auto& c : count_overlaps(run(small, rep), short_filter))
            max_ln = std::max(max_ln, c.during);
        small.service = Exponential{1.0};
        for (const auto& c : count_overlaps(run(small, rep), short_filter))
            max_exp = std::max(max_exp, c.during);
    }
    VerificationReport note;
    note.check = "fig6/heavy-tail-note";
    note.parameters = params;
    note.n = 20 * 20000;
    note.statistic = "info";
    note.observed = static_cast<double>(max_ln);
    note.threshold = static_cast<double>(max_exp);
    note.pass = true;  // informational
    note.seed = opts.seed;
    std::ostringstream os;
    os << "max during-service count across 20 seeds: lognormal=" << max_ln
       << " exponential=" << max_exp
       << (max_ln > max_exp ? " (lognormal tail heavier, as expected)" : " (no excess observed)");
    note.notes = os.str();
    reports.push_back(note);
    return reports;
}

// ---------------------------------------------------------------------------
// fig7: uniform service counts (Uniform[0,10], lambda = 10)
// ---------------------------------------------------------------------------

inline std::vector<VerificationReport> run_fig7(const SuiteOptions& opts) {
    const double lambda = 10.0;
    const Uniform uni{0.0, 10.0};
    const DistSpec service = uni;
    RunConfig cfg;
    cfg.arrival = PoissonConstant{lambda};
    cfg.service = service;
    const std::int64_t warmup = 2000;
    cfg.stop_customers = warmup + opts.n + 2000;
    cfg.seed = opts.seed;
    const auto records = run(cfg);
    TagFilter filter;
    filter.warmup_customers = warmup;
    auto counts = count_overlaps(records, filter);
    if (static_cast<std::int64_t>(counts.size()) > opts.n)
        counts.resize(static_cast<std::size_t>(opts.n));
    const auto totals = detail::pluck(counts, [](const CountSample& c) { return c.total; });
    const auto during = detail::pluck(counts, [](const CountSample& c) { return c.during; });
    const std::string params = "lambda=10 service=uniform(0,10) tagged=" +
                               std::to_string(counts.size());
    // E[O] = lambda E[S] + lambda E[S] in steady state = 2 * 10 * 5 = 100.
    const double total_target = 2.0 * lambda * mean(service);
    const double during_target = lambda * mean(service);
    const Pmf during_analytic = detail::pmf_from_pointwise(
        [&](long long k) { return during_service_pmf(lambda, service, k); },
        poisson_truncation_point(lambda * uni.b));
    std::vector<VerificationReport> reports;
    reports.push_back(compare_rel("fig7/total-mean", params,
                                  static_cast<std::int64_t>(totals.size()),
                                  detail::mean_of(totals), total_target, opts.mean_rel_window,
                                  opts.seed));
    reports.push_back(compare_rel("fig7/during-mean", params,
                                  static_cast<std::int64_t>(during.size()),
                                  detail::mean_of(during), during_target, opts.mean_rel_window,
                                  opts.seed));
    reports.push_back(compare_pmf_tv("fig7/during-pmf-tv", params, during, during_analytic,
                                     opts.policy, opts.seed));
    return reports;
}

// ---------------------------------------------------------------------------
// fig8: residual overlap, exponential regime (lambda=10, mu=1, delta=.5)
// ---------------------------------------------------------------------------

inline std::vector<VerificationReport> run_fig8(const SuiteOptions& opts) {
    const double lambda = 10.0, mu = 1.0, delta = 0.5;
    const DistSpec service = Exponential{mu};
    RunConfig cfg;
    cfg.arrival = PoissonConstant{lambda};
    cfg.service = service;
    const std::int64_t warmup = 2000;
    cfg.stop_customers = warmup + opts.n + 2000;
    cfg.seed = opts.seed;
    const auto records = run(cfg);
    TagFilter filter;
    filter.warmup_customers = warmup;
    auto samples = count_residual_overlaps(records, delta, filter);
    if (static_cast<std::int64_t>(samples.size()) > opts.n)
        samples.resize(static_cast<std::size_t>(opts.n));
    const auto totals = detail::pluck(samples, [](const ResidualCountSample& c) { return c.total; });
    const auto z_counts =
        detail::pluck(samples, [](const ResidualCountSample& c) { return c.during; });
    const auto windows =
        detail::pluck(samples, [](const ResidualCountSample& c) { return c.window; });
    const std::string params = "lambda=10 mu=1 delta=0.5 tagged=" + std::to_string(samples.size());
    std::vector<VerificationReport> reports;
    const double mean_target = 2.0 * (lambda / mu) * std::exp(-mu * delta) * std::exp(-mu * delta);
    reports.push_back(compare_rel("fig8/residual-mean", params,
                                  static_cast<std::int64_t>(totals.size()),
                                  detail::mean_of(totals), mean_target,
                                  opts.residual_mean_rel_window, opts.seed));
    reports.push_back(compare_pmf_tv("fig8/z-pmf-tv", params, z_counts,
                                     residual_z_pmf_vec(lambda, mu, service, delta), opts.policy,
                                     opts.seed));
    reports.push_back(compare_pmf_tv("fig8/window-pmf-tv", params, windows,
                                     residual_during_pmf_vec(lambda, service, delta), opts.policy,
                                     opts.seed));
    // Informational: the displayed residual-variance expression versus Monte
    // Carlo at t=5. The expression drops the covariance between the window sum
    // and the gated queue term (both depend on the tagged service); the
    // covariance-corrected value is reported alongside.
    {
        const double t = 5.0;
        const std::int64_t reps = std::min<std::int64_t>(opts.n * 2, 200000);
        const auto tags = sample_virtual_tags(PoissonConstant{lambda}, service, service, t, delta,
                                              opts.seed + 99, reps);
        double m1 = 0.0, m2 = 0.0;
        for (const auto& c : tags) {
            m1 += static_cast<double>(c.total);
            m2 += static_cast<double>(c.total) * static_cast<double>(c.total);
        }
        m1 /= static_cast<double>(reps);
        m2 /= static_cast<double>(reps);
        const double mc_var = m2 - m1 * m1;
        const MeanVar formula = residual_mean_var(lambda, service, t, delta);
        const double surv = sf(service, delta);
        const double correction = 2.0 * (lambda * mean_excess(service, delta) * surv) *
                                  (lambda * integrate_sf(service, delta, t + delta)) *
                                  cdf(service, delta);
        VerificationReport info;
        info.check = "fig8/residual-variance-note";
        info.parameters = params + " t=5";
        info.n = reps;
        info.statistic = "info";
        info.observed = mc_var;
        info.threshold = formula.variance;
        info.pass = true;  // informational: the gap is quantified, not gated
        info.seed = opts.seed + 99;
        std::ostringstream os;
        os << "monte-carlo var=" << mc_var << " formula var=" << formula.variance
           << " covariance-corrected=" << formula.variance + correction
           << " (formula mean=" << formula.mean << " mc mean=" << m1 << ")";
        info.notes = os.str();
        reports.push_back(info);
    }
    return reports;
}

// ---------------------------------------------------------------------------
// variance-arbitration: which printed O(t) variance the data supports
// ---------------------------------------------------------------------------

inline std::vector<VerificationReport> run_variance_arbitration(const SuiteOptions& opts) {
    const MMParams p{10.0, 1.0};
    const double t = 5.0;
    const std::int64_t reps = opts.variance_arbitration_n;
    const auto tags = sample_virtual_tags(PoissonConstant{p.lambda}, Exponential{p.mu},
                                          Exponential{p.mu}, t, 0.0, opts.seed, reps);
    double m1 = 0.0;
    for (const auto& c : tags) m1 += static_cast<double>(c.total);
    m1 /= static_cast<double>(reps);
    double m2 = 0.0, m4 = 0.0;
    for (const auto& c : tags) {
        const double d = static_cast<double>(c.total) - m1;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= static_cast<double>(reps);
    m4 /= static_cast<double>(reps);
    const double mc_var = m2;
    const double se_var = std::sqrt(std::max(m4 - m2 * m2, 0.0) / static_cast<double>(reps));
    const double proof = total_overlap_mean_var_mm(p, t, VarianceConvention::kProofChain).variance;
    const double printed =
        total_overlap_mean_var_mm(p, t, VarianceConvention::kPrintedStatement).variance;
    const bool supports_proof = std::fabs(mc_var - proof) < std::fabs(mc_var - printed);
    VerificationReport r;
    r.check = "variance-arbitration/ot-variance";
    std::ostringstream params;
    params << "lambda=10 mu=1 t=5 reps=" << reps;
    r.parameters = params.str();
    r.n = reps;
    r.statistic = "abs-diff";
    r.observed = std::fabs(mc_var - proof);
    r.threshold = 5.0 * se_var;
    r.pass = supports_proof && r.observed <= r.threshold;
    r.seed = opts.seed;
    std::ostringstream os;
    os << "monte-carlo var=" << mc_var << " (se=" << se_var << "); variant (2-e^{-mu t})=" << proof
       << ", variant (1-e^{-mu t})=" << printed << "; supported variant: "
       << (supports_proof ? "(2-e^{-mu t})" : "(1-e^{-mu t})")
       << "; gap to rejected variant=" << std::fabs(mc_var - (supports_proof ? printed : proof));
    r.notes = os.str();
    return {r};
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names = {
        "fig1-2", "fig3", "fig4-5", "mtd", "fig6", "fig7", "fig8", "variance-arbitration"};
    return names;
}

inline std::vector<VerificationReport> run_suite(const std::string& name,
                                                 const SuiteOptions& opts) {
    if (name == "fig1-2") return run_fig12(opts);
    if (name == "fig3") return run_fig3(opts);
    if (name == "fig4-5") return run_fig45(opts);
    if (name == "mtd") return run_mtd(opts);
    if (name == "fig6") return run_fig6(opts);
    if (name == "fig7") return run_fig7(opts);
    if (name == "fig8") return run_fig8(opts);
    if (name == "variance-arbitration") return run_variance_arbitration(opts);
    if (name == "all") {
        std::vector<VerificationReport> all;
        for (const auto& suite : suite_names()) {
            auto part = run_suite(suite, opts);
            all.insert(all.end(), part.begin(), part.end());
        }
        return all;
    }
    throw std::invalid_argument("unknown verification suite: " + name);
}

}  // namespace overlap
