#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "overlap/analytic.hpp"
#include "overlap/gamma.hpp"

namespace overlap {

// ---------------------------------------------------------------------------
// Empirical distribution machinery
// ---------------------------------------------------------------------------

/// Right-continuous empirical cdf.
class Ecdf {
public:
    explicit Ecdf(std::vector<double> samples) : sorted_(std::move(samples)) {
        if (sorted_.empty()) throw std::invalid_argument("Ecdf: empty sample");
        std::sort(sorted_.begin(), sorted_.end());
    }

    double operator()(double x) const {
        const auto le = std::upper_bound(sorted_.begin(), sorted_.end(), x) - sorted_.begin();
        return static_cast<double>(le) / static_cast<double>(sorted_.size());
    }

    const std::vector<double>& sorted() const { return sorted_; }

private:
    std::vector<double> sorted_;
};

/// Sup over the sample points of |ECDF - cdf|, both functions evaluated at the
/// same points so deviations of either sign are caught. For continuous targets
/// this differs from the classical statistic by at most 1/n.
inline double ks_distance(std::vector<double> samples,
                          const std::function<double(double)>& cdf) {
    Ecdf ecdf(std::move(samples));
    const auto& xs = ecdf.sorted();
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    std::size_t i = 0;
    while (i < xs.size()) {
        std::size_t j = i;
        while (j + 1 < xs.size() && xs[j + 1] == xs[i]) ++j;
        const double fhat = static_cast<double>(j + 1) / n;
        d = std::max(d, std::fabs(fhat - cdf(xs[i])));
        i = j + 1;
    }
    return d;
}

/// Total-variation distance between two pmfs, tail buckets included.
inline double tv_distance(const Pmf& p, const Pmf& q) {
    const std::size_t len = std::max(p.p.size(), q.p.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
        const double pk = k < p.p.size() ? p.p[k] : 0.0;
        const double qk = k < q.p.size() ? q.p[k] : 0.0;
        acc += std::fabs(pk - qk);
    }
    acc += std::fabs(p.tail - q.tail);
    return 0.5 * acc;
}

/// Empirical pmf of a vector of nonnegative counts.
inline Pmf empirical_pmf(std::span<const std::int64_t> counts) {
    if (counts.empty()) throw std::invalid_argument("empirical_pmf: empty sample");
    std::int64_t max_k = 0;
    for (auto c : counts) {
        if (c < 0) throw std::invalid_argument("empirical_pmf: negative count");
        max_k = std::max(max_k, c);
    }
    Pmf out;
    out.p.assign(static_cast<std::size_t>(max_k) + 1, 0.0);
    const double w = 1.0 / static_cast<double>(counts.size());
    for (auto c : counts) out.p[static_cast<std::size_t>(c)] += w;
    return out;
}

inline double mle_exponential_rate(std::span<const double> samples) {
    if (samples.empty()) throw std::invalid_argument("mle_exponential_rate: empty sample");
    double sum = 0.0;
    for (double x : samples) {
        if (!(x > 0.0)) throw std::invalid_argument("mle_exponential_rate: nonpositive sample");
        sum += x;
    }
    return static_cast<double>(samples.size()) / sum;
}

// ---------------------------------------------------------------------------
// Chi-square goodness of fit
// ---------------------------------------------------------------------------

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
    int bins = 0;
    std::string pooling_note;
};

/// Pearson chi-square of observed counts against an analytic pmf. Cells with
/// expected count below 5 are pooled rightward (the analytic tail forms the
/// final cell); the pooling rule is recorded in the result.
inline ChiSquareResult chi_square_gof(std::span<const std::int64_t> counts, const Pmf& expected) {
    if (counts.empty()) throw std::invalid_argument("chi_square_gof: empty sample");
    std::int64_t max_k = 0;
    for (auto c : counts) max_k = std::max(max_k, c);
    const std::size_t cells = std::max(static_cast<std::size_t>(max_k) + 1, expected.p.size());
    std::vector<double> observed(cells + 1, 0.0);
    for (auto c : counts) observed[static_cast<std::size_t>(c)] += 1.0;
    std::vector<double> probs(cells + 1, 0.0);
    for (std::size_t k = 0; k < cells; ++k) probs[k] = k < expected.p.size() ? expected.p[k] : 0.0;
    probs[cells] = expected.tail;  // mass beyond every observed/analytic cell
    const double n = static_cast<double>(counts.size());

    std::vector<double> obs_bins, exp_bins;
    double o_acc = 0.0, e_acc = 0.0;
    for (std::size_t k = 0; k <= cells; ++k) {
        o_acc += observed[k];
        e_acc += probs[k] * n;
        if (e_acc >= 5.0) {
            obs_bins.push_back(o_acc);
            exp_bins.push_back(e_acc);
            o_acc = e_acc = 0.0;
        }
    }
    if (e_acc > 0.0 || o_acc > 0.0) {
        if (!exp_bins.empty()) {
            obs_bins.back() += o_acc;
            exp_bins.back() += e_acc;
        } else {
            obs_bins.push_back(o_acc);
            exp_bins.push_back(e_acc);
        }
    }
    ChiSquareResult out;
    out.bins = static_cast<int>(exp_bins.size());
    if (out.bins < 2) {
        out.pooling_note = "insufficient bins after pooling";
        out.p_value = 1.0;
        return out;
    }
    for (std::size_t b = 0; b < exp_bins.size(); ++b) {
        const double diff = obs_bins[b] - exp_bins[b];
        out.statistic += diff * diff / exp_bins[b];
    }
    out.dof = out.bins - 1;
    out.p_value = reg_upper_gamma(0.5 * out.dof, 0.5 * out.statistic);
    std::ostringstream note;
    note << "pooled to " << out.bins << " bins (min expected count 5)";
    out.pooling_note = note.str();
    return out;
}

// ---------------------------------------------------------------------------
// Histogram
// ---------------------------------------------------------------------------

struct Histogram {
    std::vector<double> edges;           // strictly increasing, size bins+1
    std::vector<std::int64_t> counts;    // size bins
    std::vector<double> densities;       // count / (n * width)

    static Histogram build(std::span<const double> samples, int bins, double lo, double hi) {
        if (bins < 1) throw std::invalid_argument("Histogram: need at least one bin");
        if (!(hi > lo)) throw std::invalid_argument("Histogram: need lo < hi");
        Histogram h;
        h.edges.resize(static_cast<std::size_t>(bins) + 1);
        const double w = (hi - lo) / bins;
        for (int b = 0; b <= bins; ++b) h.edges[static_cast<std::size_t>(b)] = lo + w * b;
        h.counts.assign(static_cast<std::size_t>(bins), 0);
        for (double x : samples) {
            auto idx = static_cast<std::int64_t>(std::floor((x - lo) / w));
            idx = std::clamp<std::int64_t>(idx, 0, bins - 1);  // edge samples stay in range
            ++h.counts[static_cast<std::size_t>(idx)];
        }
        const double n = static_cast<double>(samples.size());
        h.densities.resize(h.counts.size());
        for (std::size_t b = 0; b < h.counts.size(); ++b)
            h.densities[b] = n > 0.0 ? static_cast<double>(h.counts[b]) / (n * w) : 0.0;
        return h;
    }
};

// ---------------------------------------------------------------------------
// Comparison harness
// ---------------------------------------------------------------------------

struct VerificationReport {
    std::string check;
    std::string parameters;
    std::int64_t n = 0;
    std::string statistic;  // ks | tv | chi-square-p | z | abs-diff | rel-diff | info
    double observed = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::uint64_t seed = 0;
    std::string notes;
};

struct ComparePolicy {
    std::optional<double> ks_threshold;  // default: 1.63 / sqrt(n) (alpha = 0.01 asymptotic)
    double tv_threshold = 0.02;
    double z_threshold = 3.0;
    double chi2_p_floor = 0.001;
};

inline double resolved_ks_threshold(const ComparePolicy& policy, std::size_t n) {
    return policy.ks_threshold.value_or(1.63 / std::sqrt(static_cast<double>(n)));
}

/// KS comparison of continuous samples against an analytic cdf.
inline VerificationReport compare_continuous(const std::string& check, const std::string& params,
                                             std::vector<double> samples,
                                             const std::function<double(double)>& cdf,
                                             const ComparePolicy& policy, std::uint64_t seed) {
    if (samples.empty()) throw std::invalid_argument(check + ": empty sample");
    VerificationReport r;
    r.check = check;
    r.parameters = params;
    r.n = static_cast<std::int64_t>(samples.size());
    r.statistic = "ks";
    r.threshold = resolved_ks_threshold(policy, samples.size());
    r.observed = ks_distance(std::move(samples), cdf);
    r.pass = r.observed <= r.threshold;
    r.seed = seed;
    return r;
}

/// Total-variation comparison of a count sample against an analytic pmf.
inline VerificationReport compare_pmf_tv(const std::string& check, const std::string& params,
                                         std::span<const std::int64_t> counts, const Pmf& analytic,
                                         const ComparePolicy& policy, std::uint64_t seed) {
    if (analytic.p.empty()) throw std::invalid_argument(check + ": empty analytic pmf");
    VerificationReport r;
    r.check = check;
    r.parameters = params;
    r.n = static_cast<std::int64_t>(counts.size());
    r.statistic = "tv";
    r.observed = tv_distance(empirical_pmf(counts), analytic);
    r.threshold = policy.tv_threshold;
    r.pass = r.observed <= r.threshold;
    r.seed = seed;
    return r;
}

/// Chi-square comparison of a count sample against an analytic pmf; passes
/// when the p-value clears the policy floor.
inline VerificationReport compare_counts_chi2(const std::string& check, const std::string& params,
                                              std::span<const std::int64_t> counts,
                                              const Pmf& analytic, const ComparePolicy& policy,
                                              std::uint64_t seed) {
    VerificationReport r;
    r.check = check;
    r.parameters = params;
    r.n = static_cast<std::int64_t>(counts.size());
    r.statistic = "chi-square-p";
    const ChiSquareResult c = chi_square_gof(counts, analytic);
    r.observed = c.p_value;
    r.threshold = policy.chi2_p_floor;
    r.pass = c.p_value >= policy.chi2_p_floor;
    r.seed = seed;
    std::ostringstream note;
    note << "chi2=" << c.statistic << " dof=" << c.dof << "; " << c.pooling_note;
    r.notes = note.str();
    return r;
}

/// Binomial z-test of an observed success fraction against an analytic atom.
inline VerificationReport compare_atom(const std::string& check, const std::string& params,
                                       std::int64_t successes, std::int64_t n, double p_expected,
                                       const ComparePolicy& policy, std::uint64_t seed) {
    if (n <= 0) throw std::invalid_argument(check + ": empty sample");
    VerificationReport r;
    r.check = check;
    r.parameters = params;
    r.n = n;
    r.statistic = "z";
    const double phat = static_cast<double>(successes) / static_cast<double>(n);
    const double se = std::sqrt(p_expected * (1.0 - p_expected) / static_cast<double>(n));
    r.observed = std::fabs(phat - p_expected) / se;
    r.threshold = policy.z_threshold;
    r.pass = r.observed <= r.threshold;
    r.seed = seed;
    std::ostringstream note;
    note << "observed p=" << phat << " expected p=" << p_expected;
    r.notes = note.str();
    return r;
}

/// Absolute-window check |observed - target| <= window.
inline VerificationReport compare_abs(const std::string& check, const std::string& params,
                                      std::int64_t n, double observed, double target,
                                      double window, std::uint64_t seed) {
    VerificationReport r;
    r.check = check;
    r.parameters = params;
    r.n = n;
    r.statistic = "abs-diff";
    r.observed = std::fabs(observed - target);
    r.threshold = window;
    r.pass = r.observed <= window;
    r.seed = seed;
    std::ostringstream note;
    note << "observed=" << observed << " target=" << target;
    r.notes = note.str();
    return r;
}

/// Relative-window check |observed/target - 1| <= window.
inline VerificationReport compare_rel(const std::string& check, const std::string& params,
                                      std::int64_t n, double observed, double target,
                                      double window, std::uint64_t seed) {
    VerificationReport r;
    r.check = check;
    r.parameters = params;
    r.n = n;
    r.statistic = "rel-diff";
    r.observed = std::fabs(observed / target - 1.0);
    r.threshold = window;
    r.pass = r.observed <= window;
    r.seed = seed;
    std::ostringstream note;
    note << "observed=" << observed << " target=" << target;
    r.notes = note.str();
    return r;
}

inline std::string summary_line(const VerificationReport& r) {
    std::ostringstream os;
    os << (r.pass ? "PASS" : "FAIL") << " " << r.check << " [" << r.statistic
       << " observed=" << r.observed << " threshold=" << r.threshold << " n=" << r.n << "]";
    if (!r.notes.empty()) os << " " << r.notes;
    return os.str();
}

}  // namespace overlap
