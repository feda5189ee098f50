#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "overlap/analytic.hpp"
#include "overlap/dist.hpp"
#include "overlap/rng.hpp"

namespace overlap {

// ---------------------------------------------------------------------------
// Arrival processes
// ---------------------------------------------------------------------------

struct PoissonConstant {
    double rate;
};

struct PoissonProfile {
    RateProfile profile;
};

struct RenewalArrivals {
    DistSpec interarrival;
};

using ArrivalSpec = std::variant<PoissonConstant, PoissonProfile, RenewalArrivals>;

inline void validate(const ArrivalSpec& spec) {
    std::visit(detail::Overloaded{
                   [](const PoissonConstant& p) {
                       if (!(p.rate > 0.0))
                           throw std::invalid_argument("PoissonConstant: rate must be positive");
                   },
                   [](const PoissonProfile& p) {
                       p.profile.validate();
                       if (!(p.profile.max_rate() > 0.0))
                           throw std::invalid_argument("PoissonProfile: max rate must be positive");
                   },
                   [](const RenewalArrivals& r) {
                       validate(r.interarrival);
                       if (!(mean(r.interarrival) > 0.0))
                           throw std::invalid_argument(
                               "RenewalArrivals: inter-arrival mean must be positive");
                   }},
               spec);
}

/// Sequential arrival epochs of one replication. Nonhomogeneous Poisson
/// arrivals are generated exactly by thinning against the profile's max rate.
class ArrivalGenerator {
public:
    ArrivalGenerator(const ArrivalSpec& spec, RandomStream rs) : spec_(&spec), rs_(rs) {}

    /// Next arrival epoch. For thinned streams, returns early (with an epoch
    /// past the bound, to be discarded) once candidates exceed `give_up_after`.
    double next(double give_up_after = kInf) {
        return std::visit(
            detail::Overloaded{
                [&](const PoissonConstant& p) {
                    t_ += -std::log(rs_.uniform()) / p.rate;
                    return t_;
                },
                [&](const PoissonProfile& p) {
                    const double lmax = p.profile.max_rate();
                    for (;;) {
                        t_ += -std::log(rs_.uniform()) / lmax;
                        if (t_ > give_up_after) return t_;
                        if (rs_.uniform() * lmax <= p.profile.rate_at(t_)) return t_;
                    }
                },
                [&](const RenewalArrivals& r) {
                    t_ += sample(r.interarrival, rs_);
                    return t_;
                }},
            *spec_);
    }

private:
    const ArrivalSpec* spec_;
    RandomStream rs_;
    double t_ = 0.0;
};

// ---------------------------------------------------------------------------
// Run configuration and records
// ---------------------------------------------------------------------------

struct RunConfig {
    ArrivalSpec arrival = PoissonConstant{1.0};
    DistSpec service = Exponential{1.0};
    std::optional<std::int64_t> stop_customers;
    std::optional<double> stop_horizon;
    std::optional<double> warmup_time;
    std::optional<std::int64_t> warmup_customers;
    std::uint64_t seed = 1;
    std::int64_t replications = 1;

    void validate() const {
        overlap::validate(arrival);
        overlap::validate(service);
        if (stop_customers.has_value() == stop_horizon.has_value())
            throw std::invalid_argument("RunConfig: exactly one stop rule required");
        if (stop_customers && *stop_customers < 1)
            throw std::invalid_argument("RunConfig: stop customer count must be >= 1");
        if (stop_horizon && !(*stop_horizon > 0.0))
            throw std::invalid_argument("RunConfig: stop horizon must be positive");
        if (warmup_time && warmup_customers)
            throw std::invalid_argument("RunConfig: at most one warmup rule");
        if (warmup_time && stop_horizon && !(*warmup_time < *stop_horizon))
            throw std::invalid_argument("RunConfig: warmup must precede the stop horizon");
        if (warmup_customers && stop_customers && !(*warmup_customers < *stop_customers))
            throw std::invalid_argument("RunConfig: warmup must precede the stop count");
        if (replications < 1) throw std::invalid_argument("RunConfig: replications must be >= 1");
    }
};

struct CustomerRecord {
    std::int64_t index;  // 1-based arrival order
    double arrival;
    double service;
    double departure;  // arrival + service, exactly
};

/// One replication of the arrival-driven GI/G/inf simulation. No customer
/// waits, so departures are known at arrival and records come out in arrival
/// order. Bit-identical for the same (seed, replication).
inline std::vector<CustomerRecord> run(const RunConfig& config, std::int64_t replication = 0) {
    config.validate();
    RandomStream arrivals_rs(config.seed, static_cast<std::uint64_t>(replication),
                             stream_id::kArrivals);
    RandomStream services_rs(config.seed, static_cast<std::uint64_t>(replication),
                             stream_id::kServices);
    ArrivalGenerator gen(config.arrival, arrivals_rs);
    std::vector<CustomerRecord> out;
    if (config.stop_customers) out.reserve(static_cast<std::size_t>(*config.stop_customers));
    std::int64_t index = 0;
    const double horizon = config.stop_horizon.value_or(kInf);
    for (;;) {
        if (config.stop_customers && index >= *config.stop_customers) break;
        const double a = gen.next(horizon);
        if (a > horizon) break;
        const double s = sample(config.service, services_rs);
        ++index;
        out.push_back({index, a, s, a + s});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Overlap-time extraction
// ---------------------------------------------------------------------------

struct OverlapSample {
    std::int64_t n;  // index of the earlier customer
    int k;           // lag
    double value;
};

/// Pairwise overlap times O_{n,n+k} = ((S_n - (A_{n+k} - A_n))^+ ^ S_{n+k}).
inline std::vector<OverlapSample> overlap_pairs(std::span<const CustomerRecord> records, int k) {
    if (k < 1) throw std::domain_error("overlap_pairs: k must be >= 1");
    std::vector<OverlapSample> out;
    if (records.size() <= static_cast<std::size_t>(k)) return out;
    out.reserve(records.size() - static_cast<std::size_t>(k));
    for (std::size_t i = 0; i + static_cast<std::size_t>(k) < records.size(); ++i) {
        const auto& earlier = records[i];
        const auto& later = records[i + static_cast<std::size_t>(k)];
        const double residual = std::max(earlier.service - (later.arrival - earlier.arrival), 0.0);
        out.push_back({earlier.index, k, std::min(residual, later.service)});
    }
    return out;
}

/// Default burn-in (in customers) for steady-state overlap-pair statistics.
inline std::int64_t default_burnin(double lambda, double mu) {
    return std::max<std::int64_t>(
        1000, static_cast<std::int64_t>(std::ceil(10.0 / std::min(lambda, mu))));
}

// ---------------------------------------------------------------------------
// Overlap-count extraction
// ---------------------------------------------------------------------------

struct CountSample {
    std::int64_t index;
    std::int64_t upon;    // customers already present at arrival
    std::int64_t during;  // arrivals within the service window
    std::int64_t total;   // upon + during
};

struct ResidualCountSample {
    std::int64_t index;
    std::int64_t upon;    // present customers whose remaining overlap lasts >= delta
    std::int64_t during;  // window arrivals with own service >= delta (the Z component)
    std::int64_t total;
    std::int64_t window;  // all arrivals in the truncated window: N((S-delta)^+)
};

/// Which simulated customers become tagged observations.
struct TagFilter {
    std::optional<double> warmup_time;
    std::optional<std::int64_t> warmup_customers;
    // Customers whose service extends past this epoch are censored (default:
    // the last simulated arrival).
    std::optional<double> censor_horizon;
};

namespace detail {

class Fenwick {
public:
    explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}
    void add(std::size_t i) {
        for (++i; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
    }
    std::int64_t prefix(std::size_t count) const {  // sum of first `count` slots
        std::int64_t s = 0;
        for (std::size_t i = count; i > 0; i -= i & (~i + 1)) s += tree_[i];
        return s;
    }

private:
    std::vector<std::int64_t> tree_;
};

}  // namespace detail

/// Per-customer overlap counts: upon-arrival (present customers), during-service
/// (arrivals in the half-open window (A, A+S]), and their total.
inline std::vector<CountSample> count_overlaps(std::span<const CustomerRecord> records,
                                               const TagFilter& filter = {}) {
    std::vector<CountSample> out;
    if (records.empty()) return out;
    std::vector<double> arrivals;
    arrivals.reserve(records.size());
    for (const auto& r : records) arrivals.push_back(r.arrival);
    const double censor = filter.censor_horizon.value_or(records.back().arrival);
    std::priority_queue<double, std::vector<double>, std::greater<>> in_system;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        while (!in_system.empty() && in_system.top() <= r.arrival) in_system.pop();
        const auto upon = static_cast<std::int64_t>(in_system.size());
        const auto past_window =
            std::upper_bound(arrivals.begin(), arrivals.end(), r.departure) - arrivals.begin();
        const auto during = static_cast<std::int64_t>(past_window) - static_cast<std::int64_t>(i) - 1;
        in_system.push(r.departure);
        if (filter.warmup_time && r.arrival < *filter.warmup_time) continue;
        if (filter.warmup_customers && static_cast<std::int64_t>(i) < *filter.warmup_customers)
            continue;
        if (r.departure > censor) continue;
        out.push_back({r.index, upon, during, upon + during});
    }
    return out;
}

/// Residual overlap counts O(t,delta) per tagged customer. The during-service
/// term counts window arrivals whose own service lasts at least delta; the
/// upon-arrival term counts present customers with remaining sojourn at least
/// delta, gated by the tagged service lasting delta itself. delta = 0
/// reproduces count_overlaps exactly.
inline std::vector<ResidualCountSample> count_residual_overlaps(
    std::span<const CustomerRecord> records, double delta, const TagFilter& filter = {}) {
    if (delta < 0.0) throw std::domain_error("count_residual_overlaps: delta must be nonnegative");
    std::vector<ResidualCountSample> out;
    if (records.empty()) return out;
    std::vector<double> arrivals;
    arrivals.reserve(records.size());
    for (const auto& r : records) arrivals.push_back(r.arrival);
    // Rank departures once; ties get distinct slots in arrival order.
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return records[a].departure != records[b].departure
                   ? records[a].departure < records[b].departure
                   : a < b;
    });
    std::vector<double> departures_sorted(records.size());
    std::vector<std::size_t> slot_of(records.size());
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        departures_sorted[rank] = records[order[rank]].departure;
        slot_of[order[rank]] = rank;
    }
    detail::Fenwick seen(departures_sorted.size());
    const double censor = filter.censor_horizon.value_or(records.back().arrival);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        // upon: among the i customers already inserted, those with D >= A_i + delta
        // (strictly > A_i when delta is 0).
        std::int64_t upon = 0;
        {
            const double threshold = r.arrival + delta;
            const auto below =
                delta == 0.0
                    ? std::upper_bound(departures_sorted.begin(), departures_sorted.end(), threshold)
                    : std::lower_bound(departures_sorted.begin(), departures_sorted.end(), threshold);
            upon = static_cast<std::int64_t>(i) -
                   seen.prefix(static_cast<std::size_t>(below - departures_sorted.begin()));
        }
        seen.add(slot_of[i]);
        const bool gate = delta == 0.0 || r.service >= delta;
        const double window_end = r.arrival + std::max(r.service - delta, 0.0);
        const auto past_window =
            std::upper_bound(arrivals.begin(), arrivals.end(), window_end) - arrivals.begin();
        std::int64_t window = static_cast<std::int64_t>(past_window) - static_cast<std::int64_t>(i) - 1;
        std::int64_t during = 0;
        for (std::size_t j = i + 1; j < static_cast<std::size_t>(past_window); ++j)
            if (records[j].service >= delta) ++during;
        if (!gate) upon = 0;
        if (filter.warmup_time && r.arrival < *filter.warmup_time) continue;
        if (filter.warmup_customers && static_cast<std::int64_t>(i) < *filter.warmup_customers)
            continue;
        if (r.departure > censor) continue;
        out.push_back({r.index, upon, during, upon + during, window});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Queue-length path
// ---------------------------------------------------------------------------

/// Step path Q(t) = #{j : A_j < t < D_j}, evaluated exactly per the defining sum.
class QueuePath {
public:
    explicit QueuePath(std::span<const CustomerRecord> records) {
        arrivals_.reserve(records.size());
        departures_.reserve(records.size());
        sojourns_.reserve(records.size());
        for (const auto& r : records) {
            arrivals_.push_back(r.arrival);
            departures_.push_back(r.departure);
            sojourns_.emplace_back(r.arrival, r.departure);
        }
        std::sort(arrivals_.begin(), arrivals_.end());
        std::sort(departures_.begin(), departures_.end());
    }

    std::int64_t value_at(double t) const {
        const auto arrived =
            std::lower_bound(arrivals_.begin(), arrivals_.end(), t) - arrivals_.begin();
        const auto departed =
            std::upper_bound(departures_.begin(), departures_.end(), t) - departures_.begin();
        return static_cast<std::int64_t>(arrived) - static_cast<std::int64_t>(departed);
    }

    /// Time average of the path over [t0, t1]: sum of clipped sojourns / (t1-t0).
    double time_average(double t0, double t1) const {
        if (!(t1 > t0)) throw std::domain_error("QueuePath::time_average: need t0 < t1");
        double integral = 0.0;
        for (const auto& [a, d] : sojourns_)
            integral += std::max(0.0, std::min(d, t1) - std::max(a, t0));
        return integral / (t1 - t0);
    }

private:
    std::vector<double> arrivals_;
    std::vector<double> departures_;
    std::vector<std::pair<double, double>> sojourns_;
};

inline QueuePath queue_length_path(std::span<const CustomerRecord> records) {
    return QueuePath(records);
}

// ---------------------------------------------------------------------------
// Time-centered virtual tags
// ---------------------------------------------------------------------------

/// Samples the time-centered overlap count O(t) (or its residual O(t,delta))
/// by injecting a virtual tagged arrival at `epoch` with an independent service
/// draw, in fresh replications started empty at time 0.
inline std::vector<ResidualCountSample> sample_virtual_tags(
    const ArrivalSpec& arrival, const DistSpec& cohort_service, const DistSpec& tag_service,
    double epoch, double delta, std::uint64_t seed, std::int64_t replications) {
    validate(arrival);
    validate(cohort_service);
    validate(tag_service);
    if (!(epoch >= 0.0)) throw std::domain_error("sample_virtual_tags: epoch must be nonnegative");
    if (delta < 0.0) throw std::domain_error("sample_virtual_tags: delta must be nonnegative");
    if (replications < 1)
        throw std::invalid_argument("sample_virtual_tags: replications must be >= 1");
    std::vector<ResidualCountSample> out;
    out.reserve(static_cast<std::size_t>(replications));
    for (std::int64_t rep = 0; rep < replications; ++rep) {
        RandomStream tag_rs(seed, static_cast<std::uint64_t>(rep), stream_id::kTagOwnService);
        RandomStream svc_rs(seed, static_cast<std::uint64_t>(rep), stream_id::kTagServices);
        RandomStream arr_rs(seed, static_cast<std::uint64_t>(rep), stream_id::kTagArrivals);
        const double tag_service_time = sample(tag_service, tag_rs);
        const bool gate = delta == 0.0 || tag_service_time >= delta;
        const double window_end = epoch + std::max(tag_service_time - delta, 0.0);
        ArrivalGenerator gen(arrival, arr_rs);
        std::int64_t upon = 0, during = 0, window = 0;
        for (;;) {
            const double a = gen.next(window_end);
            if (a > window_end) break;
            const double s = sample(cohort_service, svc_rs);
            if (a < epoch) {
                const bool counted = delta == 0.0 ? a + s > epoch : a + s >= epoch + delta;
                if (counted) ++upon;
            } else if (a > epoch) {
                ++window;
                if (s >= delta) ++during;
            }
        }
        if (!gate) upon = 0;
        out.push_back({rep, upon, during, upon + during, window});
    }
    return out;
}

}  // namespace overlap
