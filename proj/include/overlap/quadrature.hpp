#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

namespace overlap {

namespace detail {

// 15-point Kronrod / 7-point Gauss rule on [-1,1] (QUADPACK dqk15 constants).
inline constexpr double kGkNodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0};
inline constexpr double kKronrodWeights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
inline constexpr double kGaussWeights[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

struct Panel {
    double a, b;
    double value;
    double error;
    bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel gk15(const F& f, double a, double b) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    const double fc = f(mid);
    double resk = kKronrodWeights[7] * fc;
    double resg = kGaussWeights[3] * fc;
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kGkNodes[j];
        const double f1 = f(mid - dx);
        const double f2 = f(mid + dx);
        resk += kKronrodWeights[j] * (f1 + f2);
        if (j % 2 == 1) resg += kGaussWeights[j / 2] * (f1 + f2);
    }
    Panel p;
    p.a = a;
    p.b = b;
    p.value = resk * half;
    p.error = std::fabs((resk - resg) * half);
    return p;
}

}  // namespace detail

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    int panels = 0;
};

inline constexpr int kDefaultMaxPanels = 4000;

/// Globally adaptive Gauss-Kronrod integration of f over [a,b] to an absolute
/// tolerance. Splits the worst panel first; stops at max_panels (documented
/// panel limit) and returns the best available estimate.
template <class F>
QuadratureResult integrate_full(const F& f, double a, double b,
                                double abs_tol = 1e-8,
                                int max_panels = kDefaultMaxPanels) {
    QuadratureResult out;
    if (a == b) return out;
    if (!(a < b)) throw std::domain_error("integrate: need a <= b");
    std::priority_queue<detail::Panel> heap;
    detail::Panel first = detail::gk15(f, a, b);
    double total = first.value;
    double err = first.error;
    heap.push(first);
    int panels = 1;
    const double min_width = (b - a) * 1e-14;
    while (err > abs_tol && panels < max_panels) {
        detail::Panel worst = heap.top();
        if (worst.b - worst.a < min_width) break;
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        detail::Panel left = detail::gk15(f, worst.a, mid);
        detail::Panel right = detail::gk15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++panels;
    }
    out.value = total;
    out.error = err;
    out.panels = panels;
    return out;
}

template <class F>
double integrate(const F& f, double a, double b, double abs_tol = 1e-8,
                 int max_panels = kDefaultMaxPanels) {
    return integrate_full(f, a, b, abs_tol, max_panels).value;
}

/// Integration with known interior kinks or jumps of the integrand: the range
/// is pre-split at each kink so every panel sees a smooth piece.
template <class F>
double integrate_with_kinks(const F& f, double a, double b,
                            std::vector<double> kinks, double abs_tol = 1e-8,
                            int max_panels = kDefaultMaxPanels) {
    kinks.push_back(a);
    kinks.push_back(b);
    std::sort(kinks.begin(), kinks.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < kinks.size(); ++i) {
        const double lo = std::max(a, kinks[i]);
        const double hi = std::min(b, kinks[i + 1]);
        if (hi - lo <= 0.0) continue;
        total += integrate(f, lo, hi, abs_tol / std::max<std::size_t>(kinks.size(), 2),
                           max_panels / 2);
    }
    return total;
}

/// Semi-infinite integral of f over [a, inf) for integrands with (at least)
/// exponential decay at the known rate. Transformed by the exponential change
/// of variable x = a - s*ln(1-u), s = 2/decay_rate, then integrated adaptively
/// on the unit interval.
template <class F>
double integrate_exp_tail(const F& f, double a, double decay_rate,
                          double abs_tol = 1e-8,
                          int max_panels = kDefaultMaxPanels) {
    if (!(decay_rate > 0.0))
        throw std::domain_error("integrate_exp_tail: decay rate must be positive");
    const double s = 2.0 / decay_rate;
    auto g = [&](double u) {
        const double one_minus = 1.0 - u;
        const double x = a - s * std::log(one_minus);
        return f(x) * s / one_minus;
    };
    return integrate(g, 0.0, 1.0, abs_tol, max_panels);
}

/// Adaptive panel decomposition driven by f, for reuse as a fixed rule: returns
/// the panel endpoints after adapting to f at the given tolerance.
template <class F>
std::vector<std::pair<double, double>> adaptive_panels(
    const F& f, double a, double b, double abs_tol = 1e-10,
    int max_panels = kDefaultMaxPanels) {
    std::priority_queue<detail::Panel> heap;
    heap.push(detail::gk15(f, a, b));
    double err = heap.top().error;
    int panels = 1;
    const double min_width = (b - a) * 1e-14;
    while (err > abs_tol && panels < max_panels) {
        detail::Panel worst = heap.top();
        if (worst.b - worst.a < min_width) break;
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        detail::Panel left = detail::gk15(f, worst.a, mid);
        detail::Panel right = detail::gk15(f, mid, worst.b);
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++panels;
    }
    std::vector<std::pair<double, double>> out;
    out.reserve(static_cast<std::size_t>(panels));
    while (!heap.empty()) {
        out.emplace_back(heap.top().a, heap.top().b);
        heap.pop();
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// The 15 Kronrod nodes and weights of a single panel [a,b], for building
/// fixed rules from an adapted partition.
inline std::vector<std::pair<double, double>> gk15_nodes(double a, double b) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    std::vector<std::pair<double, double>> nw;
    nw.reserve(15);
    nw.emplace_back(mid, detail::kKronrodWeights[7] * half);
    for (int j = 0; j < 7; ++j) {
        const double dx = half * detail::kGkNodes[j];
        const double w = detail::kKronrodWeights[j] * half;
        nw.emplace_back(mid - dx, w);
        nw.emplace_back(mid + dx, w);
    }
    return nw;
}

}  // namespace overlap
