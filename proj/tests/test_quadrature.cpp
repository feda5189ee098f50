#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "overlap/quadrature.hpp"

using namespace overlap;

TEST_CASE("polynomials and smooth integrands") {
    CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0) ==
          Catch::Approx(1.0 / 3.0).epsilon(1e-13));
    CHECK(integrate([](double x) { return std::sin(x); }, 0.0, 3.14159265358979323846) ==
          Catch::Approx(2.0).epsilon(1e-12));
    CHECK(integrate([](double x) { return std::exp(-x); }, 0.0, 30.0) ==
          Catch::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("adaptivity on a sharp peak") {
    // integral of a narrow Gaussian over [-1, 1] is essentially sqrt(pi) * w
    const double w = 1e-3;
    const double value = integrate(
        [w](double x) { return std::exp(-x * x / (w * w)); }, -1.0, 1.0, 1e-12, 20000);
    CHECK(value == Catch::Approx(std::sqrt(3.14159265358979323846) * w).epsilon(1e-9));
}

TEST_CASE("kink-aware splitting") {
    auto f = [](double x) { return x < 0.3 ? 1.0 : 0.0; };  // jump at 0.3
    CHECK(integrate_with_kinks(f, 0.0, 1.0, {0.3}) == Catch::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("semi-infinite exponential tails") {
    CHECK(integrate_exp_tail([](double x) { return std::exp(-x); }, 0.0, 1.0) ==
          Catch::Approx(1.0).epsilon(1e-10));
    // slower decay with the matching hint
    CHECK(integrate_exp_tail([](double x) { return 0.25 * std::exp(-0.25 * x); }, 0.0, 0.25) ==
          Catch::Approx(1.0).epsilon(1e-9));
    // shifted lower limit
    CHECK(integrate_exp_tail([](double x) { return std::exp(-2.0 * x); }, 1.0, 2.0) ==
          Catch::Approx(0.5 * std::exp(-2.0)).epsilon(1e-10));
}

TEST_CASE("panel rule export is consistent with direct integration") {
    auto f = [](double x) { return std::cos(3.0 * x) + 1.2; };
    const double direct = integrate(f, 0.0, 2.0, 1e-12);
    double by_nodes = 0.0;
    for (const auto& [a, b] : adaptive_panels(f, 0.0, 2.0, 1e-12))
        for (const auto& [x, w] : gk15_nodes(a, b)) by_nodes += w * f(x);
    CHECK(by_nodes == Catch::Approx(direct).epsilon(1e-11));
    // weights of one panel sum to its width
    double wsum = 0.0;
    for (const auto& [x, w] : gk15_nodes(2.0, 5.0)) wsum += w;
    CHECK(wsum == Catch::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("argument validation") {
    CHECK(integrate([](double) { return 1.0; }, 2.0, 2.0) == 0.0);
    CHECK_THROWS_AS(integrate([](double) { return 1.0; }, 3.0, 2.0), std::domain_error);
    CHECK_THROWS_AS(integrate_exp_tail([](double) { return 1.0; }, 0.0, 0.0), std::domain_error);
}
