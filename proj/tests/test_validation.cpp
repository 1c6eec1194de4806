#include <doctest.h>

#include <cmath>
#include <random>

#include "qjump/errors.hpp"
#include "qjump/validation.hpp"

using namespace qjump;

TEST_CASE("KS statistic against the exponential law") {
    std::mt19937_64 eng(11);
    std::exponential_distribution<double> d(2.0);
    std::vector<double> x(4000);
    for (auto& v : x) v = d(eng);
    const auto [stat, p] = ks_exponential(x, 2.0);
    CHECK(stat < 0.03);
    CHECK(p > 0.01);
    const auto [stat_wrong, p_wrong] = ks_exponential(x, 2.4);
    CHECK(stat_wrong > stat);
    CHECK(p_wrong < 0.01);
    // D for a single sample at the median is 1/2.
    CHECK(ks_exponential({std::log(2.0)}, 1.0).first == doctest::Approx(0.5));
    CHECK_THROWS_AS(ks_exponential({}, 1.0), InvalidArgument);
    CHECK_THROWS_AS(ks_exponential({1.0}, 0.0), InvalidArgument);
}

TEST_CASE("check groups and filtering") {
    CHECK(validation_groups() == std::vector<std::string>{"unravelling", "sho-steady", "poisson", "lyapunov"});
    CHECK_THROWS_AS(run_validation({"bogus"}, {}), InvalidArgument);
    const auto only = run_validation({"lyapunov"}, {});
    REQUIRE(only.size() == 1);
    CHECK(only.front().name == "lyapunov");
    CHECK(only.front().passed);
    CHECK(only.front().metric("lambda_g0.3") > 0.0);
    CHECK_THROWS_AS(only.front().metric("nope"), InvalidArgument);
}

TEST_CASE("Poisson waiting-time check passes and detects a wrong rate") {
    const auto ok = check_poisson({});
    CHECK(ok.passed);
    CHECK(ok.metric("samples") >= 2000);
    ValidationOptions faulty;
    faulty.fault_rate_scale = 0.5;
    CHECK_FALSE(check_poisson(faulty).passed);
}
