/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "a2g/metrics.hpp"
#include "a2g/rng.hpp"

using namespace a2g::metrics;

namespace {

struct Oracle {
    double mse, rmse, mae, maape, r, r2;
};

/// Straight-loop implementations, independent of the library code paths.
Oracle straight_loop(const std::vector<double>& a, const std::vector<double>& p) {
    const std::size_t n = a.size();
    Oracle o{};
    for (std::size_t i = 0; i < n; ++i) {
        o.mse += (a[i] - p[i]) * (a[i] - p[i]);
        o.mae += std::fabs(a[i] - p[i]);
        o.maape += std::atan(std::fabs((p[i] - a[i]) / a[i]));
    }
    o.mse /= n;
    o.rmse = std::sqrt(o.mse);
    o.mae /= n;
    o.maape = o.maape / n * 100.0;
    double ma = 0, mp = 0;
    for (std::size_t i = 0; i < n; ++i) { ma += a[i]; mp += p[i]; }
    ma /= n; mp /= n;
    double sap = 0, saa = 0, spp = 0, ssr = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sap += (a[i] - ma) * (p[i] - mp);
        saa += (a[i] - ma) * (a[i] - ma);
        spp += (p[i] - mp) * (p[i] - mp);
        ssr += (a[i] - p[i]) * (a[i] - p[i]);
    }
    o.r = sap / std::sqrt(saa * spp);
    o.r2 = 1.0 - ssr / saa;
    return o;
}

bool close_rel(double x, double y, double tol) {
    return std::fabs(x - y) <= tol * std::max({1.0, std::fabs(x), std::fabs(y)});
}

}  // namespace

TEST_CASE("all six metrics match the straight-loop oracle on 1000 random pairs") {
    a2g::RngStream rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.next_below(40);
        std::vector<double> a(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            // keep actuals away from zero so maape is defined
            a[i] = (rng.next_double() < 0.5 ? -1.0 : 1.0) *
                   (0.5 + 100.0 * rng.next_double());
            p[i] = a[i] + 10.0 * (rng.next_double() - 0.5);
        }
        // reject degenerate draws the metrics legitimately refuse
        bool degenerate = true;
        for (std::size_t i = 1; i < n; ++i)
            if (a[i] != a[0] || p[i] != p[0]) { degenerate = false; break; }
        if (degenerate) continue;
        bool var_a = false, var_p = false;
        for (std::size_t i = 1; i < n; ++i) {
            var_a |= a[i] != a[0];
            var_p |= p[i] != p[0];
        }
        if (!var_a || !var_p) continue;

        const Oracle o = straight_loop(a, p);
        REQUIRE(close_rel(mse(a, p), o.mse, 1e-10));
        REQUIRE(close_rel(rmse(a, p), o.rmse, 1e-10));
        REQUIRE(close_rel(mae(a, p), o.mae, 1e-10));
        REQUIRE(close_rel(maape(a, p), o.maape, 1e-10));
        REQUIRE(close_rel(pearson_r(a, p), o.r, 1e-10));
        REQUIRE(close_rel(r_squared(a, p), o.r2, 1e-10));
    }
}

TEST_CASE("maape hand case: error ratio 1 gives arctan(1)*100") {
    // |P - y| / |y| = 1 for every element
    std::vector<double> a{1.0, 2.0, -3.0};
    std::vector<double> p{2.0, 4.0, -6.0};
    REQUIRE(std::fabs(maape(a, p) - 78.53981633974483) < 1e-8);
}

TEST_CASE("maape is bounded above by 100*pi/2") {
    std::vector<double> a{1e-9, 1e-9};
    std::vector<double> p{1e9, -1e9};
    // arctan saturates at pi/2 in double precision for extreme ratios
    REQUIRE(maape(a, p) <= 100.0 * M_PI / 2.0);
}

TEST_CASE("perfect predictions score zero error and unit agreement") {
    std::vector<double> a{1.0, 2.0, 3.0, 4.0};
    REQUIRE(mse(a, a) == 0.0);
    REQUIRE(mae(a, a) == 0.0);
    REQUIRE(maape(a, a) == 0.0);
    REQUIRE(pearson_r(a, a) == Catch::Approx(1.0).epsilon(1e-14));
    REQUIRE(r_squared(a, a) == 1.0);
}

TEST_CASE("r_squared can go negative for worse-than-mean predictions") {
    std::vector<double> a{1.0, 2.0, 3.0};
    std::vector<double> p{10.0, -10.0, 30.0};
    REQUIRE(r_squared(a, p) < 0.0);
}

TEST_CASE("named exceptions for invalid inputs") {
    std::vector<double> a{1.0, 2.0}, b{1.0};
    std::vector<double> empty;
    REQUIRE_THROWS_AS(mse(a, b), LengthMismatchError);
    REQUIRE_THROWS_AS(mae(empty, empty), EmptyInputError);
    std::vector<double> flat{2.0, 2.0}, other{1.0, 3.0};
    REQUIRE_THROWS_AS(pearson_r(flat, other), ZeroVarianceError);
    REQUIRE_THROWS_AS(r_squared(flat, other), ZeroVarianceError);
    std::vector<double> with_zero{0.0, 1.0}, pred{1.0, 1.0};
    REQUIRE_THROWS_AS(maape(with_zero, pred), ZeroActualError);
}

TEST_CASE("EvalReport CSV layout") {
    std::vector<double> a{1.0, 2.0, 3.0, 4.0};
    std::vector<double> p{1.1, 1.9, 3.2, 3.9};
    const EvalReport rep = evaluate(a, p);
    REQUIRE(EvalReport::csv_header() == "kpi,set,mse,rmse,mae,maape_pct,r,r2");
    const std::string row = rep.csv_row("PL", "test");
    REQUIRE(row.rfind("PL,test,", 0) == 0);
    REQUIRE(rep.n == 4);
    REQUIRE(rep.rmse == Catch::Approx(std::sqrt(rep.mse)).epsilon(1e-14));
}
