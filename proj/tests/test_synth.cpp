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
#include <set>

#include "a2g/baselines.hpp"
#include "a2g/dataset.hpp"
#include "a2g/synth.hpp"

using namespace a2g;

TEST_CASE("default scenario yields the expected corpus size") {
    const Dataset ds = generate_synth(SynthScenario{});
    // 9 radii x 7 altitudes x 36 azimuths
    REQUIRE(ds.size() == 9 * 7 * 36);
}

TEST_CASE("generation is deterministic in the seed") {
    SynthScenario sc;
    sc.points_per_arc = 6;
    const Dataset a = generate_synth(sc);
    const Dataset b = generate_synth(sc);
    sc.seed = 43;
    const Dataset c = generate_synth(sc);

    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a.samples[i].pl_db == b.samples[i].pl_db);
        REQUIRE(a.samples[i].rsrp_dbm == b.samples[i].rsrp_dbm);
    }
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i)
        any_diff |= a.samples[i].pl_db != c.samples[i].pl_db;
    REQUIRE(any_diff);
}

TEST_CASE("every sample sits on a distinct location key") {
    SynthScenario sc;
    sc.points_per_arc = 12;
    const Dataset ds = generate_synth(sc);
    std::set<LocationKey> keys;
    for (const auto& s : ds.samples) keys.insert(location_key(s.position));
    REQUIRE(keys.size() == ds.size());
}

TEST_CASE("KPIs satisfy their defining relations") {
    SynthScenario sc;
    sc.points_per_arc = 8;
    const Dataset ds = generate_synth(sc);
    for (const auto& s : ds.samples) {
        REQUIRE(s.rsrp_dbm == Catch::Approx(sc.tx_power_dbm - s.pl_db).epsilon(1e-12));
        REQUIRE(s.rssi_dbm > s.rsrp_dbm);  // wideband power exceeds per-RB power
        // rsrq = 10 log10(N) - (rssi - rsrp) with N = 50
        REQUIRE(s.rsrq_db == Catch::Approx(10.0 * std::log10(50.0) -
                                           (s.rssi_dbm - s.rsrp_dbm)).epsilon(1e-10));
    }
}

TEST_CASE("path loss follows the planted log-distance law on average") {
    SynthScenario sc;
    sc.noise_sigma_db = 0.0;
    sc.azimuth_gain_db = 0.0;
    sc.points_per_arc = 8;
    const Dataset ds = generate_synth(sc);

    std::vector<double> d3d, pl;
    for (const auto& s : ds.samples) {
        const double d2d = haversine_2d(sc.station.position, s.position);
        d3d.push_back(distance_3d(d2d, s.position.alt_asl_m,
                                  sc.station.position.alt_asl_m));
        pl.push_back(s.pl_db);
    }
    const LnsplFit fit = fit_lnspl(d3d, pl);
    REQUIRE(fit.exponent == Catch::Approx(sc.exponent).margin(1e-6));
    REQUIRE(fit.pl0 == Catch::Approx(sc.pl0_db).margin(1e-4));
    REQUIRE(fit.shadow_sigma < 1e-6);
}

TEST_CASE("geometry covers the configured radius and altitude ranges") {
    SynthScenario sc;
    sc.points_per_arc = 4;
    const Dataset ds = generate_synth(sc);
    double dmin = 1e18, dmax = 0.0, amin = 1e18, amax = -1e18;
    for (const auto& s : ds.samples) {
        const double d2d = haversine_2d(sc.station.position, s.position);
        dmin = std::min(dmin, d2d);
        dmax = std::max(dmax, d2d);
        amin = std::min(amin, s.position.alt_asl_m);
        amax = std::max(amax, s.position.alt_asl_m);
    }
    REQUIRE(dmin == Catch::Approx(sc.radius_min_m).epsilon(0.01));
    REQUIRE(dmax == Catch::Approx(sc.radius_max_m).epsilon(0.01));
    REQUIRE(amin == sc.ground_asl_m + sc.agl_min_m);
    REQUIRE(amax == sc.ground_asl_m + sc.agl_max_m);
}

TEST_CASE("timestamps are unique and ISO-like") {
    SynthScenario sc;
    sc.points_per_arc = 5;
    const Dataset ds = generate_synth(sc);
    std::set<std::string> ts;
    for (const auto& s : ds.samples) {
        ts.insert(s.timestamp);
        REQUIRE(s.timestamp.rfind("2026-01-01T", 0) == 0);
        REQUIRE(s.timestamp.back() == 'Z');
    }
    REQUIRE(ts.size() == ds.size());
}
