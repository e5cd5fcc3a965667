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

#include "a2g/geo.hpp"
#include "a2g/rng.hpp"

using namespace a2g;

namespace {

/// Independent spherical oracle: law-of-cosines great-circle distance.
double law_of_cosines_distance(const GeoPoint& a, const GeoPoint& b) {
    const double p1 = a.lat_deg * kDegToRad;
    const double p2 = b.lat_deg * kDegToRad;
    const double dl = (b.lon_deg - a.lon_deg) * kDegToRad;
    double c = std::sin(p1) * std::sin(p2) + std::cos(p1) * std::cos(p2) * std::cos(dl);
    c = std::min(1.0, std::max(-1.0, c));
    return kEarthRadiusM * std::acos(c);
}

}  // namespace

TEST_CASE("haversine equatorial 0.001 degree is ~111.195 m") {
    GeoPoint a{0.0, 0.0, 0.0}, b{0.0, 0.001, 0.0};
    const double d = haversine_2d(a, b);
    const double oracle = law_of_cosines_distance(a, b);
    // 0.001 deg of arc at R = 6371 km: 6371000 * 0.001 * pi/180
    REQUIRE(d == Catch::Approx(111.19492664).margin(1e-3));
    REQUIRE(std::abs(d - oracle) < 1e-3);  // within 1 mm
}

TEST_CASE("haversine agrees with the law-of-cosines oracle at random points") {
    RngStream rng(11);
    for (int i = 0; i < 200; ++i) {
        GeoPoint a{-60.0 + 120.0 * rng.next_double(),
                   -179.0 + 358.0 * rng.next_double(), 0.0};
        // offsets up to ~0.1 deg keep the oracle's acos well conditioned
        GeoPoint b{a.lat_deg + 0.001 + 0.1 * rng.next_double(),
                   a.lon_deg + 0.001 + 0.1 * rng.next_double(), 0.0};
        const double d = haversine_2d(a, b);
        const double oracle = law_of_cosines_distance(a, b);
        REQUIRE(std::abs(d - oracle) < 1e-3);
    }
}

TEST_CASE("haversine is symmetric and zero at coincidence") {
    GeoPoint a{3.2, 101.4, 0.0}, b{3.25, 101.5, 0.0};
    REQUIRE(haversine_2d(a, b) == Catch::Approx(haversine_2d(b, a)).epsilon(1e-14));
    REQUIRE(haversine_2d(a, a) == 0.0);
}

TEST_CASE("distance_3d handles the 3-4-5 triangle exactly") {
    REQUIRE(distance_3d(3.0, 4.0, 0.0) == 5.0);
    REQUIRE(distance_3d(3.0, 0.0, 4.0) == 5.0);
    REQUIRE(distance_3d(0.0, 7.0, 2.0) == 5.0);
    REQUIRE_THROWS_AS(distance_3d(-1.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("elevation angle cases") {
    // equal heights, flat look with tilt offset
    REQUIRE(elevation_angle(10.0, 10.0, 100.0, 0.0) == 0.0);
    REQUIRE(elevation_angle(10.0, 10.0, 100.0, 4.0) == 4.0);
    // 45 degrees up
    REQUIRE(elevation_angle(110.0, 10.0, 100.0, 0.0) == Catch::Approx(45.0).epsilon(1e-12));
    // directly overhead
    REQUIRE(elevation_angle(50.0, 10.0, 0.0, 0.0) == Catch::Approx(90.0).epsilon(1e-12));
    // directly below
    REQUIRE(elevation_angle(10.0, 50.0, 0.0, 0.0) == Catch::Approx(-90.0).epsilon(1e-12));
    // coincident point is undefined
    REQUIRE_THROWS_AS(elevation_angle(10.0, 10.0, 0.0, 0.0), std::domain_error);
}

TEST_CASE("azimuth cardinal directions") {
    GeoPoint bs{10.0, 20.0, 0.0};
    REQUIRE(azimuth_angle(bs, {10.1, 20.0, 0.0}) == Catch::Approx(0.0).margin(1e-9));
    REQUIRE(azimuth_angle(bs, {10.0, 20.1, 0.0}) == Catch::Approx(90.0).margin(0.01));
    REQUIRE(azimuth_angle(bs, {9.9, 20.0, 0.0}) == Catch::Approx(180.0).margin(1e-9));
    REQUIRE(azimuth_angle(bs, {10.0, 19.9, 0.0}) == Catch::Approx(270.0).margin(0.01));
}

TEST_CASE("azimuth range is [0, 360) and coincidence throws") {
    GeoPoint bs{3.0, 101.5, 0.0};
    RngStream rng(5);
    for (int i = 0; i < 100; ++i) {
        GeoPoint uav{3.0 + (rng.next_double() - 0.5), 101.5 + (rng.next_double() - 0.5), 0.0};
        if (haversine_2d(bs, uav) < kCoincidentEpsM) continue;
        const double az = azimuth_angle(bs, uav);
        REQUIRE(az >= 0.0);
        REQUIRE(az < 360.0);
    }
    REQUIRE_THROWS_AS(azimuth_angle(bs, GeoPoint{3.0, 101.5, 250.0}), std::domain_error);
}

TEST_CASE("featurize produces consistent features") {
    StationConfig st{{3.0, 101.5, 85.0}, 4.0, 2.6e9, 65.0, 10.0};
    GeoPoint uav{3.003, 101.5, 135.0};

    const FeatureVector f = featurize(st, uav);
    const double d2d = haversine_2d(st.position, uav);
    const double d3d = distance_3d(d2d, uav.alt_asl_m, st.position.alt_asl_m);
    REQUIRE(f.log10_d2d == Catch::Approx(std::log10(d2d)).epsilon(1e-12));
    REQUIRE(f.log10_d3d == Catch::Approx(std::log10(d3d)).epsilon(1e-12));
    REQUIRE(f.log10_d3d >= f.log10_d2d);
    REQUIRE(f.azimuth_deg == Catch::Approx(0.0).margin(1e-6));
    REQUIRE(f.elevation_deg ==
            Catch::Approx(std::atan2(50.0, d2d) * kRadToDeg + 4.0).epsilon(1e-9));
}

TEST_CASE("featurize clamps short distances by min_distance") {
    StationConfig st{{3.0, 101.5, 85.0}, 0.0, 2.6e9, 65.0, 10.0};
    GeoPoint uav{3.0000001, 101.5, 85.0};  // ~1 cm away horizontally
    const FeatureVector f = featurize(st, uav, 1.0);
    REQUIRE(f.log10_d2d == 0.0);  // log10(max(d, 1))
    REQUIRE(f.log10_d3d == 0.0);
    REQUIRE_THROWS_AS(featurize(st, uav, 0.0), std::invalid_argument);
}

TEST_CASE("featurize rejects invalid geometry") {
    StationConfig st{{3.0, 101.5, 85.0}, 4.0, 2.6e9, 65.0, 10.0};
    REQUIRE_THROWS_AS(featurize(st, GeoPoint{91.0, 0.0, 0.0}), std::invalid_argument);
    StationConfig bad = st;
    bad.carrier_frequency_hz = 0.0;
    REQUIRE_THROWS_AS(featurize(bad, GeoPoint{3.1, 101.5, 100.0}), std::invalid_argument);
}
