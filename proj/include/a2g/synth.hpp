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

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>

#include "a2g/baselines.hpp"
#include "a2g/dataset.hpp"
#include "a2g/geo.hpp"
#include "a2g/rng.hpp"

namespace a2g {

/// Synthetic drive-test scenario: one station, UAV points on concentric
/// arcs, path loss from a log-distance law plus a sinusoidal azimuth gain
/// and seeded Gaussian noise.
struct SynthScenario {
    StationConfig station = {{3.0000, 101.5000, 85.0}, 4.0, 2.6e9, 65.0, 10.0};
    double ground_asl_m = 75.0;

    double radius_min_m = 100.0;
    double radius_max_m = 900.0;
    double radius_step_m = 100.0;
    double agl_min_m = 10.0;
    double agl_max_m = 130.0;
    double agl_step_m = 20.0;
    int points_per_arc = 36;

    double pl0_db = 40.0;          ///< intercept at d0 = 1 m
    double exponent = 2.3;         ///< log-distance exponent
    double azimuth_gain_db = 6.0;  ///< sinusoidal gain amplitude
    int azimuth_lobes = 2;
    double noise_sigma_db = 2.0;

    double tx_power_dbm = 30.0;    ///< rsrp = tx_power - pl
    std::uint64_t seed = 42;
};

/// Deterministic corpus generation; every (radius, azimuth, altitude) tuple
/// becomes one sample at a distinct location key.
inline Dataset generate_synth(const SynthScenario& sc) {
    Dataset ds;
    ds.source = "synthetic";
    RngStream rng(sc.seed);
    const GeoPoint bs = sc.station.position;
    const double coslat = std::cos(bs.lat_deg * kDegToRad);
    long index = 0;

    for (double r = sc.radius_min_m; r <= sc.radius_max_m + 1e-9;
         r += sc.radius_step_m) {
        for (double agl = sc.agl_min_m; agl <= sc.agl_max_m + 1e-9;
             agl += sc.agl_step_m) {
            for (int k = 0; k < sc.points_per_arc; ++k) {
                const double az =
                    (static_cast<double>(k) + 0.5) * 360.0 / sc.points_per_arc;
                const double az_rad = az * kDegToRad;
                GeoSample s;
                s.position.lat_deg =
                    bs.lat_deg + (r * std::cos(az_rad) / kEarthRadiusM) * kRadToDeg;
                s.position.lon_deg =
                    bs.lon_deg +
                    (r * std::sin(az_rad) / (kEarthRadiusM * coslat)) * kRadToDeg;
                s.position.alt_asl_m = sc.ground_asl_m + agl;
                s.cell_id = "synth-1";

                char ts[48];
                std::snprintf(ts, sizeof ts, "2026-01-01T00:00:00.%06ldZ", index);
                s.timestamp = ts;
                ++index;

                const double d2d = haversine_2d(bs, s.position);
                const double d3d = distance_3d(d2d, s.position.alt_asl_m, bs.alt_asl_m);
                const double pl_mean =
                    sc.pl0_db + 10.0 * sc.exponent * std::log10(d3d) +
                    sc.azimuth_gain_db * std::sin(sc.azimuth_lobes * az_rad);
                s.pl_db = pl_mean + sc.noise_sigma_db * rng.next_gaussian();
                s.rsrp_dbm = sc.tx_power_dbm - s.pl_db;
                const double wideband_offset = 20.0 + rng.next_gaussian();
                s.rssi_dbm = s.rsrp_dbm + std::max(0.1, wideband_offset);
                s.rsrq_db = 10.0 * std::log10(50.0) - (s.rssi_dbm - s.rsrp_dbm);
                ds.samples.push_back(std::move(s));
            }
        }
    }
    ds.provenance.push_back("synth:seed=" + std::to_string(sc.seed));
    return ds;
}

}  // namespace a2g
