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
#include <stdexcept>
#include <string>

namespace a2g {

/// Mean Earth radius in meters (spherical model, no ellipsoidal correction).
constexpr double kEarthRadiusM = 6371000.0;

constexpr double kDegToRad = 0.017453292519943295;
constexpr double kRadToDeg = 57.29577951308232;

/// Horizontal coincidence threshold for the azimuth degeneracy, in meters.
constexpr double kCoincidentEpsM = 1e-6;

struct GeoPoint {
    double lat_deg = 0.0;   ///< latitude, decimal degrees in [-90, 90]
    double lon_deg = 0.0;   ///< longitude, decimal degrees in [-180, 180]
    double alt_asl_m = 0.0; ///< altitude above sea level, meters

    bool valid() const {
        return std::isfinite(lat_deg) && std::isfinite(lon_deg) &&
               std::isfinite(alt_asl_m) && lat_deg >= -90.0 && lat_deg <= 90.0 &&
               lon_deg >= -180.0 && lon_deg <= 180.0;
    }
};

/// Serving base-station geometry and radio parameters.
struct StationConfig {
    GeoPoint position;
    double antenna_tilt_deg = 4.0;
    double carrier_frequency_hz = 2.6e9;
    double horizontal_beamwidth_deg = 65.0;
    double vertical_beamwidth_deg = 10.0;

    bool valid() const {
        return position.valid() && carrier_frequency_hz > 0.0 &&
               antenna_tilt_deg >= -90.0 && antenna_tilt_deg <= 90.0;
    }
};

/// The model's four-dimensional input: log10 distances plus the two angles.
struct FeatureVector {
    double log10_d3d = 0.0;
    double log10_d2d = 0.0;
    double azimuth_deg = 0.0;   ///< clockwise from true north, [0, 360)
    double elevation_deg = 0.0; ///< geometric elevation plus antenna tilt
};

/// Great-circle distance on the spherical Earth (haversine form), meters.
inline double haversine_2d(const GeoPoint& bs, const GeoPoint& uav) {
    const double lat1 = bs.lat_deg * kDegToRad;
    const double lat2 = uav.lat_deg * kDegToRad;
    const double dlat = lat1 - lat2;
    const double dlon = (bs.lon_deg - uav.lon_deg) * kDegToRad;
    const double sl = std::sin(0.5 * dlat);
    const double so = std::sin(0.5 * dlon);
    const double a = sl * sl + std::cos(lat1) * std::cos(lat2) * so * so;
    return 2.0 * kEarthRadiusM *
           std::atan2(std::sqrt(a), std::sqrt(std::max(0.0, 1.0 - a)));
}

/// Slant distance from horizontal separation and the two antenna heights.
inline double distance_3d(double d2d, double h_uav, double h_bs) {
    if (d2d < 0.0) throw std::invalid_argument("distance_3d: negative d2d");
    return std::hypot(d2d, h_uav - h_bs);
}

/// Elevation toward the UAV offset by the antenna tilt, degrees.
/// Undefined when the UAV sits exactly at the antenna reference point.
inline double elevation_angle(double h_uav, double h_bs, double d2d,
                              double tilt_deg) {
    if (d2d < 0.0) throw std::invalid_argument("elevation_angle: negative d2d");
    const double dh = h_uav - h_bs;
    if (d2d == 0.0 && dh == 0.0)
        throw std::domain_error("elevation_angle: coincident points, elevation undefined");
    return std::atan2(dh, d2d) * kRadToDeg + tilt_deg;
}

/// Bearing from BS toward the UAV, clockwise from true north, in [0, 360).
inline double azimuth_angle(const GeoPoint& bs, const GeoPoint& uav) {
    if (haversine_2d(bs, uav) < kCoincidentEpsM)
        throw std::domain_error("azimuth_angle: coincident horizontal coordinates, bearing undefined");
    const double lat1 = bs.lat_deg * kDegToRad;
    const double lat2 = uav.lat_deg * kDegToRad;
    const double dlon = (uav.lon_deg - bs.lon_deg) * kDegToRad;
    const double y = std::sin(dlon) * std::cos(lat2);
    const double x = std::cos(lat1) * std::sin(lat2) -
                     std::sin(lat1) * std::cos(lat2) * std::cos(dlon);
    double theta = std::atan2(y, x) * kRadToDeg;
    theta = std::fmod(theta + 360.0, 360.0);
    if (theta >= 360.0) theta = 0.0;
    return theta;
}

/// Computes the model input features for one BS/UAV pair. Distances are
/// clamped from below by min_distance before the log transform; the azimuth
/// degeneracy (UAV directly overhead within kCoincidentEpsM) still throws.
inline FeatureVector featurize(const StationConfig& station, const GeoPoint& uav,
                               double min_distance = 1.0) {
    if (!(min_distance > 0.0))
        throw std::invalid_argument("featurize: min_distance must be > 0");
    if (!station.valid() || !uav.valid())
        throw std::invalid_argument("featurize: invalid geometry inputs");

    const double d2d = haversine_2d(station.position, uav);
    const double d3d = distance_3d(d2d, uav.alt_asl_m, station.position.alt_asl_m);

    FeatureVector f;
    f.azimuth_deg = azimuth_angle(station.position, uav);
    f.elevation_deg = elevation_angle(uav.alt_asl_m, station.position.alt_asl_m,
                                      d2d, station.antenna_tilt_deg);
    f.log10_d2d = std::log10(std::max(d2d, min_distance));
    f.log10_d3d = std::log10(std::max(d3d, min_distance));
    if (f.log10_d3d < f.log10_d2d) f.log10_d3d = f.log10_d2d;  // clamp ties
    return f;
}

}  // namespace a2g
