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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "a2g/geo.hpp"
#include "a2g/rng.hpp"

namespace a2g {

/// One drive-test measurement row: UAV position plus the measured KPIs.
struct GeoSample {
    std::string timestamp;  ///< ISO-8601 instant, kept verbatim
    GeoPoint position;
    std::string cell_id;
    double rsrp_dbm = 0.0;
    double rsrq_db = 0.0;
    double rssi_dbm = 0.0;
    double pl_db = 0.0;
    std::optional<double> snr_db;
};

struct Dataset {
    std::vector<GeoSample> samples;
    std::string source;
    std::vector<std::string> provenance;  ///< one entry per applied transform

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
};

// ---------------------------------------------------------------------------
// CSV plumbing

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (char c : line) {
        if (quoted) {
            if (c == '"') quoted = false;
            else field.push_back(c);
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    out.push_back(field);
    return out;
}

inline bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
}

}  // namespace detail

/// Binds source CSV header names to GeoSample fields. Loaded from a plain
/// key=value text file ('#' starts a comment). Required keys: timestamp,
/// lat, lon, alt, cell_id, rsrp, rsrq, rssi, pl. Optional: snr.
struct ColumnMap {
    std::map<std::string, std::string> bindings;

    static constexpr const char* kRequired[9] = {
        "timestamp", "lat", "lon", "alt", "cell_id", "rsrp", "rsrq", "rssi", "pl"};

    static ColumnMap parse(std::istream& in) {
        ColumnMap m;
        std::string line;
        while (std::getline(in, line)) {
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t");
                const auto e = s.find_last_not_of(" \t");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            const std::string key = trim(line.substr(0, eq));
            const std::string val = trim(line.substr(eq + 1));
            if (!key.empty() && !val.empty()) m.bindings[key] = val;
        }
        return m;
    }

    static ColumnMap load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("column map: cannot open " + path);
        return parse(in);
    }

    void validate() const {
        for (const char* k : kRequired)
            if (!bindings.count(k))
                throw std::runtime_error(std::string("column map: missing key '") + k + "'");
    }
};

struct LoadReport {
    std::size_t parsed = 0;
    std::size_t rejected = 0;
    std::vector<std::string> rejections;  ///< "line N: reason"
};

/// Loads a raw drive-test CSV through a column map. Unparseable rows are
/// counted and reported, never silently dropped.
inline Dataset load_csv(const std::string& path, const ColumnMap& map,
                        LoadReport* report = nullptr) {
    map.validate();
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open " + path);

    std::string header_line;
    if (!std::getline(in, header_line))
        throw std::runtime_error("load_csv: zero parseable rows in " + path);
    const auto header = detail::split_csv_line(header_line);

    auto col_index = [&](const std::string& field) {
        const std::string& name = map.bindings.at(field);
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<long>(i);
        throw std::runtime_error("load_csv: mapped column '" + name +
                                 "' for field '" + field + "' not in header");
    };
    const long c_ts = col_index("timestamp"), c_lat = col_index("lat"),
               c_lon = col_index("lon"), c_alt = col_index("alt"),
               c_cell = col_index("cell_id"), c_rsrp = col_index("rsrp"),
               c_rsrq = col_index("rsrq"), c_rssi = col_index("rssi"),
               c_pl = col_index("pl");
    long c_snr = -1;
    if (map.bindings.count("snr")) c_snr = col_index("snr");

    LoadReport local;
    LoadReport& rep = report ? *report : local;
    Dataset ds;
    ds.source = path;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        auto reject = [&](const std::string& why) {
            ++rep.rejected;
            rep.rejections.push_back("line " + std::to_string(lineno) + ": " + why);
        };
        const long maxc = std::max({c_ts, c_lat, c_lon, c_alt, c_cell, c_rsrp,
                                    c_rsrq, c_rssi, c_pl, c_snr});
        if (static_cast<long>(f.size()) <= maxc) {
            reject("too few columns");
            continue;
        }
        GeoSample s;
        s.timestamp = f[c_ts];
        s.cell_id = f[c_cell];
        double snr = 0.0;
        if (!detail::parse_double(f[c_lat], s.position.lat_deg) ||
            !detail::parse_double(f[c_lon], s.position.lon_deg) ||
            !detail::parse_double(f[c_alt], s.position.alt_asl_m)) {
            reject("bad position");
            continue;
        }
        if (!s.position.valid()) {
            reject("position out of range");
            continue;
        }
        if (!detail::parse_double(f[c_rsrp], s.rsrp_dbm) ||
            !detail::parse_double(f[c_rsrq], s.rsrq_db) ||
            !detail::parse_double(f[c_rssi], s.rssi_dbm) ||
            !detail::parse_double(f[c_pl], s.pl_db)) {
            reject("bad KPI value");
            continue;
        }
        if (c_snr >= 0 && detail::parse_double(f[c_snr], snr)) s.snr_db = snr;
        ds.samples.push_back(std::move(s));
        ++rep.parsed;
    }
    if (ds.samples.empty())
        throw std::runtime_error("load_csv: zero parseable rows in " + path);
    ds.provenance.push_back("load_csv:" + path);
    return ds;
}

/// Canonical cleaned-CSV schema used for all intermediate files.
inline const std::string kCanonicalHeader =
    "timestamp,lat_deg,lon_deg,alt_asl_m,cell_id,rsrp_dbm,rsrq_db,rssi_dbm,pl_db,snr_db";

inline void write_canonical_csv(const Dataset& ds, std::ostream& out) {
    out << kCanonicalHeader << '\n';
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.10g", v);
        return std::string(buf);
    };
    for (const auto& s : ds.samples) {
        out << s.timestamp << ',' << num(s.position.lat_deg) << ','
            << num(s.position.lon_deg) << ',' << num(s.position.alt_asl_m) << ','
            << s.cell_id << ',' << num(s.rsrp_dbm) << ',' << num(s.rsrq_db) << ','
            << num(s.rssi_dbm) << ',' << num(s.pl_db) << ',';
        if (s.snr_db) out << num(*s.snr_db);
        out << '\n';
    }
}

/// Reads a canonical CSV back; tolerates a missing snr value.
inline Dataset load_canonical_csv(const std::string& path) {
    ColumnMap m;
    m.bindings = {{"timestamp", "timestamp"}, {"lat", "lat_deg"},
                  {"lon", "lon_deg"},         {"alt", "alt_asl_m"},
                  {"cell_id", "cell_id"},     {"rsrp", "rsrp_dbm"},
                  {"rsrq", "rsrq_db"},        {"rssi", "rssi_dbm"},
                  {"pl", "pl_db"},            {"snr", "snr_db"}};
    return load_csv(path, m);
}

// ---------------------------------------------------------------------------
// Filtering and cleaning

inline Dataset filter_serving(const Dataset& ds, const std::string& cell_id) {
    Dataset out;
    out.source = ds.source;
    out.provenance = ds.provenance;
    for (const auto& s : ds.samples)
        if (s.cell_id == cell_id) out.samples.push_back(s);
    std::string note = "filter_serving:" + cell_id;
    if (out.samples.empty()) note += " (warning: empty result)";
    out.provenance.push_back(note);
    return out;
}

struct CleaningRules {
    bool drop_nonfinite = true;          ///< any non-finite KPI or position
    bool enforce_rsrp_le_rssi = true;    ///< per-RB power cannot exceed wideband
    double outlier_zmax = 4.0;           ///< per-KPI z-score threshold; <=0 disables
};

struct CleanReport {
    std::size_t dropped_nonfinite = 0;
    std::size_t dropped_inconsistent = 0;
    std::size_t dropped_outlier = 0;
    std::size_t dropped_duplicate = 0;
    std::size_t kept = 0;

    std::string text() const {
        std::ostringstream os;
        os << "clean report\n"
           << "  dropped.nonfinite    " << dropped_nonfinite << '\n'
           << "  dropped.inconsistent " << dropped_inconsistent << '\n'
           << "  dropped.outlier      " << dropped_outlier << '\n'
           << "  dropped.duplicate    " << dropped_duplicate << '\n'
           << "  kept                 " << kept << '\n';
        return os.str();
    }
};

/// Applies the cleaning rules. The outlier pass iterates to a fixed point so
/// that clean(clean(ds)) == clean(ds) holds exactly.
inline std::pair<Dataset, CleanReport> clean(const Dataset& ds,
                                             const CleaningRules& rules = {}) {
    CleanReport rep;
    std::vector<GeoSample> rows;
    rows.reserve(ds.samples.size());

    std::set<std::tuple<std::string, double, double, double>> seen;
    for (const auto& s : ds.samples) {
        const bool finite = std::isfinite(s.rsrp_dbm) && std::isfinite(s.rsrq_db) &&
                            std::isfinite(s.rssi_dbm) && std::isfinite(s.pl_db) &&
                            s.position.valid() &&
                            (!s.snr_db || std::isfinite(*s.snr_db));
        if (rules.drop_nonfinite && !finite) {
            ++rep.dropped_nonfinite;
            continue;
        }
        if (rules.enforce_rsrp_le_rssi && s.rsrp_dbm > s.rssi_dbm) {
            ++rep.dropped_inconsistent;
            continue;
        }
        auto key = std::make_tuple(s.timestamp, s.position.lat_deg,
                                   s.position.lon_deg, s.position.alt_asl_m);
        if (!seen.insert(key).second) {
            ++rep.dropped_duplicate;
            continue;
        }
        rows.push_back(s);
    }

    if (rules.outlier_zmax > 0.0) {
        bool removed = true;
        while (removed && rows.size() >= 2) {
            removed = false;
            const double n = static_cast<double>(rows.size());
            double mean[4] = {0, 0, 0, 0}, m2[4] = {0, 0, 0, 0};
            auto kpi = [](const GeoSample& s, int k) {
                switch (k) {
                    case 0: return s.rsrp_dbm;
                    case 1: return s.rsrq_db;
                    case 2: return s.rssi_dbm;
                    default: return s.pl_db;
                }
            };
            for (const auto& s : rows)
                for (int k = 0; k < 4; ++k) mean[k] += kpi(s, k);
            for (int k = 0; k < 4; ++k) mean[k] /= n;
            for (const auto& s : rows)
                for (int k = 0; k < 4; ++k) {
                    const double d = kpi(s, k) - mean[k];
                    m2[k] += d * d;
                }
            double sd[4];
            for (int k = 0; k < 4; ++k) sd[k] = std::sqrt(m2[k] / (n - 1.0));

            std::vector<GeoSample> keep;
            keep.reserve(rows.size());
            for (const auto& s : rows) {
                bool out = false;
                for (int k = 0; k < 4 && !out; ++k)
                    if (sd[k] > 0.0 &&
                        std::abs(kpi(s, k) - mean[k]) > rules.outlier_zmax * sd[k])
                        out = true;
                if (out) {
                    ++rep.dropped_outlier;
                    removed = true;
                } else {
                    keep.push_back(s);
                }
            }
            rows.swap(keep);
        }
    }

    Dataset out;
    out.source = ds.source;
    out.provenance = ds.provenance;
    out.samples = std::move(rows);
    rep.kept = out.samples.size();
    std::ostringstream note;
    note << "clean: kept " << rep.kept << " of " << ds.samples.size();
    out.provenance.push_back(note.str());
    return {std::move(out), rep};
}

// ---------------------------------------------------------------------------
// Location keys and spatial splitting

/// Spatial grouping grid: lat/lon rounded to a fixed number of decimals,
/// altitude snapped to a step. Groups the ~5 m spaced samples into distinct
/// spatial points.
struct KeyGrid {
    int latlon_decimals = 5;
    double alt_step_m = 0.5;
};

struct LocationKey {
    std::int64_t lat_u = 0, lon_u = 0, alt_u = 0;
    auto operator<=>(const LocationKey&) const = default;
};

inline LocationKey location_key(const GeoPoint& p, const KeyGrid& grid = {}) {
    const double scale = std::pow(10.0, grid.latlon_decimals);
    LocationKey k;
    k.lat_u = static_cast<std::int64_t>(std::llround(p.lat_deg * scale));
    k.lon_u = static_cast<std::int64_t>(std::llround(p.lon_deg * scale));
    k.alt_u = static_cast<std::int64_t>(std::llround(p.alt_asl_m / grid.alt_step_m));
    return k;
}

struct DataSplit {
    std::set<LocationKey> train_keys;
    std::set<LocationKey> test_keys;
    double ratio = 0.8;
    std::uint64_t seed = 0;
    KeyGrid grid;
};

/// Location-level train/test partition via seeded shuffle of distinct keys.
inline DataSplit spatial_split(const Dataset& ds, double ratio,
                               std::uint64_t seed, const KeyGrid& grid = {}) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw std::invalid_argument("spatial_split: ratio must be in (0,1)");
    std::set<LocationKey> keys;
    for (const auto& s : ds.samples) keys.insert(location_key(s.position, grid));
    if (keys.size() < 2)
        throw std::runtime_error("spatial_split: fewer than 2 distinct location keys");

    std::vector<LocationKey> order(keys.begin(), keys.end());
    RngStream rng(seed);
    for (std::size_t i = order.size() - 1; i > 0; --i)
        std::swap(order[i], order[rng.next_below(i + 1)]);

    // Count samples per key so the achieved sample ratio tracks the target.
    std::map<LocationKey, std::size_t> counts;
    for (const auto& s : ds.samples) ++counts[location_key(s.position, grid)];

    DataSplit split;
    split.ratio = ratio;
    split.seed = seed;
    split.grid = grid;
    const double target = ratio * static_cast<double>(ds.samples.size());
    double acc = 0.0;
    for (const auto& k : order) {
        if (acc < target) {
            split.train_keys.insert(k);
            acc += static_cast<double>(counts[k]);
        } else {
            split.test_keys.insert(k);
        }
    }
    if (split.test_keys.empty()) {
        // guarantee a non-empty test side
        auto last = *split.train_keys.rbegin();
        for (const auto& k : order)
            if (split.train_keys.count(k)) last = k;  // last key added in order
        split.train_keys.erase(last);
        split.test_keys.insert(last);
    }
    return split;
}

inline std::pair<Dataset, Dataset> apply_split(const Dataset& ds,
                                               const DataSplit& split) {
    Dataset train, test;
    train.source = test.source = ds.source;
    train.provenance = test.provenance = ds.provenance;
    for (const auto& s : ds.samples) {
        const auto k = location_key(s.position, split.grid);
        if (split.train_keys.count(k)) train.samples.push_back(s);
        else if (split.test_keys.count(k)) test.samples.push_back(s);
        else throw std::logic_error("apply_split: sample key missing from split");
    }
    train.provenance.push_back("split:train");
    test.provenance.push_back("split:test");
    return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Normalization

/// Per-column z-score statistics with the (n-1) variance divisor.
struct NormStats {
    std::vector<double> mean;
    std::vector<double> stddev;
};

inline NormStats fit_norm(const std::vector<std::vector<double>>& columns) {
    NormStats st;
    for (const auto& col : columns) {
        if (col.size() < 2)
            throw std::invalid_argument("fit_norm: need >= 2 values per column");
        double m = 0.0;
        for (double v : col) m += v;
        m /= static_cast<double>(col.size());
        double s2 = 0.0;
        for (double v : col) s2 += (v - m) * (v - m);
        const double sd = std::sqrt(s2 / static_cast<double>(col.size() - 1));
        if (!(sd > 0.0))
            throw std::invalid_argument("fit_norm: zero-variance column");
        st.mean.push_back(m);
        st.stddev.push_back(sd);
    }
    return st;
}

inline double normalize(double x, const NormStats& st, std::size_t col) {
    return (x - st.mean.at(col)) / st.stddev.at(col);
}
inline double denormalize(double xn, const NormStats& st, std::size_t col) {
    return xn * st.stddev.at(col) + st.mean.at(col);
}

// ---------------------------------------------------------------------------
// Signal quality classification and RSRQ cross-check

enum class SignalQuality { Excellent, Good, Medium, Weak };

inline const char* to_string(SignalQuality q) {
    switch (q) {
        case SignalQuality::Excellent: return "Excellent";
        case SignalQuality::Good: return "Good";
        case SignalQuality::Medium: return "Medium";
        default: return "Weak";
    }
}

/// Threshold table: RSRP -70/-80/-90 dBm, RSRQ -6/-10/-15 dB,
/// RSSI -65/-75/-85 dBm.
inline SignalQuality classify_rsrp(double rsrp_dbm) {
    if (rsrp_dbm > -70.0) return SignalQuality::Excellent;
    if (rsrp_dbm >= -80.0) return SignalQuality::Good;
    if (rsrp_dbm >= -90.0) return SignalQuality::Medium;
    return SignalQuality::Weak;
}
inline SignalQuality classify_rsrq(double rsrq_db) {
    if (rsrq_db > -6.0) return SignalQuality::Excellent;
    if (rsrq_db >= -10.0) return SignalQuality::Good;
    if (rsrq_db >= -15.0) return SignalQuality::Medium;
    return SignalQuality::Weak;
}
inline SignalQuality classify_rssi(double rssi_dbm) {
    if (rssi_dbm > -65.0) return SignalQuality::Excellent;
    if (rssi_dbm >= -75.0) return SignalQuality::Good;
    if (rssi_dbm >= -85.0) return SignalQuality::Medium;
    return SignalQuality::Weak;
}

struct QualityTriple {
    SignalQuality rsrp, rsrq, rssi;
};

inline QualityTriple classify_signal_quality(double rsrp_dbm, double rsrq_db,
                                             double rssi_dbm) {
    if (!std::isfinite(rsrp_dbm) || !std::isfinite(rsrq_db) || !std::isfinite(rssi_dbm))
        throw std::invalid_argument("classify_signal_quality: non-finite input");
    return {classify_rsrp(rsrp_dbm), classify_rsrq(rsrq_db), classify_rssi(rssi_dbm)};
}

/// Linear-domain RSRQ cross-check: N * RSRP[W] / RSSI[W].
inline double rsrq_consistency(double rsrp_watts, double rssi_watts, int n_rb) {
    if (!(rssi_watts > 0.0))
        throw std::invalid_argument("rsrq_consistency: rssi must be > 0");
    if (n_rb < 1) throw std::invalid_argument("rsrq_consistency: n_rb must be >= 1");
    return static_cast<double>(n_rb) * rsrp_watts / rssi_watts;
}

inline double ratio_to_db(double ratio) { return 10.0 * std::log10(ratio); }

}  // namespace a2g
