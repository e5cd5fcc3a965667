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

#include <Eigen/Dense>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "a2g/dataset.hpp"
#include "a2g/ebt.hpp"
#include "a2g/geo.hpp"
#include "a2g/gpr.hpp"
#include "a2g/metrics.hpp"
#include "a2g/stepwise.hpp"

namespace a2g {

enum class Kpi { PL, RSRP, RSRQ, RSSI };

inline const char* to_string(Kpi k) {
    switch (k) {
        case Kpi::PL: return "PL";
        case Kpi::RSRP: return "RSRP";
        case Kpi::RSRQ: return "RSRQ";
        default: return "RSSI";
    }
}

inline Kpi kpi_from_string(const std::string& s) {
    if (s == "PL" || s == "pl") return Kpi::PL;
    if (s == "RSRP" || s == "rsrp") return Kpi::RSRP;
    if (s == "RSRQ" || s == "rsrq") return Kpi::RSRQ;
    if (s == "RSSI" || s == "rssi") return Kpi::RSSI;
    throw std::invalid_argument("unknown KPI: " + s);
}

inline double kpi_value(const GeoSample& s, Kpi k) {
    switch (k) {
        case Kpi::PL: return s.pl_db;
        case Kpi::RSRP: return s.rsrp_dbm;
        case Kpi::RSRQ: return s.rsrq_db;
        default: return s.rssi_dbm;
    }
}

struct GprConfig {
    KernelFamily family = KernelFamily::SquaredExponential;
    GprOptions options;
};

/// All tunables of the three-layer pipeline.
struct StackConfig {
    StwConfig stw;
    EbtConfig ebt;
    GprConfig gpr;
    int cv_folds = 10;
    std::uint64_t seed = 1;
    std::string profile = "accuracy";  ///< "accuracy" or "latency"
    double min_distance_m = 1.0;
    bool out_of_fold_stacking = false;  ///< train GPR on out-of-fold layer outputs
    KeyGrid grid;

    static StackConfig accuracy_profile(std::uint64_t seed = 1) {
        StackConfig c;
        c.ebt = EbtConfig::accuracy_profile(seed);
        c.seed = seed;
        c.profile = "accuracy";
        return c;
    }
    static StackConfig latency_profile(std::uint64_t seed = 1) {
        StackConfig c;
        c.ebt = EbtConfig::latency_profile(seed);
        c.seed = seed;
        c.profile = "latency";
        return c;
    }
};

/// Raw feature matrix, column order [log10_d3d, log10_d2d, azimuth, elevation].
inline Eigen::MatrixXd feature_matrix(const Dataset& ds, const StationConfig& station,
                                      double min_distance = 1.0) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(ds.size()), 4);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const FeatureVector f = featurize(station, ds.samples[i].position, min_distance);
        const auto r = static_cast<Eigen::Index>(i);
        X(r, 0) = f.log10_d3d;
        X(r, 1) = f.log10_d2d;
        X(r, 2) = f.azimuth_deg;
        X(r, 3) = f.elevation_deg;
    }
    return X;
}

inline Eigen::VectorXd target_vector(const Dataset& ds, Kpi kpi) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(ds.size()));
    for (std::size_t i = 0; i < ds.size(); ++i)
        y[static_cast<Eigen::Index>(i)] = kpi_value(ds.samples[i], kpi);
    return y;
}

struct TripleLayerModel {
    Kpi kpi = Kpi::PL;
    StackConfig config;
    StwModel stw;
    BaggedEnsemble ebt;
    GprModel gpr;
    NormStats feature_norm;  ///< four feature columns
    double target_mean = 0.0;
    double target_std = 1.0;
    std::string fingerprint;  ///< digest of the full StackConfig
};

struct CvReport {
    std::vector<metrics::EvalReport> folds;
    metrics::EvalReport mean;
    metrics::EvalReport stddev;
    EbtConfig chosen_ebt;
};

// ---------------------------------------------------------------------------
// K-fold machinery (location-key level, mirroring the spatial split rule)

/// Balanced seeded assignment of n_keys keys to k folds; fold sizes differ
/// by at most one.
inline std::vector<int> kfold_indices(std::size_t n_keys, int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("kfold_indices: k must be >= 2");
    if (n_keys < static_cast<std::size_t>(k))
        throw std::invalid_argument("kfold_indices: fewer keys than folds");
    std::vector<std::size_t> order(n_keys);
    for (std::size_t i = 0; i < n_keys; ++i) order[i] = i;
    RngStream rng(seed ^ 0xf01dULL);
    for (std::size_t i = n_keys - 1; i > 0; --i)
        std::swap(order[i], order[rng.next_below(i + 1)]);
    std::vector<int> fold(n_keys);
    for (std::size_t pos = 0; pos < n_keys; ++pos)
        fold[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));
    return fold;
}

namespace detail {

/// Per-sample fold ids derived from the sample's location key.
inline std::vector<int> sample_folds(const Dataset& ds, int k, std::uint64_t seed,
                                     const KeyGrid& grid) {
    std::map<LocationKey, std::size_t> key_index;
    for (const auto& s : ds.samples)
        key_index.emplace(location_key(s.position, grid), 0);
    std::size_t idx = 0;
    for (auto& [key, v] : key_index) v = idx++;
    const auto key_fold = kfold_indices(key_index.size(), k, seed);
    std::vector<int> out;
    out.reserve(ds.size());
    for (const auto& s : ds.samples)
        out.push_back(key_fold[key_index.at(location_key(s.position, grid))]);
    return out;
}

inline void accumulate_cv_stats(CvReport& rep) {
    const double n = static_cast<double>(rep.folds.size());
    auto get = [](const metrics::EvalReport& r, int i) {
        switch (i) {
            case 0: return r.mse;
            case 1: return r.rmse;
            case 2: return r.mae;
            case 3: return r.maape_pct;
            case 4: return r.r;
            default: return r.r2;
        }
    };
    auto set = [](metrics::EvalReport& r, int i, double v) {
        switch (i) {
            case 0: r.mse = v; break;
            case 1: r.rmse = v; break;
            case 2: r.mae = v; break;
            case 3: r.maape_pct = v; break;
            case 4: r.r = v; break;
            default: r.r2 = v; break;
        }
    };
    for (int i = 0; i < 6; ++i) {
        double m = 0.0;
        for (const auto& f : rep.folds) m += get(f, i);
        m /= n;
        double s2 = 0.0;
        for (const auto& f : rep.folds) s2 += (get(f, i) - m) * (get(f, i) - m);
        set(rep.mean, i, m);
        set(rep.stddev, i, n > 1 ? std::sqrt(s2 / (n - 1.0)) : 0.0);
    }
}

struct CvFoldResult {
    metrics::EvalReport report;
    std::vector<int> validation_rows;
    Eigen::VectorXd stw_out;  ///< normalized STW prediction on validation rows
    Eigen::VectorXd eps_out;  ///< normalized EBT prediction on validation rows
};

/// Fits STW + EBT on the fold-train rows, scores the stacked prediction
/// (y_stw + eps_hat) on the fold-validation rows (original units), and
/// keeps the held-out layer outputs for optional out-of-fold stacking.
inline CvFoldResult cv_fold_eval(const Eigen::MatrixXd& Xn,
                                 const Eigen::VectorXd& yn,
                                 const std::vector<int>& folds, int fold,
                                 const StwConfig& stw_cfg,
                                 const EbtConfig& ebt_cfg, double y_mean,
                                 double y_std) {
    std::vector<int> tr, va;
    for (std::size_t i = 0; i < folds.size(); ++i)
        (folds[i] == fold ? va : tr).push_back(static_cast<int>(i));
    if (tr.empty() || va.empty())
        throw std::runtime_error("cv_fold_eval: degenerate fold");

    Eigen::MatrixXd Xtr(tr.size(), Xn.cols()), Xva(va.size(), Xn.cols());
    Eigen::VectorXd ytr(tr.size());
    std::vector<double> actual(va.size()), predicted(va.size());
    for (std::size_t i = 0; i < tr.size(); ++i) {
        Xtr.row(static_cast<Eigen::Index>(i)) = Xn.row(tr[i]);
        ytr[static_cast<Eigen::Index>(i)] = yn[tr[i]];
    }
    for (std::size_t i = 0; i < va.size(); ++i)
        Xva.row(static_cast<Eigen::Index>(i)) = Xn.row(va[i]);

    const StwModel stw = fit_stw(Xtr, ytr, stw_cfg);
    const Eigen::VectorXd eps = ytr - predict_stw(stw, Xtr);
    const BaggedEnsemble ebt = fit_ebt(Xtr, eps, ebt_cfg);

    CvFoldResult out;
    out.validation_rows = va;
    out.stw_out = predict_stw(stw, Xva);
    out.eps_out = ebt.predict(Xva);
    for (std::size_t i = 0; i < va.size(); ++i) {
        actual[i] = yn[va[i]] * y_std + y_mean;
        predicted[i] = (out.stw_out[static_cast<Eigen::Index>(i)] +
                        out.eps_out[static_cast<Eigen::Index>(i)]) *
                           y_std +
                       y_mean;
    }
    out.report = metrics::evaluate(actual, predicted);
    return out;
}

}  // namespace detail

/// Grid search over EBT configurations by mean CV RMSE; ties break toward
/// fewer learners, then larger minimum leaf size.
struct TuneResult {
    EbtConfig chosen;
    CvReport report;
};

inline TuneResult tune(const Dataset& train_set, const StationConfig& station,
                       Kpi kpi, const std::vector<EbtConfig>& grid,
                       const StackConfig& cfg) {
    if (grid.empty()) throw std::invalid_argument("tune: empty grid");
    const Eigen::MatrixXd X = feature_matrix(train_set, station, cfg.min_distance_m);
    const Eigen::VectorXd y = target_vector(train_set, kpi);

    std::vector<std::vector<double>> cols(4);
    for (int c = 0; c < 4; ++c)
        for (Eigen::Index i = 0; i < X.rows(); ++i) cols[static_cast<std::size_t>(c)].push_back(X(i, c));
    const NormStats fstats = fit_norm(cols);
    const NormStats tstats = fit_norm({std::vector<double>(y.data(), y.data() + y.size())});

    Eigen::MatrixXd Xn = X;
    for (int c = 0; c < 4; ++c)
        Xn.col(c) = (X.col(c).array() - fstats.mean[static_cast<std::size_t>(c)]) /
                    fstats.stddev[static_cast<std::size_t>(c)];
    const Eigen::VectorXd yn = (y.array() - tstats.mean[0]) / tstats.stddev[0];

    const auto folds = detail::sample_folds(train_set, cfg.cv_folds, cfg.seed, cfg.grid);

    TuneResult best;
    double best_rmse = std::numeric_limits<double>::infinity();
    for (const auto& cand : grid) {
        CvReport rep;
        rep.chosen_ebt = cand;
        for (int f = 0; f < cfg.cv_folds; ++f)
            rep.folds.push_back(detail::cv_fold_eval(Xn, yn, folds, f, cfg.stw, cand,
                                                     tstats.mean[0], tstats.stddev[0])
                                    .report);
        detail::accumulate_cv_stats(rep);
        const bool better =
            rep.mean.rmse < best_rmse ||
            (rep.mean.rmse == best_rmse &&
             (cand.n_learners < best.chosen.n_learners ||
              (cand.n_learners == best.chosen.n_learners &&
               cand.min_leaf > best.chosen.min_leaf)));
        if (better) {
            best_rmse = rep.mean.rmse;
            best.chosen = cand;
            best.report = std::move(rep);
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Training

namespace detail {

inline std::string hexf(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}
inline double unhexf(const std::string& s) {
    return std::strtod(s.c_str(), nullptr);
}

inline nlohmann::ordered_json config_json(const StackConfig& c) {
    nlohmann::ordered_json j;
    j["stw"] = {{"p_enter", hexf(c.stw.p_enter)},
                {"p_remove", hexf(c.stw.p_remove)},
                {"max_iters", c.stw.max_iters},
                {"include_interactions", c.stw.include_interactions},
                {"include_squares", c.stw.include_squares},
                {"max_condition", hexf(c.stw.max_condition)}};
    j["ebt"] = {{"n_learners", c.ebt.n_learners},
                {"min_leaf", c.ebt.min_leaf},
                {"max_splits", c.ebt.max_splits},
                {"n_features_per_split", c.ebt.n_features_per_split},
                {"seed", c.ebt.seed}};
    j["gpr"] = {{"family", to_string(c.gpr.family)},
                {"restarts", c.gpr.options.restarts},
                {"max_iters", c.gpr.options.max_iters},
                {"grad_tol", hexf(c.gpr.options.grad_tol)},
                {"jitter_rel_min", hexf(c.gpr.options.jitter_rel_min)},
                {"jitter_rel_max", hexf(c.gpr.options.jitter_rel_max)},
                {"subsample", c.gpr.options.subsample},
                {"seed", c.gpr.options.seed}};
    j["cv_folds"] = c.cv_folds;
    j["seed"] = c.seed;
    j["profile"] = c.profile;
    j["min_distance_m"] = hexf(c.min_distance_m);
    j["out_of_fold_stacking"] = c.out_of_fold_stacking;
    j["grid"] = {{"latlon_decimals", c.grid.latlon_decimals},
                 {"alt_step_m", hexf(c.grid.alt_step_m)}};
    return j;
}

inline StackConfig config_from_json(const nlohmann::ordered_json& j) {
    StackConfig c;
    c.stw.p_enter = unhexf(j["stw"]["p_enter"]);
    c.stw.p_remove = unhexf(j["stw"]["p_remove"]);
    c.stw.max_iters = j["stw"]["max_iters"];
    c.stw.include_interactions = j["stw"]["include_interactions"];
    c.stw.include_squares = j["stw"]["include_squares"];
    c.stw.max_condition = unhexf(j["stw"]["max_condition"]);
    c.ebt.n_learners = j["ebt"]["n_learners"];
    c.ebt.min_leaf = j["ebt"]["min_leaf"];
    c.ebt.max_splits = j["ebt"]["max_splits"];
    c.ebt.n_features_per_split = j["ebt"]["n_features_per_split"];
    c.ebt.seed = j["ebt"]["seed"];
    c.gpr.family = kernel_family_from_string(j["gpr"]["family"]);
    c.gpr.options.restarts = j["gpr"]["restarts"];
    c.gpr.options.max_iters = j["gpr"]["max_iters"];
    c.gpr.options.grad_tol = unhexf(j["gpr"]["grad_tol"]);
    c.gpr.options.jitter_rel_min = unhexf(j["gpr"]["jitter_rel_min"]);
    c.gpr.options.jitter_rel_max = unhexf(j["gpr"]["jitter_rel_max"]);
    c.gpr.options.subsample = j["gpr"]["subsample"];
    c.gpr.options.seed = j["gpr"]["seed"];
    c.cv_folds = j["cv_folds"];
    c.seed = j["seed"];
    c.profile = j["profile"];
    c.min_distance_m = unhexf(j["min_distance_m"]);
    c.out_of_fold_stacking = j["out_of_fold_stacking"];
    c.grid.latlon_decimals = j["grid"]["latlon_decimals"];
    c.grid.alt_step_m = unhexf(j["grid"]["alt_step_m"]);
    return c;
}

inline std::string config_fingerprint(const StackConfig& c) {
    const std::string s = config_json(c).dump();
    const std::uint64_t h = fnv1a64(s.data(), s.size());
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace detail

/// Full pipeline training for one KPI: fit_norm -> normalize -> STW ->
/// residuals -> EBT -> aggregate -> GPR. Deterministic given the config's
/// seeds. The CvReport scores the stacked STW+EBT stage across location-key
/// folds of the training set.
inline std::pair<TripleLayerModel, CvReport> train(const Dataset& train_set,
                                                   const StationConfig& station,
                                                   Kpi kpi, const StackConfig& cfg) {
    if (train_set.empty()) throw std::invalid_argument("train: empty training set");

    const Eigen::MatrixXd X = feature_matrix(train_set, station, cfg.min_distance_m);
    const Eigen::VectorXd y = target_vector(train_set, kpi);

    std::vector<std::vector<double>> cols(4);
    for (int c = 0; c < 4; ++c)
        for (Eigen::Index i = 0; i < X.rows(); ++i)
            cols[static_cast<std::size_t>(c)].push_back(X(i, c));
    TripleLayerModel m;
    m.kpi = kpi;
    m.config = cfg;
    m.feature_norm = fit_norm(cols);
    const NormStats tstats =
        fit_norm({std::vector<double>(y.data(), y.data() + y.size())});
    m.target_mean = tstats.mean[0];
    m.target_std = tstats.stddev[0];

    Eigen::MatrixXd Xn = X;
    for (int c = 0; c < 4; ++c)
        Xn.col(c) =
            (X.col(c).array() - m.feature_norm.mean[static_cast<std::size_t>(c)]) /
            m.feature_norm.stddev[static_cast<std::size_t>(c)];
    const Eigen::VectorXd yn = (y.array() - m.target_mean) / m.target_std;

    m.stw = fit_stw(Xn, yn, cfg.stw);
    const Eigen::VectorXd y_stw = predict_stw(m.stw, Xn);
    const Eigen::VectorXd eps = yn - y_stw;
    m.ebt = fit_ebt(Xn, eps, cfg.ebt);

    // Fold fits serve the CV report and, when enabled, the out-of-fold
    // lower-layer outputs fed to the GPR.
    Eigen::VectorXd stw_for_gpr = y_stw;
    Eigen::VectorXd eps_for_gpr = m.ebt.predict(Xn);
    CvReport cv;
    cv.chosen_ebt = cfg.ebt;
    const auto folds = detail::sample_folds(train_set, cfg.cv_folds, cfg.seed, cfg.grid);
    for (int f = 0; f < cfg.cv_folds; ++f) {
        auto fold_res = detail::cv_fold_eval(Xn, yn, folds, f, cfg.stw, cfg.ebt,
                                             m.target_mean, m.target_std);
        if (cfg.out_of_fold_stacking) {
            for (std::size_t i = 0; i < fold_res.validation_rows.size(); ++i) {
                stw_for_gpr[fold_res.validation_rows[i]] =
                    fold_res.stw_out[static_cast<Eigen::Index>(i)];
                eps_for_gpr[fold_res.validation_rows[i]] =
                    fold_res.eps_out[static_cast<Eigen::Index>(i)];
            }
        }
        cv.folds.push_back(std::move(fold_res.report));
    }
    detail::accumulate_cv_stats(cv);

    const Eigen::MatrixXd Z = build_aggregate_input(Xn, stw_for_gpr, eps_for_gpr);
    m.gpr = fit_gpr(Z, yn, cfg.gpr.family, cfg.gpr.options);
    m.fingerprint = detail::config_fingerprint(cfg);
    return {std::move(m), std::move(cv)};
}

// ---------------------------------------------------------------------------
// Prediction and evaluation

/// Per-layer predictions in KPI units for a raw feature matrix.
struct LayerPredictions {
    Eigen::VectorXd stw;      ///< first layer alone
    Eigen::VectorXd stacked;  ///< STW + EBT residual correction
    Eigen::VectorXd full;     ///< GPR aggregation output
    Eigen::VectorXd sd;       ///< 1-sigma uncertainty, KPI units
};

inline LayerPredictions predict_layers(const TripleLayerModel& m,
                                       const Eigen::MatrixXd& X_raw) {
    if (X_raw.cols() != 4)
        throw std::invalid_argument("predict: expected 4 feature columns");
    Eigen::MatrixXd Xn = X_raw;
    for (int c = 0; c < 4; ++c)
        Xn.col(c) =
            (X_raw.col(c).array() - m.feature_norm.mean[static_cast<std::size_t>(c)]) /
            m.feature_norm.stddev[static_cast<std::size_t>(c)];
    const Eigen::VectorXd y_stw = predict_stw(m.stw, Xn);
    const Eigen::VectorXd eps_hat = m.ebt.predict(Xn);
    const Eigen::MatrixXd Z = build_aggregate_input(Xn, y_stw, eps_hat);
    auto [mean_n, sd_n] = predict_gpr(m.gpr, Z);

    LayerPredictions out;
    out.stw = (y_stw.array() * m.target_std + m.target_mean).matrix();
    out.stacked = ((y_stw + eps_hat).array() * m.target_std + m.target_mean).matrix();
    out.full = (mean_n.array() * m.target_std + m.target_mean).matrix();
    out.sd = (sd_n.array() * m.target_std).matrix();
    return out;
}

struct Prediction {
    double value = 0.0;
    double sd = 0.0;
};

inline Prediction predict(const TripleLayerModel& m, const StationConfig& station,
                          const GeoPoint& uav) {
    const FeatureVector f = featurize(station, uav, m.config.min_distance_m);
    Eigen::MatrixXd X(1, 4);
    X << f.log10_d3d, f.log10_d2d, f.azimuth_deg, f.elevation_deg;
    const auto p = predict_layers(m, X);
    return {p.full[0], p.sd[0]};
}

inline metrics::EvalReport evaluate(const TripleLayerModel& m, const Dataset& ds,
                                    const StationConfig& station) {
    const Eigen::MatrixXd X = feature_matrix(ds, station, m.config.min_distance_m);
    const Eigen::VectorXd y = target_vector(ds, m.kpi);
    const auto p = predict_layers(m, X);
    return metrics::evaluate(std::span(y.data(), static_cast<std::size_t>(y.size())),
                             std::span(p.full.data(), static_cast<std::size_t>(p.full.size())));
}

/// Per-layer evaluation reports (STW, STW+EBT, full stack) on one dataset.
struct LayerReports {
    metrics::EvalReport stw;
    metrics::EvalReport stacked;
    metrics::EvalReport full;
};

inline LayerReports evaluate_layers(const TripleLayerModel& m, const Dataset& ds,
                                    const StationConfig& station) {
    const Eigen::MatrixXd X = feature_matrix(ds, station, m.config.min_distance_m);
    const Eigen::VectorXd y = target_vector(ds, m.kpi);
    const auto p = predict_layers(m, X);
    const std::span<const double> ya(y.data(), static_cast<std::size_t>(y.size()));
    auto sp = [](const Eigen::VectorXd& v) {
        return std::span<const double>(v.data(), static_cast<std::size_t>(v.size()));
    };
    return {metrics::evaluate(ya, sp(p.stw)), metrics::evaluate(ya, sp(p.stacked)),
            metrics::evaluate(ya, sp(p.full))};
}

/// Guards against train/test leakage when a split is supplied alongside an
/// evaluation dataset.
inline void assert_no_leakage(const DataSplit& split) {
    for (const auto& k : split.test_keys)
        if (split.train_keys.count(k))
            throw std::logic_error("evaluate: train/test location keys overlap");
}

// ---------------------------------------------------------------------------
// Throughput benchmarking

struct ThroughputReport {
    double obs_per_sec = 0.0;
    double stw_seconds = 0.0;
    double ebt_seconds = 0.0;
    double gpr_seconds = 0.0;
    std::size_t rows = 0;
};

/// Median full-stack prediction throughput over timed repetitions, with a
/// per-layer time breakdown from the final repetition.
inline ThroughputReport benchmark_throughput(const TripleLayerModel& m,
                                             const Eigen::MatrixXd& X_raw,
                                             int warmup_reps = 1,
                                             int timed_reps = 5) {
    using clock = std::chrono::steady_clock;
    Eigen::MatrixXd Xn = X_raw;
    for (int c = 0; c < 4; ++c)
        Xn.col(c) =
            (X_raw.col(c).array() - m.feature_norm.mean[static_cast<std::size_t>(c)]) /
            m.feature_norm.stddev[static_cast<std::size_t>(c)];

    ThroughputReport rep;
    rep.rows = static_cast<std::size_t>(X_raw.rows());
    volatile double sink = 0.0;

    std::vector<double> rates;
    for (int r = -warmup_reps; r < timed_reps; ++r) {
        const auto t0 = clock::now();
        const Eigen::VectorXd y_stw = predict_stw(m.stw, Xn);
        const auto t1 = clock::now();
        const Eigen::VectorXd eps_hat = m.ebt.predict(Xn);
        const auto t2 = clock::now();
        const Eigen::MatrixXd Z = build_aggregate_input(Xn, y_stw, eps_hat);
        auto [mean_n, sd_n] = predict_gpr(m.gpr, Z);
        const auto t3 = clock::now();
        sink = sink + mean_n.sum();
        if (r < 0) continue;
        const double secs = std::chrono::duration<double>(t3 - t0).count();
        rates.push_back(static_cast<double>(X_raw.rows()) / secs);
        rep.stw_seconds = std::chrono::duration<double>(t1 - t0).count();
        rep.ebt_seconds = std::chrono::duration<double>(t2 - t1).count();
        rep.gpr_seconds = std::chrono::duration<double>(t3 - t2).count();
    }
    std::sort(rates.begin(), rates.end());
    rep.obs_per_sec = rates[rates.size() / 2];
    return rep;
}

// ---------------------------------------------------------------------------
// Model container (versioned, digest-protected, lossless hexfloat encoding)

constexpr int kContainerMajor = 1;
constexpr int kContainerMinor = 0;

namespace detail {

inline nlohmann::ordered_json model_payload(const TripleLayerModel& m) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["format_version"] = {{"major", kContainerMajor}, {"minor", kContainerMinor}};
    j["kpi"] = to_string(m.kpi);
    j["config"] = config_json(m.config);

    ordered_json norm;
    norm["feature_mean"] = ordered_json::array();
    norm["feature_std"] = ordered_json::array();
    for (int c = 0; c < 4; ++c) {
        norm["feature_mean"].push_back(hexf(m.feature_norm.mean[static_cast<std::size_t>(c)]));
        norm["feature_std"].push_back(hexf(m.feature_norm.stddev[static_cast<std::size_t>(c)]));
    }
    norm["target_mean"] = hexf(m.target_mean);
    norm["target_std"] = hexf(m.target_std);
    j["norm_stats"] = norm;

    ordered_json stw;
    stw["n_features"] = m.stw.n_features;
    stw["terms"] = ordered_json::array();
    stw["coefficients"] = ordered_json::array();
    for (std::size_t t = 0; t < m.stw.terms.size(); ++t) {
        const auto& term = m.stw.terms[t];
        stw["terms"].push_back({{"kind", static_cast<int>(term.kind)},
                                {"i", term.i},
                                {"j", term.j},
                                {"name", term.name()}});
        stw["coefficients"].push_back(hexf(m.stw.coefficients[static_cast<Eigen::Index>(t)]));
    }
    j["stw_terms"] = stw;

    ordered_json ebt;
    ebt["n_trees"] = static_cast<int>(m.ebt.trees.size());
    ebt["trees"] = ordered_json::array();
    for (const auto& tree : m.ebt.trees) {
        ordered_json tj;
        tj["split_count"] = tree.split_count;
        ordered_json nodes = ordered_json::array();
        for (const auto& nd : tree.nodes)
            nodes.push_back({nd.feature, hexf(nd.threshold), nd.left, nd.right,
                             hexf(nd.value)});
        tj["nodes"] = std::move(nodes);
        ebt["trees"].push_back(std::move(tj));
    }
    j["ebt_nodes"] = ebt;

    ordered_json gpr;
    gpr["family"] = to_string(m.gpr.kernel.family);
    gpr["signal_variance"] = hexf(m.gpr.kernel.signal_variance);
    gpr["length_scales"] = ordered_json::array();
    for (Eigen::Index d = 0; d < m.gpr.kernel.length_scales.size(); ++d)
        gpr["length_scales"].push_back(hexf(m.gpr.kernel.length_scales[d]));
    gpr["shape"] = hexf(m.gpr.kernel.shape);
    gpr["noise_variance"] = hexf(m.gpr.noise_variance);
    gpr["jitter"] = hexf(m.gpr.jitter_used);
    gpr["log_marginal_likelihood"] = hexf(m.gpr.log_marginal_likelihood);
    gpr["degenerate_target"] = m.gpr.degenerate_target;
    gpr["alpha"] = ordered_json::array();
    for (Eigen::Index i = 0; i < m.gpr.alpha.size(); ++i)
        gpr["alpha"].push_back(hexf(m.gpr.alpha[i]));
    gpr["training_targets"] = ordered_json::array();
    for (Eigen::Index i = 0; i < m.gpr.training_targets.size(); ++i)
        gpr["training_targets"].push_back(hexf(m.gpr.training_targets[i]));
    j["gpr_params"] = std::move(gpr);

    ordered_json ti = ordered_json::array();
    for (Eigen::Index i = 0; i < m.gpr.training_inputs.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index c = 0; c < m.gpr.training_inputs.cols(); ++c)
            row.push_back(hexf(m.gpr.training_inputs(i, c)));
        ti.push_back(std::move(row));
    }
    j["training_inputs"] = std::move(ti);
    j["config_fingerprint"] = m.fingerprint;
    return j;
}

}  // namespace detail

inline void save_model(const TripleLayerModel& m, const std::string& path) {
    auto payload = detail::model_payload(m);
    const std::string body = payload.dump();
    const std::uint64_t digest = fnv1a64(body.data(), body.size());
    char dig[20];
    std::snprintf(dig, sizeof dig, "%016llx", static_cast<unsigned long long>(digest));
    payload["integrity_digest"] = dig;

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("save_model: cannot write " + tmp);
        out << payload.dump(1) << '\n';
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("save_model: rename failed for " + path);
}

inline TripleLayerModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_model: cannot open " + path);
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("load_model: truncated or malformed container: ") + e.what());
    }

    if (!j.contains("format_version") || !j.contains("integrity_digest"))
        throw std::runtime_error("load_model: not a model container");
    const int major = j["format_version"]["major"];
    if (major != kContainerMajor)
        throw std::runtime_error("load_model: unsupported container major version " +
                                 std::to_string(major));

    const std::string stored_digest = j["integrity_digest"];
    nlohmann::ordered_json payload = j;
    payload.erase("integrity_digest");
    const std::string body = payload.dump();
    const std::uint64_t digest = fnv1a64(body.data(), body.size());
    char dig[20];
    std::snprintf(dig, sizeof dig, "%016llx", static_cast<unsigned long long>(digest));
    if (stored_digest != dig)
        throw std::runtime_error("load_model: integrity digest mismatch");

    TripleLayerModel m;
    m.kpi = kpi_from_string(j["kpi"]);
    m.config = detail::config_from_json(j["config"]);
    m.fingerprint = j["config_fingerprint"];

    for (int c = 0; c < 4; ++c) {
        m.feature_norm.mean.push_back(detail::unhexf(j["norm_stats"]["feature_mean"][c]));
        m.feature_norm.stddev.push_back(detail::unhexf(j["norm_stats"]["feature_std"][c]));
    }
    m.target_mean = detail::unhexf(j["norm_stats"]["target_mean"]);
    m.target_std = detail::unhexf(j["norm_stats"]["target_std"]);

    const auto& stw = j["stw_terms"];
    m.stw.n_features = stw["n_features"];
    const auto& terms = stw["terms"];
    m.stw.coefficients.resize(static_cast<Eigen::Index>(terms.size()));
    for (std::size_t t = 0; t < terms.size(); ++t) {
        TermSpec ts;
        ts.kind = static_cast<TermKind>(terms[t]["kind"].get<int>());
        ts.i = terms[t]["i"];
        ts.j = terms[t]["j"];
        m.stw.terms.push_back(ts);
        m.stw.coefficients[static_cast<Eigen::Index>(t)] =
            detail::unhexf(stw["coefficients"][t]);
    }

    const auto& ebt = j["ebt_nodes"];
    m.ebt.config = m.config.ebt;
    for (const auto& tj : ebt["trees"]) {
        RegressionTree tree;
        tree.split_count = tj["split_count"];
        for (const auto& nj : tj["nodes"]) {
            TreeNode nd;
            nd.feature = nj[0];
            nd.threshold = detail::unhexf(nj[1]);
            nd.left = nj[2];
            nd.right = nj[3];
            nd.value = detail::unhexf(nj[4]);
            tree.nodes.push_back(nd);
        }
        m.ebt.trees.push_back(std::move(tree));
    }

    const auto& g = j["gpr_params"];
    m.gpr.kernel.family = kernel_family_from_string(g["family"]);
    m.gpr.kernel.signal_variance = detail::unhexf(g["signal_variance"]);
    m.gpr.kernel.length_scales.resize(
        static_cast<Eigen::Index>(g["length_scales"].size()));
    for (std::size_t d = 0; d < g["length_scales"].size(); ++d)
        m.gpr.kernel.length_scales[static_cast<Eigen::Index>(d)] =
            detail::unhexf(g["length_scales"][d]);
    m.gpr.kernel.shape = detail::unhexf(g["shape"]);
    m.gpr.noise_variance = detail::unhexf(g["noise_variance"]);
    m.gpr.jitter_used = detail::unhexf(g["jitter"]);
    m.gpr.log_marginal_likelihood = detail::unhexf(g["log_marginal_likelihood"]);
    m.gpr.degenerate_target = g["degenerate_target"];
    m.gpr.alpha.resize(static_cast<Eigen::Index>(g["alpha"].size()));
    for (std::size_t i = 0; i < g["alpha"].size(); ++i)
        m.gpr.alpha[static_cast<Eigen::Index>(i)] = detail::unhexf(g["alpha"][i]);
    m.gpr.training_targets.resize(
        static_cast<Eigen::Index>(g["training_targets"].size()));
    for (std::size_t i = 0; i < g["training_targets"].size(); ++i)
        m.gpr.training_targets[static_cast<Eigen::Index>(i)] =
            detail::unhexf(g["training_targets"][i]);

    const auto& ti = j["training_inputs"];
    m.gpr.training_inputs.resize(static_cast<Eigen::Index>(ti.size()),
                                 m.gpr.kernel.length_scales.size());
    for (std::size_t i = 0; i < ti.size(); ++i)
        for (std::size_t c = 0; c < ti[i].size(); ++c)
            m.gpr.training_inputs(static_cast<Eigen::Index>(i),
                                  static_cast<Eigen::Index>(c)) =
                detail::unhexf(ti[i][c]);

    // Rebuild the Cholesky factor from the exact stored inputs; the jitter
    // value stored in the container is reapplied directly.
    Eigen::MatrixXd Kn =
        kernel_matrix(m.gpr.kernel, m.gpr.training_inputs, m.gpr.training_inputs);
    Kn.diagonal().array() += m.gpr.noise_variance + m.gpr.jitter_used;
    Eigen::LLT<Eigen::MatrixXd> llt(Kn);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("load_model: stored kernel not factorizable");
    m.gpr.chol_lower = llt.matrixL();
    return m;
}

}  // namespace a2g
