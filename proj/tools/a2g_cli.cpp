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

// a2g: ingest -> split -> train -> evaluate -> predict -> bench workflow
// for the triple-layer air-to-ground KPI model, plus reference baselines
// and synthetic corpus generation. Every command writes a run manifest
// sufficient to reproduce it.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "a2g/baselines.hpp"
#include "a2g/dataset.hpp"
#include "a2g/metrics.hpp"
#include "a2g/stack.hpp"
#include "a2g/synth.hpp"

namespace {

constexpr const char* kToolVersion = "a2g 1.0.0";

using nlohmann::ordered_json;

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "missing";
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (in.read(buf, sizeof buf) || in.gcount() > 0)
        h = a2g::fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    char out[20];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

void atomic_write(const std::string& path, const std::string& body) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << body;
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("rename failed for " + path);
}

/// Collects everything needed to reproduce a run; written next to the
/// primary output as <out>.manifest.json.
struct Manifest {
    std::string command;
    std::vector<std::string> argv;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::uint64_t seed = 0;
    std::string config_digest;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    void write(const std::string& primary_out) const {
        ordered_json j;
        j["tool"] = kToolVersion;
        j["command"] = command;
        j["argv"] = argv;
        j["seed"] = seed;
        j["config_digest"] = config_digest;
        ordered_json ins = ordered_json::object();
        for (const auto& p : inputs) ins[p] = file_digest(p);
        j["input_digests"] = ins;
        ordered_json outs = ordered_json::object();
        for (const auto& p : outputs) outs[p] = file_digest(p);
        j["output_digests"] = outs;
        j["elapsed_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        atomic_write(primary_out + ".manifest.json", j.dump(1) + "\n");
    }
};

std::map<std::string, std::string> load_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    std::map<std::string, std::string> kv;
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
        if (!key.empty()) kv[key] = val;
    }
    return kv;
}

/// Applies flat key=value settings onto a StackConfig; keys mirror the
/// config fields one-to-one.
void apply_stack_config(a2g::StackConfig& c,
                        const std::map<std::string, std::string>& kv) {
    auto getd = [&](const char* k, double& v) {
        if (kv.count(k)) v = std::stod(kv.at(k));
    };
    auto geti = [&](const char* k, auto& v) {
        if (kv.count(k)) v = static_cast<std::decay_t<decltype(v)>>(std::stoll(kv.at(k)));
    };
    auto getb = [&](const char* k, bool& v) {
        if (kv.count(k)) v = kv.at(k) == "true" || kv.at(k) == "1";
    };
    getd("stw.p_enter", c.stw.p_enter);
    getd("stw.p_remove", c.stw.p_remove);
    geti("stw.max_iters", c.stw.max_iters);
    getb("stw.include_interactions", c.stw.include_interactions);
    getb("stw.include_squares", c.stw.include_squares);
    geti("ebt.n_learners", c.ebt.n_learners);
    geti("ebt.min_leaf", c.ebt.min_leaf);
    geti("ebt.max_splits", c.ebt.max_splits);
    geti("ebt.n_features_per_split", c.ebt.n_features_per_split);
    geti("ebt.seed", c.ebt.seed);
    if (kv.count("gpr.family"))
        c.gpr.family = a2g::kernel_family_from_string(kv.at("gpr.family"));
    geti("gpr.restarts", c.gpr.options.restarts);
    geti("gpr.max_iters", c.gpr.options.max_iters);
    geti("gpr.subsample", c.gpr.options.subsample);
    geti("gpr.seed", c.gpr.options.seed);
    geti("cv_folds", c.cv_folds);
    geti("seed", c.seed);
    getd("min_distance_m", c.min_distance_m);
    getb("out_of_fold_stacking", c.out_of_fold_stacking);
}

void apply_synth_config(a2g::SynthScenario& sc,
                        const std::map<std::string, std::string>& kv) {
    auto getd = [&](const char* k, double& v) {
        if (kv.count(k)) v = std::stod(kv.at(k));
    };
    auto geti = [&](const char* k, auto& v) {
        if (kv.count(k)) v = static_cast<std::decay_t<decltype(v)>>(std::stoll(kv.at(k)));
    };
    getd("station.lat", sc.station.position.lat_deg);
    getd("station.lon", sc.station.position.lon_deg);
    getd("station.alt", sc.station.position.alt_asl_m);
    getd("station.tilt", sc.station.antenna_tilt_deg);
    getd("station.frequency", sc.station.carrier_frequency_hz);
    getd("ground_asl", sc.ground_asl_m);
    getd("radius_min", sc.radius_min_m);
    getd("radius_max", sc.radius_max_m);
    getd("radius_step", sc.radius_step_m);
    getd("agl_min", sc.agl_min_m);
    getd("agl_max", sc.agl_max_m);
    getd("agl_step", sc.agl_step_m);
    geti("points_per_arc", sc.points_per_arc);
    getd("pl0", sc.pl0_db);
    getd("exponent", sc.exponent);
    getd("azimuth_gain", sc.azimuth_gain_db);
    geti("azimuth_lobes", sc.azimuth_lobes);
    getd("noise_sigma", sc.noise_sigma_db);
    getd("tx_power", sc.tx_power_dbm);
    geti("seed", sc.seed);
}

struct StationFlags {
    double lat = 3.0000, lon = 101.5000, alt = 85.0;
    double tilt = 4.0, freq = 2.6e9;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--bs-lat", lat, "BS latitude, degrees");
        cmd->add_option("--bs-lon", lon, "BS longitude, degrees");
        cmd->add_option("--bs-alt", alt, "BS antenna altitude, m ASL");
        cmd->add_option("--tilt", tilt, "BS antenna tilt, degrees");
        cmd->add_option("--freq", freq, "carrier frequency, Hz");
    }
    a2g::StationConfig station() const { return {{lat, lon, alt}, tilt, freq, 65.0, 10.0}; }
};

std::string default_config_path() {
    const char* env = std::getenv("A2G_CONFIG");
    return env ? env : "";
}

a2g::StackConfig build_stack_config(const std::string& profile,
                                    const std::string& config_file) {
    a2g::StackConfig cfg = profile == "latency"
                               ? a2g::StackConfig::latency_profile()
                               : a2g::StackConfig::accuracy_profile();
    std::string path = config_file.empty() ? default_config_path() : config_file;
    if (!path.empty()) apply_stack_config(cfg, load_kv_file(path));
    return cfg;
}

std::string residuals_csv(const Eigen::VectorXd& actual,
                          const a2g::LayerPredictions& p) {
    std::ostringstream os;
    os << "actual,predicted,residual,sd\n";
    os.precision(10);
    for (Eigen::Index i = 0; i < actual.size(); ++i)
        os << actual[i] << ',' << p.full[i] << ',' << actual[i] - p.full[i] << ','
           << p.sd[i] << '\n';
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"triple-layer air-to-ground KPI channel model"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    std::vector<std::string> raw_args(argv, argv + argc);

    // --- ingest ---------------------------------------------------------
    auto* ingest = app.add_subcommand("ingest", "load, filter and clean a raw drive-test CSV");
    std::string in_raw, in_map, out_path, cell_id;
    double outlier_z = 4.0;
    ingest->add_option("--raw", in_raw, "raw CSV path")->required();
    ingest->add_option("--column-map", in_map, "key=value column map file")->required();
    ingest->add_option("--out", out_path, "canonical CSV output")->required();
    ingest->add_option("--cell-id", cell_id, "keep only this serving cell");
    ingest->add_option("--outlier-z", outlier_z, "outlier z-score threshold (<=0 disables)");

    // --- split ----------------------------------------------------------
    auto* split_cmd = app.add_subcommand("split", "spatial train/test split by location key");
    std::string split_in, out_train, out_test;
    double ratio = 0.8;
    std::uint64_t split_seed = 1;
    split_cmd->add_option("--in", split_in, "canonical CSV")->required();
    split_cmd->add_option("--ratio", ratio, "training fraction");
    split_cmd->add_option("--seed", split_seed, "shuffle seed");
    split_cmd->add_option("--out-train", out_train)->required();
    split_cmd->add_option("--out-test", out_test)->required();

    // --- train ----------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "train the triple-layer model for one KPI");
    std::string train_in, train_kpi = "PL", train_profile = "accuracy",
                train_config, out_model;
    StationFlags train_station;
    train_cmd->add_option("--train", train_in, "training canonical CSV")->required();
    train_cmd->add_option("--kpi", train_kpi, "PL|RSRP|RSRQ|RSSI");
    train_cmd->add_option("--profile", train_profile, "accuracy|latency");
    train_cmd->add_option("--config", train_config, "key=value config file");
    train_cmd->add_option("--out", out_model, "model container output")->required();
    train_station.add_to(train_cmd);

    // --- evaluate -------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("evaluate", "score a model on a dataset");
    std::string eval_model, eval_data, eval_out;
    StationFlags eval_station;
    eval_cmd->add_option("--model", eval_model)->required();
    eval_cmd->add_option("--data", eval_data, "canonical CSV")->required();
    eval_cmd->add_option("--out", eval_out, "report CSV output")->required();
    eval_station.add_to(eval_cmd);

    // --- predict --------------------------------------------------------
    auto* pred_cmd = app.add_subcommand("predict", "predict KPI + uncertainty at points");
    std::string pred_model, pred_points, pred_out, pred_grid;
    double pred_lat = 0, pred_lon = 0, pred_alt = 0;
    bool pred_single = false;
    StationFlags pred_station;
    pred_cmd->add_option("--model", pred_model)->required();
    pred_cmd->add_option("--points", pred_points,
                         "canonical CSV; positions are used, KPIs ignored");
    pred_cmd->add_option("--grid", pred_grid,
                         "latmin:latmax:nlat,lonmin:lonmax:nlon,alt coverage grid");
    pred_cmd->add_flag("--single", pred_single, "single-point mode (--lat/--lon/--alt)");
    pred_cmd->add_option("--lat", pred_lat, "UAV latitude, degrees");
    pred_cmd->add_option("--lon", pred_lon, "UAV longitude, degrees");
    pred_cmd->add_option("--alt", pred_alt, "UAV altitude, m ASL");
    pred_cmd->add_option("--out", pred_out, "output CSV (stdout if omitted)");
    pred_station.add_to(pred_cmd);

    // --- bench ----------------------------------------------------------
    auto* bench_cmd = app.add_subcommand("bench", "prediction throughput benchmark");
    std::string bench_model, bench_data, bench_out;
    int bench_reps = 5;
    StationFlags bench_station;
    bench_cmd->add_option("--model", bench_model)->required();
    bench_cmd->add_option("--data", bench_data, "canonical CSV")->required();
    bench_cmd->add_option("--reps", bench_reps, "timed repetitions");
    bench_cmd->add_option("--out", bench_out, "report output (stdout if omitted)");
    bench_station.add_to(bench_cmd);

    // --- baseline -------------------------------------------------------
    auto* base_cmd = app.add_subcommand("baseline", "reference model fits and reports");
    std::string base_train, base_test, base_kpi = "PL", base_kind = "plain-linear",
                base_out;
    StationFlags base_station;
    base_cmd->add_option("--train", base_train)->required();
    base_cmd->add_option("--test", base_test)->required();
    base_cmd->add_option("--kpi", base_kpi, "PL|RSRP|RSRQ|RSSI");
    base_cmd->add_option("--kind", base_kind,
                         "plain-linear|plain-bagged-trees|fspl|lnspl");
    base_cmd->add_option("--out", base_out, "report CSV output")->required();
    base_station.add_to(base_cmd);

    // --- synth ----------------------------------------------------------
    auto* synth_cmd = app.add_subcommand("synth", "generate the synthetic corpus");
    std::string synth_out, synth_config;
    std::uint64_t synth_seed = 42;
    synth_cmd->add_option("--out", synth_out, "canonical CSV output")->required();
    synth_cmd->add_option("--config", synth_config, "key=value scenario file");
    synth_cmd->add_option("--seed", synth_seed, "noise seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help/--version
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        Manifest man;
        man.argv = raw_args;

        if (*ingest) {
            man.command = "ingest";
            man.inputs = {in_raw, in_map};
            a2g::LoadReport lrep;
            a2g::Dataset ds = a2g::load_csv(in_raw, a2g::ColumnMap::load(in_map), &lrep);
            if (!cell_id.empty()) ds = a2g::filter_serving(ds, cell_id);
            a2g::CleaningRules rules;
            rules.outlier_zmax = outlier_z;
            auto [cleaned, crep] = a2g::clean(ds, rules);
            std::ostringstream csv;
            a2g::write_canonical_csv(cleaned, csv);
            atomic_write(out_path, csv.str());
            std::ostringstream rep;
            rep << "parsed " << lrep.parsed << ", rejected " << lrep.rejected << '\n';
            for (const auto& r : lrep.rejections) rep << "  " << r << '\n';
            rep << crep.text();
            atomic_write(out_path + ".report.txt", rep.str());
            man.outputs = {out_path, out_path + ".report.txt"};
            man.write(out_path);
            std::cout << "ingest: " << cleaned.size() << " samples -> " << out_path << "\n";
        } else if (*split_cmd) {
            man.command = "split";
            man.seed = split_seed;
            man.inputs = {split_in};
            a2g::Dataset ds = a2g::load_canonical_csv(split_in);
            auto split = a2g::spatial_split(ds, ratio, split_seed);
            a2g::assert_no_leakage(split);
            auto [tr, te] = a2g::apply_split(ds, split);
            std::ostringstream a, b;
            a2g::write_canonical_csv(tr, a);
            a2g::write_canonical_csv(te, b);
            atomic_write(out_train, a.str());
            atomic_write(out_test, b.str());
            man.outputs = {out_train, out_test};
            man.write(out_train);
            std::cout << "split: " << tr.size() << " train / " << te.size()
                      << " test samples (" << split.train_keys.size() << "/"
                      << split.test_keys.size() << " keys)\n";
        } else if (*train_cmd) {
            man.command = "train";
            man.inputs = {train_in};
            a2g::Dataset ds = a2g::load_canonical_csv(train_in);
            a2g::StackConfig cfg = build_stack_config(train_profile, train_config);
            cfg.profile = train_profile;
            man.seed = cfg.seed;
            man.config_digest = a2g::detail::config_fingerprint(cfg);
            auto [model, cv] = a2g::train(ds, train_station.station(),
                                          a2g::kpi_from_string(train_kpi), cfg);
            a2g::save_model(model, out_model);
            std::ostringstream cvcsv;
            cvcsv << a2g::metrics::EvalReport::csv_header() << '\n';
            for (std::size_t f = 0; f < cv.folds.size(); ++f)
                cvcsv << cv.folds[f].csv_row(train_kpi, "cv-fold-" + std::to_string(f))
                      << '\n';
            cvcsv << cv.mean.csv_row(train_kpi, "cv-mean") << '\n';
            atomic_write(out_model + ".cv.csv", cvcsv.str());
            man.outputs = {out_model, out_model + ".cv.csv"};
            man.write(out_model);
            std::cout << "train: " << train_kpi << " (" << train_profile
                      << "), cv rmse " << cv.mean.rmse << " -> " << out_model << "\n";
        } else if (*eval_cmd) {
            man.command = "evaluate";
            man.inputs = {eval_model, eval_data};
            const auto model = a2g::load_model(eval_model);
            a2g::Dataset ds = a2g::load_canonical_csv(eval_data);
            const auto st = eval_station.station();
            const Eigen::MatrixXd X =
                a2g::feature_matrix(ds, st, model.config.min_distance_m);
            const Eigen::VectorXd y = a2g::target_vector(ds, model.kpi);
            const auto preds = a2g::predict_layers(model, X);
            const auto rep = a2g::metrics::evaluate(
                std::span(y.data(), static_cast<std::size_t>(y.size())),
                std::span(preds.full.data(), static_cast<std::size_t>(preds.full.size())));
            std::ostringstream os;
            os << a2g::metrics::EvalReport::csv_header() << '\n'
               << rep.csv_row(a2g::to_string(model.kpi), "eval") << '\n';
            atomic_write(eval_out, os.str());
            atomic_write(eval_out + ".residuals.csv", residuals_csv(y, preds));
            man.outputs = {eval_out, eval_out + ".residuals.csv"};
            man.write(eval_out);
            std::cout << "evaluate: n=" << rep.n << " rmse=" << rep.rmse
                      << " r2=" << rep.r2 << " -> " << eval_out << "\n";
        } else if (*pred_cmd) {
            man.command = "predict";
            man.inputs = {pred_model};
            const auto model = a2g::load_model(pred_model);
            const auto st = pred_station.station();
            std::vector<a2g::GeoPoint> points;
            if (!pred_points.empty()) {
                man.inputs.push_back(pred_points);
                a2g::Dataset ds = a2g::load_canonical_csv(pred_points);
                for (const auto& s : ds.samples) points.push_back(s.position);
            } else if (!pred_grid.empty()) {
                double la0, la1, lo0, lo1, alt;
                int nla, nlo;
                if (std::sscanf(pred_grid.c_str(), "%lf:%lf:%d,%lf:%lf:%d,%lf", &la0,
                                &la1, &nla, &lo0, &lo1, &nlo, &alt) != 7)
                    throw CLI::ValidationError("--grid",
                                               "expected latmin:latmax:nlat,lonmin:lonmax:nlon,alt");
                for (int i = 0; i < nla; ++i)
                    for (int j = 0; j < nlo; ++j)
                        points.push_back(
                            {la0 + (la1 - la0) * i / std::max(1, nla - 1),
                             lo0 + (lo1 - lo0) * j / std::max(1, nlo - 1), alt});
            } else if (pred_single) {
                points.push_back({pred_lat, pred_lon, pred_alt});
            } else {
                throw CLI::ValidationError("predict",
                                           "one of --points, --grid or --single required");
            }
            std::ostringstream os;
            os << "lat_deg,lon_deg,alt_asl_m," << a2g::to_string(model.kpi)
               << ",sd\n";
            os.precision(10);
            for (const auto& p : points) {
                const auto pr = a2g::predict(model, st, p);
                os << p.lat_deg << ',' << p.lon_deg << ',' << p.alt_asl_m << ','
                   << pr.value << ',' << pr.sd << '\n';
            }
            if (pred_out.empty()) {
                std::cout << os.str();
            } else {
                atomic_write(pred_out, os.str());
                man.outputs = {pred_out};
                man.write(pred_out);
            }
        } else if (*bench_cmd) {
            man.command = "bench";
            man.inputs = {bench_model, bench_data};
            const auto model = a2g::load_model(bench_model);
            a2g::Dataset ds = a2g::load_canonical_csv(bench_data);
            const Eigen::MatrixXd X = a2g::feature_matrix(
                ds, bench_station.station(), model.config.min_distance_m);
            const auto rep = a2g::benchmark_throughput(model, X, 1, bench_reps);
            std::ostringstream os;
            os << "rows,obs_per_sec,stw_seconds,ebt_seconds,gpr_seconds\n"
               << rep.rows << ',' << rep.obs_per_sec << ',' << rep.stw_seconds << ','
               << rep.ebt_seconds << ',' << rep.gpr_seconds << '\n';
            if (bench_out.empty()) {
                std::cout << os.str();
            } else {
                atomic_write(bench_out, os.str());
                man.outputs = {bench_out};
                man.write(bench_out);
            }
        } else if (*base_cmd) {
            man.command = "baseline";
            man.inputs = {base_train, base_test};
            a2g::Dataset tr = a2g::load_canonical_csv(base_train);
            a2g::Dataset te = a2g::load_canonical_csv(base_test);
            const auto st = base_station.station();
            const a2g::Kpi kpi = a2g::kpi_from_string(base_kpi);
            const Eigen::VectorXd ytr = a2g::target_vector(tr, kpi);
            const Eigen::VectorXd yte = a2g::target_vector(te, kpi);
            auto spn = [](const Eigen::VectorXd& v) {
                return std::span<const double>(v.data(), static_cast<std::size_t>(v.size()));
            };
            std::ostringstream os;
            os << a2g::metrics::EvalReport::csv_header() << '\n';
            if (base_kind == "fspl" || base_kind == "lnspl") {
                if (kpi != a2g::Kpi::PL)
                    throw CLI::ValidationError("--kind", base_kind + " applies to PL only");
                auto d3 = [&](const a2g::Dataset& ds) {
                    std::vector<double> v;
                    for (const auto& s : ds.samples)
                        v.push_back(a2g::distance_3d(
                            a2g::haversine_2d(st.position, s.position),
                            s.position.alt_asl_m, st.position.alt_asl_m));
                    return v;
                };
                const auto dtr = d3(tr), dte = d3(te);
                Eigen::VectorXd ptr(static_cast<Eigen::Index>(dtr.size())),
                    pte(static_cast<Eigen::Index>(dte.size()));
                if (base_kind == "fspl") {
                    for (std::size_t i = 0; i < dtr.size(); ++i)
                        ptr[static_cast<Eigen::Index>(i)] =
                            a2g::fspl(dtr[i], st.carrier_frequency_hz);
                    for (std::size_t i = 0; i < dte.size(); ++i)
                        pte[static_cast<Eigen::Index>(i)] =
                            a2g::fspl(dte[i], st.carrier_frequency_hz);
                } else {
                    std::vector<double> pl(ytr.data(), ytr.data() + ytr.size());
                    const auto fit = a2g::fit_lnspl(dtr, pl);
                    for (std::size_t i = 0; i < dtr.size(); ++i)
                        ptr[static_cast<Eigen::Index>(i)] = a2g::predict_lnspl(fit, dtr[i]);
                    for (std::size_t i = 0; i < dte.size(); ++i)
                        pte[static_cast<Eigen::Index>(i)] = a2g::predict_lnspl(fit, dte[i]);
                    std::cout << "lnspl fit: pl0=" << fit.pl0 << " n=" << fit.exponent
                              << " sigma=" << fit.shadow_sigma << "\n";
                }
                os << a2g::metrics::evaluate(spn(ytr), spn(ptr)).csv_row(base_kpi, base_kind + "-train") << '\n';
                os << a2g::metrics::evaluate(spn(yte), spn(pte)).csv_row(base_kpi, base_kind + "-test") << '\n';
            } else {
                const a2g::BaselineKind kind =
                    base_kind == "plain-linear" ? a2g::BaselineKind::PlainLinear
                    : base_kind == "plain-bagged-trees"
                        ? a2g::BaselineKind::PlainBaggedTrees
                        : throw CLI::ValidationError("--kind", "unknown kind " + base_kind);
                const Eigen::MatrixXd Xtr = a2g::feature_matrix(tr, st);
                const Eigen::MatrixXd Xte = a2g::feature_matrix(te, st);
                const auto m = a2g::fit_single_layer(Xtr, ytr, kind);
                const Eigen::VectorXd ptr = a2g::predict_single_layer(m, Xtr);
                const Eigen::VectorXd pte = a2g::predict_single_layer(m, Xte);
                os << a2g::metrics::evaluate(spn(ytr), spn(ptr)).csv_row(base_kpi, base_kind + "-train") << '\n';
                os << a2g::metrics::evaluate(spn(yte), spn(pte)).csv_row(base_kpi, base_kind + "-test") << '\n';
            }
            atomic_write(base_out, os.str());
            man.outputs = {base_out};
            man.write(base_out);
            std::cout << "baseline: " << base_kind << " -> " << base_out << "\n";
        } else if (*synth_cmd) {
            man.command = "synth";
            man.seed = synth_seed;
            a2g::SynthScenario sc;
            sc.seed = synth_seed;
            if (!synth_config.empty()) {
                man.inputs.push_back(synth_config);
                apply_synth_config(sc, load_kv_file(synth_config));
            }
            const a2g::Dataset ds = a2g::generate_synth(sc);
            std::ostringstream csv;
            a2g::write_canonical_csv(ds, csv);
            atomic_write(synth_out, csv.str());
            man.outputs = {synth_out};
            man.write(synth_out);
            std::cout << "synth: " << ds.size() << " samples -> " << synth_out << "\n";
        }
        return 0;
    } catch (const CLI::Error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
