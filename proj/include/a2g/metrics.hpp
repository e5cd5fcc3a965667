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
#include <cstddef>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace a2g::metrics {

struct LengthMismatchError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct EmptyInputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ZeroVarianceError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ZeroActualError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline void check_pair(std::span<const double> actual,
                       std::span<const double> predicted) {
    if (actual.size() != predicted.size())
        throw LengthMismatchError("metrics: actual/predicted length mismatch");
    if (actual.empty()) throw EmptyInputError("metrics: empty input");
}

/// Mean squared error.
inline double mse(std::span<const double> actual, std::span<const double> predicted) {
    check_pair(actual, predicted);
    double s = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double d = actual[i] - predicted[i];
        s += d * d;
    }
    return s / static_cast<double>(actual.size());
}

inline double rmse(std::span<const double> actual, std::span<const double> predicted) {
    return std::sqrt(mse(actual, predicted));
}

/// Mean absolute error.
inline double mae(std::span<const double> actual, std::span<const double> predicted) {
    check_pair(actual, predicted);
    double s = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i)
        s += std::abs(actual[i] - predicted[i]);
    return s / static_cast<double>(actual.size());
}

/// Mean arctangent absolute percentage error, in percent.
/// Uses arctan(|P - y| / |y|); bounded above by 100*pi/2.
inline double maape(std::span<const double> actual, std::span<const double> predicted) {
    check_pair(actual, predicted);
    double s = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (actual[i] == 0.0)
            throw ZeroActualError("maape: actual value of exactly 0");
        s += std::atan(std::abs((predicted[i] - actual[i]) / actual[i]));
    }
    return s / static_cast<double>(actual.size()) * 100.0;
}

/// Pearson linear correlation coefficient.
inline double pearson_r(std::span<const double> actual,
                        std::span<const double> predicted) {
    check_pair(actual, predicted);
    const double n = static_cast<double>(actual.size());
    double ma = 0.0, mp = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        ma += actual[i];
        mp += predicted[i];
    }
    ma /= n;
    mp /= n;
    double sap = 0.0, saa = 0.0, spp = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double da = actual[i] - ma;
        const double dp = predicted[i] - mp;
        sap += da * dp;
        saa += da * da;
        spp += dp * dp;
    }
    if (saa == 0.0 || spp == 0.0)
        throw ZeroVarianceError("pearson_r: zero-variance input");
    return sap / std::sqrt(saa * spp);
}

/// Coefficient of determination; can be negative for worse-than-mean models.
inline double r_squared(std::span<const double> actual,
                        std::span<const double> predicted) {
    check_pair(actual, predicted);
    double ma = 0.0;
    for (double a : actual) ma += a;
    ma /= static_cast<double>(actual.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double dr = actual[i] - predicted[i];
        const double dt = actual[i] - ma;
        ss_res += dr * dr;
        ss_tot += dt * dt;
    }
    if (ss_tot == 0.0)
        throw ZeroVarianceError("r_squared: zero-variance actual values");
    return 1.0 - ss_res / ss_tot;
}

/// Bundle of the six evaluation metrics for one (model, dataset) pair.
struct EvalReport {
    double mse = 0.0;
    double rmse = 0.0;
    double mae = 0.0;
    double maape_pct = 0.0;
    double r = 0.0;
    double r2 = 0.0;
    std::size_t n = 0;

    /// One CSV row: kpi,set,mse,rmse,mae,maape_pct,r,r2
    std::string csv_row(const std::string& kpi, const std::string& set) const {
        std::ostringstream os;
        os.precision(6);
        os << kpi << ',' << set << ',' << mse << ',' << rmse << ',' << mae << ','
           << maape_pct << ',' << r << ',' << r2;
        return os.str();
    }
    static std::string csv_header() { return "kpi,set,mse,rmse,mae,maape_pct,r,r2"; }
};

inline EvalReport evaluate(std::span<const double> actual,
                           std::span<const double> predicted) {
    EvalReport rep;
    rep.mse = mse(actual, predicted);
    rep.rmse = std::sqrt(rep.mse);
    rep.mae = mae(actual, predicted);
    rep.maape_pct = maape(actual, predicted);
    rep.r = pearson_r(actual, predicted);
    rep.r2 = r_squared(actual, predicted);
    rep.n = actual.size();
    return rep;
}

}  // namespace a2g::metrics
