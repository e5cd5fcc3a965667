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

#include <cmath>
#include <stdexcept>
#include <vector>

#include "a2g/ebt.hpp"
#include "a2g/stepwise.hpp"

namespace a2g {

/// Free-space path loss in dB for distance in meters and frequency in Hz:
/// 20 log10(d) + 20 log10(f) - 147.55. The constant corresponds to the
/// meters/Hz unit choice (20 log10(4 pi / c)).
inline double fspl(double distance_m, double frequency_hz) {
    if (!(distance_m > 0.0) || !(frequency_hz > 0.0))
        throw std::invalid_argument("fspl: distance and frequency must be > 0");
    return 20.0 * std::log10(distance_m) + 20.0 * std::log10(frequency_hz) - 147.55;
}

/// Log-distance path loss with log-normal shadowing:
/// PL(d) = pl0 + 10 n log10(d/d0) + X_sigma.
struct LnsplFit {
    double pl0 = 0.0;          ///< dB at reference distance d0
    double exponent = 2.0;     ///< path-loss exponent n
    double shadow_sigma = 0.0; ///< std dev of fit residuals, dB
    double d0 = 1.0;           ///< reference distance, meters
};

/// Ordinary least squares of measured PL against 10 log10(d/d0).
inline LnsplFit fit_lnspl(const std::vector<double>& d3d,
                          const std::vector<double>& pl, double d0 = 1.0) {
    if (d3d.size() != pl.size())
        throw std::invalid_argument("fit_lnspl: length mismatch");
    if (d3d.size() < 2) throw std::invalid_argument("fit_lnspl: need >= 2 samples");
    if (!(d0 > 0.0)) throw std::invalid_argument("fit_lnspl: d0 must be > 0");

    const auto n = d3d.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(d3d[i] > 0.0))
            throw std::invalid_argument("fit_lnspl: distances must be > 0");
        const double x = 10.0 * std::log10(d3d[i] / d0);
        sx += x;
        sy += pl[i];
        sxx += x * x;
        sxy += x * pl[i];
    }
    const double nn = static_cast<double>(n);
    const double denom = nn * sxx - sx * sx;
    if (denom == 0.0)
        throw std::invalid_argument("fit_lnspl: all distances identical");

    LnsplFit fit;
    fit.d0 = d0;
    fit.exponent = (nn * sxy - sx * sy) / denom;
    fit.pl0 = (sy - fit.exponent * sx) / nn;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double pred = fit.pl0 + fit.exponent * 10.0 * std::log10(d3d[i] / d0);
        ss += (pl[i] - pred) * (pl[i] - pred);
    }
    fit.shadow_sigma = std::sqrt(ss / nn);
    return fit;
}

/// Mean path loss from a fitted law; no shadowing draw.
inline double predict_lnspl(const LnsplFit& fit, double distance_m) {
    if (!(distance_m > 0.0))
        throw std::invalid_argument("predict_lnspl: distance must be > 0");
    return fit.pl0 + 10.0 * fit.exponent * std::log10(distance_m / fit.d0);
}

// ---------------------------------------------------------------------------
// Single-layer reference models on the four features (no stacking)

enum class BaselineKind { PlainLinear, PlainBaggedTrees };

struct BaselineModel {
    BaselineKind kind = BaselineKind::PlainLinear;
    StwModel linear;        // PlainLinear
    BaggedEnsemble trees;   // PlainBaggedTrees
};

/// Fits the named single-layer model directly on the (normalized) feature
/// matrix. PlainLinear is full least squares on constant + linear terms;
/// PlainBaggedTrees reuses the bagged ensemble with its default config.
inline BaselineModel fit_single_layer(const Eigen::MatrixXd& X,
                                      const Eigen::VectorXd& y, BaselineKind kind,
                                      const EbtConfig& tree_cfg = EbtConfig::accuracy_profile()) {
    BaselineModel m;
    m.kind = kind;
    if (kind == BaselineKind::PlainLinear) {
        const int nf = static_cast<int>(X.cols());
        std::vector<TermSpec> terms;
        terms.push_back({TermKind::Constant, -1, -1});
        for (int i = 0; i < nf; ++i) terms.push_back({TermKind::Linear, i, -1});
        const auto fit = detail::solve_terms(X, y, terms, 1e10);
        if (!fit.ok) throw std::runtime_error("fit_single_layer: singular design");
        m.linear.n_features = nf;
        m.linear.terms = terms;
        m.linear.coefficients = fit.coef;
        m.linear.training_sse = fit.sse;
    } else {
        m.trees = fit_ebt(X, y, tree_cfg);
    }
    return m;
}

inline Eigen::VectorXd predict_single_layer(const BaselineModel& m,
                                            const Eigen::MatrixXd& X) {
    return m.kind == BaselineKind::PlainLinear ? predict_stw(m.linear, X)
                                               : m.trees.predict(X);
}

}  // namespace a2g
