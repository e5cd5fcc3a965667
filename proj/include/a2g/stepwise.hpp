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
#include <boost/math/distributions/fisher_f.hpp>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace a2g {

enum class TermKind { Constant, Linear, Interaction, Square };

/// One regressor in the stepwise term universe.
struct TermSpec {
    TermKind kind = TermKind::Constant;
    int i = -1;  ///< first feature index (Linear/Interaction/Square)
    int j = -1;  ///< second feature index (Interaction only, i < j)

    bool operator==(const TermSpec&) const = default;

    std::string name() const {
        switch (kind) {
            case TermKind::Constant: return "1";
            case TermKind::Linear: return "x" + std::to_string(i);
            case TermKind::Interaction:
                return "x" + std::to_string(i) + "*x" + std::to_string(j);
            default: return "x" + std::to_string(i) + "^2";
        }
    }
};

struct StwConfig {
    double p_enter = 0.05;
    double p_remove = 0.10;
    int max_iters = 100;
    bool include_interactions = true;
    bool include_squares = true;
    double max_condition = 1e8;  ///< candidate skipped above this
};

struct StepEvent {
    bool added = true;
    TermSpec term;
    double p_value = 0.0;
};

struct StwModel {
    int n_features = 0;
    std::vector<TermSpec> terms;   ///< constant term always first
    Eigen::VectorXd coefficients;  ///< one per term
    std::vector<StepEvent> trace;
    double training_sse = 0.0;
};

namespace detail {

inline Eigen::VectorXd term_column(const Eigen::MatrixXd& X, const TermSpec& t) {
    switch (t.kind) {
        case TermKind::Constant:
            return Eigen::VectorXd::Ones(X.rows());
        case TermKind::Linear:
            return X.col(t.i);
        case TermKind::Interaction:
            return X.col(t.i).cwiseProduct(X.col(t.j));
        default:
            return X.col(t.i).cwiseProduct(X.col(t.i));
    }
}

struct LsFit {
    Eigen::VectorXd coef;
    double sse = 0.0;
    bool ok = false;
};

/// Least squares via column-pivoted QR with a condition guard.
inline LsFit solve_terms(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const std::vector<TermSpec>& terms, double max_cond) {
    LsFit fit;
    const auto n = X.rows();
    const auto p = static_cast<Eigen::Index>(terms.size());
    Eigen::MatrixXd D(n, p);
    for (Eigen::Index c = 0; c < p; ++c) D.col(c) = term_column(X, terms[c]);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(D);
    const auto& R = qr.matrixR();
    const double rmax = std::abs(R(0, 0));
    const double rmin = std::abs(R(p - 1, p - 1));
    if (!(rmin > 0.0) || rmax / rmin > max_cond) return fit;  // rank trouble

    fit.coef = qr.solve(y);
    fit.sse = (y - D * fit.coef).squaredNorm();
    fit.ok = fit.coef.allFinite();
    return fit;
}

/// p-value of the partial F-test for one extra regressor.
inline double partial_f_pvalue(double sse_reduced, double sse_full, Eigen::Index n,
                               Eigen::Index p_full) {
    const double df2 = static_cast<double>(n - p_full);
    if (df2 <= 0.0) return 1.0;
    double num = sse_reduced - sse_full;
    if (num < 0.0) num = 0.0;
    if (sse_full <= 0.0) return num > 0.0 ? 0.0 : 1.0;
    const double f = num / (sse_full / df2);
    if (!std::isfinite(f)) return 0.0;
    boost::math::fisher_f_distribution<double> dist(1.0, df2);
    return boost::math::cdf(boost::math::complement(dist, f));
}

}  // namespace detail

/// The fixed candidate universe over n_features inputs:
/// constant, linears, ordered pairwise interactions, squares.
inline std::vector<TermSpec> stepwise_universe(int n_features,
                                               const StwConfig& cfg = {}) {
    std::vector<TermSpec> u;
    u.push_back({TermKind::Constant, -1, -1});
    for (int i = 0; i < n_features; ++i) u.push_back({TermKind::Linear, i, -1});
    if (cfg.include_interactions)
        for (int i = 0; i < n_features; ++i)
            for (int j = i + 1; j < n_features; ++j)
                u.push_back({TermKind::Interaction, i, j});
    if (cfg.include_squares)
        for (int i = 0; i < n_features; ++i) u.push_back({TermKind::Square, i, -1});
    return u;
}

/// Greedy forward-backward stepwise selection under partial-F p-values.
/// The constant term is always present. Ties on p-value break toward the
/// lowest ordinal in the universe ordering.
inline StwModel fit_stw(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const StwConfig& cfg = {}) {
    if (X.rows() != y.size())
        throw std::invalid_argument("fit_stw: X/y row mismatch");
    if (!X.allFinite() || !y.allFinite())
        throw std::invalid_argument("fit_stw: non-finite inputs");
    if (!(cfg.p_enter < cfg.p_remove))
        throw std::invalid_argument("fit_stw: require p_enter < p_remove");

    const int nf = static_cast<int>(X.cols());
    const auto universe = stepwise_universe(nf, cfg);
    if (X.rows() <= static_cast<Eigen::Index>(universe.size()))
        throw std::invalid_argument("fit_stw: need more rows than candidate terms");

    StwModel model;
    model.n_features = nf;
    model.terms = {universe[0]};
    auto current = detail::solve_terms(X, y, model.terms, cfg.max_condition);
    if (!current.ok) throw std::runtime_error("fit_stw: constant fit failed");

    auto contains = [&](const TermSpec& t) {
        for (const auto& m : model.terms)
            if (m == t) return true;
        return false;
    };

    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        bool changed = false;

        // Forward scan: candidate with the smallest entry p-value.
        double best_p = 2.0;
        std::size_t best_idx = 0;
        detail::LsFit best_fit;
        for (std::size_t u = 1; u < universe.size(); ++u) {
            if (contains(universe[u])) continue;
            auto trial_terms = model.terms;
            trial_terms.push_back(universe[u]);
            auto trial = detail::solve_terms(X, y, trial_terms, cfg.max_condition);
            if (!trial.ok) continue;  // collinear or ill conditioned: skip
            const double p = detail::partial_f_pvalue(
                current.sse, trial.sse, X.rows(),
                static_cast<Eigen::Index>(trial_terms.size()));
            if (p < best_p) {
                best_p = p;
                best_idx = u;
                best_fit = trial;
            }
        }
        if (best_p < cfg.p_enter) {
            model.terms.push_back(universe[best_idx]);
            current = best_fit;
            model.trace.push_back({true, universe[best_idx], best_p});
            changed = true;
        }

        // Backward scan: included term with the largest removal p-value.
        double worst_p = -1.0;
        std::size_t worst_pos = 0;
        detail::LsFit worst_fit;
        for (std::size_t pos = 1; pos < model.terms.size(); ++pos) {
            std::vector<TermSpec> reduced = model.terms;
            reduced.erase(reduced.begin() + static_cast<long>(pos));
            auto red = detail::solve_terms(X, y, reduced, cfg.max_condition);
            if (!red.ok) continue;
            const double p = detail::partial_f_pvalue(
                red.sse, current.sse, X.rows(),
                static_cast<Eigen::Index>(model.terms.size()));
            if (p > worst_p) {
                worst_p = p;
                worst_pos = pos;
                worst_fit = red;
            }
        }
        if (worst_p > cfg.p_remove && worst_pos > 0) {
            model.trace.push_back({false, model.terms[worst_pos], worst_p});
            model.terms.erase(model.terms.begin() + static_cast<long>(worst_pos));
            current = worst_fit;
            changed = true;
        }

        if (!changed) break;
    }

    model.coefficients = current.coef;
    model.training_sse = current.sse;
    return model;
}

inline Eigen::VectorXd predict_stw(const StwModel& m, const Eigen::MatrixXd& X) {
    if (X.cols() != m.n_features)
        throw std::invalid_argument("predict_stw: feature count mismatch");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
    for (std::size_t t = 0; t < m.terms.size(); ++t)
        out += m.coefficients[static_cast<Eigen::Index>(t)] *
               detail::term_column(X, m.terms[t]);
    return out;
}

inline Eigen::VectorXd residuals(const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& y_hat) {
    if (y.size() != y_hat.size())
        throw std::invalid_argument("residuals: length mismatch");
    return y - y_hat;
}

}  // namespace a2g
