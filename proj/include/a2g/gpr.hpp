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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <string>
#include <vector>

#include "a2g/rng.hpp"

namespace a2g {

enum class KernelFamily { SquaredExponential, Matern52, RationalQuadratic };

inline const char* to_string(KernelFamily f) {
    switch (f) {
        case KernelFamily::SquaredExponential: return "squared-exponential";
        case KernelFamily::Matern52: return "matern-5/2";
        default: return "rational-quadratic";
    }
}

inline KernelFamily kernel_family_from_string(const std::string& s) {
    if (s == "squared-exponential" || s == "se") return KernelFamily::SquaredExponential;
    if (s == "matern-5/2" || s == "matern52") return KernelFamily::Matern52;
    if (s == "rational-quadratic" || s == "rq") return KernelFamily::RationalQuadratic;
    throw std::invalid_argument("unknown kernel family: " + s);
}

/// Stationary ARD kernel: one length scale per input column.
struct KernelSpec {
    KernelFamily family = KernelFamily::SquaredExponential;
    double signal_variance = 1.0;
    Eigen::VectorXd length_scales;
    double shape = 1.0;  ///< rational-quadratic mixture parameter

    void validate() const {
        if (!(signal_variance > 0.0))
            throw std::invalid_argument("kernel: signal_variance must be > 0");
        for (Eigen::Index d = 0; d < length_scales.size(); ++d)
            if (!(length_scales[d] > 0.0))
                throw std::invalid_argument("kernel: length scales must be > 0");
        if (family == KernelFamily::RationalQuadratic && !(shape > 0.0))
            throw std::invalid_argument("kernel: shape must be > 0");
    }
};

namespace detail {

inline double kernel_from_s(const KernelSpec& k, double s) {
    switch (k.family) {
        case KernelFamily::SquaredExponential:
            return k.signal_variance * std::exp(-0.5 * s);
        case KernelFamily::Matern52: {
            const double r = std::sqrt(s);
            const double sq5r = 2.2360679774997896964091736687747 * r;
            return k.signal_variance * (1.0 + sq5r + 5.0 * s / 3.0) * std::exp(-sq5r);
        }
        default:
            return k.signal_variance *
                   std::pow(1.0 + s / (2.0 * k.shape), -k.shape);
    }
}

}  // namespace detail

inline double kernel_eval(const KernelSpec& k,
                          const Eigen::Ref<const Eigen::RowVectorXd>& a,
                          const Eigen::Ref<const Eigen::RowVectorXd>& b) {
    if (a.size() != k.length_scales.size() || b.size() != k.length_scales.size())
        throw std::invalid_argument("kernel_eval: dimension mismatch");
    double s = 0.0;
    for (Eigen::Index d = 0; d < a.size(); ++d) {
        const double w = (a[d] - b[d]) / k.length_scales[d];
        s += w * w;
    }
    return detail::kernel_from_s(k, s);
}

inline Eigen::MatrixXd kernel_matrix(const KernelSpec& k, const Eigen::MatrixXd& A,
                                     const Eigen::MatrixXd& B) {
    if (A.cols() != k.length_scales.size() || B.cols() != k.length_scales.size())
        throw std::invalid_argument("kernel_matrix: dimension mismatch");
    Eigen::MatrixXd K(A.rows(), B.rows());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < B.rows(); ++j)
            K(i, j) = kernel_eval(k, A.row(i), B.row(j));
    return K;
}

struct GprOptions {
    int restarts = 5;
    int max_iters = 60;
    double grad_tol = 1e-5;
    double jitter_rel_min = 1e-10;
    double jitter_rel_max = 1e-4;
    int subsample = 0;  ///< 0 = use all rows; otherwise seeded uniform subset
    std::uint64_t seed = 7;
};

struct GprModel {
    KernelSpec kernel;
    double noise_variance = 1e-6;
    Eigen::MatrixXd training_inputs;
    Eigen::VectorXd training_targets;
    Eigen::VectorXd alpha;       ///< (K + sn^2 I)^-1 y
    Eigen::MatrixXd chol_lower;  ///< L with L L^T = K + sn^2 I + jitter I
    double log_marginal_likelihood = 0.0;
    double jitter_used = 0.0;
    bool degenerate_target = false;
};

/// Column stack [X | y_stw | eps_hat]; the GPR aggregation input.
inline Eigen::MatrixXd build_aggregate_input(const Eigen::MatrixXd& X,
                                             const Eigen::VectorXd& y_stw,
                                             const Eigen::VectorXd& eps_hat) {
    if (X.rows() != y_stw.size() || X.rows() != eps_hat.size())
        throw std::invalid_argument("build_aggregate_input: length mismatch");
    Eigen::MatrixXd Z(X.rows(), X.cols() + 2);
    Z.leftCols(X.cols()) = X;
    Z.col(X.cols()) = y_stw;
    Z.col(X.cols() + 1) = eps_hat;
    return Z;
}

namespace detail {

/// Log-parameter vector layout: [log sf2, log l_1..D, log sn2, (log shape)].
struct GprParams {
    KernelFamily family;
    Eigen::VectorXd theta;

    int dims() const {
        return static_cast<int>(theta.size()) -
               (family == KernelFamily::RationalQuadratic ? 3 : 2);
    }
    KernelSpec spec() const {
        KernelSpec k;
        k.family = family;
        k.signal_variance = std::exp(theta[0]);
        const int d = dims();
        k.length_scales = theta.segment(1, d).array().exp();
        if (family == KernelFamily::RationalQuadratic)
            k.shape = std::exp(theta[d + 2]);
        return k;
    }
    double noise_variance() const { return std::exp(theta[dims() + 1]); }
};

struct CholResult {
    Eigen::MatrixXd L;
    double jitter = 0.0;
    bool ok = false;
};

/// Cholesky with an escalating relative jitter ladder.
inline CholResult chol_with_jitter(const Eigen::MatrixXd& Kn,
                                   const GprOptions& opts) {
    CholResult res;
    const double base = Kn.trace() / static_cast<double>(Kn.rows());
    double rel = 0.0;
    for (;;) {
        Eigen::MatrixXd M = Kn;
        if (rel > 0.0) M.diagonal().array() += rel * base;
        Eigen::LLT<Eigen::MatrixXd> llt(M);
        if (llt.info() == Eigen::Success) {
            res.L = llt.matrixL();
            res.jitter = rel * base;
            res.ok = true;
            return res;
        }
        if (rel == 0.0) rel = opts.jitter_rel_min;
        else if (rel >= opts.jitter_rel_max) return res;
        else rel = std::min(rel * 10.0, opts.jitter_rel_max);
    }
}

struct LmlResult {
    double lml = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd grad;
    bool ok = false;
};

/// Log marginal likelihood and its gradient in log-parameter space.
/// Gradient entries follow the GprParams layout.
inline LmlResult log_marginal(const GprParams& p, const Eigen::MatrixXd& Z,
                              const Eigen::VectorXd& y, const GprOptions& opts,
                              bool want_grad) {
    LmlResult out;
    const auto n = Z.rows();
    const KernelSpec spec = p.spec();
    const double sn2 = p.noise_variance();
    const int D = p.dims();

    // Scaled squared distances per dimension and their sum.
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
    std::vector<Eigen::MatrixXd> W;
    if (want_grad) W.reserve(static_cast<std::size_t>(D));
    for (int d = 0; d < D; ++d) {
        const double inv_l = 1.0 / spec.length_scales[d];
        Eigen::MatrixXd Wd(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) {
                const double w = (Z(i, d) - Z(j, d)) * inv_l;
                Wd(i, j) = w * w;
            }
        S += Wd;
        if (want_grad) W.push_back(std::move(Wd));
    }

    Eigen::MatrixXd Kf(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            Kf(i, j) = kernel_from_s(spec, S(i, j));

    Eigen::MatrixXd Kn = Kf;
    Kn.diagonal().array() += sn2;
    const auto chol = chol_with_jitter(Kn, opts);
    if (!chol.ok) return out;

    const Eigen::VectorXd alpha =
        chol.L.transpose().triangularView<Eigen::Upper>().solve(
            chol.L.triangularView<Eigen::Lower>().solve(y));
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(chol.L(i, i));
    out.lml = -0.5 * y.dot(alpha) - logdet -
              0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
    out.ok = std::isfinite(out.lml);
    if (!want_grad || !out.ok) return out;

    // G = alpha alpha^T - K^-1; dLML/dtheta = 0.5 * sum(G .* dK/dtheta)
    Eigen::MatrixXd Kinv = Eigen::MatrixXd::Identity(n, n);
    chol.L.triangularView<Eigen::Lower>().solveInPlace(Kinv);
    chol.L.transpose().triangularView<Eigen::Upper>().solveInPlace(Kinv);
    const Eigen::MatrixXd G = alpha * alpha.transpose() - Kinv;

    out.grad = Eigen::VectorXd::Zero(p.theta.size());
    out.grad[0] = 0.5 * G.cwiseProduct(Kf).sum();  // d/dlog sf2
    out.grad[D + 1] = 0.5 * sn2 * G.trace();       // d/dlog sn2

    // Family-specific factor F with dK/dlog l_d = F .* W_d
    Eigen::MatrixXd F(n, n);
    switch (p.family) {
        case KernelFamily::SquaredExponential:
            F = Kf;
            break;
        case KernelFamily::Matern52:
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j) {
                    const double r = std::sqrt(S(i, j));
                    const double sq5r = 2.2360679774997896964091736687747 * r;
                    F(i, j) = (5.0 / 3.0) * spec.signal_variance *
                              (1.0 + sq5r) * std::exp(-sq5r);
                }
            break;
        default:
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j) {
                    const double u = S(i, j) / (2.0 * spec.shape);
                    F(i, j) = spec.signal_variance *
                              std::pow(1.0 + u, -spec.shape - 1.0);
                }
            break;
    }
    for (int d = 0; d < D; ++d)
        out.grad[1 + d] = 0.5 * G.cwiseProduct(F.cwiseProduct(W[static_cast<std::size_t>(d)])).sum();

    if (p.family == KernelFamily::RationalQuadratic) {
        Eigen::MatrixXd dKda(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) {
                const double u = S(i, j) / (2.0 * spec.shape);
                dKda(i, j) = Kf(i, j) * spec.shape *
                             (-std::log1p(u) + u / (1.0 + u));
            }
        out.grad[D + 2] = 0.5 * G.cwiseProduct(dKda).sum();
    }
    return out;
}

}  // namespace detail

/// Standalone log-marginal-likelihood evaluation with optional analytic
/// gradient, exposed for verification against finite differences.
inline double gpr_log_marginal(const KernelSpec& spec, double noise_variance,
                               const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                               Eigen::VectorXd* grad = nullptr,
                               const GprOptions& opts = {}) {
    detail::GprParams p;
    p.family = spec.family;
    const int D = static_cast<int>(spec.length_scales.size());
    const int extra = spec.family == KernelFamily::RationalQuadratic ? 1 : 0;
    p.theta.resize(D + 2 + extra);
    p.theta[0] = std::log(spec.signal_variance);
    for (int d = 0; d < D; ++d) p.theta[1 + d] = std::log(spec.length_scales[d]);
    p.theta[D + 1] = std::log(noise_variance);
    if (extra) p.theta[D + 2] = std::log(spec.shape);
    const auto res = detail::log_marginal(p, Z, y, opts, grad != nullptr);
    if (grad) *grad = res.grad;
    return res.lml;
}

/// Fits an exact GP by maximizing the log marginal likelihood with
/// multi-start gradient ascent (backtracking line search) in log space.
inline GprModel fit_gpr(const Eigen::MatrixXd& Z_full, const Eigen::VectorXd& y_full,
                        KernelFamily family, const GprOptions& opts = {}) {
    if (Z_full.rows() < 2) throw std::invalid_argument("fit_gpr: need >= 2 rows");
    if (Z_full.rows() != y_full.size())
        throw std::invalid_argument("fit_gpr: Z/y row mismatch");
    if (!Z_full.allFinite() || !y_full.allFinite())
        throw std::invalid_argument("fit_gpr: non-finite inputs");

    Eigen::MatrixXd Z = Z_full;
    Eigen::VectorXd y = y_full;
    if (opts.subsample > 0 && opts.subsample < Z_full.rows()) {
        std::vector<int> idx(static_cast<std::size_t>(Z_full.rows()));
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
        RngStream rng(opts.seed ^ 0x5b5bULL);
        for (std::size_t i = idx.size() - 1; i > 0; --i)
            std::swap(idx[i], idx[rng.next_below(i + 1)]);
        idx.resize(static_cast<std::size_t>(opts.subsample));
        std::sort(idx.begin(), idx.end());
        Z.resize(opts.subsample, Z_full.cols());
        y.resize(opts.subsample);
        for (Eigen::Index i = 0; i < Z.rows(); ++i) {
            Z.row(i) = Z_full.row(idx[static_cast<std::size_t>(i)]);
            y[i] = y_full[idx[static_cast<std::size_t>(i)]];
        }
    }

    const int D = static_cast<int>(Z.cols());
    const int extra = family == KernelFamily::RationalQuadratic ? 1 : 0;
    const double y_var =
        (y.array() - y.mean()).square().sum() / std::max<double>(1.0, y.size() - 1);

    GprModel model;
    if (!(y_var > 0.0)) {
        // Constant targets: degenerate but well-defined posterior.
        model.degenerate_target = true;
    }
    const double var_floor = std::max(y_var, 1e-12);

    Eigen::VectorXd col_sd(D);
    for (int d = 0; d < D; ++d) {
        const double m = Z.col(d).mean();
        const double v = (Z.col(d).array() - m).square().sum() /
                         std::max<double>(1.0, Z.rows() - 1);
        col_sd[d] = v > 0.0 ? std::sqrt(v) : 1.0;
    }

    RngStream rng(opts.seed);
    detail::GprParams best;
    best.family = family;
    double best_lml = -std::numeric_limits<double>::infinity();

    for (int start = 0; start < std::max(1, opts.restarts); ++start) {
        detail::GprParams p;
        p.family = family;
        p.theta.resize(D + 2 + extra);
        if (start == 0) {
            p.theta[0] = std::log(var_floor);
            for (int d = 0; d < D; ++d) p.theta[1 + d] = std::log(col_sd[d]);
            p.theta[D + 1] = std::log(0.05 * var_floor);
            if (extra) p.theta[D + 2] = 0.0;
        } else {
            auto logu = [&](double lo, double hi) {
                return std::log(lo) + rng.next_double() * (std::log(hi) - std::log(lo));
            };
            p.theta[0] = std::log(var_floor) + logu(0.1, 10.0);
            for (int d = 0; d < D; ++d)
                p.theta[1 + d] = std::log(col_sd[d]) + logu(0.1, 10.0);
            p.theta[D + 1] = std::log(var_floor) + logu(1e-4, 1.0);
            if (extra) p.theta[D + 2] = logu(0.5, 5.0);
        }

        auto cur = detail::log_marginal(p, Z, y, opts, true);
        if (!cur.ok) continue;
        double step = 0.1;
        for (int it = 0; it < opts.max_iters; ++it) {
            if (cur.grad.norm() < opts.grad_tol) break;
            Eigen::VectorXd dir = cur.grad / std::max(1.0, cur.grad.norm());
            bool improved = false;
            const double prev_lml = cur.lml;
            while (step > 1e-10) {
                detail::GprParams trial = p;
                trial.theta += step * dir;
                for (Eigen::Index k = 0; k < trial.theta.size(); ++k)
                    trial.theta[k] = std::clamp(trial.theta[k], -23.0, 23.0);
                // line search probes skip the gradient; it is refreshed on
                // the accepted point only
                auto res = detail::log_marginal(trial, Z, y, opts, false);
                if (res.ok && res.lml > cur.lml) {
                    p = trial;
                    cur = detail::log_marginal(p, Z, y, opts, true);
                    step *= 1.5;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if (!improved) break;
            if (cur.lml - prev_lml < 1e-7 * (1.0 + std::abs(cur.lml))) break;
        }
        if (cur.lml > best_lml) {
            best_lml = cur.lml;
            best = p;
        }
    }
    if (!std::isfinite(best_lml))
        throw std::runtime_error("fit_gpr: factorization failed at maximum jitter");

    model.kernel = best.spec();
    model.noise_variance = best.noise_variance();
    model.training_inputs = std::move(Z);
    model.training_targets = std::move(y);

    Eigen::MatrixXd Kn = kernel_matrix(model.kernel, model.training_inputs,
                                       model.training_inputs);
    Kn.diagonal().array() += model.noise_variance;
    const auto chol = detail::chol_with_jitter(Kn, opts);
    if (!chol.ok)
        throw std::runtime_error("fit_gpr: factorization failed at maximum jitter");
    model.chol_lower = chol.L;
    model.jitter_used = chol.jitter;
    model.alpha = chol.L.transpose().triangularView<Eigen::Upper>().solve(
        chol.L.triangularView<Eigen::Lower>().solve(model.training_targets));
    model.log_marginal_likelihood = best_lml;
    return model;
}

/// Exact GP posterior: mean k*^T alpha, sd sqrt(k** - |L^-1 k*|^2),
/// variance clamped at zero from below.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> predict_gpr(
    const GprModel& m, const Eigen::MatrixXd& Zs) {
    if (Zs.cols() != m.training_inputs.cols())
        throw std::invalid_argument("predict_gpr: dimension mismatch");
    const Eigen::MatrixXd Ks = kernel_matrix(m.kernel, m.training_inputs, Zs);
    Eigen::VectorXd mean = Ks.transpose() * m.alpha;
    const Eigen::MatrixXd V =
        m.chol_lower.triangularView<Eigen::Lower>().solve(Ks);
    Eigen::VectorXd sd(Zs.rows());
    for (Eigen::Index j = 0; j < Zs.rows(); ++j) {
        const double prior = kernel_eval(m.kernel, Zs.row(j), Zs.row(j));
        const double var = prior - V.col(j).squaredNorm();
        sd[j] = std::sqrt(std::max(0.0, var));
    }
    return {std::move(mean), std::move(sd)};
}

}  // namespace a2g
