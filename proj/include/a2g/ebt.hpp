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
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "a2g/rng.hpp"

namespace a2g {

struct EbtConfig {
    int n_learners = 375;
    int min_leaf = 1;
    long max_splits = std::numeric_limits<long>::max();
    int n_features_per_split = 0;  ///< 0 means all features
    std::uint64_t seed = 1;

    /// Full-complexity profile: 375 learners, minimum leaf size 1,
    /// unbounded splits, all variables sampled.
    static EbtConfig accuracy_profile(std::uint64_t seed = 1) {
        EbtConfig c;
        c.n_learners = 375;
        c.min_leaf = 1;
        c.max_splits = std::numeric_limits<long>::max();
        c.n_features_per_split = 0;
        c.seed = seed;
        return c;
    }

    /// Lightweight profile: 60 learners, minimum leaf size 8, split budget
    /// at the middle of the published 2,378..6,540 range, all variables.
    static EbtConfig latency_profile(std::uint64_t seed = 1) {
        EbtConfig c;
        c.n_learners = 60;
        c.min_leaf = 8;
        c.max_splits = 4459;
        c.n_features_per_split = 0;
        c.seed = seed;
        return c;
    }
};

struct TreeNode {
    int feature = -1;  ///< -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  ///< leaf prediction (mean of reaching targets)

    bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  ///< nodes[0] is the root
    long split_count = 0;

    double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
        int idx = 0;
        while (!nodes[idx].is_leaf())
            idx = x[nodes[idx].feature] < nodes[idx].threshold ? nodes[idx].left
                                                               : nodes[idx].right;
        return nodes[idx].value;
    }
};

namespace detail {

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double children_sse = 0.0;
    std::size_t left_count = 0;
};

/// Exact split search over midpoints between consecutive sorted unique
/// values. Ties on SSE break toward the lowest feature index, then the
/// lowest threshold.
inline SplitChoice best_split(const Eigen::MatrixXd& X, const Eigen::VectorXd& t,
                              const std::vector<int>& rows,
                              const std::vector<int>& features, int min_leaf) {
    SplitChoice best;
    const std::size_t m = rows.size();
    std::vector<int> order(rows);
    std::vector<double> pref_sum(m + 1), pref_sq(m + 1);

    for (int f : features) {
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const double va = X(a, f), vb = X(b, f);
            return va < vb || (va == vb && a < b);
        });
        pref_sum[0] = pref_sq[0] = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const double v = t[order[k]];
            pref_sum[k + 1] = pref_sum[k] + v;
            pref_sq[k + 1] = pref_sq[k] + v * v;
        }
        const double total_sum = pref_sum[m], total_sq = pref_sq[m];
        for (std::size_t k = static_cast<std::size_t>(min_leaf);
             k + static_cast<std::size_t>(min_leaf) <= m; ++k) {
            const double lo = X(order[k - 1], f);
            const double hi = X(order[k], f);
            if (!(lo < hi)) continue;
            double thr = 0.5 * (lo + hi);
            if (!(thr > lo)) thr = hi;  // guard midpoint rounding
            const double nl = static_cast<double>(k);
            const double nr = static_cast<double>(m - k);
            const double ls = pref_sum[k], rs = total_sum - ls;
            const double sse =
                total_sq - ls * ls / nl - rs * rs / nr;
            if (!best.found || sse < best.children_sse) {
                best.found = true;
                best.feature = f;
                best.threshold = thr;
                best.children_sse = sse;
                best.left_count = k;
            }
        }
    }
    return best;
}

}  // namespace detail

/// Greedy CART regression tree. Growth is depth-first (left first); the
/// split budget is consumed in that order when max_splits is finite.
inline RegressionTree fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& t,
                               const std::vector<int>& rows, const EbtConfig& cfg,
                               RngStream& rng) {
    if (rows.empty()) throw std::invalid_argument("fit_tree: empty input");
    if (!t.allFinite()) throw std::invalid_argument("fit_tree: non-finite targets");
    const int n_features = static_cast<int>(X.cols());
    const int k_sample = (cfg.n_features_per_split <= 0 ||
                          cfg.n_features_per_split >= n_features)
                             ? n_features
                             : cfg.n_features_per_split;

    RegressionTree tree;
    struct Pending {
        int node;
        std::vector<int> rows;
    };
    std::vector<Pending> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, rows});

    std::vector<int> all_features(static_cast<std::size_t>(n_features));
    std::iota(all_features.begin(), all_features.end(), 0);

    while (!stack.empty()) {
        Pending node = std::move(stack.back());
        stack.pop_back();
        auto& nd = tree.nodes[static_cast<std::size_t>(node.node)];

        double sum = 0.0;
        bool pure = true;
        const double t0 = t[node.rows.front()];
        for (int r : node.rows) {
            sum += t[r];
            if (t[r] != t0) pure = false;
        }
        const double mean = sum / static_cast<double>(node.rows.size());

        const bool can_split = !pure &&
                               node.rows.size() >= 2 * static_cast<std::size_t>(cfg.min_leaf) &&
                               tree.split_count < cfg.max_splits;
        if (!can_split) {
            nd.value = mean;
            continue;
        }

        std::vector<int> features;
        if (k_sample == n_features) {
            features = all_features;
        } else {
            std::vector<int> pool = all_features;
            for (int i = 0; i < k_sample; ++i) {
                const auto j = i + static_cast<int>(rng.next_below(
                                       static_cast<std::uint64_t>(n_features - i)));
                std::swap(pool[i], pool[j]);
            }
            features.assign(pool.begin(), pool.begin() + k_sample);
            std::sort(features.begin(), features.end());
        }

        const auto choice = detail::best_split(X, t, node.rows, features, cfg.min_leaf);
        if (!choice.found) {
            nd.value = mean;
            continue;
        }

        std::vector<int> left_rows, right_rows;
        left_rows.reserve(choice.left_count);
        right_rows.reserve(node.rows.size() - choice.left_count);
        for (int r : node.rows)
            (X(r, choice.feature) < choice.threshold ? left_rows : right_rows)
                .push_back(r);

        nd.feature = choice.feature;
        nd.threshold = choice.threshold;
        nd.left = static_cast<int>(tree.nodes.size());
        nd.right = nd.left + 1;
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        ++tree.split_count;
        const int left_idx = tree.nodes[static_cast<std::size_t>(node.node)].left;
        const int right_idx = left_idx + 1;
        stack.push_back({right_idx, std::move(right_rows)});
        stack.push_back({left_idx, std::move(left_rows)});
    }
    return tree;
}

inline RegressionTree fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& t,
                               const EbtConfig& cfg, RngStream& rng) {
    std::vector<int> rows(static_cast<std::size_t>(X.rows()));
    std::iota(rows.begin(), rows.end(), 0);
    return fit_tree(X, t, rows, cfg, rng);
}

struct BaggedEnsemble {
    std::vector<RegressionTree> trees;
    EbtConfig config;
    std::vector<std::vector<int>> in_bag;  ///< per-tree bootstrap row draws

    double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
        double s = 0.0;
        for (const auto& tr : trees) s += tr.predict_row(x);
        return s / static_cast<double>(trees.size());
    }

    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const {
        Eigen::VectorXd out(X.rows());
        for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = predict_row(X.row(i));
        return out;
    }

    std::size_t total_nodes() const {
        std::size_t n = 0;
        for (const auto& tr : trees) n += tr.nodes.size();
        return n;
    }
};

/// Bootstrap-aggregated trees; per-tree randomness derives only from
/// (seed, tree index), so serial and parallel fits agree bitwise.
inline BaggedEnsemble fit_ebt(const Eigen::MatrixXd& X, const Eigen::VectorXd& eps,
                              const EbtConfig& cfg) {
    if (X.rows() == 0) throw std::invalid_argument("fit_ebt: empty input");
    if (X.rows() != eps.size())
        throw std::invalid_argument("fit_ebt: X/target row mismatch");

    BaggedEnsemble ens;
    ens.config = cfg;
    ens.trees.resize(static_cast<std::size_t>(cfg.n_learners));
    ens.in_bag.resize(static_cast<std::size_t>(cfg.n_learners));
    const auto n = static_cast<std::uint64_t>(X.rows());
    for (int k = 0; k < cfg.n_learners; ++k) {
        RngStream rng = RngStream::derive(cfg.seed, static_cast<std::uint64_t>(k));
        std::vector<int> bag(static_cast<std::size_t>(n));
        for (auto& b : bag) b = static_cast<int>(rng.next_below(n));
        ens.trees[static_cast<std::size_t>(k)] = fit_tree(X, eps, bag, cfg, rng);
        ens.in_bag[static_cast<std::size_t>(k)] = std::move(bag);
    }
    return ens;
}

/// Out-of-bag mean squared error; rows never out of bag are skipped.
inline double oob_mse(const BaggedEnsemble& ens, const Eigen::MatrixXd& X,
                      const Eigen::VectorXd& eps) {
    const auto n = X.rows();
    std::vector<double> sums(static_cast<std::size_t>(n), 0.0);
    std::vector<int> counts(static_cast<std::size_t>(n), 0);
    for (std::size_t k = 0; k < ens.trees.size(); ++k) {
        std::vector<bool> in(static_cast<std::size_t>(n), false);
        for (int r : ens.in_bag[k]) in[static_cast<std::size_t>(r)] = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (in[static_cast<std::size_t>(i)]) continue;
            sums[static_cast<std::size_t>(i)] += ens.trees[k].predict_row(X.row(i));
            ++counts[static_cast<std::size_t>(i)];
        }
    }
    double sse = 0.0;
    std::size_t m = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (counts[static_cast<std::size_t>(i)] == 0) continue;
        const double p = sums[static_cast<std::size_t>(i)] /
                         counts[static_cast<std::size_t>(i)];
        sse += (p - eps[i]) * (p - eps[i]);
        ++m;
    }
    return m ? sse / static_cast<double>(m) : 0.0;
}

}  // namespace a2g
