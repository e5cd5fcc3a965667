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

#include <catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "a2g/gpr.hpp"
#include "a2g/rng.hpp"

using namespace a2g;

namespace {

Eigen::MatrixXd random_matrix(RngStream& rng, int n, int d) {
    Eigen::MatrixXd X(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) X(i, j) = 4.0 * rng.next_double() - 2.0;
    return X;
}

KernelSpec random_spec(RngStream& rng, KernelFamily family, int d) {
    KernelSpec k;
    k.family = family;
    k.signal_variance = 0.3 + 2.0 * rng.next_double();
    k.length_scales.resize(d);
    for (int i = 0; i < d; ++i) k.length_scales[i] = 0.5 + 2.0 * rng.next_double();
    k.shape = 0.5 + 2.0 * rng.next_double();
    return k;
}

}  // namespace

TEST_CASE("kernel values at zero distance equal the signal variance") {
    RngStream rng(1);
    for (auto fam : {KernelFamily::SquaredExponential, KernelFamily::Matern52,
                     KernelFamily::RationalQuadratic}) {
        const KernelSpec k = random_spec(rng, fam, 3);
        Eigen::RowVectorXd x(3);
        x << 0.3, -1.0, 2.0;
        REQUIRE(kernel_eval(k, x, x) ==
                Catch::Approx(k.signal_variance).epsilon(1e-14));
    }
}

TEST_CASE("kernel hand values for unit parameters") {
    KernelSpec k;
    k.signal_variance = 1.0;
    k.length_scales = Eigen::VectorXd::Ones(1);
    Eigen::RowVectorXd a(1), b(1);
    a << 0.0;
    b << 1.0;

    k.family = KernelFamily::SquaredExponential;
    REQUIRE(kernel_eval(k, a, b) == Catch::Approx(std::exp(-0.5)).epsilon(1e-14));

    k.family = KernelFamily::Matern52;
    const double sq5 = std::sqrt(5.0);
    REQUIRE(kernel_eval(k, a, b) ==
            Catch::Approx((1.0 + sq5 + 5.0 / 3.0) * std::exp(-sq5)).epsilon(1e-13));

    k.family = KernelFamily::RationalQuadratic;
    k.shape = 2.0;
    REQUIRE(kernel_eval(k, a, b) ==
            Catch::Approx(std::pow(1.0 + 1.0 / 4.0, -2.0)).epsilon(1e-13));
}

TEST_CASE("kernel matrices are symmetric positive semidefinite") {
    RngStream rng(3);
    const Eigen::MatrixXd Z = random_matrix(rng, 30, 2);
    for (auto fam : {KernelFamily::SquaredExponential, KernelFamily::Matern52,
                     KernelFamily::RationalQuadratic}) {
        const KernelSpec k = random_spec(rng, fam, 2);
        const Eigen::MatrixXd K = kernel_matrix(k, Z, Z);
        REQUIRE((K - K.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
        REQUIRE(es.eigenvalues().minCoeff() > -1e-8);
    }
}

TEST_CASE("analytic LML gradient matches central finite differences (20 draws)") {
    RngStream rng(17);
    int checked = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const KernelFamily fam =
            trial % 3 == 0   ? KernelFamily::SquaredExponential
            : trial % 3 == 1 ? KernelFamily::Matern52
                             : KernelFamily::RationalQuadratic;
        const int d = 1 + static_cast<int>(rng.next_below(3));
        const int n = 15 + static_cast<int>(rng.next_below(15));
        const Eigen::MatrixXd Z = random_matrix(rng, n, d);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i)
            y[i] = std::sin(Z(i, 0)) + 0.3 * rng.next_gaussian();

        const KernelSpec spec = random_spec(rng, fam, d);
        const double sn2 = 0.05 + 0.2 * rng.next_double();

        Eigen::VectorXd grad;
        gpr_log_marginal(spec, sn2, Z, y, &grad);

        // Finite differences in the same log-parameter layout.
        const int extra = fam == KernelFamily::RationalQuadratic ? 1 : 0;
        const int P = d + 2 + extra;
        REQUIRE(grad.size() == P);
        const double h = 1e-5;
        for (int p = 0; p < P; ++p) {
            auto perturbed = [&](double delta) {
                KernelSpec s = spec;
                double noise = sn2;
                if (p == 0) s.signal_variance *= std::exp(delta);
                else if (p <= d) s.length_scales[p - 1] *= std::exp(delta);
                else if (p == d + 1) noise *= std::exp(delta);
                else s.shape *= std::exp(delta);
                return gpr_log_marginal(s, noise, Z, y);
            };
            const double fd = (perturbed(h) - perturbed(-h)) / (2.0 * h);
            const double scale = std::max(1.0, std::abs(fd));
            REQUIRE(std::abs(grad[p] - fd) / scale < 1e-4);
            ++checked;
        }
    }
    REQUIRE(checked > 0);
}

TEST_CASE("cholesky jitter ladder repairs a semidefinite matrix") {
    // Rank-deficient PSD matrix (duplicate rows) needs jitter to factorize.
    Eigen::MatrixXd Z(4, 1);
    Z << 0.0, 0.0, 1.0, 2.0;
    KernelSpec k;
    k.signal_variance = 1.0;
    k.length_scales = Eigen::VectorXd::Ones(1);
    Eigen::MatrixXd K = kernel_matrix(k, Z, Z);  // singular: rows 0,1 equal

    GprOptions opts;
    const auto res = detail::chol_with_jitter(K, opts);
    REQUIRE(res.ok);
    REQUIRE(res.jitter > 0.0);
    const Eigen::MatrixXd rebuilt =
        res.L * res.L.transpose() - res.jitter * Eigen::MatrixXd::Identity(4, 4);
    REQUIRE((rebuilt - K).cwiseAbs().maxCoeff() < 1e-8);

    // A healthy matrix factorizes with zero jitter.
    Eigen::MatrixXd healthy = K;
    healthy.diagonal().array() += 0.1;
    const auto res2 = detail::chol_with_jitter(healthy, opts);
    REQUIRE(res2.ok);
    REQUIRE(res2.jitter == 0.0);
}

TEST_CASE("GP fit recovers a smooth function with calibrated uncertainty") {
    RngStream rng(23);
    const int n = 120;
    Eigen::MatrixXd Z(n, 1);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        Z(i, 0) = 6.0 * static_cast<double>(i) / (n - 1) - 3.0;
        y[i] = std::sin(Z(i, 0)) + 0.05 * rng.next_gaussian();
    }

    GprOptions opts;
    opts.restarts = 2;
    opts.max_iters = 40;
    const GprModel m = fit_gpr(Z, y, KernelFamily::SquaredExponential, opts);

    Eigen::MatrixXd Zs(50, 1);
    for (int i = 0; i < 50; ++i) Zs(i, 0) = 5.6 * i / 49.0 - 2.8;
    const auto [mean, sd] = predict_gpr(m, Zs);
    for (int i = 0; i < 50; ++i) {
        REQUIRE(std::abs(mean[i] - std::sin(Zs(i, 0))) < 0.15);
        REQUIRE(sd[i] >= 0.0);
        REQUIRE(sd[i] < 0.5);
    }

    // Far from data the predictive sd grows toward the prior level.
    Eigen::MatrixXd far(1, 1);
    far << 40.0;
    const auto [fm, fsd] = predict_gpr(m, far);
    REQUIRE(fsd[0] > sd[25]);
}

TEST_CASE("subsample limits the retained training rows deterministically") {
    RngStream rng(29);
    const Eigen::MatrixXd Z = random_matrix(rng, 200, 2);
    Eigen::VectorXd y(200);
    for (int i = 0; i < 200; ++i) y[i] = Z(i, 0) + 0.1 * rng.next_gaussian();

    GprOptions opts;
    opts.subsample = 50;
    opts.restarts = 1;
    opts.max_iters = 15;
    const GprModel a = fit_gpr(Z, y, KernelFamily::SquaredExponential, opts);
    const GprModel b = fit_gpr(Z, y, KernelFamily::SquaredExponential, opts);
    REQUIRE(a.training_inputs.rows() == 50);
    REQUIRE((a.training_inputs - b.training_inputs).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE((a.alpha - b.alpha).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("constant targets are flagged degenerate but still predict") {
    Eigen::MatrixXd Z(10, 1);
    for (int i = 0; i < 10; ++i) Z(i, 0) = i;
    Eigen::VectorXd y = Eigen::VectorXd::Constant(10, 3.5);

    GprOptions opts;
    opts.restarts = 1;
    opts.max_iters = 5;
    const GprModel m = fit_gpr(Z, y, KernelFamily::SquaredExponential, opts);
    REQUIRE(m.degenerate_target);
    Eigen::MatrixXd q(1, 1);
    q << 4.5;
    const auto [mean, sd] = predict_gpr(m, q);
    REQUIRE(std::isfinite(mean[0]));
    REQUIRE(std::abs(mean[0] - 3.5) < 0.5);
}

TEST_CASE("build_aggregate_input stacks the columns in order") {
    Eigen::MatrixXd X(2, 2);
    X << 1, 2, 3, 4;
    Eigen::VectorXd a(2), b(2);
    a << 5, 6;
    b << 7, 8;
    const Eigen::MatrixXd Z = build_aggregate_input(X, a, b);
    REQUIRE(Z.cols() == 4);
    REQUIRE(Z(0, 2) == 5.0);
    REQUIRE(Z(1, 3) == 8.0);
    Eigen::VectorXd wrong(3);
    REQUIRE_THROWS_AS(build_aggregate_input(X, wrong, b), std::invalid_argument);
}

TEST_CASE("fit and predict input validation") {
    Eigen::MatrixXd Z(1, 1);
    Z << 0.0;
    Eigen::VectorXd y(1);
    y << 1.0;
    REQUIRE_THROWS_AS(fit_gpr(Z, y, KernelFamily::SquaredExponential),
                      std::invalid_argument);

    Eigen::MatrixXd Z2(3, 1);
    Z2 << 0.0, 1.0, 2.0;
    Eigen::VectorXd bad(3);
    bad << 1.0, NAN, 2.0;
    REQUIRE_THROWS_AS(fit_gpr(Z2, bad, KernelFamily::SquaredExponential),
                      std::invalid_argument);

    Eigen::VectorXd y2(3);
    y2 << 0.0, 1.0, 0.5;
    GprOptions opts;
    opts.restarts = 1;
    opts.max_iters = 3;
    const GprModel m = fit_gpr(Z2, y2, KernelFamily::SquaredExponential, opts);
    Eigen::MatrixXd wrongdim(1, 2);
    wrongdim << 0.0, 1.0;
    REQUIRE_THROWS_AS(predict_gpr(m, wrongdim), std::invalid_argument);
}

TEST_CASE("kernel family string round trip") {
    for (auto fam : {KernelFamily::SquaredExponential, KernelFamily::Matern52,
                     KernelFamily::RationalQuadratic})
        REQUIRE(kernel_family_from_string(to_string(fam)) == fam);
    REQUIRE_THROWS_AS(kernel_family_from_string("cubic"), std::invalid_argument);
}
