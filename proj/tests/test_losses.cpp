#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ldu/losses.hpp"
#include "ldu/rng.hpp"

using namespace ldu;

TEST_CASE("cross entropy on pinned cases") {
    auto even = cross_entropy(Tensor::constant({1, 2}, {0, 0}), {0});
    REQUIRE(even.mean.item() == Catch::Approx(std::log(2.0)).epsilon(1e-12));

    auto saturated = cross_entropy(Tensor::constant({1, 2}, {100, 0}), {0});
    REQUIRE(saturated.mean.item() == Catch::Approx(0.0).margin(1e-12));

    REQUIRE_THROWS_WITH(cross_entropy(Tensor::constant({1, 2}, {0, 0}), {2}),
                        Catch::Matchers::ContainsSubstring("out of range"));
}

TEST_CASE("cross entropy matches a high-precision direct evaluation") {
    Rng rng(3);
    std::vector<double> logits(4 * 3);
    for (double& v : logits) v = rng.uniform(-4, 4);
    std::vector<std::size_t> labels{2, 0, 1, 1};
    auto got = cross_entropy(Tensor::constant({4, 3}, logits), labels);

    for (std::size_t r = 0; r < 4; ++r) {
        long double denom = 0.0L;
        for (std::size_t c = 0; c < 3; ++c) denom += std::exp((long double)logits[r * 3 + c]);
        const long double expect = -(logits[r * 3 + labels[r]] - std::log((double)denom));
        REQUIRE(got.per_sample.value(r) == Catch::Approx((double)expect).epsilon(1e-12));
    }
}

TEST_CASE("regression task loss squares the residuals") {
    auto zero = regression_task_loss(Tensor::constant({2, 1}, {1, 2}), {1, 2});
    REQUIRE(zero.mean.item() == 0.0);

    auto unit = regression_task_loss(Tensor::constant({2, 1}, {1, -1}), {0, 0});
    REQUIRE(unit.per_sample.value(0) == 1.0);
    REQUIRE(unit.per_sample.value(1) == 1.0);

    Rng rng(5);
    std::vector<double> pred(6), target(6);
    for (double& v : pred) v = rng.uniform(-2, 2);
    for (double& v : target) v = rng.uniform(-2, 2);
    auto got = regression_task_loss(Tensor::constant({6, 1}, pred), target);
    double expect = 0.0;
    for (std::size_t i = 0; i < 6; ++i) expect += (pred[i] - target[i]) * (pred[i] - target[i]);
    REQUIRE(got.mean.item() == Catch::Approx(expect / 6.0).epsilon(1e-12));
    REQUIRE_THROWS(regression_task_loss(Tensor::constant({2, 1}, {1, 2}), {1}));
}

TEST_CASE("loss_dis on pinned prototype sets") {
    PrototypeBank single;
    single.m = 1;
    single.n = 2;
    single.prototypes = Tensor::leaf({1, 2}, {1, 0}, true);
    REQUIRE(loss_dis(single).item() == 0.0);

    PrototypeBank antipodal;
    antipodal.m = 2;
    antipodal.n = 2;
    antipodal.prototypes = Tensor::leaf({2, 2}, {1, 0, -1, 0}, true);
    REQUIRE(loss_dis(antipodal).item() == Catch::Approx(-2.0).epsilon(1e-12));

    // three unit vectors at mutual 120 degrees: each pair at distance sqrt(3)
    PrototypeBank trio;
    trio.m = 3;
    trio.n = 2;
    const double c = std::cos(2.0 * std::numbers::pi / 3.0);
    const double s = std::sin(2.0 * std::numbers::pi / 3.0);
    trio.prototypes = Tensor::leaf({3, 2}, {1, 0, c, s, c, -s}, true);
    REQUIRE(loss_dis(trio).item() == Catch::Approx(-3.0 * std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("loss_dis is permutation invariant and bounded under unit norms") {
    Rng rng(7);
    auto bank = init_prototypes(6, 3, 11);
    const double base = loss_dis(bank).item();

    PrototypeBank permuted;
    permuted.m = 6;
    permuted.n = 3;
    const std::size_t perm[6] = {4, 2, 0, 5, 1, 3};
    std::vector<double> rows(18);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            rows[i * 3 + j] = bank.prototypes.value(perm[i], j);
    permuted.prototypes = Tensor::leaf({6, 3}, rows, true);
    REQUIRE(loss_dis(permuted).item() == Catch::Approx(base).margin(1e-12));

    // unit-sphere rows keep every pairwise distance at most 2
    REQUIRE(base >= -(6.0 * 5.0 / 2.0) * 2.0);
}

TEST_CASE("loss_entrop spans [-log m, 0]") {
    auto uniform = loss_entrop(Tensor::constant({1, 4}, {3, 3, 3, 3}));
    REQUIRE(uniform.item() == Catch::Approx(-std::log(4.0)).epsilon(1e-12));

    auto peaked = loss_entrop(Tensor::constant({1, 4}, {100, 0, 0, 0}));
    REQUIRE(peaked.item() < 0.0);
    REQUIRE(peaked.item() > -1e-12 - 1e-40);

    Rng rng(9);
    std::vector<double> scores(2 * 5);
    for (double& v : scores) v = rng.uniform(-3, 3);
    auto got = loss_entrop(Tensor::constant({2, 5}, scores));
    long double expect = 0.0L;
    for (std::size_t r = 0; r < 2; ++r) {
        long double denom = 0.0L;
        for (std::size_t c = 0; c < 5; ++c) denom += std::exp((long double)scores[r * 5 + c]);
        for (std::size_t c = 0; c < 5; ++c) {
            const long double p = std::exp((long double)scores[r * 5 + c]) / denom;
            expect += p * std::log(p);
        }
    }
    REQUIRE(got.item() == Catch::Approx((double)(expect / 2.0L)).epsilon(1e-10));

    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> v(3 * 6);
        for (double& x : v) x = rng.uniform(-30, 30);
        const double val = loss_entrop(Tensor::constant({3, 6}, v)).item();
        REQUIRE(val <= 1e-12);
        REQUIRE(val >= -std::log(6.0) - 1e-12);
    }
}

TEST_CASE("normalize_batch_losses maps to [0,1] with degenerate-range rule") {
    REQUIRE(normalize_batch_losses({2, 4, 6}) == std::vector<double>{0.0, 0.5, 1.0});
    REQUIRE(normalize_batch_losses({3, 3, 3}) == std::vector<double>{0.0, 0.0, 0.0});
    REQUIRE(normalize_batch_losses({7}) == std::vector<double>{0.0});

    Rng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> v(8);
        for (double& x : v) x = rng.uniform(-5, 5);
        auto out = normalize_batch_losses(v);
        double lo = 1e9, hi = -1e9;
        for (double x : out) {
            REQUIRE(x >= 0.0);
            REQUIRE(x <= 1.0);
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        REQUIRE(lo == 0.0);
        REQUIRE(hi == 1.0);
    }
}

TEST_CASE("loss_unc on pinned cases") {
    auto even = loss_unc(Tensor::constant({1, 1}, {0.5}), {0.5});
    REQUIRE(even.item() == Catch::Approx(std::log(2.0)).epsilon(1e-12));

    auto perfect = loss_unc(Tensor::constant({1, 1}, {1.0}), {1.0});
    REQUIRE(perfect.item() == Catch::Approx(0.0).margin(1e-6));

    auto pair = loss_unc(Tensor::constant({2, 1}, {0.2, 0.9}), {0.0, 1.0});
    const double expect = (-std::log(0.8) - std::log(0.9)) / 2.0;
    REQUIRE(pair.item() == Catch::Approx(expect).epsilon(1e-10));
    REQUIRE(expect == Catch::Approx(0.16425).margin(1e-5));

    REQUIRE_THROWS(loss_unc(Tensor::constant({1, 1}, {0.5}), {1.5}));
}

TEST_CASE("total_loss composes the weighted objective") {
    auto task = Tensor::scalar(1.0);
    auto dis = Tensor::scalar(-2.0);
    auto entrop = Tensor::scalar(-1.0);
    auto unc = Tensor::scalar(0.5);

    auto [t0, bd0] = total_loss(task, dis, entrop, unc, 0.0);
    REQUIRE(bd0.total == bd0.task);

    auto [t1, bd1] = total_loss(task, dis, entrop, unc, 0.1);
    REQUIRE(bd1.total == Catch::Approx(0.75).epsilon(1e-12));
    REQUIRE_THROWS(total_loss(task, dis, entrop, unc, -0.5));
}

TEST_CASE("total_loss is linear in lambda") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        auto task = Tensor::scalar(rng.uniform(-2, 2));
        auto dis = Tensor::scalar(rng.uniform(-2, 2));
        auto entrop = Tensor::scalar(rng.uniform(-2, 2));
        auto unc = Tensor::scalar(rng.uniform(-2, 2));
        const double lambda = rng.uniform(0, 3);
        auto [total, bd] = total_loss(task, dis, entrop, unc, lambda);
        const double aux = bd.dis + bd.entrop + bd.unc;
        REQUIRE(bd.total - bd.task == Catch::Approx(lambda * aux).margin(1e-12));
    }
}

TEST_CASE("every loss admits finite gradients") {
    Rng rng(19);
    auto bank = init_prototypes(5, 3, 23);
    std::vector<double> zv(4 * 3);
    for (double& v : zv) v = rng.uniform(-2, 2);
    auto z = Tensor::leaf({4, 3}, zv, true);
    std::vector<Tensor> params{z, bank.prototypes};

    REQUIRE(grad_check([&] { return loss_dis(bank); }, params, 1e-5) < 1e-4);
    REQUIRE(grad_check([&] { return loss_entrop(dm_forward_cos(z, bank)); }, params, 1e-5) <
            1e-4);

    // uncertainty BCE through a sigmoid of the embedding row sums
    std::vector<double> targets{0.0, 0.3, 0.7, 1.0};
    auto weights = Tensor::leaf({5, 1}, {0.2, -0.4, 0.1, 0.5, -0.3}, true);
    std::vector<Tensor> unc_params{z, bank.prototypes, weights};
    REQUIRE(grad_check(
                [&] {
                    auto probs = sigmoid(matmul(ldu_embed(z, bank), weights));
                    return loss_unc(probs, targets);
                },
                unc_params, 1e-5) < 1e-4);

    // task losses
    std::vector<std::size_t> labels{0, 2, 1, 0};
    auto logits_w = Tensor::leaf({5, 3}, std::vector<double>(15, 0.1), true);
    std::vector<Tensor> ce_params{z, bank.prototypes, logits_w};
    REQUIRE(grad_check(
                [&] {
                    auto task = cross_entropy(matmul(ldu_embed(z, bank), logits_w), labels);
                    return task.mean;
                },
                ce_params, 1e-5) < 1e-4);
}
