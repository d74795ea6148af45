#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "fbp/optim.hpp"
#include "fbp/phantom.hpp"
#include "fbp/pipeline.hpp"
#include "fbp/projector.hpp"
#include "test_util.hpp"

using namespace fbp;

namespace {

FourierSeriesFilter random_filter(uint64_t seed, double scale = 0.1) {
    FourierSeriesFilter f;
    Xoshiro256pp rng(seed);
    f.a0 = rng.uniform(-scale, scale) + 0.5;
    for (int l = 0; l < FourierSeriesFilter::order; ++l) {
        f.a[l] = rng.uniform(-scale, scale) / (l + 1);
        f.b[l] = rng.uniform(-scale, scale) / (l + 1);
    }
    return f;
}

// Small in-memory batch: phantoms, clean sinograms (no noise so the loss
// landscape is smooth and reproducible).
struct BatchFixture {
    Geometry geometry;
    std::vector<Grid> sinos;
    std::vector<Grid> gts;
    std::vector<TrainSample> batch;

    BatchFixture(int n, int num_angles, int count, uint64_t seed)
        : geometry(make_geometry(num_angles, n)) {
        for (int i = 0; i < count; ++i) {
            const Image gt = random_ellipse_phantom(n, 4, seed + i);
            gts.push_back(to_grid(gt));
            sinos.push_back(forward_project(gts.back(), geometry));
        }
        for (int i = 0; i < count; ++i)
            batch.push_back({&sinos[i], &gts[i]});
    }
};

}  // namespace

TEST_CASE("pack/unpack round-trips the coefficient layout") {
    const FourierSeriesFilter f = random_filter(3);
    const ParamVector p = pack_params(f);
    CHECK(p[0] == f.a0);
    CHECK(p[1] == f.a[0]);
    CHECK(p[50] == f.a[49]);
    CHECK(p[51] == f.b[0]);
    CHECK(p[100] == f.b[49]);
    CHECK(unpack_params(p) == f);
}

TEST_CASE("init mode names parse") {
    CHECK(parse_init_mode("ramp_fit") == InitMode::ramp_fit);
    CHECK(parse_init_mode("zero") == InitMode::zero);
    CHECK(parse_init_mode("random") == InitMode::random);
    CHECK_THROWS_AS(parse_init_mode("xavier"), std::invalid_argument);
}

TEST_CASE("adam takes a signed step and is deterministic") {
    AdamState s;
    ParamVector params{};
    ParamVector grad{};
    grad[0] = 1.0;
    grad[1] = -2.0;

    adam_step(s, params, grad, 0.01);
    CHECK(s.t == 1);
    // First step: m_hat = g, v_hat = g^2, so update = -lr*g/(|g|+eps) ~ -lr*sign(g).
    CHECK(params[0] == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(params[1] == doctest::Approx(0.01).epsilon(1e-6));
    CHECK(params[2] == 0.0);  // untouched coordinates stay put

    // Replaying the same updates gives the same trajectory.
    AdamState s2;
    ParamVector p2{};
    adam_step(s2, p2, grad, 0.01);
    CHECK(p2 == params);

    ParamVector bad{};
    bad[5] = std::nan("");
    CHECK_THROWS_AS(adam_step(s, params, bad, 0.01), std::invalid_argument);
}

TEST_CASE("adam with zero gradient leaves parameters unchanged") {
    AdamState s;
    ParamVector params{};
    params[7] = 1.25;
    const ParamVector zero{};
    adam_step(s, params, zero, 0.01);
    CHECK(params[7] == 1.25);
    for (int i = 0; i < 101; ++i)
        if (i != 7) CHECK(params[i] == 0.0);
}

TEST_CASE("onecycle hits its endpoints exactly") {
    const double base = 5e-3, peak = 2e-2;
    const int64_t total = 250;
    CHECK(onecycle_lr(0, total, base, peak) == base);  // bitwise

    double max_seen = 0.0;
    for (int64_t t = 0; t < total; ++t)
        max_seen = std::max(max_seen, onecycle_lr(t, total, base, peak));
    CHECK(max_seen == peak);  // bitwise

    // Final step decays to base/25.
    CHECK(onecycle_lr(total - 1, total, base, peak) ==
          doctest::Approx(base / 25.0).epsilon(1e-12));

    // Monotone up to the warm-up crest, monotone down after it.
    const int64_t warm = std::llround(0.3 * double(total));
    for (int64_t t = 1; t <= warm; ++t)
        CHECK(onecycle_lr(t, total, base, peak) >=
              onecycle_lr(t - 1, total, base, peak));
    for (int64_t t = warm + 1; t < total; ++t)
        CHECK(onecycle_lr(t, total, base, peak) <=
              onecycle_lr(t - 1, total, base, peak));

    CHECK_THROWS_AS(onecycle_lr(-1, total, base, peak), std::invalid_argument);
    CHECK_THROWS_AS(onecycle_lr(total, total, base, peak),
                    std::invalid_argument);
    CHECK_THROWS_AS(onecycle_lr(0, 0, base, peak), std::invalid_argument);
    CHECK_THROWS_AS(onecycle_lr(0, 10, -1.0, peak), std::invalid_argument);
}

TEST_CASE("a single-step schedule returns the base rate") {
    CHECK(onecycle_lr(0, 1, 5e-3, 2e-2) == 5e-3);
}

TEST_CASE("loss_and_gradient is zero at a perfect fit") {
    // Trick: declare the pipeline's own output (under some filter) to be the
    // ground truth; the loss and every coefficient gradient must vanish.
    const BatchFixture fx(16, 24, 2, 100);
    const FourierSeriesFilter f = random_filter(4);
    const int P = default_padded_len(16);
    const FilterSpectrum spec = evaluate_series(f, P);

    std::vector<Grid> fitted_gts;
    for (const auto& s : fx.sinos) {
        Grid pre = reconstruct_preactivation(s, fx.geometry, spec, 16);
        for (double& v : pre.v) v = std::max(v, 0.0);
        fitted_gts.push_back(std::move(pre));
    }
    std::vector<TrainSample> batch;
    for (size_t i = 0; i < fx.sinos.size(); ++i)
        batch.push_back({&fx.sinos[i], &fitted_gts[i]});

    ParamVector grad{};
    const LossBreakdown loss =
        loss_and_gradient(f, batch, fx.geometry, P, LossWeights{}, GEEParams{},
                          GVParams{}, grad);
    CHECK(loss.total == 0.0);
    for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("loss_and_gradient matches finite differences on all coordinates") {
    // The spectral-magnitude term of the loss is piecewise smooth: wherever
    // ||Z_rec| - |Z_gt|| changes sign under the probe step, central
    // differences measure a subgradient mix, not the derivative. The check
    // therefore uses a kink-free instance: a white-noise ground truth whose
    // spectrum dominates the reconstruction's at every bin, keeping every
    // magnitude difference far from zero. Measured max rel err 9.5e-6 for
    // this seed; bound frozen at 1e-4.
    const int n = 16;
    const Geometry geom = make_geometry(24, n);
    const uint64_t seed = 2;
    const Grid ph = to_grid(random_ellipse_phantom(n, 6, seed * 977 + 1));
    const Grid sino = to_grid(apply_noise(
        to_sinogram(forward_project(ph, geom), geom), 1e4, seed * 977 + 2));
    Grid gt(n, n);
    Xoshiro256pp grng(seed * 977 + 3);
    for (double& v : gt.v) v = grng.uniform(5.0, 15.0);

    FourierSeriesFilter f;
    Xoshiro256pp rng(seed * 977 + 4);
    f.a0 = 0.5 + rng.uniform(-0.1, 0.1);
    for (int l = 0; l < FourierSeriesFilter::order; ++l) {
        f.a[l] = rng.uniform(-0.1, 0.1) / (1.0 + 0.2 * l);
        f.b[l] = rng.uniform(-0.1, 0.1) / (1.0 + 0.2 * l);
    }

    const std::vector<TrainSample> batch{{&sino, &gt}};
    const int P = default_padded_len(n);
    const LossWeights w;
    const GEEParams gp;
    const GVParams vp;

    ParamVector grad{};
    loss_and_gradient(f, batch, geom, P, w, gp, vp, grad);

    auto loss_at = [&](const ParamVector& p) {
        ParamVector unused{};
        return loss_and_gradient(unpack_params(p), batch, geom, P, w, gp, vp,
                                 unused)
            .total;
    };
    const ParamVector p0 = pack_params(f);
    const double step = 1e-3;
    double worst = 0.0;
    for (int idx = 0; idx < FourierSeriesFilter::num_params; ++idx) {
        ParamVector plus = p0, minus = p0;
        plus[idx] += step;
        minus[idx] -= step;
        const double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * step);
        const double denom =
            std::max({std::fabs(fd), std::fabs(grad[idx]), 1e-8});
        worst = std::max(worst, std::fabs(grad[idx] - fd) / denom);
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("batch-mean convention: duplicating the batch changes nothing") {
    const BatchFixture fx(16, 12, 1, 300);
    const FourierSeriesFilter f = random_filter(6);
    const int P = default_padded_len(16);

    std::vector<TrainSample> twice = {fx.batch[0], fx.batch[0]};
    ParamVector g1{}, g2{};
    const LossBreakdown l1 = loss_and_gradient(
        f, fx.batch, fx.geometry, P, LossWeights{}, GEEParams{}, GVParams{}, g1);
    const LossBreakdown l2 = loss_and_gradient(
        f, twice, fx.geometry, P, LossWeights{}, GEEParams{}, GVParams{}, g2);
    CHECK(l1.total == doctest::Approx(l2.total).epsilon(1e-12));
    for (int i = 0; i < 101; ++i)
        CHECK(g1[i] == doctest::Approx(g2[i]).epsilon(1e-10).scale(1e-12));
}

TEST_CASE("gradient scales linearly with the loss weights") {
    const BatchFixture fx(16, 12, 1, 400);
    const FourierSeriesFilter f = random_filter(7);
    const int P = default_padded_len(16);
    LossWeights w0;
    w0.alpha = 0.0;
    w0.beta = 0.0;
    LossWeights w1;
    w1.alpha = 3.0;
    w1.beta = 0.0;
    LossWeights w2;
    w2.alpha = 6.0;
    w2.beta = 0.0;

    ParamVector g0{}, g1{}, g2{};
    loss_and_gradient(f, fx.batch, fx.geometry, P, w0, GEEParams{}, GVParams{}, g0);
    loss_and_gradient(f, fx.batch, fx.geometry, P, w1, GEEParams{}, GVParams{}, g1);
    loss_and_gradient(f, fx.batch, fx.geometry, P, w2, GEEParams{}, GVParams{}, g2);
    // g2 - g0 = 2*(g1 - g0): the GEE term enters linearly in alpha. The
    // scale floor absorbs accumulation roundoff (~5e-16) on coordinates
    // whose GEE component is essentially zero.
    for (int i = 0; i < 101; ++i)
        CHECK(g2[i] - g0[i] ==
              doctest::Approx(2.0 * (g1[i] - g0[i])).epsilon(1e-8).scale(1e-6));
}

TEST_CASE("loss_and_gradient validates its inputs") {
    const BatchFixture fx(16, 12, 1, 500);
    const FourierSeriesFilter f = random_filter(8);
    ParamVector grad{};
    CHECK_THROWS_AS(
        loss_and_gradient(f, {}, fx.geometry, 64, LossWeights{}, GEEParams{},
                          GVParams{}, grad),
        std::invalid_argument);
    CHECK_THROWS_AS(
        loss_and_gradient(f, fx.batch, fx.geometry, 24,  // not pow2 >= 2N
                          LossWeights{}, GEEParams{}, GVParams{}, grad),
        std::invalid_argument);
}

TEST_CASE("train runs, checkpoints, and is deterministic") {
    testutil::TempDir tmp("train");
    DatasetConfig dc;
    dc.train_count = 6;
    dc.val_count = 2;
    dc.test_count = 1;
    dc.size = 16;
    dc.num_angles = 12;
    dc.photon_count = 1e4;
    dc.seed = 1;
    generate_dataset(tmp.path / "data", dc);

    TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 4;
    tc.manifest_path = tmp.path / "data" / "manifest.json";
    tc.seed = 9;
    tc.init = InitMode::ramp_fit;

    const auto [filter_a, hist_a] = train(tc, tmp.path / "run_a");

    // ceil(6/4) = 2 steps per epoch, 2 epochs.
    CHECK(hist_a.steps.size() == 4);
    CHECK(hist_a.validation.size() == 2);
    for (const auto& rec : hist_a.steps) CHECK(std::isfinite(rec.total));

    CHECK(std::filesystem::exists(tmp.path / "run_a" / "epoch_1.csv"));
    CHECK(std::filesystem::exists(tmp.path / "run_a" / "epoch_2.csv"));
    CHECK(std::filesystem::exists(tmp.path / "run_a" / "history.csv"));
    CHECK(std::filesystem::exists(tmp.path / "run_a" / "val_history.csv"));

    // The returned filter is one of the checkpoints (best validation PSNR).
    const int best_epoch =
        hist_a.validation[0].psnr >= hist_a.validation[1].psnr ? 1 : 2;
    const FourierSeriesFilter ck = load_filter_csv(
        tmp.path / "run_a" / ("epoch_" + std::to_string(best_epoch) + ".csv"));
    CHECK(ck == filter_a);

    // Byte-identical rerun.
    const auto [filter_b, hist_b] = train(tc, tmp.path / "run_b");
    CHECK(filter_b == filter_a);
    for (const auto& name :
         {"epoch_1.csv", "epoch_2.csv", "history.csv", "val_history.csv"})
        CHECK(testutil::read_bytes(tmp.path / "run_a" / name) ==
              testutil::read_bytes(tmp.path / "run_b" / name));

    // Different seed diverges.
    TrainConfig other = tc;
    other.seed = 10;
    const auto [filter_c, hist_c] = train(other, tmp.path / "run_c");
    CHECK(filter_c != filter_a);
}

TEST_CASE("train with zero epochs returns the init filter untouched") {
    testutil::TempDir tmp("train0");
    DatasetConfig dc;
    dc.train_count = 2;
    dc.val_count = 1;
    dc.test_count = 0;
    dc.size = 16;
    dc.num_angles = 12;
    dc.seed = 2;
    generate_dataset(tmp.path / "data", dc);

    TrainConfig tc;
    tc.epochs = 0;
    tc.manifest_path = tmp.path / "data" / "manifest.json";
    tc.init = InitMode::zero;

    const auto [filter, hist] = train(tc, tmp.path / "out");
    CHECK(filter == FourierSeriesFilter{});
    CHECK(hist.steps.empty());
    CHECK(hist.validation.empty());
    CHECK_FALSE(std::filesystem::exists(tmp.path / "out" / "epoch_1.csv"));
}

TEST_CASE("history CSVs have the documented headers") {
    testutil::TempDir tmp("hist");
    TrainHistory h;
    h.steps = {{0, 1e-3, 5.0, 1.0, 0.2, 0.1}};
    h.validation = {{1, 0.8, 21.0, 0.01}};
    write_history_csv(tmp.path / "h.csv", h);
    write_val_history_csv(tmp.path / "v.csv", h);

    std::ifstream hin(tmp.path / "h.csv");
    std::string line;
    std::getline(hin, line);
    CHECK(line == "step,lr,total,mse,gee,gv");
    std::getline(hin, line);
    CHECK(line.substr(0, 2) == "0,");

    std::ifstream vin(tmp.path / "v.csv");
    std::getline(vin, line);
    CHECK(line == "epoch,ssim,psnr_db,mse");
    std::getline(vin, line);
    CHECK(line.substr(0, 2) == "1,");
}
