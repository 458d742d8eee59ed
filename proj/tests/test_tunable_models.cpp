#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "priorlab/dataset.hpp"
#include "priorlab/ordered_linear.hpp"
#include "priorlab/rng.hpp"
#include "priorlab/svd.hpp"
#include "priorlab/truncation.hpp"
#include "priorlab/vae.hpp"

using namespace priorlab;

namespace {

// chi^2 inverse CDF at 0.999, frozen from an external table.
constexpr double kChi2_999_df7 = 24.321886;
constexpr double kChi2_999_df63 = 103.442377;

void require_close_rel(double got, double want, double tol) {
    double scale = std::max({std::abs(got), std::abs(want), 1e-8});
    REQUIRE(std::abs(got - want) / scale < tol);
}

}  // namespace

TEST_CASE("truncate keeps a prefix and zeroes the tail", "[truncation]") {
    Vector z = {3.0, 1.0, 4.0, 1.0, 5.0};
    SECTION("k = 2") {
        REQUIRE(truncate(z, 2) == Vector{3.0, 1.0, 0.0, 0.0, 0.0});
    }
    SECTION("k = d is the identity") {
        REQUIRE(truncate(z, 5) == z);
    }
    SECTION("idempotent under a larger k") {
        REQUIRE(truncate(truncate(z, 2), 4) == truncate(z, 2));
    }
    SECTION("k out of range") {
        REQUIRE_THROWS_AS(truncate(z, 0), InvalidIndex);
        REQUIRE_THROWS_AS(truncate(z, 6), InvalidIndex);
    }
    SECTION("linearity") {
        RandomSource rng(1, 0);
        Vector w = gaussian_vector(rng, 5, 1.0);
        Vector zz = gaussian_vector(rng, 5, 1.0);
        double a = 1.7, b = -0.3;
        Vector lhs = truncate(add(scale(zz, a), scale(w, b)), 3);
        Vector rhs = add(scale(truncate(zz, 3), a), scale(truncate(w, 3), b));
        REQUIRE(lhs == rhs);
    }
}

TEST_CASE("truncated geometric pmf normalizes", "[truncation]") {
    for (auto [d, p] : std::vector<std::pair<std::size_t, double>>{
             {8, 0.3}, {64, 0.05}, {4096, 1e-3}, {1, 0.5}, {5, 1.0}}) {
        TruncationLaw law(d, p);
        double sum = 0.0;
        for (std::size_t k = 1; k <= d; ++k) sum += law.pmf(k);
        REQUIRE(std::abs(sum - 1.0) < 1e-12);
    }
    REQUIRE_THROWS_AS(TruncationLaw(0, 0.5), InvalidArgument);
    REQUIRE_THROWS_AS(TruncationLaw(4, 0.0), InvalidArgument);
    REQUIRE_THROWS_AS(TruncationLaw(4, 1.5), InvalidArgument);
}

TEST_CASE("sample_k follows the truncated geometric law", "[truncation]") {
    SECTION("p = 1 is degenerate at k = 1") {
        TruncationLaw law(7, 1.0);
        RandomSource rng(2, 0);
        for (int i = 0; i < 100; ++i) REQUIRE(sample_k(law, rng) == 1);
    }
    SECTION("d = 2, p = 0.5 frequencies") {
        TruncationLaw law(2, 0.5);
        RandomSource rng(3, 0);
        std::size_t ones = 0, n = 100000;
        for (std::size_t i = 0; i < n; ++i) {
            if (sample_k(law, rng) == 1) ++ones;
        }
        double f1 = static_cast<double>(ones) / static_cast<double>(n);
        REQUIRE(std::abs(f1 - 2.0 / 3.0) < 0.01);
        REQUIRE(std::abs((1.0 - f1) - 1.0 / 3.0) < 0.01);
    }
    SECTION("p = 1e-3, d = 4096 empirical mean within 2% of analytic") {
        TruncationLaw law(4096, 1e-3);
        RandomSource rng(4, 0);
        double acc = 0.0;
        std::size_t n = 100000;
        for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(sample_k(law, rng));
        double empirical = acc / static_cast<double>(n);
        double analytic = law.mean();
        REQUIRE(std::abs(empirical - analytic) / analytic < 0.02);
    }
    SECTION("chi-square goodness of fit at alpha = 0.001") {
        auto gof = [](std::size_t d, double p, double critical) {
            TruncationLaw law(d, p);
            RandomSource rng(5, d);
            std::vector<std::size_t> counts(d, 0);
            std::size_t n = 100000;
            for (std::size_t i = 0; i < n; ++i) counts[sample_k(law, rng) - 1]++;
            double stat = 0.0;
            for (std::size_t k = 1; k <= d; ++k) {
                double expect = static_cast<double>(n) * law.pmf(k);
                double diff = static_cast<double>(counts[k - 1]) - expect;
                stat += diff * diff / expect;
            }
            REQUIRE(stat < critical);
        };
        gof(8, 0.3, kChi2_999_df7);
        gof(64, 0.05, kChi2_999_df63);
    }
}

TEST_CASE("vae_loss parts behave at the fixed points", "[vae]") {
    TunableVae m = make_vae(6, 4, 8, 0.0, 0.0, 42);
    RandomSource rng(6, 0);
    Vector x = gaussian_vector(rng, 6, 1.0);

    SECTION("k = d makes drop equal rec on the same latent sample") {
        m.lambda_reg = 0.5;
        m.lambda_drop = 0.25;
        RandomSource r(7, 0);
        VaeLossParts parts = vae_loss(m, x, 4, r);
        REQUIRE(parts.drop == parts.rec);
        REQUIRE(parts.total ==
                Catch::Approx(parts.rec + 0.5 * parts.reg + 0.25 * parts.drop).epsilon(1e-15));
    }
    SECTION("standard-normal posterior has zero KL") {
        // Zero heads force mu = 0, logvar = 0.
        m.wm = Matrix(4, 8);
        m.bm = Vector(4, 0.0);
        m.wv = Matrix(4, 8);
        m.bv = Vector(4, 0.0);
        RandomSource r(8, 0);
        VaeLossParts parts = vae_loss(m, x, 2, r);
        REQUIRE(parts.reg == Catch::Approx(0.0).margin(1e-15));
    }
    SECTION("k out of range") {
        RandomSource r(9, 0);
        REQUIRE_THROWS_AS(vae_loss(m, x, 0, r), InvalidIndex);
        REQUIRE_THROWS_AS(vae_loss(m, x, 5, r), InvalidIndex);
    }
}

TEST_CASE("vae analytic gradients match central finite differences", "[vae][gradcheck]") {
    RandomSource meta(10, 0);
    for (int inst = 0; inst < 12; ++inst) {
        std::size_t n = 2 + (meta.next_u64() % 6);  // <= 8
        std::size_t d = 1 + (meta.next_u64() % 4);  // <= 4
        std::size_t hidden = 2 + (meta.next_u64() % 4);
        TunableVae m = make_vae(n, d, hidden, 0.07, 0.31, 1000 + inst);
        RandomSource rng(11, static_cast<std::uint64_t>(inst));
        Vector x = gaussian_vector(rng, n, 1.0);
        Vector eps = gaussian_vector(rng, d, 1.0);
        std::size_t k = 1 + (meta.next_u64() % d);

        VaeGrads g = zero_vae_grads(m);
        vae_forward_backward(m, x, k, eps, &g);

        auto loss_at = [&]() { return vae_forward_backward(m, x, k, eps, nullptr).total; };
        const double h = 1e-5;
        auto check_matrix = [&](Matrix& w, const Matrix& gw) {
            for (std::size_t i = 0; i < w.size(); ++i) {
                double save = w.data()[i];
                w.data()[i] = save + h;
                double lp = loss_at();
                w.data()[i] = save - h;
                double lm = loss_at();
                w.data()[i] = save;
                require_close_rel(gw.data()[i], (lp - lm) / (2.0 * h), 1e-4);
            }
        };
        auto check_vector = [&](Vector& w, const Vector& gw) {
            for (std::size_t i = 0; i < w.size(); ++i) {
                double save = w[i];
                w[i] = save + h;
                double lp = loss_at();
                w[i] = save - h;
                double lm = loss_at();
                w[i] = save;
                require_close_rel(gw[i], (lp - lm) / (2.0 * h), 1e-4);
            }
        };
        check_matrix(m.w1, g.w1);
        check_vector(m.b1, g.b1);
        check_matrix(m.wm, g.wm);
        check_vector(m.bm, g.bm);
        check_matrix(m.wv, g.wv);
        check_vector(m.bv, g.bv);
        check_matrix(m.w2, g.w2);
        check_vector(m.b2, g.b2);
        check_matrix(m.w3, g.w3);
        check_vector(m.b3, g.b3);
    }
}

TEST_CASE("vae_train on low-rank data", "[vae][slow]") {
    std::vector<Vector> data = synth_lowrank_dataset(32, geometric_spectrum(32, 2.0, 0.8), 100, 3);

    VaeTrainConfig cfg;
    cfg.n = 32;
    cfg.d = 8;
    cfg.hidden = 32;
    cfg.epochs = 20;  // 2000 SGD steps
    cfg.step_size = 2e-3;
    cfg.momentum = 0.9;
    cfg.lambda_reg = 1e-4;
    cfg.lambda_drop = 0.1;
    cfg.law_p = 0.2;
    cfg.seed = 17;

    SECTION("training lowers the evaluation drop loss at k = d") {
        TunableVae init = make_vae(cfg.n, cfg.d, cfg.hidden, cfg.lambda_reg, cfg.lambda_drop,
                                   cfg.seed);
        double before = vae_eval_truncated_error(init, data, cfg.d);
        VaeTrainResult res = vae_train(data, cfg);
        double after = vae_eval_truncated_error(res.model, data, cfg.d);
        REQUIRE(after < before);
        REQUIRE(res.loss_trace.size() == 2000);
        // Smoothed trace: last 50-step window no worse than the first.
        double first = 0.0, last = 0.0;
        for (std::size_t i = 0; i < 50; ++i) {
            first += res.loss_trace[i];
            last += res.loss_trace[res.loss_trace.size() - 50 + i];
        }
        REQUIRE(last <= first);
    }
    SECTION("step size zero leaves the weights unchanged") {
        VaeTrainConfig frozen = cfg;
        frozen.epochs = 1;
        frozen.step_size = 0.0;
        TunableVae init = make_vae(cfg.n, cfg.d, cfg.hidden, cfg.lambda_reg, cfg.lambda_drop,
                                   cfg.seed);
        VaeTrainResult res = vae_train(data, frozen);
        for (std::size_t i = 0; i < init.w1.size(); ++i) {
            REQUIRE(res.model.w1.data()[i] == init.w1.data()[i]);
        }
        for (std::size_t i = 0; i < init.w3.size(); ++i) {
            REQUIRE(res.model.w3.data()[i] == init.w3.data()[i]);
        }
    }
    SECTION("fixed seed reproduces the final weights exactly") {
        VaeTrainConfig small = cfg;
        small.epochs = 3;
        VaeTrainResult a = vae_train(data, small);
        VaeTrainResult b = vae_train(data, small);
        for (std::size_t i = 0; i < a.model.w1.size(); ++i) {
            REQUIRE(a.model.w1.data()[i] == b.model.w1.data()[i]);
        }
        REQUIRE(a.loss_trace == b.loss_trace);
    }
    SECTION("truncated reconstruction error decreases with k after training") {
        VaeTrainResult res = vae_train(data, cfg);
        std::vector<Vector> held_out =
            synth_lowrank_dataset(32, geometric_spectrum(32, 2.0, 0.8), 64, 4);
        double err_k1 = vae_eval_truncated_error(res.model, held_out, 1);
        double err_kd = vae_eval_truncated_error(res.model, held_out, cfg.d);
        REQUIRE(err_k1 >= err_kd);
    }
}

TEST_CASE("vae_decode_truncated basics", "[vae]") {
    TunableVae m = make_vae(6, 4, 8, 1e-3, 0.1, 5);
    SECTION("k = d equals a plain decode") {
        RandomSource rng(12, 0);
        Vector z = gaussian_vector(rng, 4, 1.0);
        REQUIRE(vae_decode_truncated(m, z, 4) == vae_decode(m, z));
    }
    SECTION("z = 0 decodes to a finite base reconstruction") {
        Vector out = vae_decode_truncated(m, Vector(4, 0.0), 1);
        REQUIRE(all_finite(out));
    }
}

TEST_CASE("ordered linear gradient matches finite differences", "[ordered][gradcheck]") {
    RandomSource meta(13, 0);
    for (int inst = 0; inst < 10; ++inst) {
        std::size_t n = 3 + (meta.next_u64() % 5);
        std::size_t d = 1 + (meta.next_u64() % std::min<std::size_t>(n, 4));
        OrderedLinearAutoencoder m;
        RandomSource rng(14, static_cast<std::uint64_t>(inst));
        m.w = gaussian_matrix(rng, n, d, 0.7);
        Vector x = gaussian_vector(rng, n, 1.0);
        std::size_t k = 1 + (meta.next_u64() % d);

        Matrix g = ordered_linear_gradient(m, x, k);
        const double h = 1e-5;
        for (std::size_t i = 0; i < m.w.size(); ++i) {
            double save = m.w.data()[i];
            double lp = 0.0, lm = 0.0;
            m.w.data()[i] = save + h;
            ordered_linear_gradient(m, x, k, &lp);
            m.w.data()[i] = save - h;
            ordered_linear_gradient(m, x, k, &lm);
            m.w.data()[i] = save;
            require_close_rel(g.data()[i], (lp - lm) / (2.0 * h), 1e-4);
        }
    }
}

TEST_CASE("ordered_linear_train finds the leading principal direction", "[ordered][slow]") {
    // Data covariance diag(4, 1, 0.25, ...) realized through a rotated family.
    const std::size_t n = 8;
    Vector spectrum = geometric_spectrum(n, 4.0, 0.5);  // s_i = 4 * 0.5^i = 2, 1, 0.5, ...
    std::vector<Vector> data = synth_lowrank_dataset(n, spectrum, 400, 21);

    TruncationLaw law(2, 0.3);
    OrderedTrainConfig cfg;
    cfg.epochs = 20;
    cfg.step_size = 1e-3;
    cfg.seed = 22;
    OrderedTrainResult res = ordered_linear_train(data, 2, law, cfg);

    // Eigen-oracle: top eigenvector of the empirical covariance via svd.
    Matrix cov(n, n);
    for (const Vector& x : data) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) cov(i, j) += x[i] * x[j];
        }
    }
    for (std::size_t i = 0; i < cov.size(); ++i) {
        cov.data()[i] /= static_cast<double>(data.size());
    }
    SvdResult eig = svd(cov);

    Vector w1(n);
    for (std::size_t i = 0; i < n; ++i) w1[i] = res.model.w(i, 0);
    double cosang = std::abs(dot(w1, [&] {
                        Vector v1(n);
                        for (std::size_t i = 0; i < n; ++i) v1[i] = eig.u(i, 0);
                        return v1;
                    }())) /
                    norm(w1);
    double angle = std::acos(std::min(1.0, cosang));
    REQUIRE(angle < 0.1);
}

TEST_CASE("ordered_linear_train edge behaviors", "[ordered]") {
    std::vector<Vector> data = synth_lowrank_dataset(6, geometric_spectrum(6, 2.0, 0.6), 40, 31);
    SECTION("step size zero keeps initialization") {
        OrderedTrainConfig cfg;
        cfg.epochs = 2;
        cfg.step_size = 0.0;
        cfg.seed = 5;
        OrderedTrainResult res = ordered_linear_train(data, 3, TruncationLaw(3, 0.4), cfg);
        RandomSource init_rng(5, 1);
        Matrix w0 = gaussian_matrix(init_rng, 6, 3, 1.0 / std::sqrt(6.0));
        for (std::size_t i = 0; i < w0.size(); ++i) {
            REQUIRE(res.model.w.data()[i] == w0.data()[i]);
        }
    }
    SECTION("p = 1 trains only the first column") {
        OrderedTrainConfig cfg;
        cfg.epochs = 3;
        cfg.step_size = 1e-2;
        cfg.seed = 6;
        OrderedTrainResult res = ordered_linear_train(data, 3, TruncationLaw(3, 1.0), cfg);
        RandomSource init_rng(6, 1);
        Matrix w0 = gaussian_matrix(init_rng, 6, 3, 1.0 / std::sqrt(6.0));
        bool first_changed = false;
        for (std::size_t i = 0; i < 6; ++i) {
            if (res.model.w(i, 0) != w0(i, 0)) first_changed = true;
            REQUIRE(res.model.w(i, 1) == w0(i, 1));
            REQUIRE(res.model.w(i, 2) == w0(i, 2));
        }
        REQUIRE(first_changed);
    }
    SECTION("latent dim larger than data dim rejected") {
        OrderedTrainConfig cfg;
        REQUIRE_THROWS_AS(ordered_linear_train(data, 7, TruncationLaw(7, 0.5), cfg),
                          InvalidDimension);
    }
}
