#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "priorlab/diffusion.hpp"
#include "priorlab/rng.hpp"

using namespace priorlab;

namespace {

void zero_net(DenoiserNet& net) {
    net.a1 = Matrix(net.hidden, net.input_dim());
    net.c1 = Vector(net.hidden, 0.0);
    net.a2 = Matrix(net.hidden, net.hidden);
    net.c2 = Vector(net.hidden, 0.0);
    net.a3 = Matrix(net.d, net.hidden);
    net.c3 = Vector(net.d, 0.0);
}

void require_close_rel(double got, double want, double tol) {
    double scale = std::max({std::abs(got), std::abs(want), 1e-8});
    REQUIRE(std::abs(got - want) / scale < tol);
}

}  // namespace

TEST_CASE("make_schedule tables", "[diffusion]") {
    SECTION("T = 1 boundary convention") {
        NoiseSchedule s = make_schedule(1, 0.1, 0.1);
        REQUIRE(s.beta[0] == Catch::Approx(0.1).margin(1e-15));
        REQUIRE(s.alpha[0] == Catch::Approx(0.9).margin(1e-15));
        REQUIRE(s.alpha_bar[0] == Catch::Approx(0.9).margin(1e-15));
        REQUIRE(s.ddpm_sigma[0] == 0.0);  // abar_0 = 1 forces zero
    }
    SECTION("identities hold to 1e-12") {
        NoiseSchedule s = make_schedule(50, 1e-4, 0.05);
        double abar_prev = 1.0;
        for (std::size_t t = 1; t <= 50; ++t) {
            REQUIRE(std::abs(s.alpha[t - 1] - (1.0 - s.beta[t - 1])) < 1e-12);
            REQUIRE(std::abs(s.alpha_bar[t - 1] - abar_prev * s.alpha[t - 1]) < 1e-12);
            REQUIRE(s.alpha_bar[t - 1] < abar_prev);  // strictly decreasing
            double expect =
                std::sqrt((1.0 - abar_prev) / (1.0 - s.alpha_bar[t - 1]) * s.beta[t - 1]);
            REQUIRE(std::abs(s.ddpm_sigma[t - 1] - expect) < 1e-12);
            abar_prev = s.alpha_bar[t - 1];
        }
    }
    SECTION("frozen sigma value at abar_prev = 0.5, abar = 0.45, beta = 0.1") {
        // Direct evaluation of the formula the table uses.
        double sigma = std::sqrt((1.0 - 0.5) / (1.0 - 0.45) * 0.1);
        REQUIRE(sigma == Catch::Approx(0.30151134457776363).margin(1e-15));
    }
    SECTION("bad arguments rejected") {
        REQUIRE_THROWS_AS(make_schedule(0, 0.1, 0.2), InvalidArgument);
        REQUIRE_THROWS_AS(make_schedule(5, 0.0, 0.2), InvalidArgument);
        REQUIRE_THROWS_AS(make_schedule(5, 0.3, 0.2), InvalidArgument);
        REQUIRE_THROWS_AS(make_schedule(5, 0.1, 1.0), InvalidArgument);
    }
}

TEST_CASE("forward_marginal and predict_z0 are exact inverses", "[diffusion]") {
    NoiseSchedule s = make_schedule(20, 1e-3, 0.2);
    RandomSource rng(1, 0);
    Vector z0 = gaussian_vector(rng, 5, 1.3);
    for (std::size_t t : {1u, 7u, 20u}) {
        ForwardMarginal fm = forward_marginal(s, z0, t, rng);
        Vector back = predict_z0(s, fm.zt, fm.eps, t);
        for (std::size_t i = 0; i < 5; ++i) {
            REQUIRE(std::abs(back[i] - z0[i]) < 1e-10);
        }
        // The marginal is the documented affine combination of z0 and eps.
        double c0 = std::sqrt(s.alpha_bar[t - 1]);
        double c1 = std::sqrt(1.0 - s.alpha_bar[t - 1]);
        for (std::size_t i = 0; i < 5; ++i) {
            REQUIRE(fm.zt[i] == c0 * z0[i] + c1 * fm.eps[i]);
        }
    }
}

TEST_CASE("pinned-noise marginal example at abar = 0.25", "[diffusion]") {
    NoiseSchedule s = make_schedule(1, 0.75, 0.75);  // abar_1 = 0.25
    REQUIRE(s.alpha_bar[0] == Catch::Approx(0.25).margin(1e-15));
    Vector z0 = {2.0, 0.0};
    Vector eps = {0.0, 1.0};
    double c0 = std::sqrt(0.25), c1 = std::sqrt(0.75);
    Vector zt = {c0 * z0[0] + c1 * eps[0], c0 * z0[1] + c1 * eps[1]};
    REQUIRE(zt[0] == Catch::Approx(1.0).margin(1e-15));
    REQUIRE(zt[1] == Catch::Approx(0.8660254037844386).margin(1e-15));
    Vector back = predict_z0(s, zt, eps, 1);
    REQUIRE(back[0] == Catch::Approx(2.0).margin(1e-12));
    REQUIRE(back[1] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("marginal second moment matches the bookkeeping", "[diffusion][slow]") {
    // z0 = 0, abar = 0.5, d = 2: E||zt||^2 = (1 - abar) * d = 1.
    NoiseSchedule s = make_schedule(1, 0.5, 0.5);
    REQUIRE(s.alpha_bar[0] == Catch::Approx(0.5).margin(1e-15));
    RandomSource rng(2, 0);
    Vector z0 = {0.0, 0.0};
    double acc = 0.0;
    std::size_t n = 100000;
    for (std::size_t i = 0; i < n; ++i) {
        acc += squared_norm(forward_marginal(s, z0, 1, rng).zt);
    }
    acc /= static_cast<double>(n);
    REQUIRE(std::abs(acc - 1.0) < 0.03);
}

TEST_CASE("predict_z0 with tiny beta is near-identity on zero noise prediction",
          "[diffusion]") {
    NoiseSchedule s = make_schedule(1, 1e-9, 1e-9);
    Vector zt = {1.5, -2.0};
    Vector out = predict_z0(s, zt, {0.0, 0.0}, 1);
    REQUIRE(out[0] == Catch::Approx(1.5).margin(1e-8));
    REQUIRE(out[1] == Catch::Approx(-2.0).margin(1e-8));
}

TEST_CASE("reverse_step", "[diffusion]") {
    SECTION("deterministic at sigma = 0") {
        NoiseSchedule s = make_schedule(10, 1e-3, 0.1);
        DenoiserNet net = make_denoiser(3, 8, 10, 7);
        RandomSource r1(3, 0), r2(3, 0);
        Vector zt = {0.3, -0.6, 1.1};
        REQUIRE(reverse_step(s, net, zt, 5, 0.0, r1) == reverse_step(s, net, zt, 5, 0.0, r2));
    }
    SECTION("zero denoiser with alpha = 0.81 rescales by 1/0.9") {
        NoiseSchedule s = make_schedule(1, 0.19, 0.19);
        DenoiserNet net = make_denoiser(2, 4, 1, 7);
        zero_net(net);
        RandomSource rng(4, 0);
        Vector zt = {0.9, -1.8};
        Vector out = reverse_step(s, net, zt, 1, 0.0, rng);
        REQUIRE(out[0] == Catch::Approx(1.0).margin(1e-12));
        REQUIRE(out[1] == Catch::Approx(-2.0).margin(1e-12));
    }
    SECTION("sigma at the DDPM ceiling injects matching variance") {
        NoiseSchedule s = make_schedule(2, 0.1, 0.5);
        double sigma = s.ddpm_sigma[1];
        REQUIRE(sigma == Catch::Approx(0.30151134457776363).margin(1e-12));
        RandomSource rng(5, 0);
        Vector zt = {0.5};
        Vector eps_hat = {0.2};
        double mean = 0.0, m2 = 0.0;
        std::size_t n = 100000;
        for (std::size_t i = 0; i < n; ++i) {
            double v = reverse_step_with_eps(s, zt, eps_hat, 2, sigma, rng)[0];
            mean += v;
            m2 += v * v;
        }
        mean /= static_cast<double>(n);
        double var = m2 / static_cast<double>(n) - mean * mean;
        REQUIRE(std::abs(var - sigma * sigma) / (sigma * sigma) < 0.05);
    }
    SECTION("sigma above the ceiling is rejected") {
        NoiseSchedule s = make_schedule(5, 0.01, 0.2);
        DenoiserNet net = make_denoiser(2, 4, 5, 7);
        RandomSource rng(6, 0);
        REQUIRE_THROWS_AS(reverse_step(s, net, {0.1, 0.2}, 3, 1.5, rng), InvalidArgument);
    }
}

TEST_CASE("ldm_loss structure", "[diffusion]") {
    NoiseSchedule s = make_schedule(16, 1e-3, 0.1);
    DenoiserNet net = make_denoiser(4, 8, 16, 11);
    RandomSource rng(7, 0);
    Vector z0 = gaussian_vector(rng, 4, 1.0);
    Vector eps = gaussian_vector(rng, 4, 1.0);

    SECTION("lambda = 0 equals the plain objective on identical draws, exactly") {
        double loss = ldm_loss_at(net, s, z0, 0.0, 5, eps, 2, nullptr);
        double c0 = std::sqrt(s.alpha_bar[4]);
        double c1 = std::sqrt(1.0 - s.alpha_bar[4]);
        Vector zt(4);
        for (std::size_t i = 0; i < 4; ++i) zt[i] = c0 * z0[i] + c1 * eps[i];
        Vector out = net_forward(net, zt, 5);
        double expect = squared_norm(sub(eps, out));
        REQUIRE(loss == expect);
    }
    SECTION("lambda = 1 with k = d equals the lambda = 0 value on the same draw") {
        double a = ldm_loss_at(net, s, z0, 0.0, 9, eps, 4, nullptr);
        double b = ldm_loss_at(net, s, z0, 1.0, 9, eps, 4, nullptr);
        REQUIRE(a == b);
    }
    SECTION("perfect prediction is the zero-loss fixed point") {
        DenoiserNet zn = make_denoiser(4, 8, 16, 11);
        zero_net(zn);
        // eps = 0 makes the zero net an exact oracle on both branches.
        double loss = ldm_loss_at(zn, s, z0, 0.5, 3, Vector(4, 0.0), 2, nullptr);
        REQUIRE(loss == 0.0);
    }
    SECTION("invalid lambda rejected") {
        REQUIRE_THROWS_AS(ldm_loss(net, s, z0, 1.5, TruncationLaw(4, 0.5), rng),
                          InvalidArgument);
    }
}

TEST_CASE("denoiser gradients match central finite differences", "[diffusion][gradcheck]") {
    RandomSource meta(8, 0);
    for (int inst = 0; inst < 10; ++inst) {
        std::size_t d = 1 + (meta.next_u64() % 4);       // <= 4
        std::size_t hidden = 2 + (meta.next_u64() % 7);  // <= 8
        std::size_t T = 6;
        NoiseSchedule s = make_schedule(T, 1e-3, 0.2);
        DenoiserNet net = make_denoiser(d, hidden, T, 2000 + inst);
        RandomSource rng(9, static_cast<std::uint64_t>(inst));
        Vector z0 = gaussian_vector(rng, d, 1.0);
        Vector eps = gaussian_vector(rng, d, 1.0);
        std::size_t t = 1 + (meta.next_u64() % T);
        std::size_t k = 1 + (meta.next_u64() % d);
        double lambda = 0.3;

        NetGrads g = zero_net_grads(net);
        ldm_loss_at(net, s, z0, lambda, t, eps, k, &g);

        const double h = 1e-5;
        auto loss_now = [&]() { return ldm_loss_at(net, s, z0, lambda, t, eps, k, nullptr); };
        auto check_matrix = [&](Matrix& w, const Matrix& gw) {
            for (std::size_t i = 0; i < w.size(); ++i) {
                double save = w.data()[i];
                w.data()[i] = save + h;
                double lp = loss_now();
                w.data()[i] = save - h;
                double lm = loss_now();
                w.data()[i] = save;
                require_close_rel(gw.data()[i], (lp - lm) / (2.0 * h), 1e-4);
            }
        };
        auto check_vector = [&](Vector& w, const Vector& gw) {
            for (std::size_t i = 0; i < w.size(); ++i) {
                double save = w[i];
                w[i] = save + h;
                double lp = loss_now();
                w[i] = save - h;
                double lm = loss_now();
                w[i] = save;
                require_close_rel(gw[i], (lp - lm) / (2.0 * h), 1e-4);
            }
        };
        check_matrix(net.a1, g.a1);
        check_vector(net.c1, g.c1);
        check_matrix(net.a2, g.a2);
        check_vector(net.c2, g.c2);
        check_matrix(net.a3, g.a3);
        check_vector(net.c3, g.c3);
    }
}

TEST_CASE("denoiser input VJP matches finite differences", "[diffusion][gradcheck]") {
    std::size_t d = 3, hidden = 6, T = 5;
    DenoiserNet net = make_denoiser(d, hidden, T, 77);
    RandomSource rng(10, 0);
    Vector z = gaussian_vector(rng, d, 1.0);
    Vector cot = gaussian_vector(rng, d, 1.0);
    NetActivations acts = net_forward_cached(net, z, 2);
    Vector vjp = net_backward(net, acts, cot, nullptr);
    const double h = 1e-6;
    for (std::size_t i = 0; i < d; ++i) {
        Vector zp = z, zm = z;
        zp[i] += h;
        zm[i] -= h;
        double fp = dot(net_forward(net, zp, 2), cot);
        double fm = dot(net_forward(net, zm, 2), cot);
        require_close_rel(vjp[i], (fp - fm) / (2.0 * h), 1e-5);
    }
}

TEST_CASE("ldm_train determinism and frozen-step behavior", "[diffusion]") {
    RandomSource rng(11, 0);
    std::vector<Vector> data;
    for (int i = 0; i < 32; ++i) data.push_back(gaussian_vector(rng, 2, 1.0));

    LdmTrainConfig cfg;
    cfg.T = 20;
    cfg.hidden = 12;
    cfg.steps = 200;
    cfg.step_size = 1e-2;
    cfg.seed = 5;

    SECTION("step size zero keeps initialization") {
        LdmTrainConfig frozen = cfg;
        frozen.step_size = 0.0;
        LdmTrainResult res = ldm_train(data, frozen);
        DenoiserNet init = make_denoiser(2, cfg.hidden, cfg.T, cfg.seed);
        for (std::size_t i = 0; i < init.a1.size(); ++i) {
            REQUIRE(res.net.a1.data()[i] == init.a1.data()[i]);
        }
    }
    SECTION("fixed seed reproduces weights") {
        LdmTrainResult a = ldm_train(data, cfg);
        LdmTrainResult b = ldm_train(data, cfg);
        for (std::size_t i = 0; i < a.net.a3.size(); ++i) {
            REQUIRE(a.net.a3.data()[i] == b.net.a3.data()[i]);
        }
        REQUIRE(a.loss_trace == b.loss_trace);
    }
}

TEST_CASE("ddim sampling is bit-reproducible; ddpm draws per-step noise", "[diffusion]") {
    NoiseSchedule s = make_schedule(15, 1e-3, 0.1);
    DenoiserNet net = make_denoiser(3, 8, 15, 13);
    SECTION("ddim") {
        RandomSource r1(14, 0), r2(14, 0);
        Vector a = sample_prior(net, s, ddim_sigma_policy(s), r1);
        Vector b = sample_prior(net, s, ddim_sigma_policy(s), r2);
        REQUIRE(a == b);
    }
    SECTION("ddpm") {
        RandomSource r1(15, 0), r2(15, 0);
        Vector a = sample_prior(net, s, ddpm_sigma_policy(s), r1);
        Vector b = sample_prior(net, s, ddpm_sigma_policy(s), r2);
        REQUIRE(a == b);
        RandomSource r3(16, 0);
        Vector c = sample_prior(net, s, ddpm_sigma_policy(s), r3);
        REQUIRE(a != c);
    }
}
