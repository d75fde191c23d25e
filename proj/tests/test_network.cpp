#include <catch2/catch_amalgamated.hpp>

#include "spinn/io.hpp"
#include "spinn/network.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

using namespace spinn;
using Catch::Approx;

TEST_CASE("parameter counting and initialization", "[network]") {
    CHECK(theta_count({1, 20, 20, 1}) == 481);
    CHECK(theta_count({1, 1}) == 2);
    CHECK(theta_count({1, 8, 8, 1}) == 8 + 8 + 64 + 8 + 8 + 1);

    SECTION("deterministic per seed") {
        MlpParams a = init_params({1, 20, 20, 1}, 0);
        MlpParams b = init_params({1, 20, 20, 1}, 0);
        MlpParams c = init_params({1, 20, 20, 1}, 1);
        REQUIRE(a.theta.size() == 481);
        CHECK(a.theta == b.theta);
        CHECK(a.theta != c.theta);
    }
    SECTION("Glorot bound and zero biases in the smallest net") {
        MlpParams p = init_params({1, 1}, 7);
        REQUIRE(p.theta.size() == 2);
        CHECK(std::abs(p.theta[0]) <= std::sqrt(3.0));
        CHECK(p.theta[1] == 0.0);
    }
    SECTION("biases are zero everywhere") {
        MlpParams p = init_params({1, 3, 1}, 3);
        // layout: w0 (3), b0 (3), w1 (3), b1 (1)
        CHECK(p.theta[3] == 0.0);
        CHECK(p.theta[4] == 0.0);
        CHECK(p.theta[5] == 0.0);
        CHECK(p.theta[9] == 0.0);
    }
    SECTION("malformed shapes are rejected") {
        CHECK_THROWS_AS(init_params({2, 20, 1}, 0), std::invalid_argument);
        CHECK_THROWS_AS(init_params({1}, 0), std::invalid_argument);
    }
}

TEST_CASE("swish activation values", "[network]") {
    CHECK(swish(0.0, 1.0) == 0.0);
    CHECK(swish(1.0, 1.0) == Approx(0.73105857863000488).epsilon(1e-14));
    // Large negative arguments decay like z*e^z instead of overflowing.
    CHECK(swish(-50.0, 1.0) == Approx(-9.6437492398195889e-21).epsilon(1e-12));
    CHECK(std::isfinite(swish(-745.0, 1.0)));
    // mu scales the sigmoid steepness.
    CHECK(swish(1.0, 8.0) == Approx(1.0 / (1.0 + std::exp(-8.0))).epsilon(1e-14));
}

TEST_CASE("forward evaluation of hand-built networks", "[network]") {
    SECTION("all-zero parameters give zero output in both head modes") {
        MlpParams p = init_params({1, 20, 20, 1}, 0);
        std::fill(p.theta.begin(), p.theta.end(), 0.0);
        for (bool linear : {true, false}) {
            NetConfig cfg;
            cfg.linear_output = linear;
            CHECK(forward_value(p, 0.3, cfg) == 0.0);
            CHECK(forward_value(p, -1.7, cfg) == 0.0);
        }
    }
    SECTION("single hidden unit with unit weights composes the activation") {
        MlpParams p;
        p.layer_sizes = {1, 1, 1};
        p.theta = {1.0, 0.0, 1.0, 0.0};  // w0, b0, w1, b1
        const double x = 0.8;
        NetConfig activated;
        activated.linear_output = false;
        CHECK(forward_value(p, x, activated) ==
              Approx(swish(swish(x, 1.0), 1.0)).epsilon(1e-15));
        NetConfig affine_head;
        affine_head.linear_output = true;
        CHECK(forward_value(p, x, affine_head) == Approx(swish(x, 1.0)).epsilon(1e-15));
    }
    SECTION("bare affine layer realizes the identity") {
        MlpParams p;
        p.layer_sizes = {1, 1};
        p.theta = {1.0, 0.0};
        NetConfig cfg;
        cfg.linear_output = true;
        CHECK(forward_value(p, 0.42, cfg) == 0.42);
        Jet2<double> j = forward_jet(p, 0.42, cfg);
        CHECK(j.d1 == 1.0);
        CHECK(j.d2 == 0.0);
    }
}

TEST_CASE("spatial jets agree with finite differences", "[network]") {
    MlpParams p = init_params({1, 20, 20, 1}, 3);
    const double x0 = 0.4;
    const double h = 1e-5;
    for (bool linear : {true, false}) {
        NetConfig cfg;
        cfg.linear_output = linear;
        Jet2<double> j = forward_jet(p, x0, cfg);

        const double fd1 =
            (forward_value(p, x0 + h, cfg) - forward_value(p, x0 - h, cfg)) / (2.0 * h);
        CHECK(j.d1 == Approx(fd1).epsilon(1e-6));

        // Second derivative checked as the first difference of the exact d1,
        // which keeps the oracle away from catastrophic cancellation.
        const double fd2 =
            (forward_jet(p, x0 + h, cfg).d1 - forward_jet(p, x0 - h, cfg).d1) / (2.0 * h);
        CHECK(j.d2 == Approx(fd2).epsilon(1e-6));
    }
}

TEST_CASE("jet value slot equals the plain forward value", "[network]") {
    MlpParams p = init_params({1, 20, 20, 1}, 12);
    for (double x : {0.0, 0.1, 0.37, 0.5, 0.99}) {
        CHECK(forward_jet(p, x).v == forward_value(p, x));
    }
}

TEST_CASE("trace-based backward pass matches the tape", "[network]") {
    MlpParams p = init_params({1, 8, 8, 1}, 21);
    NetConfig cfg;
    const double x0 = 0.63;
    // Adjoint seed mixing value, slope, and curvature of the output jet.
    const double wa = 0.7, wb = -1.3, wc = 0.4;

    GradTape tape;
    std::vector<Var> theta_v;
    for (double t : p.theta) theta_v.push_back(tape.variable(t));
    Jet2<Var> xj{tape.variable(x0), tape.variable(1.0), tape.variable(0.0)};
    Jet2<Var> u = forward_jet<Var>(std::span<const Var>(theta_v.data(), theta_v.size()),
                                   p.layer_sizes, xj, cfg);
    Var L = wa * u.v + wb * u.d1 + wc * u.d2;
    std::vector<double> want = tape.reverse_grad(L, p.theta.size());

    MlpTrace tr;
    tr.resize(p.layer_sizes);
    Jet2<double> out = forward_trace(p, x0, cfg, tr);
    CHECK(out.v == forward_value(p, x0, cfg));
    std::vector<double> got(p.theta.size(), 0.0);
    backward_trace(p, cfg, tr, Jet2<double>{wa, wb, wc},
                   std::span<double>(got.data(), got.size()));

    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i)
        CHECK(got[i] == Approx(want[i]).epsilon(1e-12).margin(1e-14));
}

TEST_CASE("checkpoint files round-trip the parameters", "[network]") {
    const std::string path = "test_ckpt_roundtrip.json";
    MlpParams p = init_params({1, 20, 20, 1}, 99);
    save_checkpoint(p, path);
    MlpParams q = load_checkpoint(path);
    CHECK(q.layer_sizes == p.layer_sizes);
    CHECK(q.seed == p.seed);
    REQUIRE(q.theta.size() == p.theta.size());
    CHECK(q.theta == p.theta);  // bitwise: writer emits shortest round-trip digits
    std::filesystem::remove(path);

    CHECK_THROWS_AS(load_checkpoint("does_not_exist_ckpt.json"), std::runtime_error);
}
