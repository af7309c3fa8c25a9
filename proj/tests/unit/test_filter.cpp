#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "stucoco/errors.hpp"
#include "stucoco/filter.hpp"
#include "stucoco/hitting.hpp"

using namespace stucoco;

namespace {

ModelParams params(double rho) {
    ModelParams p = base_case_parameters();
    p.rho = rho;
    return p;
}

double gauss(double z, double mean, double sd) {
    const double x = (z - mean) / sd;
    return std::exp(-0.5 * x * x) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

std::vector<ObservationRecord> random_walk(const ModelParams& p, std::size_t n, double dt, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z;
    std::vector<ObservationRecord> out{{0.0, p.S0}};
    double x = std::log(p.S0);
    for (std::size_t k = 1; k <= n; ++k) {
        x += (p.r - 0.5 * p.sigma * p.sigma) * dt + p.sigma * std::sqrt(dt) * z(gen);
        out.push_back({k * dt, std::exp(x)});
    }
    return out;
}

void check_valid(const PosteriorDensity& post) {
    CHECK(post.integral() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(post.weights.front() == 0.0);
    CHECK(std::all_of(post.weights.begin(), post.weights.end(), [](double w) { return w >= 0.0; }));
}

}  // namespace

TEST_CASE("kernel_h") {
    const ModelParams p = params(0.5);
    TransitionKernelInputs k{0.0, 0.01, drifts_under(MeasureTag::P_STAR, p)};
    const double mean = (k.drifts.mu_U - p.rho * k.drifts.mu_S) * k.dt;
    const double sd = p.sigma * std::sqrt((1.0 - p.rho * p.rho) * k.dt);
    CHECK(kernel_h(mean, k, p) == doctest::Approx(1.0 / (sd * std::sqrt(2.0 * std::numbers::pi))).epsilon(1e-14));

    double s = 0.0;
    const std::size_t n = 4000;
    const double h = 16.0 * sd / n;
    for (std::size_t i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 0.5 * h : h;
        s += w * kernel_h(mean - 8.0 * sd + i * h, k, p);
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-8));

    const ModelParams p0 = params(0.0);
    TransitionKernelInputs k0{0.3, 0.02, drifts_under(MeasureTag::P_STAR, p0)};
    for (double z : {-0.2, -0.05, 0.0, 0.1})
        CHECK(kernel_h(z, k0, p0) ==
              doctest::Approx(gauss(z, k0.drifts.mu_U * 0.02, p0.sigma * std::sqrt(0.02))).epsilon(1e-14));

    CHECK_THROWS_AS(kernel_h(0.0, k, params(1.0)), DomainError);
    CHECK_THROWS_AS(kernel_h(0.0, k, params(-1.0)), DomainError);
}

TEST_CASE("reset at update") {
    const ModelParams p = params(0.5);
    const auto post = reset_at_update(p.U0, 0.0, p, 1.0);
    check_valid(post);
    CHECK(post.grid.front() == p.c_bar);
    CHECK(post.is_spike());
    CHECK(post.survival_mass == 1.0);
    CHECK(post.mean() == doctest::Approx(p.U0).epsilon(1e-15));
    CHECK(post.grid.back() >= p.U0 + 8.0 * p.sigma - 1e-12);

    const auto edge = reset_at_update(p.c_bar + 1e-9, 0.0, p, 1.0);
    check_valid(edge);
    CHECK(edge.is_spike());

    CHECK_THROWS_AS(reset_at_update(p.c_bar, 0.0, p, 1.0), ConversionTriggered);
    CHECK_THROWS_AS(reset_at_update(p.c_bar - 0.1, 0.0, p, 1.0), ConversionTriggered);
}

TEST_CASE("one step at rho = 0 is the barrier-conditioned transition density") {
    const ModelParams p = params(0.0);
    const auto d = drifts_under(MeasureTag::P_STAR, p);
    const double dt = 0.01;
    const auto prior = reset_at_update(p.U0, 0.0, p, 1.0);
    const auto post = posterior_step(prior, {0.0, 100.0}, {dt, 93.0}, p, d);
    check_valid(post);

    std::vector<double> ref(post.grid.size());
    for (std::size_t i = 0; i < ref.size(); ++i)
        ref[i] = bridge_no_hit(p.U0, post.grid[i], p.c_bar, p.sigma, dt) *
                 gauss(post.grid[i], p.U0 + d.mu_U * dt, p.sigma * std::sqrt(dt));
    const auto w = post.quadrature_weights();
    double z = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) z += w[i] * ref[i];
    double worst = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(post.weights[i] - ref[i] / z));
    CHECK(worst <= 1e-9 * post.peak());
    CHECK(post.survival_mass == doctest::Approx(survival_closed_form(p.U0, p.c_bar, d.mu_U, p.sigma, dt)).epsilon(1e-9));
}

TEST_CASE("high correlation concentrates the posterior") {
    const ModelParams p = params(0.99);
    const double dt = 0.01;
    const auto prior = reset_at_update(p.U0, 0.0, p, 1.0);
    const auto post = posterior_step(prior, {0.0, 100.0}, {dt, 97.0}, p, drifts_under(MeasureTag::P_STAR, p));
    check_valid(post);
    CHECK(std::sqrt(post.variance()) <= std::sqrt(1.0 - 0.99 * 0.99) * p.sigma * std::sqrt(dt) * 1.1);
}

TEST_CASE("tiny step moves the spike by the conditional mean") {
    const ModelParams p = params(0.5);
    const auto d = drifts_under(MeasureTag::P_STAR, p);
    const double dt = 1e-6;
    const auto prior = reset_at_update(p.U0, 0.0, p, 1.0);
    const double s1 = 100.0 * std::exp(0.002);
    const auto post = posterior_step(prior, {0.0, 100.0}, {dt, s1}, p, d);
    check_valid(post);
    const double target = p.U0 + p.rho * std::log(s1 / 100.0) + (d.mu_U - p.rho * d.mu_S) * dt;
    CHECK(std::abs(post.mean() - target) <= 0.5 * post.step);
    CHECK(std::sqrt(post.variance()) <= post.step);
}

TEST_CASE("filter invariants along a long path") {
    for (double rho : {0.01, 0.5, 0.99}) {
        const ModelParams p = params(rho);
        const auto obs = random_walk(p, 100, 0.01, 31);
        FilterSession f(p, MeasureTag::P_STAR);
        f.reset(p.U0, obs[0], 1.0);
        double mass = 1.0;
        for (std::size_t k = 1; k < obs.size(); ++k) {
            f.observe(obs[k]);
            check_valid(f.posterior());
            CHECK(f.posterior().grid.front() == p.c_bar);
            CHECK(f.posterior().survival_mass <= mass);
            CHECK(f.posterior().anchor_time == obs[k].time);
            mass = f.posterior().survival_mass;
        }
        CHECK(mass > 0.0);
    }
}

TEST_CASE("two steps equal one merged step when the stock carries no information") {
    const ModelParams p = params(0.0);
    const auto d = drifts_under(MeasureTag::P_STAR, p);
    const double dt = 0.01;
    const auto prior = reset_at_update(p.U0, 0.0, p, 1.0);
    const auto mid = posterior_step(prior, {0.0, 100.0}, {dt, 91.0}, p, d);
    const auto two = posterior_step(mid, {dt, 91.0}, {2 * dt, 104.0}, p, d);
    const auto one = posterior_step(prior, {0.0, 100.0}, {2 * dt, 104.0}, p, d);
    REQUIRE(one.grid.size() == two.grid.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < one.grid.size(); ++i) worst = std::max(worst, std::abs(one.weights[i] - two.weights[i]));
    CHECK(worst <= 1e-4);
    CHECK(two.survival_mass == doctest::Approx(one.survival_mass).epsilon(1e-6));
}

TEST_CASE("banded and dense kernels agree") {
    const ModelParams p = params(0.5);
    const auto d = drifts_under(MeasureTag::P_STAR, p);
    GridOptions dense;
    dense.dense = true;
    dense.points = 512;
    GridOptions band = dense;
    band.dense = false;
    const auto obs = random_walk(p, 5, 0.02, 4);
    auto a = reset_at_update(p.U0, 0.0, p, 1.0, MeasureTag::P_STAR, p.S0, dense);
    auto b = reset_at_update(p.U0, 0.0, p, 1.0, MeasureTag::P_STAR, p.S0, band);
    for (std::size_t k = 1; k < obs.size(); ++k) {
        a = posterior_step(a, obs[k - 1], obs[k], p, d, dense);
        b = posterior_step(b, obs[k - 1], obs[k], p, d, band);
    }
    REQUIRE(a.grid.size() == b.grid.size());
    for (std::size_t i = 0; i < a.grid.size(); ++i) CHECK(std::abs(a.weights[i] - b.weights[i]) <= 1e-12 * a.peak());
}

TEST_CASE("share-measure posterior coincides with the risk-neutral one") {
    const ModelParams p = params(0.75);
    const auto obs = random_walk(p, 20, 0.01, 8);
    FilterSession star(p, MeasureTag::P_STAR), share(p, MeasureTag::P_S);
    star.reset(p.U0, obs[0], 1.0);
    share.reset(p.U0, obs[0], 1.0);
    for (std::size_t k = 1; k < obs.size(); ++k) {
        star.observe(obs[k]);
        share.observe(obs[k]);
    }
    const auto& a = star.posterior();
    const auto& b = share.posterior();
    REQUIRE(a.grid.size() == b.grid.size());
    for (std::size_t i = 0; i < a.grid.size(); ++i) CHECK(std::abs(a.weights[i] - b.weights[i]) <= 1e-12 * a.peak());
    CHECK(a.survival_mass == doctest::Approx(b.survival_mass).epsilon(1e-12));
    CHECK(b.measure == MeasureTag::P_S);
}

TEST_CASE("grid grows when mass drifts to the top edge") {
    const ModelParams p = params(0.99);
    const auto d = drifts_under(MeasureTag::P_STAR, p);
    auto post = reset_at_update(p.U0, 0.0, p, 1.0);
    const std::size_t initial = post.grid.size();
    const double top = post.grid.back();
    double s = 100.0;
    for (int k = 1; k <= 4; ++k) {
        const double next = s * std::exp(1.5);
        post = posterior_step(post, {0.01 * (k - 1), s}, {0.01 * k, next}, p, d);
        s = next;
        check_valid(post);
    }
    CHECK(post.grid.size() > initial);
    CHECK(post.mean() > top);
    CHECK(post.mean() == doctest::Approx(p.U0 + 0.99 * 6.0).epsilon(1e-2));
}

TEST_CASE("degenerate correlation translates the spike") {
    const ModelParams p = params(1.0);
    const auto d = drifts_under(MeasureTag::P_STAR, p);
    const auto prior = reset_at_update(p.U0, 0.0, p, 1.0);
    const auto post = posterior_step(prior, {0.0, 100.0}, {0.01, 90.0}, p, d);
    CHECK(post.is_spike());
    const double to = p.U0 + std::log(0.9) + (d.mu_U - d.mu_S) * 0.01;
    CHECK(post.mean() == doctest::Approx(to).epsilon(1e-14));
    CHECK(post.survival_mass == doctest::Approx(bridge_no_hit(p.U0, to, p.c_bar, p.sigma, 0.01)).epsilon(1e-14));
    CHECK_THROWS_AS(posterior_step(prior, {0.0, 100.0}, {0.01, 20.0}, p, d), PosteriorCollapse);
}

TEST_CASE("posterior collapse") {
    const ModelParams p = params(0.99);
    const auto prior = reset_at_update(p.U0, 0.0, p, 1.0);
    CHECK_THROWS_AS(posterior_step(prior, {0.0, 100.0}, {0.01, 100.0 * std::exp(-3.0)}, p,
                                   drifts_under(MeasureTag::P_STAR, p)),
                    PosteriorCollapse);
}

TEST_CASE("contract checks") {
    const ModelParams p = params(0.5);
    const auto prior = reset_at_update(p.U0, 0.0, p, 1.0);
    CHECK_THROWS_AS(posterior_step(prior, {0.0, 100.0}, {0.01, 99.0}, p, drifts_under(MeasureTag::P_S, p)),
                    ContractError);
    CHECK_NOTHROW(posterior_step(prior, {0.0, 100.0}, {0.01, 99.0}, p, drifts_under(MeasureTag::P_T, p)));
    CHECK_THROWS_AS(posterior_step(prior, {0.1, 100.0}, {0.2, 99.0}, p, drifts_under(MeasureTag::P_STAR, p)),
                    ContractError);
    CHECK_THROWS_AS(posterior_step(prior, {0.0, 100.0}, {0.0, 99.0}, p, drifts_under(MeasureTag::P_STAR, p)),
                    DomainError);
    FilterSession f(p, MeasureTag::P_STAR);
    CHECK_THROWS_AS(f.observe({0.01, 99.0}), ContractError);
}

TEST_CASE("posterior csv export") {
    const ModelParams p = params(0.5);
    GridOptions g;
    g.points = 16;
    const auto post = reset_at_update(p.U0, 0.0, p, 1.0, MeasureTag::P_STAR, p.S0, g);
    std::ostringstream out;
    write_posterior_csv(out, post);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "# anchor_time=0.000000000,survival_mass=1.000000000000");
    std::getline(in, line);
    CHECK(line == "u,density");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == post.grid.size());
}
