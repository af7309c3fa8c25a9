#include <doctest.h>

#include <cmath>
#include <numbers>

#include "stucoco/errors.hpp"
#include "stucoco/hitting.hpp"
#include "stucoco/oracle.hpp"

using namespace stucoco;

namespace {

ModelParams params(double rho) {
    ModelParams p = base_case_parameters();
    p.rho = rho;
    return p;
}

// Binomial band from the reference bin mass, so empty bins still get a width.
void check_bins(const ConditionalHistogram& h, const std::vector<double>& avg, double norm) {
    const double n = static_cast<double>(h.n_accepted);
    for (std::size_t b = 0; b < avg.size(); ++b) {
        const double q = avg[b] / norm * h.width(b);
        const double se = std::sqrt(q * (1.0 - q) / n) / h.width(b);
        CHECK(std::abs(h.density(b) - avg[b] / norm) <= 4.0 * se);
    }
}

}  // namespace

TEST_CASE("bundles are reproducible") {
    const ModelParams p = params(0.5);
    const auto d = drifts_under(MeasureTag::P_STAR, p);
    BundleOptions o;
    o.store_paths = true;
    const auto a = simulate_bundle(p, d, 0.1, 1000, 0.01, 42, o);
    const auto b = simulate_bundle(p, d, 0.1, 1000, 0.01, 42, o);
    CHECK(a.log_s == b.log_s);
    CHECK(a.u == b.u);
    CHECK(a.crossed == b.crossed);
    const auto c = simulate_bundle(p, d, 0.1, 1000, 0.01, 43, o);
    CHECK(a.log_s != c.log_s);
}

TEST_CASE("degenerate correlation ties U to log S") {
    const ModelParams p = params(1.0);
    const auto d = drifts_under(MeasureTag::P_STAR, p);
    BundleOptions o;
    o.store_paths = true;
    o.rho_mode = RhoMode::AllowDegenerate;
    const auto b = simulate_bundle(p, d, 0.05, 200, 0.005, 1, o);
    for (std::size_t i = 0; i < b.n_paths; ++i)
        for (std::size_t k = 1; k <= b.n_steps; ++k) {
            const double du = b.u_at(i, k) - b.u_at(i, k - 1);
            const double dx = b.log_s_at(i, k) - b.log_s_at(i, k - 1);
            CHECK(du == doctest::Approx(dx + (d.mu_U - d.mu_S) * b.step).epsilon(1e-12));
        }
    CHECK_THROWS_AS(simulate_bundle(p, d, 0.05, 10, 0.005, 1), DomainError);
}

TEST_CASE("increment moments and correlation") {
    const double rho = 0.6;
    ModelParams p = params(rho);
    p.c_bar = p.U0 - 50.0;
    p.c_under = p.c_bar - 1.0;
    const auto d = drifts_under(MeasureTag::P_STAR, p);
    BundleOptions o;
    o.store_paths = true;
    const auto b = simulate_bundle(p, d, 0.1, 100'000, 0.01, 9, o);
    const double n = static_cast<double>(b.n_paths * b.n_steps);
    double sx = 0, su = 0, sxx = 0, suu = 0, sxu = 0;
    for (std::size_t i = 0; i < b.n_paths; ++i)
        for (std::size_t k = 1; k <= b.n_steps; ++k) {
            const double dx = b.log_s_at(i, k) - b.log_s_at(i, k - 1);
            const double du = b.u_at(i, k) - b.u_at(i, k - 1);
            sx += dx;
            su += du;
            sxx += dx * dx;
            suu += du * du;
            sxu += dx * du;
        }
    const double var = p.sigma * p.sigma * b.step;
    CHECK(std::abs(sx / n - d.mu_S * b.step) <= 4.0 * std::sqrt(var / n));
    CHECK(std::abs(su / n - d.mu_U * b.step) <= 4.0 * std::sqrt(var / n));
    const double vx = sxx / n - (sx / n) * (sx / n);
    const double vu = suu / n - (su / n) * (su / n);
    CHECK(std::abs(vx - var) <= 4.0 * var * std::sqrt(2.0 / n));
    CHECK(std::abs(vu - var) <= 4.0 * var * std::sqrt(2.0 / n));
    const double corr = (sxu / n - (sx / n) * (su / n)) / std::sqrt(vx * vu);
    CHECK(std::abs(corr - rho) <= 4.0 * (1.0 - rho * rho) / std::sqrt(n));
}

TEST_CASE("crossing frequency matches the first-passage law") {
    const ModelParams p = params(0.3);
    const auto d = drifts_under(MeasureTag::P_STAR, p);
    const double horizon = 0.5;
    const double ref = first_passage_cdf(p.U0, p.c_bar, d.mu_U, p.sigma, horizon);
    const auto b = simulate_bundle(p, d, horizon, 200'000, 0.01, 5);
    std::size_t hits = 0;
    for (auto c : b.crossed) hits += c;
    const auto e = binomial_estimate(hits, b.n_paths);
    CHECK(e.within(ref, 3.0));
}

TEST_CASE("bridge correction is necessary at coarse steps") {
    const double u = 0.3, mu = -0.09005, sigma = 0.49, horizon = 0.5;
    const double ref = first_passage_cdf(u, 0.0, mu, sigma, horizon);
    OracleOptions o;
    o.n_paths = 200'000;
    o.dt_fine = 0.01;
    o.seed = 77;
    const auto with = first_passage_oracle(u, 0.0, mu, sigma, horizon, o);
    CHECK(with.within(ref, 3.0));
    o.bridge_correction = false;
    const auto without = first_passage_oracle(u, 0.0, mu, sigma, horizon, o);
    CHECK(without.value < ref - 3.0 * without.std_error);
}

TEST_CASE("bridge-corrected estimates do not depend on the step") {
    OracleOptions o;
    o.n_paths = 200'000;
    o.seed = 78;
    o.dt_fine = 0.01;
    const auto coarse = first_passage_oracle(0.4, 0.0, 0.05, 0.49, 1.0, o);
    o.dt_fine = 0.005;
    o.seed = 79;
    const auto fine = first_passage_oracle(0.4, 0.0, 0.05, 0.49, 1.0, o);
    const double se = std::hypot(coarse.std_error, fine.std_error);
    CHECK(std::abs(coarse.value - fine.value) <= 3.0 * se);
}

TEST_CASE("conditional histogram without information is the killed transition density") {
    const ModelParams p = params(0.0);
    const auto d = drifts_under(MeasureTag::P_STAR, p);
    const std::vector<ObservationRecord> obs{{0.0, 100.0}, {0.02, 91.0}};
    const double gap = 0.15;
    ModelParams q = p;
    q.c_bar = p.U0 - gap;
    q.c_under = q.c_bar - 1.0;
    OracleOptions o;
    o.n_paths = 400'000;
    o.dt_fine = 0.001;
    o.seed = 3;
    HistogramSpec spec{q.c_bar, q.U0 + 0.35, 40};
    const auto h = conditional_posterior_oracle(q, d, obs, 0.02, o, spec);
    std::size_t total = 0;
    for (auto c : h.counts) total += c;
    CHECK(total == h.n_accepted);

    // Bin averages of the killed density, normalised over the histogram range.
    const double dt = 0.02, sd = q.sigma * std::sqrt(dt), m = q.U0 + d.mu_U * dt;
    auto killed = [&](double u) {
        const double z = (u - m) / sd;
        return bridge_no_hit(q.U0, u, q.c_bar, q.sigma, dt) * std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
    };
    std::vector<double> avg(h.counts.size());
    double norm = 0.0;
    for (std::size_t b = 0; b < avg.size(); ++b) {
        const int sub = 200;
        double s = 0.0;
        for (int i = 0; i < sub; ++i) s += killed(h.edges[b] + (i + 0.5) * h.width(b) / sub);
        avg[b] = s / sub;
        norm += avg[b] * h.width(b);
    }
    // The histogram is normalised by accepted paths; mass above the range is negligible.
    CHECK(norm == doctest::Approx(survival_closed_form(q.U0, q.c_bar, d.mu_U, q.sigma, dt)).epsilon(1e-3));
    check_bins(h, avg, norm);
}

TEST_CASE("one informative step matches direct quadrature") {
    const ModelParams p = params(0.7);
    const auto d = drifts_under(MeasureTag::P_STAR, p);
    ModelParams q = p;
    q.c_bar = p.U0 - 0.12;
    q.c_under = q.c_bar - 1.0;
    const std::vector<ObservationRecord> obs{{0.0, 100.0}, {0.02, 96.0}};
    OracleOptions o;
    o.n_paths = 400'000;
    o.dt_fine = 0.001;
    o.seed = 4;
    HistogramSpec spec{q.c_bar, q.U0 + 0.2, 40};
    const auto h = conditional_posterior_oracle(q, d, obs, 0.02, o, spec);

    const double dt = 0.02, sd = q.sigma * std::sqrt((1 - q.rho * q.rho) * dt);
    const double m = q.U0 + q.rho * std::log(0.96) + (d.mu_U - q.rho * d.mu_S) * dt;
    auto product = [&](double u) {
        const double z = (u - m) / sd;
        return bridge_no_hit(q.U0, u, q.c_bar, q.sigma, dt) * std::exp(-0.5 * z * z);
    };
    std::vector<double> avg(h.counts.size());
    double norm = 0.0;
    for (std::size_t b = 0; b < avg.size(); ++b) {
        const int sub = 200;
        double s = 0.0;
        for (int i = 0; i < sub; ++i) s += product(h.edges[b] + (i + 0.5) * h.width(b) / sub);
        avg[b] = s / sub;
        norm += avg[b] * h.width(b);
    }
    check_bins(h, avg, norm);
}

TEST_CASE("survival oracle edge cases") {
    const ModelParams p = params(0.5);
    const auto d = drifts_under(MeasureTag::P_STAR, p);
    const std::vector<ObservationRecord> obs{{0.0, 100.0}, {0.05, 97.0}, {0.1, 99.0}};
    OracleOptions o;
    o.n_paths = 5000;
    o.dt_fine = 0.005;
    const auto now = survival_oracle(p, d, obs, 0.1, 0.1, o);
    CHECK(now.value == 1.0);
    CHECK(now.std_error == 0.0);

    ModelParams far = p;
    far.c_bar = p.U0 - 60.0;
    far.c_under = far.c_bar - 1.0;
    const auto safe = survival_oracle(far, drifts_under(MeasureTag::P_STAR, far), obs, 0.1, 1.0, o);
    CHECK(safe.value == 1.0);
    CHECK(safe.std_error < 1e-3);

    const std::vector<ObservationRecord> crash{{0.0, 100.0}, {0.01, 100.0 * std::exp(-3.0)}};
    CHECK_THROWS_AS(survival_oracle(params(0.99), drifts_under(MeasureTag::P_STAR, params(0.99)), crash, 0.01, 1.0, o),
                    OracleStarvation);
}

TEST_CASE("binomial estimate never reports zero error") {
    const auto all = binomial_estimate(100, 100);
    CHECK(all.value == 1.0);
    CHECK(all.std_error > 0.0);
    const auto none = binomial_estimate(0, 100);
    CHECK(none.value == 0.0);
    CHECK(none.std_error > 0.0);
}

TEST_CASE("stock scenarios") {
    ModelParams p = params(0.5);
    const std::vector<double> times{0.0, 0.25, 0.5, 1.0};
    const auto a = simulate_stock_scenarios(p, times, 4, 1);
    const auto b = simulate_stock_scenarios(p, times, 4, 1);
    REQUIRE(a.size() == 4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t k = 0; k < times.size(); ++k) {
            CHECK(a[i][k].stock_price == b[i][k].stock_price);
            CHECK(a[i][k].time == times[k]);
        }
    p.sigma = 1e-9;
    const auto flat = simulate_stock_scenarios(p, times, 1, 1).front();
    for (const auto& o : flat) CHECK(o.stock_price == doctest::Approx(p.S0 * std::exp(p.r * o.time)).epsilon(1e-9));
}
