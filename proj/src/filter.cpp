#include "stucoco/filter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "stucoco/errors.hpp"
#include "stucoco/hitting.hpp"

namespace stucoco {

namespace {

constexpr double kCollapseThreshold = 1e-300;
// Beyond this exponent 1 - e^{-x} is 1 in double precision.
constexpr double kBridgeSaturation = 40.0;

double gaussian_pdf(double z, double sd) {
    return std::exp(-0.5 * (z / sd) * (z / sd)) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

// Mean of the N(0, sd^2) density over [z - h/2, z + h/2], evaluated on the
// side of the mode where the CDF difference does not cancel.
double gaussian_cell_average(double z, double sd, double h) {
    const double lo = (z - 0.5 * h) / sd;
    const double hi = (z + 0.5 * h) / sd;
    const double mass = z > 0.0 ? normal_cdf(-lo) - normal_cdf(-hi) : normal_cdf(hi) - normal_cdf(lo);
    return mass / h;
}

// Nodes c, ..., anchor, ..., top with anchor on the grid and uniform spacing
// above grid[1].
std::pair<std::vector<double>, double> build_grid(double c, double anchor, double top,
                                                  std::size_t points) {
    if (points < 3) throw DomainError("filter grid needs at least 3 points");
    top = std::max(top, anchor + 1e-12);
    const double nominal = (top - c) / static_cast<double>(points - 1);
    std::vector<double> grid;
    double h = nominal;
    if (anchor - c >= nominal) {
        const auto below = static_cast<std::size_t>(std::ceil((anchor - c) / nominal - 1e-9));
        h = (anchor - c) / static_cast<double>(below);
        const auto total = static_cast<std::size_t>(std::ceil((top - c) / h)) + 1;
        grid.resize(std::max(total, below + 2));
        for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = c + static_cast<double>(i) * h;
        grid[below] = anchor;
    } else {
        const auto above = static_cast<std::size_t>(std::ceil((top - anchor) / h));
        grid.resize(above + 2);
        grid[0] = c;
        for (std::size_t i = 1; i < grid.size(); ++i) grid[i] = anchor + static_cast<double>(i - 1) * h;
    }
    return {std::move(grid), h};
}

PosteriorDensity make_spike(double u, double t, double c, double top, std::size_t points,
                            MeasureTag measure, double stock) {
    PosteriorDensity post;
    auto [grid, h] = build_grid(c, u, top, points);
    post.grid = std::move(grid);
    post.step = h;
    post.weights.assign(post.grid.size(), 0.0);
    const auto it = std::find(post.grid.begin(), post.grid.end(), u);
    const auto k = static_cast<std::size_t>(std::distance(post.grid.begin(), it));
    post.weights[k] = 1.0 / post.quadrature_weights()[k];
    post.anchor_time = t;
    post.survival_mass = 1.0;
    post.measure = measure;
    post.stock = stock;
    return post;
}

void grow(PosteriorDensity& post, std::size_t extra) {
    const double g1 = post.grid[1];
    const std::size_t n = post.grid.size();
    post.grid.resize(n + extra);
    post.weights.resize(n + extra, 0.0);
    for (std::size_t i = n; i < post.grid.size(); ++i)
        post.grid[i] = g1 + static_cast<double>(i - 1) * post.step;
}

struct StepGeometry {
    double shift;  // kernel mean, rho dlogS + (mu_U - rho mu_S) dt
    double sd;     // kernel standard deviation
};

// Unnormalised new density on the prior's grid.
std::vector<double> apply_kernel(const PosteriorDensity& prior, const StepGeometry& geo,
                                 double c, double sigma, double dt, const GridOptions& opts) {
    const std::size_t n = prior.grid.size();
    const double h = prior.step;
    const auto w = prior.quadrature_weights();

    std::vector<double> src(n, 0.0);
    std::size_t ilo = n, ihi = 0;
    for (std::size_t i = 1; i < n; ++i) {
        src[i] = w[i] * prior.weights[i];
        if (src[i] != 0.0) {
            ilo = std::min(ilo, i);
            ihi = i;
        }
    }
    std::vector<double> out(n, 0.0);
    if (ilo > ihi) return out;

    // Translation-invariant kernel indexed by d = j - i, offset by n.
    const auto span = static_cast<long>(n) - 1;
    long dmin = -span, dmax = span;
    if (!opts.dense) {
        const double reach = opts.band_sigmas * geo.sd + h;
        dmin = std::max(dmin, static_cast<long>(std::floor((geo.shift - reach) / h)));
        dmax = std::min(dmax, static_cast<long>(std::ceil((geo.shift + reach) / h)));
    }
    const bool cell_average = geo.sd < h;
    std::vector<double> kernel(static_cast<std::size_t>(dmax - dmin + 1));
    for (long d = dmin; d <= dmax; ++d) {
        const double z = static_cast<double>(d) * h - geo.shift;
        kernel[static_cast<std::size_t>(d - dmin)] =
            cell_average ? gaussian_cell_average(z, geo.sd, h) : gaussian_pdf(z, geo.sd);
    }

    const double q = 2.0 / (sigma * sigma * dt);
    for (std::size_t j = 1; j < n; ++j) {
        const auto lj = static_cast<long>(j);
        const long lo = std::max(static_cast<long>(ilo), lj - dmax);
        const long hi = std::min(static_cast<long>(ihi), lj - dmin);
        if (lo > hi) continue;
        const double aj = prior.grid[j] - c;
        double acc = 0.0;
        for (long i = lo; i <= hi; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            const double x = q * aj * (prior.grid[ui] - c);
            const double bridge = x < kBridgeSaturation ? -std::expm1(-x) : 1.0;
            acc += src[ui] * bridge * kernel[static_cast<std::size_t>(lj - i - dmin)];
        }
        out[j] = acc;
    }
    return out;
}

}  // namespace

std::vector<double> PosteriorDensity::quadrature_weights() const {
    const std::size_t n = grid.size();
    std::vector<double> w(n, step);
    if (n < 3) throw DomainError("posterior grid needs at least 3 points");
    const double first = grid[1] - grid[0];
    w[0] = 0.5 * first;
    w[1] = 0.5 * (first + step);
    w[n - 1] = 0.5 * step;
    return w;
}

double PosteriorDensity::integral() const {
    const auto w = quadrature_weights();
    double s = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) s += w[i] * weights[i];
    return s;
}

double PosteriorDensity::mean() const {
    const auto w = quadrature_weights();
    double s = 0.0, m = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        s += w[i] * weights[i];
        m += w[i] * weights[i] * grid[i];
    }
    return m / s;
}

double PosteriorDensity::variance() const {
    const auto w = quadrature_weights();
    const double mu = mean();
    double s = 0.0, v = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        s += w[i] * weights[i];
        v += w[i] * weights[i] * (grid[i] - mu) * (grid[i] - mu);
    }
    return v / s;
}

double PosteriorDensity::peak() const { return *std::max_element(weights.begin(), weights.end()); }

double PosteriorDensity::density_at(double u) const {
    if (u < grid.front() || u > grid.back()) return 0.0;
    const auto it = std::upper_bound(grid.begin(), grid.end(), u);
    if (it == grid.end()) return weights.back();
    const auto j = static_cast<std::size_t>(std::distance(grid.begin(), it));
    const double lam = (u - grid[j - 1]) / (grid[j] - grid[j - 1]);
    return (1.0 - lam) * weights[j - 1] + lam * weights[j];
}

bool PosteriorDensity::is_spike() const {
    return std::count_if(weights.begin(), weights.end(), [](double v) { return v != 0.0; }) == 1;
}

double kernel_h(double z, const TransitionKernelInputs& k, const ModelParams& p) {
    if (std::abs(p.rho) >= 1.0) throw DomainError("kernel_h: degenerate kernel at |rho| = 1");
    if (!(k.dt > 0.0)) throw DomainError("kernel_h: dt must be > 0");
    const double mean = (k.drifts.mu_U - p.rho * k.drifts.mu_S) * k.dt;
    const double sd = p.sigma * std::sqrt((1.0 - p.rho * p.rho) * k.dt);
    return gaussian_pdf(z - mean, sd);
}

PosteriorDensity reset_at_update(double u_observed, double t, const ModelParams& p, double period_end,
                                 MeasureTag measure, double stock, const GridOptions& opts) {
    if (u_observed <= p.c_bar)
        throw ConversionTriggered(
            fmt::format("reset_at_update: U = {} at or below the conversion barrier {}", u_observed, p.c_bar));
    if (period_end < t) throw DomainError("reset_at_update: period end before the update time");
    const double length = std::max(period_end - t, 1e-6);
    const double top = u_observed + opts.width_sigmas * p.sigma * std::sqrt(length);
    return make_spike(u_observed, t, p.c_bar, top, opts.points, measure, stock);
}

PosteriorDensity posterior_step(const PosteriorDensity& prior, const ObservationRecord& prev,
                                const ObservationRecord& next, const ModelParams& p,
                                const MeasureDrifts& drifts, const GridOptions& opts) {
    if (!same_dynamics(prior.measure, drifts.measure_tag))
        throw ContractError(fmt::format("posterior_step: prior built under {} but drifts are {}",
                                        to_string(prior.measure), to_string(drifts.measure_tag)));
    if (std::abs(prev.time - prior.anchor_time) > 1e-12)
        throw ContractError("posterior_step: previous observation is not at the posterior's anchor time");
    const double dt = next.time - prev.time;
    if (!(dt > 0.0)) throw DomainError("posterior_step: observation times must increase");
    if (!(prev.stock_price > 0.0) || !(next.stock_price > 0.0))
        throw DomainError("posterior_step: stock prices must be > 0");

    const double d_log_s = std::log(next.stock_price / prev.stock_price);
    const double shift = p.rho * d_log_s + (drifts.mu_U - p.rho * drifts.mu_S) * dt;

    if (std::abs(p.rho) >= 1.0) {
        // Point-mass limit: the spike translates deterministically and only
        // the bridge factor of the stock-driven path removes mass.
        if (!prior.is_spike()) throw ContractError("posterior_step: rho = +-1 requires a spike prior");
        const double from = prior.mean();
        const double to = from + shift;
        const double keep = bridge_no_hit(from, to, p.c_bar, p.sigma, dt);
        if (keep * prior.survival_mass <= kCollapseThreshold)
            throw PosteriorCollapse(fmt::format("posterior collapse at t = {}", next.time));
        const double top = std::max(prior.grid.back(), to + 4.0 * prior.step);
        auto post = make_spike(to, next.time, p.c_bar, top, prior.grid.size(), prior.measure, next.stock_price);
        post.survival_mass = prior.survival_mass * keep;
        return post;
    }

    const StepGeometry geo{shift, p.sigma * std::sqrt((1.0 - p.rho * p.rho) * dt)};
    PosteriorDensity work = prior;
    // Make room above the shifted support before convolving; the edge-mass
    // test below only catches mass that still lands on the grid.
    if (geo.shift > 0.0) {
        const double floor = 1e-16 * work.peak();
        std::size_t top = 0;
        for (std::size_t i = 0; i < work.weights.size(); ++i)
            if (work.weights[i] > floor) top = i;
        const double needed = work.grid[top] + geo.shift + opts.band_sigmas * geo.sd + 4.0 * work.step;
        if (needed > work.grid.back())
            grow(work, static_cast<std::size_t>(std::ceil((needed - work.grid.back()) / work.step)));
    }
    for (;;) {
        auto raw = apply_kernel(work, geo, p.c_bar, p.sigma, dt, opts);
        const auto w = work.quadrature_weights();
        double z = 0.0;
        for (std::size_t j = 0; j < raw.size(); ++j) z += w[j] * raw[j];
        if (!(z > kCollapseThreshold))
            throw PosteriorCollapse(fmt::format(
                "posterior collapse at t = {}: observations incompatible with survival", next.time));
        const std::size_t n = raw.size();
        double edge = 0.0;
        for (std::size_t j = n - 4; j < n; ++j) edge += w[j] * raw[j];
        if (edge / z > opts.edge_mass) {
            grow(work, std::max<std::size_t>(n / 4, 16));
            continue;
        }
        PosteriorDensity post;
        post.grid = std::move(work.grid);
        post.step = work.step;
        post.weights = std::move(raw);
        for (double& v : post.weights) v /= z;
        post.weights[0] = 0.0;
        post.anchor_time = next.time;
        post.survival_mass = prior.survival_mass * std::min(z, 1.0);
        post.stock = next.stock_price;
        post.measure = prior.measure;
        return post;
    }
}

FilterSession::FilterSession(const ModelParams& p, MeasureTag measure, GridOptions opts)
    : params_(p), drifts_(drifts_under(measure, p)), opts_(opts) {
    validate(params_, RhoMode::AllowDegenerate);
}

void FilterSession::reset(double u_observed, const ObservationRecord& at_update, double period_end) {
    post_ = reset_at_update(u_observed, at_update.time, params_, period_end, drifts_.measure_tag,
                            at_update.stock_price, opts_);
    last_ = at_update;
    started_ = true;
}

void FilterSession::observe(const ObservationRecord& next) {
    if (!started_) throw ContractError("FilterSession: observe before reset");
    post_ = posterior_step(post_, last_, next, params_, drifts_, opts_);
    last_ = next;
}

void write_posterior_csv(std::ostream& out, const PosteriorDensity& post) {
    fmt::print(out, "# anchor_time={:.9f},survival_mass={:.12f}\n", post.anchor_time, post.survival_mass);
    fmt::print(out, "u,density\n");
    for (std::size_t i = 0; i < post.grid.size(); ++i)
        fmt::print(out, "{:.12f},{:.12e}\n", post.grid[i], post.weights[i]);
}

}  // namespace stucoco
