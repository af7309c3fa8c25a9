#include "stucoco/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "stucoco/errors.hpp"
#include "stucoco/parallel.hpp"

namespace stucoco {

namespace {

enum Stream : std::uint64_t {
    kBundleStream = 0,
    kFirstPassageStream = 1,
    kConditionalStream = 2,
    kSurvivalStream = 3,
    kPriceStream = 4,
    kScenarioStream = 5,
};

constexpr double kMinAcceptance = 1e-5;
// e^{-40} is below the resolution of a uniform draw.
constexpr double kNegligibleHit = 40.0;

// Bridge-corrected crossing test for one step from u to u_next.
bool crosses(double u, double u_next, double c, double q, bool bridge, ChunkRng& rng) {
    if (u_next <= c) return true;
    if (!bridge) return false;
    const double e = q * (u - c) * (u_next - c);
    return e < kNegligibleHit && rng.unif() < std::exp(-e);
}

std::size_t substeps(double dt, double dt_fine) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(dt / dt_fine - 1e-9)));
}

struct ConditionalPlan {
    std::vector<double> times;
    std::vector<double> log_s;
    std::vector<std::size_t> sub;
    double drift = 0.0;  // mu_U - rho mu_S
    double rho = 0.0;
    double sigma = 0.0;
    double z_scale = 0.0;  // sigma sqrt(1 - rho^2)
    double c = 0.0;
    bool bridge = true;

    ConditionalPlan(const ModelParams& p, const MeasureDrifts& d, std::span<const ObservationRecord> obs,
                    double dt_fine, bool bridge_correction) {
        validate_series(obs);
        if (obs.empty()) throw DomainError("conditional oracle: empty observation series");
        if (!(dt_fine > 0.0)) throw DomainError("conditional oracle: dt_fine must be > 0");
        for (const auto& o : obs) {
            times.push_back(o.time);
            log_s.push_back(std::log(o.stock_price));
        }
        for (std::size_t k = 0; k + 1 < times.size(); ++k) sub.push_back(substeps(times[k + 1] - times[k], dt_fine));
        drift = d.mu_U - p.rho * d.mu_S;
        rho = p.rho;
        sigma = p.sigma;
        z_scale = p.sigma * std::sqrt(std::max(0.0, 1.0 - p.rho * p.rho));
        c = p.c_bar;
        bridge = bridge_correction;
    }

    std::size_t index_of(double t) const {
        const auto it = std::lower_bound(times.begin(), times.end(), t - 1e-9);
        if (it == times.end() || std::abs(*it - t) > 1e-9)
            throw DomainError(fmt::format("conditional oracle: t = {} is not an observation time", t));
        return static_cast<std::size_t>(std::distance(times.begin(), it));
    }

    // Advance U across observation interval k with the stock drawn as a
    // Brownian bridge between its observed endpoints. Returns false once the
    // path has crossed (and stops early when stop_on_hit).
    bool advance(std::size_t k, double& u, ChunkRng& rng, bool stop_on_hit, bool& hit) const {
        const std::size_t n = sub[k];
        const double dt = (times[k + 1] - times[k]) / static_cast<double>(n);
        const double q = 2.0 / (sigma * sigma * dt);
        const double sq = std::sqrt(dt);
        const double target = log_s[k + 1];
        double x = log_s[k];
        for (std::size_t s = 0; s < n; ++s) {
            double x_next = target;
            if (s + 1 < n) {
                const double rem = static_cast<double>(n - s) * dt;
                const double mean = x + (target - x) * dt / rem;
                const double sd = sigma * std::sqrt(dt * (rem - dt) / rem);
                x_next = mean + sd * rng.gauss();
            }
            const double u_next = u + drift * dt + rho * (x_next - x) + z_scale * sq * rng.gauss();
            if (!hit && crosses(u, u_next, c, q, bridge, rng)) {
                hit = true;
                if (stop_on_hit) return false;
            }
            x = x_next;
            u = u_next;
        }
        return !hit;
    }
};

// U continued from u over `length` with no stock information.
bool survives_unconditionally(double u, double c, double mu, double sigma, double length, double step,
                              bool bridge, ChunkRng& rng) {
    const std::size_t n = substeps(length, step);
    const double dt = length / static_cast<double>(n);
    const double q = 2.0 / (sigma * sigma * dt);
    const double sd = sigma * std::sqrt(dt);
    for (std::size_t s = 0; s < n; ++s) {
        const double next = u + mu * dt + sd * rng.gauss();
        if (crosses(u, next, c, q, bridge, rng)) return false;
        u = next;
    }
    return true;
}

struct Moments {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t n = 0;
};

Estimate from_moments(std::span<const Moments> chunks) {
    Moments m;
    for (const auto& c : chunks) {
        m.sum += c.sum;
        m.sum_sq += c.sum_sq;
        m.n += c.n;
    }
    if (m.n == 0) return {};
    const double n = static_cast<double>(m.n);
    const double mean = m.sum / n;
    const double var = m.n > 1 ? std::max(0.0, (m.sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
    return {mean, std::sqrt(var / n), m.n};
}

}  // namespace

Estimate binomial_estimate(std::size_t successes, std::size_t trials) {
    if (trials == 0) return {};
    const double n = static_cast<double>(trials);
    const double adj = (static_cast<double>(successes) + 2.0) / (n + 4.0);
    return {static_cast<double>(successes) / n, std::sqrt(adj * (1.0 - adj) / (n + 4.0)), trials};
}

PathBundle simulate_bundle(const ModelParams& p, const MeasureDrifts& drifts, double horizon,
                           std::size_t n_paths, double dt_fine, std::uint64_t seed, const BundleOptions& opts) {
    validate(p, opts.rho_mode);
    if (n_paths == 0) throw DomainError("simulate_bundle: n_paths must be >= 1");
    if (!(horizon > 0.0) || !(dt_fine > 0.0) || dt_fine > horizon)
        throw DomainError("simulate_bundle: need 0 < dt_fine <= horizon");

    PathBundle b;
    b.n_paths = n_paths;
    b.n_steps = substeps(horizon, dt_fine);
    b.step = horizon / static_cast<double>(b.n_steps);
    b.seed = seed;
    b.crossed.assign(n_paths, 0);
    b.terminal_log_s.assign(n_paths, 0.0);
    b.terminal_u.assign(n_paths, 0.0);
    const std::size_t row = b.n_steps + 1;
    if (opts.store_paths) {
        b.log_s.assign(n_paths * row, 0.0);
        b.u.assign(n_paths * row, 0.0);
    }

    const double dt = b.step;
    const double sq = std::sqrt(dt);
    const double q = 2.0 / (p.sigma * p.sigma * dt);
    const double rho_bar = std::sqrt(std::max(0.0, 1.0 - p.rho * p.rho));
    for_each_chunk(n_paths, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        ChunkRng rng(seed, kBundleStream, chunk);
        for (std::size_t i = begin; i < end; ++i) {
            double x = std::log(p.S0);
            double u = p.U0;
            bool hit = false;
            if (opts.store_paths) {
                b.log_s[i * row] = x;
                b.u[i * row] = u;
            }
            for (std::size_t k = 1; k <= b.n_steps; ++k) {
                const double dw = sq * rng.gauss();
                const double dz = sq * rng.gauss();
                const double u_next = u + drifts.mu_U * dt + p.sigma * (p.rho * dw + rho_bar * dz);
                x += drifts.mu_S * dt + p.sigma * dw;
                if (!hit) hit = crosses(u, u_next, p.c_bar, q, opts.bridge_correction, rng);
                u = u_next;
                if (opts.store_paths) {
                    b.log_s[i * row + k] = x;
                    b.u[i * row + k] = u;
                }
            }
            b.crossed[i] = hit ? 1 : 0;
            b.terminal_log_s[i] = x;
            b.terminal_u[i] = u;
        }
    });
    return b;
}

Estimate first_passage_oracle(double u, double c, double mu, double sigma, double horizon,
                              const OracleOptions& opts) {
    if (!(sigma > 0.0) || !(horizon > 0.0) || !(opts.dt_fine > 0.0))
        throw DomainError("first_passage_oracle: sigma, horizon and dt_fine must be > 0");
    if (opts.n_paths == 0) throw DomainError("first_passage_oracle: n_paths must be >= 1");
    if (u <= c) return {1.0, 0.0, opts.n_paths};
    const std::size_t chunks = (opts.n_paths + kPathsPerChunk - 1) / kPathsPerChunk;
    std::vector<std::size_t> hits(chunks, 0);
    for_each_chunk(opts.n_paths, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        ChunkRng rng(opts.seed, kFirstPassageStream, chunk);
        std::size_t h = 0;
        for (std::size_t i = begin; i < end; ++i)
            if (!survives_unconditionally(u, c, mu, sigma, horizon, opts.dt_fine, opts.bridge_correction, rng)) ++h;
        hits[chunk] = h;
    });
    return binomial_estimate(std::accumulate(hits.begin(), hits.end(), std::size_t{0}), opts.n_paths);
}

std::vector<double> conditional_sample(const ModelParams& p, const MeasureDrifts& drifts,
                                       std::span<const ObservationRecord> obs, double t,
                                       const OracleOptions& opts, std::size_t* n_simulated) {
    validate(p);
    if (opts.n_paths == 0) throw DomainError("conditional oracle: n_paths must be >= 1");
    const ConditionalPlan plan(p, drifts, obs, opts.dt_fine, opts.bridge_correction);
    const std::size_t k_end = plan.index_of(t);

    std::vector<double> accepted;
    std::size_t simulated = 0;
    std::size_t chunk_offset = 0;
    do {
        const std::size_t chunks = (opts.n_paths + kPathsPerChunk - 1) / kPathsPerChunk;
        std::vector<std::vector<double>> per_chunk(chunks);
        for_each_chunk(opts.n_paths, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
            ChunkRng rng(opts.seed, kConditionalStream, chunk_offset + chunk);
            auto& out = per_chunk[chunk];
            for (std::size_t i = begin; i < end; ++i) {
                double u = p.U0;
                bool hit = false;
                for (std::size_t k = 0; k < k_end && !hit; ++k) plan.advance(k, u, rng, true, hit);
                if (!hit) out.push_back(u);
            }
        });
        for (auto& c : per_chunk) accepted.insert(accepted.end(), c.begin(), c.end());
        simulated += opts.n_paths;
        chunk_offset += chunks;
        if (static_cast<double>(accepted.size()) < kMinAcceptance * static_cast<double>(simulated))
            throw OracleStarvation(fmt::format("conditional oracle: {} of {} paths accepted", accepted.size(), simulated));
    } while (accepted.size() < opts.min_accepted);
    if (n_simulated) *n_simulated = simulated;
    return accepted;
}

ConditionalHistogram conditional_posterior_oracle(const ModelParams& p, const MeasureDrifts& drifts,
                                                  std::span<const ObservationRecord> obs, double t,
                                                  const OracleOptions& opts, const HistogramSpec& spec) {
    ConditionalHistogram h;
    const auto sample = conditional_sample(p, drifts, obs, t, opts, &h.n_paths);
    h.n_accepted = sample.size();
    double lo = spec.lo, hi = spec.hi;
    std::size_t bins = spec.bins;
    if (bins == 0) {
        bins = 100;
        lo = p.c_bar;
        hi = *std::max_element(sample.begin(), sample.end());
        hi += 1e-9 * std::max(1.0, std::abs(hi));
    }
    if (!(hi > lo)) throw DomainError("conditional_posterior_oracle: empty histogram range");
    h.edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    h.counts.assign(bins, 0);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (double u : sample) {
        if (u < lo || u >= hi) continue;
        const auto bin = std::min(bins - 1, static_cast<std::size_t>((u - lo) / width));
        ++h.counts[bin];
    }
    const double n = static_cast<double>(h.n_accepted);
    for (std::size_t i = 0; i < bins; ++i) {
        const double q = static_cast<double>(h.counts[i]) / n;
        h.half_widths.push_back(std::sqrt(q * (1.0 - q) / n) / h.width(i));
    }
    return h;
}

std::vector<Estimate> survival_oracle_series(const ModelParams& p, const MeasureDrifts& drifts,
                                             std::span<const ObservationRecord> obs,
                                             std::span<const double> checkpoints, double horizon,
                                             const OracleOptions& opts) {
    validate(p);
    if (opts.n_paths == 0) throw DomainError("survival oracle: n_paths must be >= 1");
    const ConditionalPlan plan(p, drifts, obs, opts.dt_fine, opts.bridge_correction);
    std::vector<std::size_t> idx;
    for (double t : checkpoints) {
        if (t > horizon + 1e-12) throw DomainError("survival oracle: checkpoint after the horizon");
        idx.push_back(plan.index_of(t));
    }
    if (!std::is_sorted(idx.begin(), idx.end())) throw DomainError("survival oracle: checkpoints must be sorted");
    const double step = opts.continuation_step > 0.0 ? opts.continuation_step : opts.dt_fine;
    const std::size_t C = idx.size();
    const std::size_t chunks = (opts.n_paths + kPathsPerChunk - 1) / kPathsPerChunk;
    std::vector<std::size_t> alive(chunks * C, 0), survived(chunks * C, 0);

    for_each_chunk(opts.n_paths, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        ChunkRng rng(opts.seed, kSurvivalStream, chunk);
        for (std::size_t i = begin; i < end; ++i) {
            double u = p.U0;
            bool hit = false;
            std::size_t k = 0;
            for (std::size_t c = 0; c < C && !hit; ++c) {
                for (; k < idx[c] && !hit; ++k) plan.advance(k, u, rng, true, hit);
                if (hit) break;
                ++alive[chunk * C + c];
                const double length = horizon - plan.times[idx[c]];
                if (length <= 0.0 ||
                    survives_unconditionally(u, p.c_bar, drifts.mu_U, p.sigma, length, step, opts.bridge_correction, rng))
                    ++survived[chunk * C + c];
            }
        }
    });

    std::vector<Estimate> out;
    for (std::size_t c = 0; c < C; ++c) {
        std::size_t a = 0, s = 0;
        for (std::size_t ch = 0; ch < chunks; ++ch) {
            a += alive[ch * C + c];
            s += survived[ch * C + c];
        }
        if (a == 0 || static_cast<double>(a) < kMinAcceptance * static_cast<double>(opts.n_paths))
            throw OracleStarvation(fmt::format("survival oracle: {} of {} paths alive at t = {}", a, opts.n_paths,
                                               plan.times[idx[c]]));
        Estimate e = binomial_estimate(s, a);
        if (horizon - plan.times[idx[c]] <= 0.0) e.std_error = 0.0;
        out.push_back(e);
    }
    return out;
}

Estimate survival_oracle(const ModelParams& p, const MeasureDrifts& drifts, std::span<const ObservationRecord> obs,
                         double t, double horizon, const OracleOptions& opts) {
    const double cp[] = {t};
    return survival_oracle_series(p, drifts, obs, cp, horizon, opts).front();
}

Estimate price_oracle(const ModelParams& p, std::span<const ObservationRecord> obs, double t,
                      const OracleOptions& opts) {
    validate(p);
    if (t > p.T) throw DomainError("price_oracle: valuation after maturity");
    const MeasureDrifts d = drifts_under(MeasureTag::P_STAR, p);
    const ConditionalPlan plan(p, d, obs, opts.dt_fine, opts.bridge_correction);
    const std::size_t k_end = plan.index_of(t);
    const double step = opts.continuation_step > 0.0 ? opts.continuation_step : opts.dt_fine;
    const double tau = p.T - t;
    const std::size_t n_cont = substeps(std::max(tau, step), step);
    const double dt = tau / static_cast<double>(n_cont);
    const double sq = std::sqrt(dt);
    const double q = 2.0 / (p.sigma * p.sigma * dt);
    const double rho_bar = std::sqrt(1.0 - p.rho * p.rho);
    const double disc = std::exp(-p.r * tau);
    const double s_t = obs[k_end].stock_price;
    const double equity_scale = p.Cr * s_t * std::exp(-p.kappa * tau);

    const std::size_t chunks = (opts.n_paths + kPathsPerChunk - 1) / kPathsPerChunk;
    std::vector<Moments> moments(chunks);
    for_each_chunk(opts.n_paths, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        ChunkRng rng(opts.seed, kPriceStream, chunk);
        Moments& m = moments[chunk];
        for (std::size_t i = begin; i < end; ++i) {
            double u = p.U0;
            bool hit = false;
            for (std::size_t k = 0; k < k_end && !hit; ++k) plan.advance(k, u, rng, true, hit);
            if (hit) continue;
            double x = 0.0;  // log(S / S_t)
            bool converted = false;
            double elapsed = 0.0;
            if (tau > 0.0) {
                for (std::size_t s = 0; s < n_cont && !converted; ++s) {
                    const double dw = sq * rng.gauss();
                    const double u_next = u + d.mu_U * dt + p.sigma * (p.rho * dw + rho_bar * sq * rng.gauss());
                    x += d.mu_S * dt + p.sigma * dw;
                    elapsed += dt;
                    converted = crosses(u, u_next, p.c_bar, q, opts.bridge_correction, rng);
                    u = u_next;
                }
                if (converted && tau - elapsed > 0.0) {
                    const double rest = tau - elapsed;
                    x += d.mu_S * rest + p.sigma * std::sqrt(rest) * rng.gauss();
                }
            }
            const double payoff = converted ? equity_scale * disc * std::exp(x) : disc * p.N;
            m.sum += payoff;
            m.sum_sq += payoff * payoff;
            ++m.n;
        }
    });
    const Estimate e = from_moments(moments);
    if (e.samples == 0 || static_cast<double>(e.samples) < kMinAcceptance * static_cast<double>(opts.n_paths))
        throw OracleStarvation("price_oracle: too few paths alive at the valuation time");
    return e;
}

std::vector<std::vector<ObservationRecord>> simulate_stock_scenarios(const ModelParams& p,
                                                                     std::span<const double> times,
                                                                     std::size_t count, std::uint64_t seed) {
    if (times.empty() || times.front() != 0.0) throw DomainError("scenarios: observation times must start at 0");
    const MeasureDrifts d = drifts_under(MeasureTag::P_STAR, p);
    std::vector<std::vector<ObservationRecord>> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        ChunkRng rng(seed, kScenarioStream, i);
        double x = std::log(p.S0);
        out[i].push_back({0.0, p.S0});
        for (std::size_t k = 1; k < times.size(); ++k) {
            const double dt = times[k] - times[k - 1];
            if (!(dt > 0.0)) throw DomainError("scenarios: observation times must increase");
            x += d.mu_S * dt + p.sigma * std::sqrt(dt) * rng.gauss();
            out[i].push_back({times[k], std::exp(x)});
        }
    }
    return out;
}

UTrajectory simulate_conditional_u(const ModelParams& p, const MeasureDrifts& drifts,
                                   std::span<const ObservationRecord> obs, double dt_fine, std::uint64_t seed,
                                   std::uint64_t stream) {
    validate(p, RhoMode::AllowDegenerate);
    const ConditionalPlan plan(p, drifts, obs, dt_fine, true);
    ChunkRng rng(seed, 1000 + stream, 0);
    UTrajectory traj;
    double u = p.U0;
    bool hit = false;
    traj.u.push_back(u);
    traj.crossed_by.push_back(0);
    for (std::size_t k = 0; k + 1 < obs.size(); ++k) {
        plan.advance(k, u, rng, false, hit);
        traj.u.push_back(u);
        traj.crossed_by.push_back(hit ? 1 : 0);
    }
    return traj;
}

}  // namespace stucoco
