#ifndef CORRMON_SIMULATOR_HPP
#define CORRMON_SIMULATOR_HPP

// Slotted Monte Carlo engine. Each slot runs, in order: source transition,
// sampling decisions, channel outcome, receiver update, error/cost accounting.
// Uniform draws per slot are consumed in the fixed order
// (source, a1, a2, s1, s2) whether or not a draw is needed.

#include "corrmon/model.hpp"
#include "corrmon/parallel.hpp"
#include "corrmon/rng.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace corrmon {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct SimConfig {
    std::uint64_t horizon{1'000'000}; ///< total slots per replication, burn-in included
    std::uint64_t burn_in{10'000};
    std::uint32_t replications{16};
    std::uint64_t seed{1};
    double delta{1.0}; ///< cost per sample

    void validate() const {
        if (horizon <= burn_in)
            throw ConfigError("horizon (" + std::to_string(horizon) +
                              ") must exceed burn_in (" + std::to_string(burn_in) + ")");
        if (replications < 1) throw ConfigError("replications must be at least 1");
        if (!(delta >= 0.0) || !std::isfinite(delta))
            throw ConfigError("delta must be finite and non-negative");
    }
};

struct MetricsReport {
    double pe_mean{0.0};
    double pe_stderr{0.0};
    double cost_mean{0.0};
    double cost_stderr{0.0};
    std::uint64_t slots_used{0}; ///< accumulated slots per replication
    std::uint32_t replications{0};
    std::uint64_t seed{0};

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

using SlotDraws = std::array<double, CounterRng::kDrawsPerSlot>;

/// Precomputed, validated parameters for repeated stepping.
class SlotEngine {
public:
    SlotEngine(const PolicySpec& pol, const SourceParams& src, const ChannelParams& ch,
               double delta = 1.0)
        : policy_(pol), channel_(ch), delta_(delta) {
        pol.validate();
        ch.validate();
        const auto k = source_kernel(src);
        for (std::size_t i = 0; i < 3; ++i) {
            cdf_[i][0] = k[i][0];
            cdf_[i][1] = k[i][0] + k[i][1];
        }
    }

    /// Advances one slot from `state` (whose source component is x_prev).
    std::pair<MicroState, SlotOutcome> step(const MicroState& state, const SlotDraws& u) const {
        const SourceState x_prev = state.src;
        const auto& c = cdf_[index(x_prev)];
        const SourceState x_now =
            u[0] < c[0] ? SourceState::S0 : (u[0] < c[1] ? SourceState::S10 : SourceState::S11);

        SlotOutcome out;
        const auto a = sampling_probabilities(policy_, x_prev, x_now, state.recon);
        out.a1 = u[1] < a[0] ? 1 : 0;
        out.a2 = u[2] < a[1] ? 1 : 0;

        const auto s = success_probabilities(out.a1, out.a2, channel_);
        out.s1 = u[3] < s[0] ? 1 : 0;
        out.s2 = u[4] < s[1] ? 1 : 0;

        MicroState next{x_now, apply_reception(x_now, state.recon, out.s1, out.s2)};
        out.err = errors(next);
        out.cost = delta_ * static_cast<double>(out.a1 + out.a2);
        return {next, out};
    }

private:
    PolicySpec policy_;
    ChannelParams channel_;
    double delta_;
    std::array<std::array<double, 2>, 3> cdf_{};
};

inline std::pair<MicroState, SlotOutcome> step(const MicroState& state, const PolicySpec& pol,
                                               const SourceParams& src, const ChannelParams& ch,
                                               const SlotDraws& u, double delta = 1.0) {
    return SlotEngine(pol, src, ch, delta).step(state, u);
}

struct ReplicationTotals {
    double pe{0.0};
    double cost{0.0};
};

/// One replication starting synchronized in S0.
inline ReplicationTotals run_replication(const SlotEngine& engine, const SimConfig& sim,
                                         std::uint32_t replication) {
    const CounterRng rng(sim.seed, replication);
    MicroState state = kInitialState;
    std::uint64_t err_slots = 0;
    std::uint64_t samples = 0;
    SlotDraws u{};
    for (std::uint64_t t = 0; t < sim.horizon; ++t) {
        for (std::uint64_t k = 0; k < u.size(); ++k) u[k] = rng.uniform(t, k);
        const auto [next, out] = engine.step(state, u);
        state = next;
        if (t >= sim.burn_in) {
            err_slots += static_cast<std::uint64_t>(out.err.sys);
            samples += static_cast<std::uint64_t>(out.a1 + out.a2);
        }
    }
    const double n = static_cast<double>(sim.horizon - sim.burn_in);
    return {static_cast<double>(err_slots) / n, sim.delta * static_cast<double>(samples) / n};
}

inline MetricsReport run(const PolicySpec& pol, const SourceParams& src, const ChannelParams& ch,
                         const SimConfig& sim, unsigned workers = default_parallelism()) {
    sim.validate();
    const SlotEngine engine(pol, src, ch, sim.delta);

    std::vector<ReplicationTotals> reps(sim.replications);
    parallel_for(
        reps.size(),
        [&](std::size_t r) { reps[r] = run_replication(engine, sim, static_cast<std::uint32_t>(r)); },
        workers);

    // Merge in replication order so floating-point sums are schedule-independent.
    const double n = static_cast<double>(reps.size());
    double pe_sum = 0.0, cost_sum = 0.0;
    for (const auto& r : reps) {
        pe_sum += r.pe;
        cost_sum += r.cost;
    }
    MetricsReport m;
    m.pe_mean = pe_sum / n;
    m.cost_mean = cost_sum / n;
    if (reps.size() > 1) {
        double pe_ss = 0.0, cost_ss = 0.0;
        for (const auto& r : reps) {
            pe_ss += (r.pe - m.pe_mean) * (r.pe - m.pe_mean);
            cost_ss += (r.cost - m.cost_mean) * (r.cost - m.cost_mean);
        }
        m.pe_stderr = std::sqrt(pe_ss / (n - 1.0) / n);
        m.cost_stderr = std::sqrt(cost_ss / (n - 1.0) / n);
    }
    m.slots_used = sim.horizon - sim.burn_in;
    m.replications = sim.replications;
    m.seed = sim.seed;
    return m;
}

} // namespace corrmon

#endif // CORRMON_SIMULATOR_HPP
