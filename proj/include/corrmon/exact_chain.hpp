#ifndef CORRMON_EXACT_CHAIN_HPP
#define CORRMON_EXACT_CHAIN_HPP

// Exact one-step kernel on the 18 (source, reconstruction) micro-states,
// its stationary law, and the long-run error and sampling rate it implies.
// Kernel entries are assembled from the core-model operations only.

#include "corrmon/model.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace corrmon {

class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// More than one closed communicating class: the long-run averages depend on
/// where the chain starts.
class ReducibleChain : public std::runtime_error {
public:
    ReducibleChain(std::string what, std::vector<std::vector<std::size_t>> components)
        : std::runtime_error(std::move(what)), components_(std::move(components)) {}

    const std::vector<std::vector<std::size_t>>& components() const { return components_; }

private:
    std::vector<std::vector<std::size_t>> components_;
};

inline constexpr std::size_t kStates = MicroState::count;
using Kernel = Eigen::Matrix<double, kStates, kStates, Eigen::RowMajor>;
using StateVector = std::array<double, kStates>;

struct ChainModel {
    std::array<MicroState, kStates> states{};
    Kernel kernel = Kernel::Zero();
    /// Expected number of samples taken in the slot that leaves state i.
    StateVector samples_from{};
    PolicySpec policy;
    SourceParams source;
    ChannelParams channel;
};

inline ChainModel build_kernel(const PolicySpec& pol, const SourceParams& src,
                               const ChannelParams& ch) {
    pol.validate();
    ch.validate();
    const auto sk = source_kernel(src);

    ChainModel m;
    m.policy = pol;
    m.source = src;
    m.channel = ch;
    for (std::size_t i = 0; i < kStates; ++i) {
        const MicroState from = MicroState::from_index(i);
        m.states[i] = from;
        for (SourceState x_now : kSourceStates) {
            const double px = sk[index(from.src)][index(x_now)];
            if (px == 0.0) continue;
            const auto rates = sampling_probabilities(pol, from.src, x_now, from.recon);
            m.samples_from[i] += px * (rates[0] + rates[1]);
            const BitPairDist dec = decision_distribution(pol, from.src, x_now, from.recon);
            for (int a1 = 0; a1 < 2; ++a1) {
                for (int a2 = 0; a2 < 2; ++a2) {
                    const double pa = dec(a1, a2);
                    if (pa == 0.0) continue;
                    const BitPairDist chd = channel_distribution(a1, a2, ch);
                    for (int s1 = 0; s1 < 2; ++s1) {
                        for (int s2 = 0; s2 < 2; ++s2) {
                            const double ps = chd(s1, s2);
                            if (ps == 0.0) continue;
                            const MicroState to{x_now, apply_reception(x_now, from.recon, s1, s2)};
                            m.kernel(static_cast<Eigen::Index>(i),
                                     static_cast<Eigen::Index>(to.index())) += px * pa * ps;
                        }
                    }
                }
            }
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Graph structure
// ---------------------------------------------------------------------------

using Reach = std::array<std::array<bool, kStates>, kStates>;

/// Reflexive-transitive closure of the positive-entry graph.
inline Reach reachability(const Kernel& k) {
    Reach r{};
    for (std::size_t i = 0; i < kStates; ++i) {
        r[i][i] = true;
        for (std::size_t j = 0; j < kStates; ++j)
            if (k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0) r[i][j] = true;
    }
    for (std::size_t via = 0; via < kStates; ++via)
        for (std::size_t i = 0; i < kStates; ++i)
            if (r[i][via])
                for (std::size_t j = 0; j < kStates; ++j)
                    if (r[via][j]) r[i][j] = true;
    return r;
}

/// Closed communicating classes (recurrent classes), each sorted, ordered by
/// smallest member.
inline std::vector<std::vector<std::size_t>> closed_classes(const Kernel& k) {
    const Reach r = reachability(k);
    std::vector<std::vector<std::size_t>> out;
    std::array<bool, kStates> seen{};
    for (std::size_t i = 0; i < kStates; ++i) {
        if (seen[i]) continue;
        std::vector<std::size_t> cls;
        for (std::size_t j = 0; j < kStates; ++j)
            if (r[i][j] && r[j][i]) cls.push_back(j);
        for (std::size_t j : cls) seen[j] = true;
        bool closed = true;
        for (std::size_t j = 0; j < kStates && closed; ++j)
            if (r[i][j] && !r[j][i]) closed = false;
        if (closed) out.push_back(std::move(cls));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Paper-style aggregate labels
// ---------------------------------------------------------------------------

/// Aggregates over (X1, X2, E1, E2). While X1 = 0 only (0, e, e) exists; the
/// pattern (X1 = 1, E1 = 1, E2 = 0) has no label and falls into `residual`.
struct PaperProjection {
    static constexpr std::array<std::string_view, 8> labels{
        "0,0,0", "0,1,1", "1,0,0,0", "1,0,0,1", "1,0,1,1", "1,1,0,0", "1,1,0,1", "1,1,1,1"};

    std::array<double, 8> mass{};
    double residual{0.0};

    /// Label slot for a micro-state, or -1 for the residual bucket.
    static int slot(const MicroState& s) {
        const ErrorFlags e = errors(s);
        if (x1(s.src) == 0) return e.e1 ? 1 : 0;
        const int base = s.src == SourceState::S10 ? 2 : 5;
        if (e.e1 == 0 && e.e2 == 0) return base;
        if (e.e1 == 0 && e.e2 == 1) return base + 1;
        if (e.e1 == 1 && e.e2 == 1) return base + 2;
        return -1;
    }
};

struct StationaryOptions {
    double tol{1e-12};
    /// Solve on the component reachable from the initial state even when the
    /// full chain has several closed classes.
    bool allow_initial_component{false};
};

struct StationaryResult {
    StateVector pi{};
    double pe{0.0};
    double cost{0.0}; ///< expected samples per slot; multiply by delta for cost
    PaperProjection paper_projection;
    double residual_norm{0.0}; ///< max_j |(pi K - pi)_j|
    std::size_t closed_class_count{1};
    bool initial_condition_dependent{false};
};

inline PaperProjection project_to_paper_states(const StateVector& pi) {
    PaperProjection pr;
    for (std::size_t i = 0; i < kStates; ++i) {
        const int slot = PaperProjection::slot(MicroState::from_index(i));
        if (slot < 0)
            pr.residual += pi[i];
        else
            pr.mass[static_cast<std::size_t>(slot)] += pi[i];
    }
    return pr;
}

inline PaperProjection project_to_paper_states(const StationaryResult& r) {
    return project_to_paper_states(r.pi);
}

namespace detail {

inline std::string describe_components(const std::vector<std::vector<std::size_t>>& comps) {
    std::string s;
    for (std::size_t c = 0; c < comps.size(); ++c) {
        s += c ? " | {" : "{";
        for (std::size_t k = 0; k < comps[c].size(); ++k) {
            if (k) s += " ";
            s += MicroState::from_index(comps[c][k]).label();
        }
        s += "}";
    }
    return s;
}

inline void finish(const ChainModel& m, StationaryResult& r) {
    Eigen::Map<const Eigen::Matrix<double, 1, kStates>> row(r.pi.data());
    r.residual_norm = (row * m.kernel - row).cwiseAbs().maxCoeff();
    r.pe = 0.0;
    r.cost = 0.0;
    for (std::size_t i = 0; i < kStates; ++i) {
        r.pe += r.pi[i] * errors(m.states[i]).sys;
        r.cost += r.pi[i] * m.samples_from[i];
    }
    r.paper_projection = project_to_paper_states(r.pi);
}

} // namespace detail

/// Stationary law restricted to the states reachable from (S0, synchronized).
/// Dense solve of pi (K - I) = 0 with the last balance equation replaced by
/// the normalization.
inline StationaryResult stationary(const ChainModel& m, StationaryOptions opt = {}) {
    const auto classes = closed_classes(m.kernel);
    if (classes.size() > 1 && !opt.allow_initial_component)
        throw ReducibleChain("reducible chain: " + std::to_string(classes.size()) +
                                 " closed classes " + detail::describe_components(classes),
                             classes);

    const Reach reach = reachability(m.kernel);
    const std::size_t init = kInitialState.index();
    std::vector<std::size_t> live;
    for (std::size_t j = 0; j < kStates; ++j)
        if (reach[init][j]) live.push_back(j);

    std::size_t closed_in_live = 0;
    for (const auto& c : classes)
        if (reach[init][c.front()]) ++closed_in_live;
    if (closed_in_live != 1)
        throw ReducibleChain("initial state reaches " + std::to_string(closed_in_live) +
                                 " closed classes " + detail::describe_components(classes),
                             classes);

    const auto n = static_cast<Eigen::Index>(live.size());
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c)
            a(r, c) = m.kernel(static_cast<Eigen::Index>(live[static_cast<std::size_t>(c)]),
                               static_cast<Eigen::Index>(live[static_cast<std::size_t>(r)])) -
                      (r == c ? 1.0 : 0.0);
    a.row(n - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1.0;

    const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) throw NumericalFailure("singular stationary system");
    const Eigen::VectorXd x = lu.solve(b);

    StationaryResult r;
    r.closed_class_count = classes.size();
    r.initial_condition_dependent = classes.size() > 1;
    for (Eigen::Index k = 0; k < n; ++k) {
        double v = x(k);
        if (v < 0.0) {
            if (v < -1e-12) throw NumericalFailure("negative stationary mass " + std::to_string(v));
            v = 0.0;
        }
        r.pi[live[static_cast<std::size_t>(k)]] = v;
    }
    double total = 0.0;
    for (double v : r.pi) total += v;
    for (double& v : r.pi) v /= total;

    detail::finish(m, r);
    if (!(r.residual_norm <= opt.tol))
        throw NumericalFailure("stationary residual " + std::to_string(r.residual_norm) +
                               " exceeds tolerance " + std::to_string(opt.tol));
    return r;
}

/// Cross-check: lazy power iteration from the initial state.
inline StationaryResult stationary_power(const ChainModel& m, double tol = 1e-10,
                                         std::size_t max_iter = 5'000'000) {
    Eigen::Matrix<double, 1, kStates> pi = Eigen::Matrix<double, 1, kStates>::Zero();
    pi(static_cast<Eigen::Index>(kInitialState.index())) = 1.0;
    const Kernel lazy = 0.5 * (m.kernel + Kernel::Identity());
    std::size_t it = 0;
    for (; it < max_iter; ++it) {
        Eigen::Matrix<double, 1, kStates> next = pi * lazy;
        const double change = (next - pi).cwiseAbs().sum();
        pi = next;
        if (change < tol * 1e-3) break;
    }
    if (it == max_iter) throw NumericalFailure("power iteration did not converge");
    StationaryResult r;
    for (std::size_t i = 0; i < kStates; ++i) r.pi[i] = pi(static_cast<Eigen::Index>(i));
    detail::finish(m, r);
    return r;
}

/// Convenience: kernel + stationary solve.
inline StationaryResult solve(const PolicySpec& pol, const SourceParams& src,
                              const ChannelParams& ch, StationaryOptions opt = {}) {
    return stationary(build_kernel(pol, src, ch), opt);
}

/// Long-run error and sampling rate in the limit where every sampling
/// probability that is exactly 0 tends to 0 from above. At the boundary
/// itself the chain is reducible; the limit is the value an arbitrarily small
/// positive probability would give. Computed by Richardson extrapolation of
/// two interior solves, so it carries an O(eps^2) error (about 1e-8).
struct ErgodicLimit {
    double pe{0.0};
    double cost{0.0};
};

inline ErgodicLimit ergodic_limit(const PolicySpec& pol, const SourceParams& src,
                                  const ChannelParams& ch, double eps = 1e-4) {
    auto nudged = [&](double e) {
        if (!pol.has_probabilities()) return pol;
        auto pr = pol.probabilities();
        for (double& v : pr)
            if (v == 0.0) v = e;
        return pol.kind() == PolicyKind::RS ? PolicySpec::rs(pr[0], pr[1])
                                            : PolicySpec::ea(pr[0], pr[1]);
    };
    if (!pol.at_zero_boundary()) {
        const auto r = solve(pol, src, ch);
        return {r.pe, r.cost};
    }
    StationaryOptions loose;
    loose.tol = 1e-9;
    const auto coarse = solve(nudged(eps), src, ch, loose);
    const auto fine = solve(nudged(eps / 2), src, ch, loose);
    return {2 * fine.pe - coarse.pe, 2 * fine.cost - coarse.cost};
}

/// Marginal of pi over the source state.
inline std::array<double, 3> source_marginal(const StationaryResult& r) {
    std::array<double, 3> out{};
    for (std::size_t i = 0; i < kStates; ++i) out[index(MicroState::from_index(i).src)] += r.pi[i];
    return out;
}

} // namespace corrmon

#endif // CORRMON_EXACT_CHAIN_HPP
