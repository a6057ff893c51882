#ifndef CORRMON_OPTIMIZER_HPP
#define CORRMON_OPTIMIZER_HPP

// Cost-constrained minimisation of the long-run reconstruction error for the
// RS and EA policies, and budget feasibility of the parameter-free CA and SA
// policies.
//
// Two objective backends:
//   closed-form  the published expressions (paper-faithful reproduction)
//   chain        the exact 18-state chain (ground truth, default)

#include "corrmon/closed_form.hpp"
#include "corrmon/exact_chain.hpp"
#include "corrmon/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace corrmon {

enum class Backend { closed_form, chain };

inline std::string_view to_string(Backend b) {
    return b == Backend::closed_form ? "closed-form" : "exact-chain";
}

struct Budget {
    double delta{1.0};     ///< cost per sample
    double delta_max{0.8}; ///< allowed long-run cost per slot

    static Budget from_eta(double eta, double delta = 1.0) { return {delta, eta * delta}; }

    double eta() const { return delta_max / delta; }

    void validate() const {
        if (!(delta > 0.0) || !std::isfinite(delta))
            throw ParameterDomainError("delta must be positive");
        const double e = eta();
        if (!(e >= 0.0)) throw ParameterDomainError("eta must be non-negative, got " + std::to_string(e));
        if (e > 1.0) throw ParameterDomainError("eta = delta_max/delta must not exceed 1, got " + std::to_string(e));
    }
};

struct OptDiagnostics {
    std::size_t grid_points{0};          ///< objective evaluations on the coarse grid
    std::size_t feasible_grid_points{0};
    std::size_t refinement_iterations{0}; ///< accepted refinement moves or golden-section steps
    double final_step{0.0};
};

struct Basin {
    double x1{0.0};
    double x2{0.0};
    double pe{0.0};
};

struct OptResult {
    PolicyKind policy{PolicyKind::RS};
    std::string mode; ///< "RS", "RS-equal" or "EA"
    double prob1{0.0};
    double prob2{0.0};
    double pe{0.0};
    double cost_per_delta{0.0};
    bool feasible{false};
    Backend backend{Backend::chain};
    OptDiagnostics diagnostics;
    /// Zero budget: both probabilities pinned at 0, pe is the ergodic limit.
    bool boundary{false};
    /// Best local minima of the coarse grid, ascending pe (EA only).
    std::vector<Basin> basins;
};

inline constexpr double kFeasibilityTol = 1e-9;

// ---------------------------------------------------------------------------
// RS reduction helpers
// ---------------------------------------------------------------------------

/// Largest pa2 meeting the RS budget with equality for a given pa1 (may exceed 1).
inline double rs_max_pa2(const SourceParams& src, double eta, double pa1) {
    return (src.p + 2 * src.q) * (eta - pa1) / (2 * src.q);
}

/// Feasible pa1 interval after substituting the maximal pa2 with 0 <= pa2 <= 1.
inline std::array<double, 2> rs_feasible_interval(const SourceParams& src, double eta) {
    return {std::max(0.0, eta - 2 * src.q / (src.p + 2 * src.q)), eta};
}

/// Equal-probability RS optimum: largest pa with pa1 = pa2 = pa on budget.
inline double rs_equal_probability(const SourceParams& src, double eta) {
    return (src.p + 2 * src.q) * eta / (src.p + 4 * src.q);
}

inline double rs_cost_per_delta(const SourceParams& src, double pa1, double pa2) {
    return ((src.p + 2 * src.q) * pa1 + 2 * src.q * pa2) / (src.p + 2 * src.q);
}

// ---------------------------------------------------------------------------
// Search primitives
// ---------------------------------------------------------------------------

namespace detail {

/// Objective evaluation: nullopt when the point is infeasible or cannot be
/// evaluated (reducible chain, vanishing denominator).
using Objective2D = std::function<std::optional<double>(double, double)>;
using Objective1D = std::function<std::optional<double>(double)>;

struct Point2 {
    double x1, x2, f;
};

/// Golden-section minimisation on [a, b]; returns the best point seen.
inline std::pair<double, double> golden_section(const Objective1D& f, double a, double b,
                                                double x_best, double f_best,
                                                std::size_t& iterations, double tol = 1e-10) {
    constexpr double invphi = 0.6180339887498949;
    auto eval = [&](double x) {
        const auto v = f(x);
        const double y = v ? *v : std::numeric_limits<double>::infinity();
        if (y < f_best - 1e-15) {
            f_best = y;
            x_best = x;
        }
        return y;
    };
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = eval(c), fd = eval(d);
    while (b - a > tol && iterations < 200) {
        ++iterations;
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = eval(d);
        }
    }
    return {x_best, f_best};
}

/// 1-D scan of [lo, hi] at `step` followed by golden-section refinement of
/// the bracket around the best grid point. Ties keep the smaller abscissa.
inline std::optional<std::pair<double, double>> scan_1d(const Objective1D& f, double lo, double hi,
                                                        double step, OptDiagnostics& diag) {
    std::optional<std::pair<double, double>> best;
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::size_t k = 0; k <= n + 1; ++k) {
        const double x = k <= n ? lo + static_cast<double>(k) * step : hi;
        if (k == n + 1 && x - (lo + static_cast<double>(n) * step) < 1e-12) break;
        ++diag.grid_points;
        const auto v = f(x);
        if (!v) continue;
        ++diag.feasible_grid_points;
        if (!best || *v < best->second - 1e-15) best = std::pair{x, *v};
    }
    if (!best) return best;
    const double a = std::max(lo, best->first - step);
    const double b = std::min(hi, best->first + step);
    if (b > a) best = golden_section(f, a, b, best->first, best->second, diag.refinement_iterations);
    diag.final_step = 1e-10;
    return best;
}

/// Compass/diagonal pattern search on [0,1]^2 from `start`. A poll point
/// that is infeasible is pulled back towards the incumbent by bisection, so
/// the search can slide along an active constraint.
inline Point2 pattern_search(const Objective2D& f, Point2 start, double step, double min_step,
                             OptDiagnostics& diag) {
    static constexpr std::array<std::array<double, 2>, 8> dirs{
        {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}, {1, -1}, {-1, 1}}};
    Point2 cur = start;
    for (;;) {
        bool improved = false;
        for (std::size_t guard = 0; guard < 100'000; ++guard) {
            improved = false;
            for (const auto& d : dirs) {
                const double y1 = std::clamp(cur.x1 + step * d[0], 0.0, 1.0);
                const double y2 = std::clamp(cur.x2 + step * d[1], 0.0, 1.0);
                if (y1 == cur.x1 && y2 == cur.x2) continue;
                std::optional<double> fy = f(y1, y2);
                double z1 = y1, z2 = y2;
                if (!fy) {
                    double lo = 0.0, hi = 1.0;
                    std::optional<double> f_lo;
                    for (int b = 0; b < 30; ++b) {
                        const double mid = 0.5 * (lo + hi);
                        const auto fm = f(cur.x1 + mid * (y1 - cur.x1), cur.x2 + mid * (y2 - cur.x2));
                        if (fm) {
                            lo = mid;
                            f_lo = fm;
                        } else {
                            hi = mid;
                        }
                    }
                    if (!f_lo) continue;
                    z1 = cur.x1 + lo * (y1 - cur.x1);
                    z2 = cur.x2 + lo * (y2 - cur.x2);
                    fy = f_lo;
                }
                if (*fy < cur.f - 1e-15) {
                    cur = {z1, z2, *fy};
                    improved = true;
                    ++diag.refinement_iterations;
                    break;
                }
            }
            if (!improved) break;
        }
        diag.final_step = step;
        if (step <= min_step * (1 + 1e-12)) break;
        step = std::max(min_step, step / 2);
    }
    return cur;
}

struct GridScan {
    std::optional<Point2> best;
    std::vector<Basin> basins;
};

/// Full (n+1)x(n+1) grid over [0,1]^2, lexicographic order (x1 outer).
/// Ties keep the lexicographically smaller point.
inline GridScan grid_2d(const Objective2D& f, std::size_t n, OptDiagnostics& diag,
                        std::size_t keep_basins) {
    const std::size_t m = n + 1;
    std::vector<std::optional<double>> val(m * m);
    GridScan out;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double x1 = static_cast<double>(i) / static_cast<double>(n);
            const double x2 = static_cast<double>(j) / static_cast<double>(n);
            ++diag.grid_points;
            const auto v = f(x1, x2);
            val[i * m + j] = v;
            if (!v) continue;
            ++diag.feasible_grid_points;
            if (!out.best || *v < out.best->f - 1e-15) out.best = Point2{x1, x2, *v};
        }
    }
    if (keep_basins == 0) return out;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const auto& v = val[i * m + j];
            if (!v) continue;
            bool local_min = true;
            for (int di = -1; di <= 1 && local_min; ++di)
                for (int dj = -1; dj <= 1 && local_min; ++dj) {
                    if (!di && !dj) continue;
                    const auto ii = static_cast<long>(i) + di, jj = static_cast<long>(j) + dj;
                    if (ii < 0 || jj < 0 || ii >= static_cast<long>(m) || jj >= static_cast<long>(m))
                        continue;
                    const auto& w = val[static_cast<std::size_t>(ii) * m + static_cast<std::size_t>(jj)];
                    if (w && *w < *v) local_min = false;
                }
            if (local_min)
                out.basins.push_back({static_cast<double>(i) / static_cast<double>(n),
                                      static_cast<double>(j) / static_cast<double>(n), *v});
        }
    }
    std::stable_sort(out.basins.begin(), out.basins.end(),
                     [](const Basin& a, const Basin& b) { return a.pe < b.pe; });
    if (out.basins.size() > keep_basins) out.basins.resize(keep_basins);
    return out;
}

inline std::optional<double> chain_pe(const PolicySpec& pol, const SourceParams& src,
                                      const ChannelParams& ch) {
    try {
        return solve(pol, src, ch).pe;
    } catch (const ReducibleChain&) {
        return std::nullopt;
    }
}

inline std::optional<double> formula_pe(const PolicySpec& pol, const SourceParams& src,
                                        const ChannelParams& ch) {
    try {
        const double v = pe_closed_form(pol, src, ch).value;
        if (!std::isfinite(v)) return std::nullopt;
        return v;
    } catch (const BoundaryEvaluation&) {
        return std::nullopt;
    }
}

inline double ergodic_pe(const PolicySpec& pol, const SourceParams& src, const ChannelParams& ch,
                         Backend backend) {
    return backend == Backend::closed_form ? pe_closed_form(pol, src, ch).value
                                           : ergodic_limit(pol, src, ch).pe;
}

} // namespace detail

// ---------------------------------------------------------------------------
// RS
// ---------------------------------------------------------------------------

enum class RsConstraint { free, equal };

inline OptResult optimize_rs(const SourceParams& src, const ChannelParams& ch, const Budget& budget,
                             Backend backend = Backend::chain,
                             RsConstraint constraint = RsConstraint::free) {
    src.validate();
    ch.validate();
    budget.validate();
    const double eta = budget.eta();
    const double p = src.p, q = src.q;

    OptResult res;
    res.policy = PolicyKind::RS;
    res.mode = constraint == RsConstraint::equal ? "RS-equal" : "RS";
    res.backend = backend;

    auto objective = [&](double a1, double a2) -> std::optional<double> {
        const auto pol = PolicySpec::rs(a1, a2);
        return backend == Backend::chain ? detail::chain_pe(pol, src, ch)
                                         : detail::formula_pe(pol, src, ch);
    };

    if (eta == 0.0) {
        res.boundary = true;
        res.pe = detail::ergodic_pe(PolicySpec::rs(0, 0), src, ch, backend);
        res.feasible = true;
        return res;
    }

    if (constraint == RsConstraint::equal) {
        const double hi = std::min(1.0, rs_equal_probability(src, eta));
        const auto best = detail::scan_1d([&](double a) { return objective(a, a); }, 0.0, hi, 1e-3,
                                          res.diagnostics);
        if (best) {
            res.prob1 = res.prob2 = best->first;
            res.pe = best->second;
        }
    } else if (backend == Backend::closed_form) {
        const auto [lo, hi] = rs_feasible_interval(src, eta);
        auto pa2_of = [&](double a1) { return std::clamp(rs_max_pa2(src, eta, a1), 0.0, 1.0); };
        const auto best = detail::scan_1d([&](double a1) { return objective(a1, pa2_of(a1)); }, lo,
                                          hi, 1e-3, res.diagnostics);
        if (best) {
            res.prob1 = best->first;
            res.prob2 = std::min(1.0, rs_max_pa2(src, eta, best->first));
            res.pe = best->second;
        }
    } else {
        auto constrained = [&](double a1, double a2) -> std::optional<double> {
            if ((p + 2 * q) * a1 + 2 * q * a2 > (p + 2 * q) * eta + 1e-12) return std::nullopt;
            return objective(a1, a2);
        };
        const auto grid = detail::grid_2d(constrained, 100, res.diagnostics, 0);
        if (grid.best) {
            const auto best = detail::pattern_search(constrained, *grid.best, 0.005, 1e-4,
                                                     res.diagnostics);
            res.prob1 = best.x1;
            res.prob2 = best.x2;
            res.pe = best.f;
        }
    }
    res.cost_per_delta = rs_cost_per_delta(src, res.prob1, res.prob2);
    res.feasible = res.cost_per_delta <= eta + kFeasibilityTol;
    return res;
}

/// Equal-probability RS: pa1 = pa2 = (p+2q) eta / (p+4q), budget active.
inline OptResult optimize_rs_equal(const SourceParams& src, const ChannelParams& ch,
                                   const Budget& budget, Backend backend = Backend::chain) {
    src.validate();
    ch.validate();
    budget.validate();
    const double eta = budget.eta();
    OptResult res;
    res.policy = PolicyKind::RS;
    res.mode = "RS-equal";
    res.backend = backend;
    const double pa = rs_equal_probability(src, eta);
    if (pa > 1.0)
        throw ParameterDomainError("equal-probability optimum " + std::to_string(pa) +
                                   " exceeds 1");
    res.prob1 = res.prob2 = pa;
    res.cost_per_delta = rs_cost_per_delta(src, pa, pa);
    res.feasible = res.cost_per_delta <= eta + kFeasibilityTol;
    const auto pol = PolicySpec::rs(pa, pa);
    if (pa == 0.0) {
        res.boundary = true;
        res.pe = detail::ergodic_pe(pol, src, ch, backend);
    } else {
        res.pe = backend == Backend::chain ? solve(pol, src, ch).pe
                                           : pe_closed_form(pol, src, ch).value;
    }
    return res;
}

// ---------------------------------------------------------------------------
// EA
// ---------------------------------------------------------------------------

inline double ea_cost_per_delta(double q1, double q2, const SourceParams& src,
                                const ChannelParams& ch, Backend backend) {
    const auto pol = PolicySpec::ea(q1, q2);
    if (backend == Backend::closed_form) return cost_closed_form(pol, src, ch, 1.0).value;
    return solve(pol, src, ch, {1e-12, true}).cost;
}

inline OptResult optimize_ea(const SourceParams& src, const ChannelParams& ch, const Budget& budget,
                             Backend backend = Backend::chain) {
    src.validate();
    ch.validate();
    budget.validate();
    const double eta = budget.eta();

    OptResult res;
    res.policy = PolicyKind::EA;
    res.mode = "EA";
    res.backend = backend;

    if (eta == 0.0) {
        res.boundary = true;
        res.pe = detail::ergodic_pe(PolicySpec::ea(0, 0), src, ch, backend);
        res.feasible = true;
        return res;
    }

    // (0,0) never samples; its chain is reducible, so the chain backend
    // scores it by its ergodic limit.
    auto objective = [&](double q1, double q2) -> std::optional<double> {
        const auto pol = PolicySpec::ea(q1, q2);
        if (backend == Backend::chain) {
            if (q1 == 0.0 && q2 == 0.0) return ergodic_limit(pol, src, ch).pe;
            try {
                const auto r = solve(pol, src, ch);
                if (r.cost > eta) return std::nullopt;
                return r.pe;
            } catch (const ReducibleChain&) {
                return std::nullopt;
            }
        }
        try {
            const double c = cost_closed_form(pol, src, ch, 1.0).value;
            if (!(c <= eta)) return std::nullopt;
            const double v = pe_closed_form(pol, src, ch).value;
            if (!std::isfinite(v)) return std::nullopt;
            return v;
        } catch (const BoundaryEvaluation&) {
            return std::nullopt;
        }
    };

    const auto grid = detail::grid_2d(objective, 100, res.diagnostics, 5);
    res.basins = grid.basins;
    if (grid.best) {
        const auto best =
            detail::pattern_search(objective, *grid.best, 0.005, 1e-4, res.diagnostics);
        res.prob1 = best.x1;
        res.prob2 = best.x2;
        res.pe = best.f;
    }
    if (res.prob1 == 0.0 && res.prob2 == 0.0) {
        res.boundary = true;
        res.cost_per_delta = 0.0;
    } else {
        res.cost_per_delta = ea_cost_per_delta(res.prob1, res.prob2, src, ch, backend);
    }
    res.feasible = res.cost_per_delta <= eta + kFeasibilityTol;
    return res;
}

// ---------------------------------------------------------------------------
// CA / SA
// ---------------------------------------------------------------------------

struct FeasibilityResult {
    PolicyKind policy{PolicyKind::CA};
    bool feasible{false};
    double cost{0.0};         ///< cost used for the decision (includes delta)
    double cost_formula{0.0}; ///< closed-form cost (includes delta)
    std::optional<double> cost_chain;
    Backend backend{Backend::chain};
};

inline FeasibilityResult feasibility(const PolicySpec& pol, const SourceParams& src,
                                     const ChannelParams& ch, const Budget& budget,
                                     Backend backend = Backend::chain) {
    if (pol.kind() != PolicyKind::CA && pol.kind() != PolicyKind::SA)
        throw ParameterDomainError("feasibility check applies to CA and SA only");
    budget.validate();
    FeasibilityResult r;
    r.policy = pol.kind();
    r.backend = backend;
    r.cost_formula = cost_closed_form(pol, src, ch, budget.delta).value;
    try {
        r.cost_chain = budget.delta * solve(pol, src, ch).cost;
    } catch (const ReducibleChain&) {
        r.cost_chain.reset();
    }
    r.cost = backend == Backend::chain && r.cost_chain ? *r.cost_chain : r.cost_formula;
    r.feasible = r.cost <= budget.delta_max + kFeasibilityTol * budget.delta;
    return r;
}

// ---------------------------------------------------------------------------
// Audits
// ---------------------------------------------------------------------------

struct MonotonicityViolation {
    double pa1{0.0};
    double pa2_from{0.0};
    double pa2_to{0.0};
    double increase{0.0};
};

/// Checks on an n x n interior grid that the exact-chain RS error does not
/// increase with pa2 at fixed pa1 (tolerance 1e-9 per step).
inline std::vector<MonotonicityViolation> rs_monotonicity_audit(const SourceParams& src,
                                                                const ChannelParams& ch,
                                                                std::size_t n = 20) {
    std::vector<MonotonicityViolation> out;
    for (std::size_t i = 0; i < n; ++i) {
        const double a1 = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        double prev_a2 = 0.5 / static_cast<double>(n);
        double prev = solve(PolicySpec::rs(a1, prev_a2), src, ch).pe;
        for (std::size_t j = 1; j < n; ++j) {
            const double a2 = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
            const double v = solve(PolicySpec::rs(a1, a2), src, ch).pe;
            if (v > prev + 1e-9) out.push_back({a1, prev_a2, a2, v - prev});
            prev = v;
            prev_a2 = a2;
        }
    }
    return out;
}

} // namespace corrmon

#endif // CORRMON_OPTIMIZER_HPP
