#ifndef CORRMON_EXPERIMENT_HPP
#define CORRMON_EXPERIMENT_HPP

// Scenario files, sweeps and the formula/chain/simulation concordance report.
// Everything here is deterministic for a given config and seed; parallel work
// writes into pre-sized slots and is emitted in grid order.

#include "corrmon/closed_form.hpp"
#include "corrmon/exact_chain.hpp"
#include "corrmon/model.hpp"
#include "corrmon/optimizer.hpp"
#include "corrmon/parallel.hpp"
#include "corrmon/simulator.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace corrmon {

using ordered_json = nlohmann::ordered_json;

enum class BackendChoice { closed_form, chain, sim };

inline BackendChoice parse_backend(const std::string& s) {
    if (s == "closed-form") return BackendChoice::closed_form;
    if (s == "chain" || s == "exact-chain") return BackendChoice::chain;
    if (s == "sim") return BackendChoice::sim;
    throw ConfigError("backend: unknown value '" + s + "' (expected closed-form, chain or sim)");
}

inline Backend optimizer_backend(BackendChoice b) {
    if (b == BackendChoice::sim) throw ConfigError("backend: sim is not an optimizer objective");
    return b == BackendChoice::closed_form ? Backend::closed_form : Backend::chain;
}

// ---------------------------------------------------------------------------
// Scenario config
// ---------------------------------------------------------------------------

struct ScenarioConfig {
    SourceParams source;
    ChannelParams channel;
    std::string policy{"RS"}; ///< RS, RS-equal, CA, EA or SA
    double prob1{0.5};        ///< pa1 (RS) or qa1 (EA)
    double prob2{0.5};
    Budget budget{1.0, 0.8};
    SimConfig sim;
    BackendChoice backend{BackendChoice::chain};

    PolicySpec policy_spec() const {
        if (policy == "RS" || policy == "RS-equal") return PolicySpec::rs(prob1, prob2);
        if (policy == "EA") return PolicySpec::ea(prob1, prob2);
        if (policy == "CA") return PolicySpec::ca();
        if (policy == "SA") return PolicySpec::sa();
        throw ConfigError("policy: unknown value '" + policy + "'");
    }

    void validate() const {
        source.validate();
        channel.validate();
        policy_spec().validate();
        budget.validate();
        sim.validate();
    }
};

namespace detail {

inline double number(const ordered_json& j, const std::string& key) {
    if (!j.is_number()) throw ConfigError(key + ": expected a number");
    return j.get<double>();
}

inline std::uint64_t count(const ordered_json& j, const std::string& key) {
    if (!j.is_number_integer() || j.get<long long>() < 0)
        throw ConfigError(key + ": expected a non-negative integer");
    return j.get<std::uint64_t>();
}

inline std::string text(const ordered_json& j, const std::string& key) {
    if (!j.is_string()) throw ConfigError(key + ": expected a string");
    return j.get<std::string>();
}

} // namespace detail

/// Keys accepted by scenario files. pa1/pa2 and qa1/qa2 share storage; the
/// one that matches the policy is meant, the other is accepted for
/// convenience when switching policies.
inline const std::set<std::string>& scenario_keys() {
    static const std::set<std::string> keys{
        "p",     "q",         "ps1_solo", "ps1_joint", "ps2_solo",     "ps2_joint", "policy",
        "pa1",   "pa2",       "qa1",      "qa2",       "delta",        "eta",       "delta_max",
        "horizon", "burn_in", "replications", "seed",  "backend"};
    return keys;
}

/// Applies the keys of a flat JSON object onto `cfg`. Keys listed in `extra`
/// are skipped (the caller handles them); anything else unknown is an error.
inline void apply_config(const ordered_json& j, ScenarioConfig& cfg,
                         const std::set<std::string>& extra = {}) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!scenario_keys().count(key) && !extra.count(key))
            throw ConfigError("unknown config key '" + key + "'");

    auto num = [&](const char* k, double& dst) {
        if (j.contains(k)) dst = detail::number(j.at(k), k);
    };
    num("p", cfg.source.p);
    num("q", cfg.source.q);
    num("ps1_solo", cfg.channel.ps1_solo);
    num("ps1_joint", cfg.channel.ps1_joint);
    num("ps2_solo", cfg.channel.ps2_solo);
    num("ps2_joint", cfg.channel.ps2_joint);
    num("pa1", cfg.prob1);
    num("pa2", cfg.prob2);
    num("qa1", cfg.prob1);
    num("qa2", cfg.prob2);
    if (j.contains("policy")) {
        cfg.policy = detail::text(j.at("policy"), "policy");
        cfg.policy_spec(); // rejects unknown names
    }

    num("delta", cfg.budget.delta);
    cfg.sim.delta = cfg.budget.delta;
    const bool has_eta = j.contains("eta");
    const bool has_max = j.contains("delta_max");
    if (has_eta) cfg.budget.delta_max = detail::number(j.at("eta"), "eta") * cfg.budget.delta;
    if (has_max) {
        const double dm = detail::number(j.at("delta_max"), "delta_max");
        if (has_eta && std::abs(dm - cfg.budget.delta_max) > 1e-12 * std::max(1.0, dm))
            throw ConfigError("delta_max: inconsistent with eta * delta");
        cfg.budget.delta_max = dm;
    }

    if (j.contains("horizon")) cfg.sim.horizon = detail::count(j.at("horizon"), "horizon");
    if (j.contains("burn_in")) cfg.sim.burn_in = detail::count(j.at("burn_in"), "burn_in");
    if (j.contains("replications"))
        cfg.sim.replications =
            static_cast<std::uint32_t>(detail::count(j.at("replications"), "replications"));
    if (j.contains("seed")) cfg.sim.seed = detail::count(j.at("seed"), "seed");
    if (j.contains("backend")) cfg.backend = parse_backend(detail::text(j.at("backend"), "backend"));
}

inline ordered_json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(origin + ": malformed JSON (" + e.what() + ")");
    }
}

inline ordered_json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json_text(ss.str(), path);
}

inline ScenarioConfig parse_config(const ordered_json& j) {
    ScenarioConfig cfg;
    apply_config(j, cfg);
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------
// JSON views of the report types
// ---------------------------------------------------------------------------

inline ordered_json to_json(const MetricsReport& m) {
    ordered_json j;
    j["pe_mean"] = m.pe_mean;
    j["pe_stderr"] = m.pe_stderr;
    j["cost_mean"] = m.cost_mean;
    j["cost_stderr"] = m.cost_stderr;
    j["slots_used"] = m.slots_used;
    j["replications"] = m.replications;
    j["seed"] = m.seed;
    return j;
}

inline ordered_json to_json(const StationaryResult& r, double delta = 1.0) {
    ordered_json j;
    ordered_json pi = ordered_json::array();
    for (std::size_t i = 0; i < kStates; ++i)
        pi.push_back({{"state", MicroState::from_index(i).label()}, {"prob", r.pi[i]}});
    j["pi"] = pi;
    j["pe"] = r.pe;
    j["cost"] = r.cost * delta;
    ordered_json proj;
    for (std::size_t k = 0; k < PaperProjection::labels.size(); ++k)
        proj[std::string(PaperProjection::labels[k])] = r.paper_projection.mass[k];
    j["projection"] = proj;
    j["projection_residual"] = r.paper_projection.residual;
    const auto marg = source_marginal(r);
    j["source_marginal"] = {marg[0], marg[1], marg[2]};
    j["residual_norm"] = r.residual_norm;
    j["closed_class_count"] = r.closed_class_count;
    j["initial_condition_dependent"] = r.initial_condition_dependent;
    return j;
}

inline ordered_json to_json(const OptResult& r, double delta = 1.0) {
    ordered_json j;
    j["policy"] = r.mode;
    const bool ea = r.policy == PolicyKind::EA;
    j[ea ? "qa1" : "pa1"] = r.prob1;
    j[ea ? "qa2" : "pa2"] = r.prob2;
    j["pe"] = r.pe;
    j["cost"] = r.cost_per_delta * delta;
    j["cost_per_delta"] = r.cost_per_delta;
    j["feasible"] = r.feasible;
    j["backend"] = std::string(to_string(r.backend));
    j["boundary"] = r.boundary;
    j["diagnostics"] = {{"grid_points", r.diagnostics.grid_points},
                        {"feasible_grid_points", r.diagnostics.feasible_grid_points},
                        {"refinement_iterations", r.diagnostics.refinement_iterations},
                        {"final_step", r.diagnostics.final_step}};
    if (ea) {
        ordered_json b = ordered_json::array();
        for (const auto& x : r.basins) b.push_back({{"qa1", x.x1}, {"qa2", x.x2}, {"pe", x.pe}});
        j["basins"] = b;
    }
    return j;
}

inline ordered_json to_json(const FeasibilityResult& r) {
    ordered_json j;
    j["policy"] = std::string(to_string(r.policy));
    j["feasible"] = r.feasible;
    j["cost"] = r.cost;
    j["cost_formula"] = r.cost_formula;
    if (r.cost_chain)
        j["cost_chain"] = *r.cost_chain;
    else
        j["cost_chain"] = nullptr;
    j["backend"] = std::string(to_string(r.backend));
    return j;
}

// ---------------------------------------------------------------------------
// CSV helpers
// ---------------------------------------------------------------------------

inline std::string fmt(double v) {
    if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

// ---------------------------------------------------------------------------
// Evaluate
// ---------------------------------------------------------------------------

struct EvaluationRow {
    std::string backend;
    double pe{0.0};
    double cost{0.0}; ///< includes delta
    std::optional<double> pe_stderr;
    std::optional<double> cost_stderr;
    bool in_unit_interval{true};
    bool boundary{false};
};

/// One row per backend: closed-form and exact-chain always, simulation on request.
inline std::vector<EvaluationRow> evaluate(const ScenarioConfig& cfg, bool with_sim,
                                           unsigned workers = default_parallelism()) {
    cfg.validate();
    const auto pol = cfg.policy_spec();
    const double delta = cfg.budget.delta;
    std::vector<EvaluationRow> rows;

    {
        const auto pe = pe_closed_form(pol, cfg.source, cfg.channel);
        const auto cost = cost_closed_form(pol, cfg.source, cfg.channel, delta);
        rows.push_back({"closed-form", pe.value, cost.value, {}, {},
                        pe.in_unit_interval && cost.in_unit_interval, pe.ergodic_limit});
    }
    {
        EvaluationRow r;
        r.backend = "exact-chain";
        if (pol.at_zero_boundary()) {
            const auto lim = ergodic_limit(pol, cfg.source, cfg.channel);
            try {
                const auto s = solve(pol, cfg.source, cfg.channel);
                r.pe = s.pe;
                r.cost = s.cost * delta;
            } catch (const ReducibleChain&) {
                r.pe = lim.pe;
                r.cost = lim.cost * delta;
                r.boundary = true;
            }
        } else {
            const auto s = solve(pol, cfg.source, cfg.channel);
            r.pe = s.pe;
            r.cost = s.cost * delta;
        }
        rows.push_back(r);
    }
    if (with_sim) {
        const auto m = run(pol, cfg.source, cfg.channel, cfg.sim, workers);
        rows.push_back({"sim", m.pe_mean, m.cost_mean, m.pe_stderr, m.cost_stderr, true, false});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

inline const char* const kSweepHeader =
    "policy,p,q,eta,ps1_solo,ps1_joint,ps2_solo,ps2_joint,pa1,pa2,pe,cost,feasible,backend";

struct SweepSpec {
    std::string name;
    std::string variable{"p"}; ///< "p" or "eta"
    double from{0.05};
    double to{0.45};
    double step{0.05};
    SourceParams source{0.2, 0.1}; ///< the swept coordinate is overwritten
    double eta{0.8};
    double delta{1.0};
    std::vector<ChannelParams> panels{ChannelParams{}};
    std::vector<std::string> policies{"RS", "CA", "EA", "SA"};
    Backend backend{Backend::chain};
    std::string note;

    std::vector<double> grid() const {
        std::vector<double> out;
        const auto n = static_cast<long>(std::floor((to - from) / step + 1e-9));
        for (long k = 0; k <= n; ++k) {
            // Rounded to 12 digits so 0.05 * 3 prints as 0.15.
            const double v = from + static_cast<double>(k) * step;
            out.push_back(std::round(v * 1e12) / 1e12);
        }
        return out;
    }

    void validate() const {
        if (variable != "p" && variable != "eta")
            throw ConfigError("sweep: variable must be 'p' or 'eta', got '" + variable + "'");
        if (!(step > 0.0) || !(to >= from)) throw ConfigError("sweep: empty or inverted range");
        for (double v : grid()) {
            if (variable == "p")
                SourceParams{v, source.q}.validate();
            else
                Budget::from_eta(v, delta).validate();
        }
        if (variable == "eta") source.validate();
        else Budget::from_eta(eta, delta).validate();
        for (const auto& c : panels) c.validate();
        for (const auto& p : policies)
            if (p != "RS" && p != "RS-equal" && p != "CA" && p != "EA" && p != "SA")
                throw ConfigError("sweep: unknown policy '" + p + "'");
    }
};

/// Channel configurations of the published figure panels.
inline std::vector<ChannelParams> caption_panels() {
    return {{0.2, 0.1, 0.2, 0.1}, {0.8, 0.1, 0.2, 0.1}, {0.2, 0.1, 0.8, 0.1}, {0.8, 0.1, 0.8, 0.1}};
}

inline std::vector<std::string> preset_names() {
    return {"fig-p-sweep-q01", "fig-p-sweep-q04", "fig-eta-sweep", "fig-eta-sweep-pq04"};
}

inline SweepSpec preset(const std::string& name) {
    SweepSpec s;
    s.name = name;
    s.panels = caption_panels();
    if (name == "fig-p-sweep-q01" || name == "fig-p-sweep-q04") {
        s.variable = "p";
        s.from = 0.05;
        s.to = 0.45;
        s.step = 0.05;
        s.source.q = name == "fig-p-sweep-q01" ? 0.1 : 0.4;
        s.eta = 0.8;
        s.note = "q follows the figure captions (q=0.1 and q=0.4); the accompanying prose "
                 "quotes q=0.4 for both p-sweep figures";
    } else if (name == "fig-eta-sweep" || name == "fig-eta-sweep-pq04") {
        s.variable = "eta";
        s.from = 0.05;
        s.to = 1.0;
        s.step = 0.05;
        s.source = name == "fig-eta-sweep" ? SourceParams{0.2, 0.1} : SourceParams{0.4, 0.4};
    } else {
        std::string known;
        for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
        throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
    }
    return s;
}

/// Sweep from a flat config: scenario keys give the fixed parameters and the
/// single channel panel; sweep keys give the grid.
inline SweepSpec sweep_from_config(const ordered_json& j) {
    static const std::set<std::string> extra{"sweep", "from", "to", "step", "policies"};
    ScenarioConfig cfg;
    apply_config(j, cfg, extra);
    SweepSpec s;
    s.name = "config";
    s.source = cfg.source;
    s.delta = cfg.budget.delta;
    s.eta = cfg.budget.eta();
    s.panels = {cfg.channel};
    s.backend = optimizer_backend(cfg.backend);
    if (j.contains("sweep")) s.variable = detail::text(j.at("sweep"), "sweep");
    if (j.contains("from")) s.from = detail::number(j.at("from"), "from");
    if (j.contains("to")) s.to = detail::number(j.at("to"), "to");
    if (j.contains("step")) s.step = detail::number(j.at("step"), "step");
    if (j.contains("policies")) {
        const auto& pl = j.at("policies");
        if (!pl.is_array()) throw ConfigError("policies: expected an array of names");
        s.policies.clear();
        for (const auto& x : pl) s.policies.push_back(detail::text(x, "policies"));
    }
    s.validate();
    return s;
}

struct SweepRow {
    std::string policy;
    double p{0}, q{0}, eta{0};
    ChannelParams channel;
    std::optional<double> prob1, prob2;
    std::optional<double> pe; ///< empty for infeasible CA/SA points
    double cost{0.0};         ///< includes delta
    bool feasible{false};
    Backend backend{Backend::chain};

    std::string csv() const {
        std::string s = policy;
        for (double v : {p, q, eta, channel.ps1_solo, channel.ps1_joint, channel.ps2_solo,
                         channel.ps2_joint})
            s += "," + fmt(v);
        s += "," + fmt(prob1) + "," + fmt(prob2) + "," + fmt(pe) + "," + fmt(cost);
        s += feasible ? ",true," : ",false,";
        s += to_string(backend);
        return s;
    }
};

inline SweepRow sweep_point(const std::string& policy, const SourceParams& src,
                            const ChannelParams& ch, double eta, double delta, Backend backend) {
    SweepRow row;
    row.policy = policy;
    row.p = src.p;
    row.q = src.q;
    row.eta = eta;
    row.channel = ch;
    row.backend = backend;
    const Budget budget = Budget::from_eta(eta, delta);
    if (policy == "CA" || policy == "SA") {
        const auto pol = policy == "CA" ? PolicySpec::ca() : PolicySpec::sa();
        const auto f = feasibility(pol, src, ch, budget, backend);
        row.cost = f.cost;
        row.feasible = f.feasible;
        if (f.feasible)
            row.pe = backend == Backend::chain ? solve(pol, src, ch).pe
                                               : pe_closed_form(pol, src, ch).value;
        return row;
    }
    OptResult r;
    if (policy == "EA")
        r = optimize_ea(src, ch, budget, backend);
    else if (policy == "RS-equal")
        r = optimize_rs_equal(src, ch, budget, backend);
    else
        r = optimize_rs(src, ch, budget, backend);
    row.prob1 = r.prob1;
    row.prob2 = r.prob2;
    row.pe = r.pe;
    row.cost = r.cost_per_delta * delta;
    row.feasible = r.feasible;
    return row;
}

/// Rows ordered by panel, then grid value, then policy list order.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec,
                                       unsigned workers = default_parallelism()) {
    spec.validate();
    const auto g = spec.grid();
    const std::size_t per_panel = g.size() * spec.policies.size();
    std::vector<SweepRow> rows(spec.panels.size() * per_panel);
    parallel_for(
        rows.size(),
        [&](std::size_t i) {
            const auto& ch = spec.panels[i / per_panel];
            const std::size_t k = i % per_panel;
            const double v = g[k / spec.policies.size()];
            const auto& pol = spec.policies[k % spec.policies.size()];
            SourceParams src = spec.source;
            double eta = spec.eta;
            if (spec.variable == "p")
                src.p = v;
            else
                eta = v;
            rows[i] = sweep_point(pol, src, ch, eta, spec.delta, spec.backend);
        },
        workers);
    return rows;
}

// ---------------------------------------------------------------------------
// Concordance
// ---------------------------------------------------------------------------

inline constexpr double kMatchTol = 1e-6;
inline constexpr double kCostUniversalTol = 1e-9;
inline constexpr double kIdentityTol = 1e-9;

enum class Classification { match, mismatch, boundary };

inline std::string_view to_string(Classification c) {
    switch (c) {
    case Classification::match: return "match";
    case Classification::mismatch: return "mismatch";
    case Classification::boundary: return "boundary";
    }
    return "?";
}

struct ConcordanceRow {
    std::size_t point{0}; ///< index of the sampled parameter tuple; forced rows use n_points
    std::string policy;   ///< RS, CA, EA, SA or EA11
    SourceParams source;
    ChannelParams channel;
    double prob1{0.0}, prob2{0.0};
    std::optional<double> pe_formula;
    std::optional<double> pe_chain;
    std::optional<double> pe_sim;
    std::optional<double> cost_formula;
    std::optional<double> cost_chain;
    std::optional<double> pe_diff;
    std::optional<double> cost_diff;
    Classification classification{Classification::mismatch};

    static constexpr const char* header =
        "point,policy,p,q,ps1_solo,ps1_joint,ps2_solo,ps2_joint,prob1,prob2,pe_formula,"
        "pe_chain,pe_sim,cost_formula,cost_chain,pe_diff,cost_diff,classification";

    std::string csv() const {
        std::string s = std::to_string(point) + "," + policy;
        for (double v : {source.p, source.q, channel.ps1_solo, channel.ps1_joint,
                         channel.ps2_solo, channel.ps2_joint, prob1, prob2})
            s += "," + fmt(v);
        for (const auto& v : {pe_formula, pe_chain, pe_sim, cost_formula, cost_chain, pe_diff,
                              cost_diff})
            s += "," + fmt(v);
        s += ",";
        s += to_string(classification);
        return s;
    }

    ordered_json json() const {
        auto opt = [](const std::optional<double>& v) -> ordered_json {
            return v ? ordered_json(*v) : ordered_json(nullptr);
        };
        return {{"point", point},
                {"policy", policy},
                {"p", source.p},
                {"q", source.q},
                {"ps1_solo", channel.ps1_solo},
                {"ps1_joint", channel.ps1_joint},
                {"ps2_solo", channel.ps2_solo},
                {"ps2_joint", channel.ps2_joint},
                {"prob1", prob1},
                {"prob2", prob2},
                {"pe_formula", opt(pe_formula)},
                {"pe_chain", opt(pe_chain)},
                {"pe_sim", opt(pe_sim)},
                {"cost_formula", opt(cost_formula)},
                {"cost_chain", opt(cost_chain)},
                {"pe_diff", opt(pe_diff)},
                {"cost_diff", opt(cost_diff)},
                {"classification", std::string(to_string(classification))}};
    }
};

inline PolicySpec concordance_policy(const std::string& tag, double a, double b) {
    if (tag == "RS") return PolicySpec::rs(a, b);
    if (tag == "EA") return PolicySpec::ea(a, b);
    if (tag == "EA11") return PolicySpec::ea(1.0, 1.0);
    if (tag == "CA") return PolicySpec::ca();
    return PolicySpec::sa();
}

inline ConcordanceRow concordance_row(std::size_t point, const std::string& tag,
                                      const SourceParams& src, const ChannelParams& ch, double a,
                                      double b, const SimConfig* sim = nullptr,
                                      unsigned workers = 1) {
    const auto pol = concordance_policy(tag, a, b);
    ConcordanceRow r;
    r.point = point;
    r.policy = tag;
    r.source = src;
    r.channel = ch;
    const auto pr = pol.probabilities();
    r.prob1 = pr[0];
    r.prob2 = pr[1];

    bool boundary = false;
    try {
        const auto pe = pe_closed_form(pol, src, ch);
        const auto cost = cost_closed_form(pol, src, ch, 1.0);
        r.pe_formula = pe.value;
        r.cost_formula = cost.value;
        boundary = pe.ergodic_limit;
    } catch (const BoundaryEvaluation&) {
        boundary = true;
    }
    try {
        const auto s = solve(pol, src, ch);
        r.pe_chain = s.pe;
        r.cost_chain = s.cost;
    } catch (const ReducibleChain&) {
        const auto lim = ergodic_limit(pol, src, ch);
        r.pe_chain = lim.pe;
        r.cost_chain = lim.cost;
        boundary = true;
    }
    if (sim) r.pe_sim = run(pol, src, ch, *sim, workers).pe_mean;

    if (r.pe_formula && r.pe_chain) r.pe_diff = std::abs(*r.pe_formula - *r.pe_chain);
    if (r.cost_formula && r.cost_chain) r.cost_diff = std::abs(*r.cost_formula - *r.cost_chain);
    const bool finite = r.pe_diff && r.cost_diff && std::isfinite(*r.pe_diff) &&
                        std::isfinite(*r.cost_diff);
    if (boundary)
        r.classification = Classification::boundary;
    else if (finite && *r.pe_diff <= kMatchTol && *r.cost_diff <= kMatchTol)
        r.classification = Classification::match;
    else
        r.classification = Classification::mismatch;
    return r;
}

struct PolicySummary {
    std::string policy;
    std::size_t rows{0};
    std::size_t matches{0};
    std::size_t cost_matches{0}; ///< cost within 1e-9
    double max_pe_diff{0.0};
    double max_cost_diff{0.0};
    std::optional<ConcordanceRow> worst; ///< row with the largest pe diff

    double match_rate() const { return rows ? static_cast<double>(matches) / rows : 0.0; }
    double cost_match_rate() const {
        return rows ? static_cast<double>(cost_matches) / rows : 0.0;
    }
};

struct ConcordanceReport {
    std::vector<ConcordanceRow> rows;
    std::vector<PolicySummary> summary;
    std::size_t identity_points{0};  ///< sampled points with both EA11 and SA formula values
    std::size_t identity_matches{0}; ///< of which the two printed formulas agree within 1e-9
    std::vector<std::size_t> identity_mismatch_points;

    double identity_rate() const {
        return identity_points ? static_cast<double>(identity_matches) / identity_points : 0.0;
    }
};

inline const std::vector<std::string>& concordance_policies() {
    static const std::vector<std::string> v{"RS", "CA", "EA", "SA", "EA11"};
    return v;
}

struct SampledPoint {
    SourceParams source;
    ChannelParams channel;
    double prob1{0.0}, prob2{0.0};
};

/// Interior draws: p, q in [0.05, 0.45], probabilities in [0.05, 1], channel
/// probabilities in [0.05, 0.95] with solo > joint on each link.
inline std::vector<SampledPoint> sample_points(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> pq(0.05, 0.45), pr(0.05, 1.0), chp(0.05, 0.95);
    auto ordered_pair = [&] {
        for (;;) {
            const double x = chp(gen), y = chp(gen);
            if (x != y) return std::pair{std::max(x, y), std::min(x, y)};
        }
    };
    std::vector<SampledPoint> out(n);
    for (auto& s : out) {
        s.source.p = pq(gen);
        s.source.q = pq(gen);
        s.prob1 = pr(gen);
        s.prob2 = pr(gen);
        const auto [s1, j1] = ordered_pair();
        const auto [s2, j2] = ordered_pair();
        s.channel = {s1, j1, s2, j2};
    }
    return out;
}

inline ConcordanceReport validate(std::size_t n_points, std::uint64_t seed,
                                  std::optional<SimConfig> sim = std::nullopt,
                                  unsigned workers = default_parallelism()) {
    if (n_points < 1) throw ConfigError("points: need at least 1");
    const auto pts = sample_points(n_points, seed);
    const auto& tags = concordance_policies();
    ConcordanceReport rep;
    rep.rows.resize(n_points * tags.size());
    parallel_for(
        rep.rows.size(),
        [&](std::size_t i) {
            const auto& s = pts[i / tags.size()];
            rep.rows[i] = concordance_row(i / tags.size(), tags[i % tags.size()], s.source,
                                          s.channel, s.prob1, s.prob2, sim ? &*sim : nullptr);
        },
        workers);

    // Forced corner: RS at full sampling over a perfect channel.
    rep.rows.push_back(concordance_row(n_points, "RS", SourceParams{0.2, 0.1},
                                       ChannelParams::perfect(), 1.0, 1.0));

    for (const auto& tag : tags) {
        PolicySummary ps;
        ps.policy = tag;
        for (const auto& r : rep.rows) {
            if (r.policy != tag) continue;
            ++ps.rows;
            if (r.classification == Classification::match) ++ps.matches;
            if (r.cost_diff && *r.cost_diff <= kCostUniversalTol) ++ps.cost_matches;
            if (r.cost_diff) ps.max_cost_diff = std::max(ps.max_cost_diff, *r.cost_diff);
            if (r.pe_diff && (!ps.worst || *r.pe_diff > ps.max_pe_diff)) {
                ps.max_pe_diff = *r.pe_diff;
                ps.worst = r;
            }
        }
        rep.summary.push_back(ps);
    }

    for (std::size_t k = 0; k < n_points; ++k) {
        const auto& ea11 = rep.rows[k * tags.size() + 4];
        const auto& sa = rep.rows[k * tags.size() + 3];
        if (!ea11.pe_formula || !sa.pe_formula) continue;
        ++rep.identity_points;
        if (std::abs(*ea11.pe_formula - *sa.pe_formula) <= kIdentityTol)
            ++rep.identity_matches;
        else
            rep.identity_mismatch_points.push_back(k);
    }
    return rep;
}

inline ordered_json to_json(const PolicySummary& s) {
    ordered_json j{{"policy", s.policy},
                   {"rows", s.rows},
                   {"match_rate", s.match_rate()},
                   {"cost_match_rate_1e-9", s.cost_match_rate()},
                   {"max_pe_diff", s.max_pe_diff},
                   {"max_cost_diff", s.max_cost_diff}};
    j["worst"] = s.worst ? s.worst->json() : ordered_json(nullptr);
    return j;
}

inline ordered_json summary_json(const ConcordanceReport& rep) {
    ordered_json j;
    ordered_json per = ordered_json::array();
    for (const auto& s : rep.summary) per.push_back(to_json(s));
    j["policies"] = per;
    j["ea11_sa_formula_identity"] = {{"points", rep.identity_points},
                                     {"matches", rep.identity_matches},
                                     {"rate", rep.identity_rate()},
                                     {"mismatch_points", rep.identity_mismatch_points}};
    return j;
}

inline std::string summary_text(const ConcordanceReport& rep) {
    std::string s;
    for (const auto& p : rep.summary) {
        s += "# " + p.policy + ": rows=" + std::to_string(p.rows) +
             " match_rate=" + fmt(p.match_rate()) + " cost_match_rate_1e-9=" +
             fmt(p.cost_match_rate()) + " max_pe_diff=" + fmt(p.max_pe_diff) +
             " max_cost_diff=" + fmt(p.max_cost_diff);
        if (p.worst) s += " worst_point=" + std::to_string(p.worst->point);
        s += "\n";
    }
    s += "# EA11 vs SA formula identity: " + std::to_string(rep.identity_matches) + "/" +
         std::to_string(rep.identity_points) + "\n";
    return s;
}

} // namespace corrmon

#endif // CORRMON_EXPERIMENT_HPP
