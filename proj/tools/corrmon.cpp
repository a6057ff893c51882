// corrmon: evaluate, simulate, solve, optimize, sweep and validate scenarios
// of the two-process remote monitoring model.

#include "corrmon/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

using namespace corrmon;

namespace {

enum Exit { ok = 0, config_error = 2, reducible = 3, numerical = 4 };

struct Options {
    std::string config;
    std::string preset;
    std::optional<std::string> backend;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> slots;
    std::optional<std::uint32_t> replications;
    std::string out;
    std::string format{"json"};
    std::size_t points{200};
};

ScenarioConfig load_scenario(const Options& o) {
    ScenarioConfig cfg;
    if (!o.config.empty()) apply_config(read_json_file(o.config), cfg);
    if (o.backend) cfg.backend = parse_backend(*o.backend);
    if (o.seed) cfg.sim.seed = *o.seed;
    if (o.replications) cfg.sim.replications = *o.replications;
    if (o.slots) cfg.sim.horizon = cfg.sim.burn_in + *o.slots;
    cfg.validate();
    return cfg;
}

// Output goes to --out when given, otherwise stdout. Nothing is written
// until the command has its full result, so failures leave no partial rows.
void emit(const Options& o, const std::string& text) {
    if (o.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw ConfigError("cannot open output file '" + o.out + "'");
    f << text;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

int cmd_evaluate(const Options& o) {
    const auto cfg = load_scenario(o);
    const bool with_sim = cfg.backend == BackendChoice::sim || o.slots.has_value();
    const auto rows = evaluate(cfg, with_sim);
    if (o.format == "csv") {
        std::string s = "backend,policy,pe,pe_stderr,cost,cost_stderr,in_unit_interval,boundary\n";
        for (const auto& r : rows)
            s += r.backend + "," + cfg.policy_spec().describe() + "," + fmt(r.pe) + "," +
                 fmt(r.pe_stderr) + "," + fmt(r.cost) + "," + fmt(r.cost_stderr) + "," +
                 (r.in_unit_interval ? "true" : "false") + "," + (r.boundary ? "true" : "false") +
                 "\n";
        emit(o, s);
        return ok;
    }
    ordered_json arr = ordered_json::array();
    for (const auto& r : rows) {
        ordered_json j{{"backend", r.backend}, {"policy", cfg.policy_spec().describe()},
                       {"pe", r.pe}, {"cost", r.cost}};
        if (r.pe_stderr) j["pe_stderr"] = *r.pe_stderr;
        if (r.cost_stderr) j["cost_stderr"] = *r.cost_stderr;
        j["in_unit_interval"] = r.in_unit_interval;
        j["boundary"] = r.boundary;
        arr.push_back(j);
    }
    emit(o, dump(arr));
    return ok;
}

int cmd_simulate(const Options& o) {
    const auto cfg = load_scenario(o);
    const auto m = run(cfg.policy_spec(), cfg.source, cfg.channel, cfg.sim);
    emit(o, dump(to_json(m)));
    return ok;
}

int cmd_solve(const Options& o) {
    const auto cfg = load_scenario(o);
    const auto r = solve(cfg.policy_spec(), cfg.source, cfg.channel);
    emit(o, dump(to_json(r, cfg.budget.delta)));
    return ok;
}

int cmd_optimize(const Options& o) {
    const auto cfg = load_scenario(o);
    const double delta = cfg.budget.delta;
    if (cfg.policy == "CA" || cfg.policy == "SA") {
        const auto backend = cfg.backend == BackendChoice::closed_form ? Backend::closed_form
                                                                       : Backend::chain;
        emit(o, dump(to_json(feasibility(cfg.policy_spec(), cfg.source, cfg.channel, cfg.budget,
                                         backend))));
        return ok;
    }
    const auto backend = optimizer_backend(cfg.backend);
    OptResult r;
    if (cfg.policy == "EA")
        r = optimize_ea(cfg.source, cfg.channel, cfg.budget, backend);
    else if (cfg.policy == "RS-equal")
        r = optimize_rs_equal(cfg.source, cfg.channel, cfg.budget, backend);
    else
        r = optimize_rs(cfg.source, cfg.channel, cfg.budget, backend);
    emit(o, dump(to_json(r, delta)));
    return ok;
}

int cmd_sweep(const Options& o) {
    if (o.preset.empty() == o.config.empty())
        throw ConfigError("sweep needs exactly one of --preset or --config");
    SweepSpec spec = o.preset.empty() ? sweep_from_config(read_json_file(o.config))
                                      : preset(o.preset);
    if (o.backend) spec.backend = optimizer_backend(parse_backend(*o.backend));
    const auto rows = run_sweep(spec);
    if (!spec.note.empty()) std::cerr << "note: " << spec.note << "\n";
    if (o.format == "json") {
        ordered_json arr = ordered_json::array();
        for (const auto& r : rows) {
            auto opt = [](const std::optional<double>& v) {
                return v ? ordered_json(*v) : ordered_json(nullptr);
            };
            arr.push_back({{"policy", r.policy},         {"p", r.p},
                           {"q", r.q},                   {"eta", r.eta},
                           {"ps1_solo", r.channel.ps1_solo}, {"ps1_joint", r.channel.ps1_joint},
                           {"ps2_solo", r.channel.ps2_solo}, {"ps2_joint", r.channel.ps2_joint},
                           {"pa1", opt(r.prob1)},        {"pa2", opt(r.prob2)},
                           {"pe", opt(r.pe)},            {"cost", r.cost},
                           {"feasible", r.feasible},     {"backend", std::string(to_string(r.backend))}});
        }
        ordered_json j{{"preset", spec.name}, {"note", spec.note}, {"rows", arr}};
        emit(o, dump(j));
        return ok;
    }
    std::string s = std::string(kSweepHeader) + "\n";
    for (const auto& r : rows) s += r.csv() + "\n";
    emit(o, s);
    return ok;
}

int cmd_validate(const Options& o) {
    std::optional<SimConfig> sim;
    if (o.slots) {
        SimConfig sc;
        sc.horizon = sc.burn_in + *o.slots;
        sc.replications = o.replications.value_or(4);
        sc.seed = o.seed.value_or(1);
        sim = sc;
    }
    const auto rep = validate(o.points, o.seed.value_or(1), sim);
    if (o.format == "json") {
        ordered_json rows = ordered_json::array();
        for (const auto& r : rep.rows) rows.push_back(r.json());
        emit(o, dump({{"rows", rows}, {"summary", summary_json(rep)}}));
        return ok;
    }
    std::string s = std::string(ConcordanceRow::header) + "\n";
    for (const auto& r : rep.rows) s += r.csv() + "\n";
    emit(o, s);
    std::cerr << summary_text(rep);
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Remote monitoring policy laboratory"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "Flat JSON scenario file");
        sub->add_option("--backend", o.backend, "closed-form | chain | sim");
        sub->add_option("--seed", o.seed, "RNG seed");
        sub->add_option("--slots", o.slots, "Measured slots per replication (after burn-in)");
        sub->add_option("--replications", o.replications, "Independent replications");
        sub->add_option("--out", o.out, "Output file (default stdout)");
        sub->add_option("--format", o.format, "csv | json")
            ->check(CLI::IsMember({"csv", "json"}));
    };

    auto* evaluate = app.add_subcommand("evaluate", "P_E and cost on every backend");
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimate");
    auto* solve = app.add_subcommand("solve", "Stationary law of the exact chain");
    auto* optimize = app.add_subcommand("optimize", "Budget-constrained optimum or feasibility");
    auto* sweep = app.add_subcommand("sweep", "Grid of optima (CSV)");
    auto* validate = app.add_subcommand("validate", "Formula vs chain concordance report");
    for (auto* s : {evaluate, simulate, solve, optimize, sweep, validate}) common(s);
    sweep->add_option("--preset", o.preset, "Named figure grid");
    validate->add_option("--points", o.points, "Number of random interior tuples");
    sweep->callback([&] {
        if (sweep->count("--format") == 0) o.format = "csv";
    });
    validate->callback([&] {
        if (validate->count("--format") == 0) o.format = "csv";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : config_error;
    }

    try {
        if (*evaluate) return cmd_evaluate(o);
        if (*simulate) return cmd_simulate(o);
        if (*solve) return cmd_solve(o);
        if (*optimize) return cmd_optimize(o);
        if (*sweep) return cmd_sweep(o);
        if (*validate) return cmd_validate(o);
    } catch (const ReducibleChain& e) {
        std::cerr << "error: " << e.what() << "\n";
        return reducible;
    } catch (const NumericalFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return numerical;
    } catch (const BoundaryEvaluation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return config_error;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return config_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return numerical;
    }
    return ok;
}
