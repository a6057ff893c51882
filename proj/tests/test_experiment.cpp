#include "corrmon/experiment.hpp"

#include <catch_amalgamated.hpp>

#include <map>

using namespace corrmon;
using Catch::Approx;

TEST_CASE("config parsing") {
    const auto cfg = parse_config(ordered_json::parse(R"({
        "p": 0.3, "q": 0.15, "ps1_solo": 0.7, "ps1_joint": 0.2, "ps2_solo": 0.6,
        "ps2_joint": 0.1, "policy": "EA", "qa1": 0.4, "qa2": 0.9, "delta": 2.0, "eta": 0.5,
        "horizon": 5000, "burn_in": 100, "replications": 3, "seed": 9, "backend": "closed-form"})"));
    CHECK(cfg.source.p == 0.3);
    CHECK(cfg.channel.ps2_joint == 0.1);
    CHECK(cfg.policy_spec().kind() == PolicyKind::EA);
    CHECK(cfg.policy_spec().probabilities() == std::array<double, 2>{0.4, 0.9});
    CHECK(cfg.budget.delta_max == Approx(1.0));
    CHECK(cfg.budget.eta() == Approx(0.5));
    CHECK(cfg.sim.delta == 2.0);
    CHECK(cfg.sim.seed == 9);
    CHECK(cfg.backend == BackendChoice::closed_form);

    const auto dm = parse_config(ordered_json::parse(R"({"delta": 2.0, "delta_max": 1.2})"));
    CHECK(dm.budget.eta() == Approx(0.6));
}

TEST_CASE("config errors name the offending key") {
    auto err = [](const char* text) {
        try {
            parse_config(ordered_json::parse(text));
        } catch (const std::invalid_argument& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK_THAT(err(R"({"p": 0.2, "pa3": 1})"), Catch::Matchers::ContainsSubstring("pa3"));
    CHECK_THAT(err(R"({"p": "x"})"), Catch::Matchers::ContainsSubstring("p:"));
    CHECK_THAT(err(R"({"policy": "XX"})"), Catch::Matchers::ContainsSubstring("XX"));
    CHECK_THAT(err(R"({"backend": "gpu"})"), Catch::Matchers::ContainsSubstring("gpu"));
    CHECK_THAT(err(R"({"eta": 0.5, "delta_max": 0.7})"), Catch::Matchers::ContainsSubstring("delta_max"));
    CHECK_THAT(err(R"({"p": 0.7})"), Catch::Matchers::ContainsSubstring("p must lie"));
    CHECK_THAT(err(R"({"eta": 1.5})"), Catch::Matchers::ContainsSubstring("eta"));
    CHECK_THAT(err(R"({"replications": -2})"), Catch::Matchers::ContainsSubstring("replications"));
    CHECK_THROWS_AS(parse_json_text("{ \"p\": ", "inline"), ConfigError);
    CHECK_THROWS_AS(parse_config(ordered_json::parse("[1, 2]")), ConfigError);
}

TEST_CASE("evaluate rows") {
    ScenarioConfig cfg;
    cfg.policy = "SA";
    cfg.channel = ChannelParams::perfect();
    cfg.sim.horizon = cfg.sim.burn_in + 50'000;
    cfg.sim.replications = 2;
    for (const auto& r : evaluate(cfg, true)) CHECK(r.pe == 0.0);

    cfg = ScenarioConfig{};
    cfg.policy = "CA";
    const auto rows = evaluate(cfg, false);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].backend == "closed-form");
    CHECK(rows[1].backend == "exact-chain");
    for (const auto& r : rows) CHECK(r.cost == Approx(0.4).margin(1e-12));

    cfg.policy = "RS";
    cfg.prob1 = cfg.prob2 = 0.0;
    const auto z = evaluate(cfg, false);
    CHECK(z[0].pe == Approx(5.0 / 6.0).margin(1e-12));
    CHECK(z[0].boundary);
    CHECK(z[1].boundary);
    CHECK(z[1].pe == Approx(17.0 / 24.0).margin(1e-6));
}

TEST_CASE("presets") {
    for (const auto& name : preset_names()) CHECK_NOTHROW(preset(name).validate());
    CHECK_THROWS_AS(preset("fig-nope"), ConfigError);
    const auto p = preset("fig-p-sweep-q01");
    CHECK(p.grid().size() == 9);
    CHECK(p.grid().front() == 0.05);
    CHECK(p.grid().back() == 0.45);
    CHECK(p.panels.size() == 4);
    CHECK_FALSE(p.note.empty());
    CHECK(preset("fig-p-sweep-q04").source.q == 0.4);
    const auto e = preset("fig-eta-sweep");
    CHECK(e.grid().size() == 20);
    CHECK(e.grid().back() == 1.0);
    CHECK(preset("fig-eta-sweep-pq04").source.p == 0.4);
}

TEST_CASE("sweep rows") {
    SweepSpec s = preset("fig-p-sweep-q01");
    s.panels = {ChannelParams{0.8, 0.1, 0.8, 0.1}};
    const auto rows = run_sweep(s, 1);
    REQUIRE(rows.size() == 36);
    CHECK(std::string(kSweepHeader) ==
          "policy,p,q,eta,ps1_solo,ps1_joint,ps2_solo,ps2_joint,pa1,pa2,pe,cost,feasible,backend");

    std::map<double, std::map<std::string, SweepRow>> by_p;
    for (const auto& r : rows) {
        if (r.feasible) CHECK(r.cost <= r.eta * 1.0 + 1e-9);
        if ((r.policy == "CA" || r.policy == "SA") && !r.feasible) CHECK_FALSE(r.pe.has_value());
        by_p[r.p][r.policy] = r;
        CHECK(r.csv().substr(0, r.policy.size()) == r.policy);
    }
    CHECK(rows[0].policy == "RS");
    CHECK(rows[0].p == 0.05);
    CHECK(rows[0].csv().rfind(",exact-chain") != std::string::npos);
    for (auto& [p, m] : by_p) CHECK(*m["EA"].pe <= *m["RS"].pe + 1e-9);

    // Run order does not matter.
    const auto again = run_sweep(s, 3);
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].csv() == again[i].csv());
}

TEST_CASE("sweep flags infeasible CA and SA points") {
    SweepSpec s = preset("fig-p-sweep-q04");
    s.panels = {ChannelParams{0.2, 0.1, 0.2, 0.1}};
    s.policies = {"CA", "SA"};
    const auto rows = run_sweep(s, 1);
    std::size_t infeasible = 0;
    for (const auto& r : rows) {
        if (r.feasible) continue;
        ++infeasible;
        CHECK(r.cost > 0.8);
        CHECK(r.csv().find(",,") != std::string::npos);
    }
    CHECK(infeasible > 0);
}

TEST_CASE("sweep from a config object") {
    const auto s = sweep_from_config(ordered_json::parse(
        R"({"sweep": "eta", "from": 0.1, "to": 0.5, "step": 0.1, "p": 0.2, "q": 0.1,
            "policies": ["RS-equal", "CA"]})"));
    const auto rows = run_sweep(s, 1);
    CHECK(rows.size() == 10);
    CHECK(rows[0].prob1 == Approx(0.1 * 0.4 / 0.6).margin(1e-12));
    CHECK_THROWS_AS(sweep_from_config(ordered_json::parse(R"({"sweep": "q"})")), ConfigError);
    CHECK_THROWS_AS(sweep_from_config(ordered_json::parse(R"({"swep": "p"})")), ConfigError);
    CHECK_THROWS_AS(sweep_from_config(ordered_json::parse(R"({"sweep": "p", "to": 0.7})")),
                    ParameterDomainError);
}

TEST_CASE("concordance report") {
    const auto rep = validate(100, 11, std::nullopt, 1);
    REQUIRE(rep.rows.size() == 100 * 5 + 1);

    for (const auto& r : rep.rows) {
        const bool small = r.pe_diff && r.cost_diff && *r.pe_diff <= 1e-6 && *r.cost_diff <= 1e-6;
        if (r.classification == Classification::match) CHECK(small);
        if (r.classification == Classification::mismatch) CHECK_FALSE(small);
    }

    for (const auto& s : rep.summary) {
        if (s.policy == "RS" || s.policy == "CA") CHECK(s.cost_match_rate() == 1.0);
        CHECK(s.rows >= 100);
        CHECK(s.worst.has_value());
    }

    const auto& corner = rep.rows.back();
    CHECK(corner.policy == "RS");
    CHECK(corner.prob1 == 1.0);
    CHECK(corner.classification == Classification::mismatch);
    CHECK(*corner.pe_formula == Approx((0.2 - 1) / 0.4).margin(1e-12));
    CHECK(*corner.pe_chain == 0.0);

    // Every point where the two printed forms disagree shows up as a
    // mismatch row for one of them.
    for (std::size_t k : rep.identity_mismatch_points) {
        const auto& sa = rep.rows[k * 5 + 3];
        const auto& ea = rep.rows[k * 5 + 4];
        CHECK(sa.point == k);
        CHECK(ea.policy == "EA11");
        CHECK((sa.classification == Classification::mismatch ||
               ea.classification == Classification::mismatch));
    }
    CHECK(rep.identity_points == 100);

    const auto same = validate(100, 11, std::nullopt, 2);
    for (std::size_t i = 0; i < rep.rows.size(); ++i) CHECK(rep.rows[i].csv() == same.rows[i].csv());
    CHECK(summary_json(rep).dump() == summary_json(same).dump());
    CHECK_THROWS_AS(validate(0, 1), ConfigError);
}

TEST_CASE("concordance with simulation column") {
    SimConfig sim;
    sim.horizon = sim.burn_in + 20'000;
    sim.replications = 2;
    const auto rep = validate(2, 3, sim, 1);
    for (const auto& r : rep.rows) {
        if (r.point == 2) continue;
        REQUIRE(r.pe_sim.has_value());
        CHECK(*r.pe_sim == Approx(*r.pe_chain).margin(0.05));
    }
}

TEST_CASE("sampled points respect the interior box") {
    for (const auto& s : sample_points(300, 5)) {
        CHECK((s.source.p >= 0.05 && s.source.p <= 0.45));
        CHECK((s.source.q >= 0.05 && s.source.q <= 0.45));
        CHECK((s.prob1 >= 0.05 && s.prob2 <= 1.0));
        CHECK(s.channel.ps1_solo > s.channel.ps1_joint);
        CHECK(s.channel.ps2_solo > s.channel.ps2_joint);
        CHECK(s.channel.ps1_joint >= 0.05);
        CHECK(s.channel.ps2_solo <= 0.95);
    }
}

TEST_CASE("JSON views") {
    const auto r = solve(PolicySpec::rs(0.5, 0.5), {0.2, 0.1}, {0.8, 0.1, 0.8, 0.1});
    const auto j = to_json(r);
    CHECK(j["pi"].size() == 18);
    CHECK(j["pi"][2]["state"] == "S0|0,_");
    CHECK(j["projection"].size() == 8);
    CHECK(j["projection_residual"] == 0.0);
    CHECK(j["source_marginal"][0].get<double>() == Approx(0.5).margin(1e-12));

    const auto o = to_json(optimize_rs_equal({0.2, 0.1}, {0.8, 0.1, 0.8, 0.1}, Budget::from_eta(0.8)));
    CHECK(o["policy"] == "RS-equal");
    CHECK(o["backend"] == "exact-chain");
    CHECK(o["pa1"].get<double>() == Approx(0.533333).margin(1e-6));

    MetricsReport m;
    m.seed = 4;
    CHECK(to_json(m)["seed"] == 4);
}
