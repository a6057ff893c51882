#include "corrmon/exact_chain.hpp"
#include "corrmon/model.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace corrmon;
using Catch::Approx;

namespace {

const Reconstruction r0b{0, Level::irrelevant};
const Reconstruction r10{1, Level::zero};
const Reconstruction r11{1, Level::one};
const Reconstruction r1b{1, Level::irrelevant};

std::vector<Reconstruction> all_recons() {
    std::vector<Reconstruction> v;
    for (int x1 = 0; x1 < 2; ++x1)
        for (Level l : {Level::zero, Level::one, Level::irrelevant}) v.push_back({x1, l});
    return v;
}

PolicySpec random_policy(std::mt19937_64& g) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    switch (g() % 4) {
    case 0: return PolicySpec::rs(u(g), u(g));
    case 1: return PolicySpec::ca();
    case 2: return PolicySpec::ea(u(g), u(g));
    default: return PolicySpec::sa();
    }
}

} // namespace

TEST_CASE("source kernel rows") {
    const auto k = source_kernel({0.25, 0.25});
    CHECK(k[0] == std::array<double, 3>{0.5, 0.25, 0.25});
    CHECK(k[1] == std::array<double, 3>{0.25, 0.5, 0.25});
    CHECK(k[2] == std::array<double, 3>{0.25, 0.25, 0.5});

    std::mt19937_64 g(7);
    std::uniform_real_distribution<double> u(1e-6, 0.5);
    for (int n = 0; n < 1000; ++n) {
        const auto kk = source_kernel({u(g), u(g)});
        for (const auto& row : kk) CHECK(row[0] + row[1] + row[2] == Approx(1.0).margin(1e-15));
    }
}

TEST_CASE("source stationary law") {
    auto near = [](std::array<double, 3> a, std::array<double, 3> b) {
        for (int i = 0; i < 3; ++i)
            if (std::abs(a[i] - b[i]) > 1e-15) return false;
        return true;
    };
    CHECK(near(source_stationary({0.2, 0.1}), {0.5, 0.25, 0.25}));
    CHECK(near(source_stationary({0.3, 0.3}), {1.0 / 3, 1.0 / 3, 1.0 / 3}));
    CHECK(near(source_stationary({0.4, 0.1}), {2.0 / 3, 1.0 / 6, 1.0 / 6}));

    // It is a fixed point of the kernel.
    const auto k = source_kernel({0.2, 0.1});
    const auto pi = source_stationary({0.2, 0.1});
    for (int j = 0; j < 3; ++j) {
        double s = 0;
        for (int i = 0; i < 3; ++i) s += pi[i] * k[i][j];
        CHECK(s == Approx(pi[j]).margin(1e-15));
    }
}

TEST_CASE("parameter domain") {
    CHECK_THROWS_AS((SourceParams{0.0, 0.1}.validate()), ParameterDomainError);
    CHECK_THROWS_AS((SourceParams{0.2, 0.6}.validate()), ParameterDomainError);
    CHECK_NOTHROW((SourceParams{0.5, 0.5}.validate()));
    CHECK_THROWS_AS((ChannelParams{1.1, 0.1, 0.8, 0.1}.validate()), ParameterDomainError);
    CHECK_THROWS_AS(PolicySpec::rs(-0.1, 0.5).validate(), ParameterDomainError);
    CHECK_NOTHROW(PolicySpec::ea(0.0, 1.0).validate());
    CHECK_FALSE((ChannelParams{0.1, 0.8, 0.8, 0.1}.strictly_ordered()));
}

TEST_CASE("decision distribution examples") {
    const auto rs = decision_distribution(PolicySpec::rs(0.5, 0.5), SourceState::S10,
                                          SourceState::S0, r10);
    CHECK(rs(0, 0) == 0.5);
    CHECK(rs(1, 0) == 0.5);
    CHECK(rs(0, 1) == 0.0);
    CHECK(rs(1, 1) == 0.0);

    const auto ca = decision_distribution(PolicySpec::ca(), SourceState::S11, SourceState::S10, r11);
    CHECK(ca(0, 1) == 1.0);

    const auto ea = decision_distribution(PolicySpec::ea(0.3, 0.7), SourceState::S0,
                                          SourceState::S10, r10);
    CHECK(ea(0, 0) == 1.0);
}

TEST_CASE("CA sampling pattern around S0") {
    // Leaving S0: both processes change (X2 leaves the irrelevant value).
    auto d = decision_distribution(PolicySpec::ca(), SourceState::S0, SourceState::S11, r0b);
    CHECK(d(1, 1) == 1.0);
    // Entering S0: sampler 2 is idle while X1 = 0.
    d = decision_distribution(PolicySpec::ca(), SourceState::S10, SourceState::S0, r10);
    CHECK(d(1, 0) == 1.0);
    // No change, no sample.
    d = decision_distribution(PolicySpec::ca(), SourceState::S10, SourceState::S10, r1b);
    CHECK(d(0, 0) == 1.0);
}

TEST_CASE("channel distribution examples") {
    const ChannelParams ch{0.8, 0.1, 0.8, 0.1};
    const auto both = channel_distribution(1, 1, ch);
    CHECK(both(1, 1) == Approx(0.01).margin(1e-15));
    CHECK(both(1, 0) == Approx(0.09).margin(1e-15));
    CHECK(both(0, 1) == Approx(0.09).margin(1e-15));
    CHECK(both(0, 0) == Approx(0.81).margin(1e-15));
    CHECK(channel_distribution(0, 0, ch)(0, 0) == 1.0);
    const auto solo = channel_distribution(1, 0, ch);
    CHECK(solo(1, 0) == Approx(0.8).margin(1e-15));
    CHECK(solo(0, 0) == Approx(0.2).margin(1e-15));
}

TEST_CASE("reception examples") {
    CHECK(apply_reception(SourceState::S10, r0b, 0, 1) == r10);
    CHECK(apply_reception(SourceState::S0, r11, 1, 0) == r0b);
    for (SourceState x : kSourceStates)
        for (const auto& r : all_recons()) CHECK(apply_reception(x, r, 0, 0) == r);
}

TEST_CASE("error examples") {
    auto e = errors(SourceState::S0, r0b);
    CHECK((e.e1 == 0 && e.e2 == 0 && e.sys == 0));
    e = errors(SourceState::S0, r10);
    CHECK((e.e1 == 1 && e.e2 == 1 && e.sys == 1));
    e = errors(SourceState::S11, r10);
    CHECK((e.e1 == 0 && e.e2 == 1 && e.sys == 1));
}

TEST_CASE("reception synchronizes") {
    for (const auto& r : all_recons()) {
        for (int s1 = 0; s1 < 2; ++s1) {
            for (SourceState x : {SourceState::S10, SourceState::S11}) {
                const auto e = errors(x, apply_reception(x, r, s1, 1));
                CHECK((e.e1 == 0 && e.e2 == 0 && e.sys == 0));
            }
        }
        // At S0 sampler 2 is idle, so only s2 = 0 arises.
        {
            const auto e = errors(SourceState::S0, apply_reception(SourceState::S0, r, 1, 0));
            CHECK(e.sys == 0);
        }
    }
}

TEST_CASE("distributions are probability vectors") {
    std::mt19937_64 g(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int n = 0; n < 2000; ++n) {
        const auto pol = random_policy(g);
        const ChannelParams ch{u(g), u(g), u(g), u(g)};
        for (SourceState xp : kSourceStates)
            for (SourceState xn : kSourceStates)
                for (const auto& r : all_recons()) {
                    const auto d = decision_distribution(pol, xp, xn, r);
                    double s = 0;
                    for (double v : d.prob) {
                        CHECK(v >= 0.0);
                        s += v;
                    }
                    CHECK(s == Approx(1.0).margin(1e-12));
                    // Sampler 2 never fires while X1 = 0.
                    if (xn == SourceState::S0) CHECK(d(0, 1) + d(1, 1) == 0.0);
                }
        for (int a1 = 0; a1 < 2; ++a1)
            for (int a2 = 0; a2 < 2; ++a2) {
                const auto d = channel_distribution(a1, a2, ch);
                double s = 0;
                for (double v : d.prob) {
                    CHECK(v >= 0.0);
                    s += v;
                }
                CHECK(s == Approx(1.0).margin(1e-12));
            }
    }
}

TEST_CASE("SA and EA{1,1} decide identically") {
    for (SourceState xp : kSourceStates)
        for (SourceState xn : kSourceStates)
            for (const auto& r : all_recons()) {
                const auto a = decision_distribution(PolicySpec::sa(), xp, xn, r);
                const auto b = decision_distribution(PolicySpec::ea(1, 1), xp, xn, r);
                CHECK(a.prob == b.prob);
            }
}

TEST_CASE("unreachable error pattern") {
    // X1 = 1 with receiver 1 wrong and receiver 2 right never occurs.
    std::mt19937_64 g(5);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (int n = 0; n < 300; ++n) {
        const auto pol = random_policy(g);
        const SourceParams src{u(g) / 2, u(g) / 2};
        const ChannelParams ch{u(g), u(g), u(g), u(g)};
        const auto m = build_kernel(pol, src, ch);
        const auto reach = reachability(m.kernel);
        const std::size_t start = kInitialState.index();
        for (std::size_t j = 0; j < kStates; ++j) {
            if (!reach[start][j]) continue;
            const auto s = MicroState::from_index(j);
            const auto e = errors(s);
            CHECK_FALSE((x1(s.src) == 1 && e.e1 == 1 && e.e2 == 0));
        }
    }
}

TEST_CASE("micro-state indexing round trip") {
    for (std::size_t i = 0; i < MicroState::count; ++i)
        CHECK(MicroState::from_index(i).index() == i);
    CHECK(kInitialState.index() == 2);
}
