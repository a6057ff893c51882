#ifndef CORRMON_MODEL_HPP
#define CORRMON_MODEL_HPP

// Per-slot operational semantics of the two-process monitoring system:
// the three-state joint source, the four sampling policies, the shared
// interference channel, receiver-side reconstruction and error accounting.
//
// Everything here is a pure function of its arguments. The simulator and the
// exact-chain engine both consume these definitions and nothing else, so a
// change of semantics is made in exactly one place.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace corrmon {

class ParameterDomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Source
// ---------------------------------------------------------------------------

/// Joint source state. S0 means X1 = 0 (process 2 irrelevant); S10 and S11
/// mean X1 = 1 with X2 = 0 and X2 = 1 respectively.
enum class SourceState : std::uint8_t { S0 = 0, S10 = 1, S11 = 2 };

inline constexpr std::array<SourceState, 3> kSourceStates{SourceState::S0, SourceState::S10,
                                                          SourceState::S11};

/// Value of process 2 (or of its reconstruction). `irrelevant` is the value
/// carried while X1 = 0; it differs from both 0 and 1.
enum class Level : std::uint8_t { zero = 0, one = 1, irrelevant = 2 };

constexpr std::size_t index(SourceState s) { return static_cast<std::size_t>(s); }

constexpr int x1(SourceState s) { return s == SourceState::S0 ? 0 : 1; }

constexpr Level x2(SourceState s) {
    switch (s) {
    case SourceState::S10: return Level::zero;
    case SourceState::S11: return Level::one;
    default: return Level::irrelevant;
    }
}

inline std::string_view to_string(SourceState s) {
    switch (s) {
    case SourceState::S0: return "S0";
    case SourceState::S10: return "S10";
    case SourceState::S11: return "S11";
    }
    return "?";
}

inline std::string_view to_string(Level l) {
    switch (l) {
    case Level::zero: return "0";
    case Level::one: return "1";
    case Level::irrelevant: return "_";
    }
    return "?";
}

struct SourceParams {
    double p{0.2}; ///< per-edge exit probability out of each X1 = 1 state
    double q{0.1}; ///< per-edge exit probability out of S0

    void validate() const {
        if (!(p > 0.0 && p <= 0.5))
            throw ParameterDomainError("source parameter p must lie in (0, 0.5], got " +
                                       std::to_string(p));
        if (!(q > 0.0 && q <= 0.5))
            throw ParameterDomainError("source parameter q must lie in (0, 0.5], got " +
                                       std::to_string(q));
    }
};

using SourceKernel = std::array<std::array<double, 3>, 3>;

/// One-step transition matrix of the joint source over (S0, S10, S11).
inline SourceKernel source_kernel(const SourceParams& src) {
    src.validate();
    const double p = src.p;
    const double q = src.q;
    return {{{1.0 - 2.0 * q, q, q}, {p, 1.0 - 2.0 * p, p}, {p, p, 1.0 - 2.0 * p}}};
}

/// Stationary law of the joint source: (p, q, q) / (p + 2q).
inline std::array<double, 3> source_stationary(const SourceParams& src) {
    src.validate();
    const double z = src.p + 2.0 * src.q;
    return {src.p / z, src.q / z, src.q / z};
}

// ---------------------------------------------------------------------------
// Channel
// ---------------------------------------------------------------------------

struct ChannelParams {
    double ps1_solo{0.8};  ///< Rx1 decode success, only Tx1 active
    double ps1_joint{0.1}; ///< Rx1 decode success, both active
    double ps2_solo{0.8};  ///< Rx2 decode success, only Tx2 active
    double ps2_joint{0.1}; ///< Rx2 decode success, both active

    static constexpr ChannelParams perfect() { return {1.0, 1.0, 1.0, 1.0}; }

    void validate() const {
        auto check = [](double v, const char* name) {
            if (!(v >= 0.0 && v <= 1.0))
                throw ParameterDomainError(std::string("channel probability ") + name +
                                           " must lie in [0, 1], got " + std::to_string(v));
        };
        check(ps1_solo, "ps1_solo");
        check(ps1_joint, "ps1_joint");
        check(ps2_solo, "ps2_solo");
        check(ps2_joint, "ps2_joint");
    }

    /// Interference is expected to hurt. Violations are legal but worth a warning.
    bool strictly_ordered() const { return ps1_solo > ps1_joint && ps2_solo > ps2_joint; }
};

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

enum class PolicyKind : std::uint8_t { RS, CA, EA, SA };

inline std::string_view to_string(PolicyKind k) {
    switch (k) {
    case PolicyKind::RS: return "RS";
    case PolicyKind::CA: return "CA";
    case PolicyKind::EA: return "EA";
    case PolicyKind::SA: return "SA";
    }
    return "?";
}

namespace policy {
/// Randomized stationary: sample with fixed probability each slot.
struct RS {
    double pa1{0.5};
    double pa2{0.5};
};
/// Change-aware: sample iff the process changed since the previous slot.
struct CA {};
/// Error-aware: sample with probability qa_m iff receiver m is out of sync.
struct EA {
    double qa1{0.5};
    double qa2{0.5};
};
/// Semantics-aware: EA with qa1 = qa2 = 1.
struct SA {};
} // namespace policy

class PolicySpec {
public:
    using Variant = std::variant<policy::RS, policy::CA, policy::EA, policy::SA>;

    PolicySpec() : v_(policy::SA{}) {}
    PolicySpec(policy::RS rs) : v_(rs) {}
    PolicySpec(policy::CA ca) : v_(ca) {}
    PolicySpec(policy::EA ea) : v_(ea) {}
    PolicySpec(policy::SA sa) : v_(sa) {}

    static PolicySpec rs(double pa1, double pa2) { return policy::RS{pa1, pa2}; }
    static PolicySpec ca() { return policy::CA{}; }
    static PolicySpec ea(double qa1, double qa2) { return policy::EA{qa1, qa2}; }
    static PolicySpec sa() { return policy::SA{}; }

    PolicyKind kind() const { return static_cast<PolicyKind>(v_.index()); }
    const Variant& variant() const { return v_; }

    /// Sampling probabilities (pa or qa); (1, 1) for SA and (0, 0) for CA,
    /// which has none.
    std::array<double, 2> probabilities() const {
        switch (kind()) {
        case PolicyKind::RS: {
            const auto& rs = std::get<policy::RS>(v_);
            return {rs.pa1, rs.pa2};
        }
        case PolicyKind::EA: {
            const auto& ea = std::get<policy::EA>(v_);
            return {ea.qa1, ea.qa2};
        }
        case PolicyKind::SA: return {1.0, 1.0};
        case PolicyKind::CA: break;
        }
        return {0.0, 0.0};
    }

    bool has_probabilities() const { return kind() == PolicyKind::RS || kind() == PolicyKind::EA; }

    /// True when a sampling probability sits exactly at 0.
    bool at_zero_boundary() const {
        if (!has_probabilities()) return false;
        const auto pr = probabilities();
        return pr[0] == 0.0 || pr[1] == 0.0;
    }

    void validate() const {
        if (!has_probabilities()) return;
        for (double v : probabilities())
            if (!(v >= 0.0 && v <= 1.0))
                throw ParameterDomainError("sampling probability must lie in [0, 1], got " +
                                           std::to_string(v));
    }

    std::string describe() const {
        std::string s(to_string(kind()));
        if (has_probabilities()) {
            const auto pr = probabilities();
            s += "{" + std::to_string(pr[0]) + "," + std::to_string(pr[1]) + "}";
        }
        return s;
    }

private:
    Variant v_;
};

// ---------------------------------------------------------------------------
// Receivers
// ---------------------------------------------------------------------------

struct Reconstruction {
    int xhat1{0};
    Level xhat2{Level::irrelevant};

    friend constexpr bool operator==(const Reconstruction&, const Reconstruction&) = default;
};

/// Synchronized initial reconstruction for a source starting in S0.
inline constexpr Reconstruction kSyncedAtS0{0, Level::irrelevant};

/// (source, reconstruction) pair. Markov under every policy because each
/// decision depends only on the previous micro-state and the new source state.
struct MicroState {
    SourceState src{SourceState::S0};
    Reconstruction recon{kSyncedAtS0};

    static constexpr std::size_t count = 18;

    constexpr std::size_t index() const {
        return corrmon::index(src) * 6 + static_cast<std::size_t>(recon.xhat1) * 3 +
               static_cast<std::size_t>(recon.xhat2);
    }

    static constexpr MicroState from_index(std::size_t i) {
        return {static_cast<SourceState>(i / 6),
                {static_cast<int>((i % 6) / 3), static_cast<Level>(i % 3)}};
    }

    friend constexpr bool operator==(const MicroState&, const MicroState&) = default;

    std::string label() const {
        std::string s(to_string(src));
        s += "|";
        s += std::to_string(recon.xhat1);
        s += ",";
        s += to_string(recon.xhat2);
        return s;
    }
};

inline constexpr MicroState kInitialState{SourceState::S0, kSyncedAtS0};

// ---------------------------------------------------------------------------
// Slot semantics
// ---------------------------------------------------------------------------

/// Distribution over a pair of bits, indexed by 2*b1 + b2.
struct BitPairDist {
    std::array<double, 4> prob{};

    double operator()(int b1, int b2) const { return prob[static_cast<std::size_t>(2 * b1 + b2)]; }

    static BitPairDist independent(double p1, double p2) {
        return {{(1.0 - p1) * (1.0 - p2), (1.0 - p1) * p2, p1 * (1.0 - p2), p1 * p2}};
    }
    static BitPairDist point(int b1, int b2) {
        BitPairDist d;
        d.prob[static_cast<std::size_t>(2 * b1 + b2)] = 1.0;
        return d;
    }
};

/// Marginal firing probabilities of the two samplers. The two samplers are
/// conditionally independent given (x_prev, x_now, recon_prev) under every policy.
inline std::array<double, 2> sampling_probabilities(const PolicySpec& pol, SourceState x_prev,
                                                    SourceState x_now,
                                                    const Reconstruction& recon_prev) {
    const bool active2 = x1(x_now) == 1; // sampler 2 idles while X1 = 0
    switch (pol.kind()) {
    case PolicyKind::RS: {
        const auto& rs = std::get<policy::RS>(pol.variant());
        return {rs.pa1, active2 ? rs.pa2 : 0.0};
    }
    case PolicyKind::CA: {
        const double a1 = x1(x_now) != x1(x_prev) ? 1.0 : 0.0;
        const double a2 = active2 && x2(x_now) != x2(x_prev) ? 1.0 : 0.0;
        return {a1, a2};
    }
    case PolicyKind::EA:
    case PolicyKind::SA: {
        const auto qa = pol.probabilities();
        const double a1 = x1(x_now) != recon_prev.xhat1 ? qa[0] : 0.0;
        const double a2 = active2 && x2(x_now) != recon_prev.xhat2 ? qa[1] : 0.0;
        return {a1, a2};
    }
    }
    return {0.0, 0.0};
}

inline BitPairDist decision_distribution(const PolicySpec& pol, SourceState x_prev,
                                         SourceState x_now, const Reconstruction& recon_prev) {
    const auto a = sampling_probabilities(pol, x_prev, x_now, recon_prev);
    return BitPairDist::independent(a[0], a[1]);
}

/// Per-link decode success probabilities given the activation pattern.
inline std::array<double, 2> success_probabilities(int a1, int a2, const ChannelParams& ch) {
    if (a1 && a2) return {ch.ps1_joint, ch.ps2_joint};
    if (a1) return {ch.ps1_solo, 0.0};
    if (a2) return {0.0, ch.ps2_solo};
    return {0.0, 0.0};
}

inline BitPairDist channel_distribution(int a1, int a2, const ChannelParams& ch) {
    const auto s = success_probabilities(a1, a2, ch);
    return BitPairDist::independent(s[0], s[1]);
}

/// Receiver update after decoding. A process-1 update reporting X1 = 0 also
/// tells Rx2 that process 2 is irrelevant; any process-2 update implies X1 = 1.
inline Reconstruction apply_reception(SourceState x_now, Reconstruction recon, int s1, int s2) {
    if (s1) {
        recon.xhat1 = x1(x_now);
        if (x1(x_now) == 0) recon.xhat2 = Level::irrelevant;
    }
    if (s2) {
        recon.xhat2 = x2(x_now);
        recon.xhat1 = 1;
    }
    return recon;
}

struct ErrorFlags {
    int e1{0};
    int e2{0};
    int sys{0};

    friend constexpr bool operator==(const ErrorFlags&, const ErrorFlags&) = default;
};

/// Discrepancy errors. While X1 = 0 both receivers share Rx1's sync status.
inline ErrorFlags errors(SourceState x_now, const Reconstruction& recon) {
    ErrorFlags f;
    f.e1 = x1(x_now) != recon.xhat1 ? 1 : 0;
    f.e2 = x1(x_now) == 1 ? (x2(x_now) != recon.xhat2 ? 1 : 0) : f.e1;
    f.sys = (f.e1 + f.e2 != 0) ? 1 : 0;
    return f;
}

inline ErrorFlags errors(const MicroState& s) { return errors(s.src, s.recon); }

struct SlotOutcome {
    int a1{0}, a2{0};
    int s1{0}, s2{0};
    ErrorFlags err{};
    double cost{0.0}; ///< delta * (a1 + a2)
};

} // namespace corrmon

#endif // CORRMON_MODEL_HPP
