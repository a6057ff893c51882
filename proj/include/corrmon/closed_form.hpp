#ifndef CORRMON_CLOSED_FORM_HPP
#define CORRMON_CLOSED_FORM_HPP

// Published closed-form expressions for the long-run reconstruction error,
// the sampling cost and the aggregate steady-state vectors of the four
// policies. They are evaluated literally, suspected misprints included:
// nothing is clamped or repaired here. FormulaValue::in_unit_interval and
// the concordance report (experiment.hpp) say whether a value is trustworthy.
//
// Channel shorthand used throughout:
//   s11  = ps1_solo   s112 = ps1_joint   s22 = ps2_solo   s212 = ps2_joint
// The symbols p_{1/12} and p_{1/1} that appear inside G and G' are read as
// s112 and s11.

#include "corrmon/exact_chain.hpp"
#include "corrmon/model.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace corrmon {

/// A denominator of a published expression vanishes at the requested point.
class BoundaryEvaluation : public std::domain_error {
public:
    explicit BoundaryEvaluation(std::string factor)
        : std::domain_error("closed-form denominator vanishes: " + factor),
          factor_(std::move(factor)) {}
    const std::string& factor() const { return factor_; }

private:
    std::string factor_;
};

struct FormulaValue {
    double value{0.0};
    bool in_unit_interval{true};
    PolicyKind policy{PolicyKind::RS};
    /// Some sampling probability is exactly 0: the behavioural chain is
    /// reducible there and the value is the interior (ergodic) limit.
    bool ergodic_limit{false};
    static constexpr std::string_view backend = "closed-form";
};

using NamedValues = std::vector<std::pair<std::string, double>>;

struct RSCoefficients {
    double F, G, A, B, D, I, H, K;
    double den; ///< (p+2q)[(2pG-G+1) pa1 s11 + 2q(pG-G+1)(1 - pa1 s11)]

    NamedValues named() const {
        return {{"F", F}, {"G", G}, {"A", A}, {"B", B}, {"D", D},
                {"I", I}, {"H", H}, {"K", K}, {"den", den}};
    }
};

struct EACoefficients {
    double Fp, Gp, Z1, Z2, M, N, J, W;

    NamedValues named() const {
        return {{"F'", Fp}, {"G'", Gp}, {"Z1", Z1}, {"Z2", Z2},
                {"M", M},   {"N", N},   {"J", J},   {"W", W}};
    }
};

struct SACACoefficients {
    double L1, L2, Y1, Y2;

    NamedValues named() const { return {{"L1", L1}, {"L2", L2}, {"Y1", Y1}, {"Y2", Y2}}; }
};

using CoefficientRecord = std::variant<RSCoefficients, EACoefficients, SACACoefficients>;

inline NamedValues named(const CoefficientRecord& rec) {
    return std::visit([](const auto& c) { return c.named(); }, rec);
}

namespace detail {

struct Chan {
    double s11, s112, s22, s212;
    explicit Chan(const ChannelParams& c)
        : s11(c.ps1_solo), s112(c.ps1_joint), s22(c.ps2_solo), s212(c.ps2_joint) {}
};

inline double divide(double num, double den, const char* factor) {
    if (std::abs(den) < 1e-300) throw BoundaryEvaluation(factor);
    return num / den;
}

inline FormulaValue make_value(double v, const PolicySpec& pol) {
    FormulaValue f;
    f.value = v;
    f.in_unit_interval = std::isfinite(v) && v >= 0.0 && v <= 1.0;
    f.policy = pol.kind();
    f.ergodic_limit = pol.at_zero_boundary();
    return f;
}

inline void check(const PolicySpec& pol, const SourceParams& src, const ChannelParams& ch) {
    src.validate();
    ch.validate();
    pol.validate();
}

} // namespace detail

// ---------------------------------------------------------------------------
// Coefficients
// ---------------------------------------------------------------------------

inline RSCoefficients rs_coefficients(double a1, double a2, const SourceParams& src,
                                      const ChannelParams& ch) {
    const detail::Chan c(ch);
    const double p = src.p, q = src.q;
    RSCoefficients k{};
    k.F = a2 * c.s22 - a1 * a2 * (c.s11 - c.s112 * (1 - c.s22) - c.s212 + c.s22);
    k.G = 1 - a1 * a2 * (c.s112 * (1 - c.s212) + c.s212 - c.s22) - a1 * (1 - a2) * c.s11 -
          a2 * c.s22;
    k.H = 1 + a1 * a2 * (c.s22 - c.s212) - a2 * c.s22;
    k.A = 4 * p * q * k.G * k.H + 4 * q * a2 * c.s22 * (1 - a2 * c.s22);
    k.B = 3 * p + (1 - 3 * p) * a1 * a2 * c.s212 + (1 - 3 * p) * (1 - a1) * a2 * c.s22;
    k.D = a2 * c.s11 * c.s22 + 4 * q * c.s11 - 4 * q * a2 * c.s112 * (1 - c.s212) -
          4 * q * a2 * c.s212 + 8 * q * a2 * c.s11 * c.s22 + p * (1 - 4 * q) * c.s11 * k.G * k.H -
          a2 * a2 * c.s22 *
              (c.s11 * c.s22 - 4 * q * c.s11 + 4 * q * c.s112 - 4 * q * c.s112 * c.s212 +
               8 * q * c.s212 - 4 * q * (2 + c.s11) * c.s22 + 4 * q * a2 * (c.s22 - c.s11));
    k.I = 4 * q * a2 * a2 * (c.s22 - c.s212) * (c.s112 * (1 - c.s212) + c.s212 - c.s22) +
          (1 - a2) * c.s11 * c.s11 * (2 - 4 * q - a2 * c.s22 * (1 - 4 * q)) -
          a2 * c.s11 * (c.s22 - c.s212) * (1 - 2 * a2 * c.s22 - 4 * q * (2 - a2 - 2 * a2 * c.s22)) -
          a2 * c.s11 * c.s112 * (1 - c.s212) * (2 - 4 * q - a2 * c.s22 * (1 - 4 * q));
    k.K = -a2 * c.s11 * (c.s22 - c.s212) *
          ((1 - a2) * c.s11 + a2 * c.s112 * (1 - c.s212) + a2 * c.s212 - a2 * c.s22) * (1 - 4 * q);
    k.den = (p + 2 * q) * ((2 * p * k.G - k.G + 1) * a1 * c.s11 +
                           2 * q * (p * k.G - k.G + 1) * (1 - a1 * c.s11));
    return k;
}

inline EACoefficients ea_coefficients(double q1, double q2, const SourceParams& src,
                                      const ChannelParams& ch) {
    const detail::Chan c(ch);
    const double p = src.p, q = src.q;
    EACoefficients k{};
    k.Fp = q2 * c.s22 - q1 * q2 * (c.s11 - c.s112 * (1 - c.s22) - c.s212 + c.s22);
    k.Gp = 1 - q1 * q2 * (c.s112 * (1 - c.s212) + c.s212 - c.s22) - q1 * (1 - q2) * c.s11 -
           q2 * c.s22;
    k.Z1 = (p + 2 * q) * ((2 * p * k.Gp - k.Gp + 1) * q1 * c.s11 +
                          2 * q * (p * k.Gp - k.Gp + 1) * (1 - q1 * c.s11));
    k.Z2 = k.Z1 * (3 * p + (1 - 3 * p) * q2 * c.s22);
    k.M = 3 * q2 * c.s22 * (1 - q2 * c.s22) +
          q1 * q2 * c.s112 * (1 - c.s212) * (1 - 3 * q2 * c.s22) +
          q1 * c.s11 * (1 - q2) * (1 - 3 * q2 * c.s22) +
          q1 * q2 * (c.s22 - c.s212) * (-2 + 3 * q2 * c.s22);
    k.N = 4 * p * q * q2 * c.s22 * (1 - q1 * c.s11) * (1 - q2 * c.s22) +
          2 * p * p * k.Gp * (1 - q2 * c.s22) * (q + (1 - q) * q1 * c.s11) +
          2 * p * q * q1 * (1 - q1 * c.s11) * (1 - 2 * q2 * c.s22) *
              ((1 - q2) * c.s11 - q2 * (c.s112 * (1 - c.s212) + c.s212 - c.s22));
    k.J = 2 * q1 * (1 - q2) * c.s11 + q1 * q2 * (2 * c.s112 * (1 - c.s212) + c.s212) +
          q2 * c.s22 * (1 - p * k.Gp) - q1 * q2 * c.s22 * (1 + c.s11 - q2 * c.s11) -
          q1 * q2 * q2 * c.s22 * (c.s112 + c.s212 - c.s112 * c.s212) -
          q2 * q2 * c.s22 * c.s22 * (1 - q1);
    k.W = (1 - q1 * c.s11) * (1 - q2 * c.s22);
    return k;
}

inline SACACoefficients saca_coefficients(const SourceParams& src, const ChannelParams& ch) {
    const detail::Chan c(ch);
    const double p = src.p, q = src.q;
    SACACoefficients k{};
    k.L1 = (p + 2 * q) * (2 * p * (1 - c.s112) * (1 - c.s212) * (q + (1 - q) * c.s11) +
                          (c.s112 * (1 - c.s212) + c.s212) * (2 * q + (1 - 2 * q) * c.s11));
    k.L2 = (3 * p - 3 * p * c.s22 + c.s22) * k.L1;
    k.Y1 = (p + 2 * q) * (1 + c.s112 + (1 - c.s112) * (c.s212 + (1 - c.s212) * c.s11));
    k.Y2 = (3 - c.s22) * k.Y1;
    return k;
}

inline CoefficientRecord coefficients(const PolicySpec& pol, const SourceParams& src,
                                      const ChannelParams& ch) {
    detail::check(pol, src, ch);
    const auto pr = pol.probabilities();
    switch (pol.kind()) {
    case PolicyKind::RS: return rs_coefficients(pr[0], pr[1], src, ch);
    case PolicyKind::EA: return ea_coefficients(pr[0], pr[1], src, ch);
    default: return saca_coefficients(src, ch);
    }
}

// ---------------------------------------------------------------------------
// Reconstruction error
// ---------------------------------------------------------------------------

namespace detail {

inline double pe_rs(double a1, double a2, const SourceParams& src, const ChannelParams& ch) {
    const Chan c(ch);
    const double p = src.p, q = src.q;
    const auto k = rs_coefficients(a1, a2, src, ch);
    const double first =
        divide(a1 * c.s11 * (k.F + 2 * p * k.G + a1 * c.s11), k.den, "RS (p+2q)[(2pG-G+1)...]");
    const double second =
        divide(2 * q * (p + (1 - p) * a1 * a2 * c.s212 + (1 - p) * (1 - a1) * a2 * c.s22),
               (p + 2 * q) * k.B, "RS (p+2q)B");
    return 1 - first - second;
}

inline double pe_ea(double q1, double q2, const SourceParams& src, const ChannelParams& ch) {
    const Chan c(ch);
    const double p = src.p, q = src.q;
    const auto k = ea_coefficients(q1, q2, src, ch);
    const double t1 = divide(q1 * c.s11 * (k.Fp + 2 * p * k.Gp + q1 * c.s11), k.Z1, "EA Z1");
    const double t2 = divide(2 * p * q * k.M * q1 * c.s11, k.Z2, "EA Z2");
    const double t3 = divide(
        2 * (q * k.N + q * q1 * c.s22 * (1 - k.Gp) * (2 * q + (1 - 2 * q) * q1 * c.s11)), k.Z2,
        "EA Z2");
    return 1 - t1 - t2 - t3;
}

inline double pe_sa(const SourceParams& src, const ChannelParams& ch) {
    const Chan c(ch);
    const double p = src.p, q = src.q;
    const double s11 = c.s11, s112 = c.s112, s22 = c.s22, s212 = c.s212;
    // Same polynomial as printed, with pq factored out of the middle terms so
    // that the perfect-channel cancellation is exact in floating point.
    const double mid =
        2 * s212 + 2 * s112 * (1 - s212) * (4 * q + (1 - 4 * q) * s22) - 8 * s11 * s22 +
        2 * s11 * s212 * ((1 - 3 * s22) + 4 * q * (s22 - 1)) +
        2 * s11 * s112 * (1 - s212) * (2 - 4 * q - (3 - 4 * q) * s22) + 8 * s11 + 6 * s112 -
        14 * s11 * s212 - 6 * s112 * s212 + 14 * s11 * s112 * s212 + 2 * s22 - 8 * s112 * s22 -
        8 * s212 * s22 + 16 * s11 * s212 * s22 + 8 * s112 * s212 * s22 + 6 * s212 -
        14 * s11 * s112 + 16 * s11 * s112 * s22 * (1 - s212);
    const double num = 6 * q * p * p * p * (1 - s11) * (1 - s112) * (1 - s212) * (1 - s22) +
                       8 * p * q * q * (1 - s11) * (1 - s112) * (1 - s212) * (1 - s22) +
                       p * q * mid;
    return divide(num, saca_coefficients(src, ch).L2, "SA L2");
}

inline double pe_ca(const SourceParams& src, const ChannelParams& ch) {
    const Chan c(ch);
    const double p = src.p, q = src.q;
    // 1 - 2p s11/Y1 - 2q(1+s212)/((p+2q)(3-s22)) with the common (p+2q)
    // pulled out of both fractions; Y1 = (p+2q) y.
    const double y = 1 + c.s112 + (1 - c.s112) * (c.s212 + (1 - c.s212) * c.s11);
    const double u = divide(2 * p * c.s11, y, "CA Y1");
    const double v = divide(2 * q * (1 + c.s212), 3 - c.s22, "CA (p+2q)(3-s22)");
    const double z = p + 2 * q;
    return (z - (u + v)) / z;
}

} // namespace detail

inline FormulaValue pe_closed_form(const PolicySpec& pol, const SourceParams& src,
                                   const ChannelParams& ch) {
    detail::check(pol, src, ch);
    const auto pr = pol.probabilities();
    double v = 0.0;
    switch (pol.kind()) {
    case PolicyKind::RS: v = detail::pe_rs(pr[0], pr[1], src, ch); break;
    case PolicyKind::EA: v = detail::pe_ea(pr[0], pr[1], src, ch); break;
    case PolicyKind::SA: v = detail::pe_sa(src, ch); break;
    case PolicyKind::CA: v = detail::pe_ca(src, ch); break;
    }
    return detail::make_value(v, pol);
}

// ---------------------------------------------------------------------------
// Sampling cost
// ---------------------------------------------------------------------------

namespace detail {

inline double cost_ea(double q1, double q2, const SourceParams& src, const ChannelParams& ch) {
    const Chan c(ch);
    const double p = src.p, q = src.q;
    const double s11 = c.s11, s112 = c.s112, s22 = c.s22, s212 = c.s212;
    const auto k = ea_coefficients(q1, q2, src, ch);
    const double Gp = k.Gp;
    const double b = s112 * (1 - s212) + s212 - s22;
    const double qq = q1 * q2;
    const double bracket =
        3 * Gp * p * p * q1 * (1 - q2 * s22) + q1 * q2 * q2 * s22 * (2 * s11 + s22) +
        2 * q1 * q1 * q2 * (1 - q2) * s11 * s11 + qq * qq * s11 * (2 * s112 * (1 - s212) + s212) +
        qq * qq * s22 * b + 2 * q1 * q1 * q2 * (1 - q2) * s11 * s22 +
        4 * q * q2 * (1 - Gp) * (1 - q1 * s11) + 4 * p * q * q2 * (1 - q2 * s22) +
        4 * p * q1 * q2 * (s11 + s22) * (1 - q2 * s22) - 4 * p * q1 * q2 * q2 * b -
        8 * p * q * q1 * q2 * s11 - p * q1 * q1 * q2 * b * (-3 + 4 * q2 * s22) +
        4 * p * q * q1 * q2 * q2 * s11 * (1 + s22) -
        4 * p * (1 - q) * q1 * q1 * q2 * (1 - q2) * s11 * s11 - 3 * p * q1 * q1 * q2 * s11 -
        7 * p * q1 * q1 * q2 * s11 * s22 - p * qq * qq * s11 * s212 -
        p * qq * qq * s11 * (-5 * s22 + 4 * s112 * (1 - s212) * (1 - q) - 4 * q * s212) +
        6 * p * q1 * q1 * s11 - 4 * p * q * qq * qq * s11 * s22;
    return divide(2 * p * q * bracket, k.Z2, "EA Z2");
}

inline double cost_sa(const SourceParams& src, const ChannelParams& ch) {
    const Chan c(ch);
    const double p = src.p, q = src.q;
    const double s11 = c.s11, s112 = c.s112, s22 = c.s22, s212 = c.s212;
    const double bracket =
        3 * p * p * (1 - s112) * (1 - s212) * (1 - s22) + 4 * p * s11 * s112 * s212 +
        (s212 + (1 - s212) * s112) * (s22 + 4 * q) + s11 * (s212 + 2 * s22) +
        s11 * (-4 * q * s212 + 2 * s112 * (1 - 2 * q) * (1 - s212)) + 3 * p * s212 + p * s22 +
        4 * p * q - 4 * p * s212 * (q + s22) + p * s112 * (1 - s212) * (3 - 4 * s22 - 4 * q) +
        p * s11 * (7 - s212 - 6 * s22 - 4 * q * (1 - s212) - 4 * s112) +
        4 * p * q * s11 * s112 * (1 - s212);
    return divide(2 * p * q * bracket, saca_coefficients(src, ch).L2, "SA L");
}

} // namespace detail

/// Long-run sampling cost per slot (including the factor delta).
inline FormulaValue cost_closed_form(const PolicySpec& pol, const SourceParams& src,
                                     const ChannelParams& ch, double delta) {
    detail::check(pol, src, ch);
    if (!(delta >= 0.0)) throw ParameterDomainError("delta must be non-negative");
    const double p = src.p, q = src.q;
    const auto pr = pol.probabilities();
    double per_delta = 0.0;
    switch (pol.kind()) {
    case PolicyKind::RS:
        per_delta = ((p + 2 * q) * pr[0] + 2 * q * pr[1]) / (p + 2 * q);
        break;
    case PolicyKind::CA: per_delta = 8 * p * q / (p + 2 * q); break;
    case PolicyKind::EA: per_delta = detail::cost_ea(pr[0], pr[1], src, ch); break;
    case PolicyKind::SA: per_delta = detail::cost_sa(src, ch); break;
    }
    FormulaValue f = detail::make_value(delta * per_delta, pol);
    // A cost lives in [0, 2 delta], not [0, 1].
    f.in_unit_interval = std::isfinite(per_delta) && per_delta >= 0.0 && per_delta <= 2.0;
    return f;
}

// ---------------------------------------------------------------------------
// Aggregate steady-state vectors
// ---------------------------------------------------------------------------

/// Published steady-state probabilities, in PaperProjection::labels order.
/// The (1,1,.,.) entries copy the (1,0,.,.) ones.
struct PaperVector {
    std::array<double, 8> mass{};

    double total() const {
        double s = 0.0;
        for (double v : mass) s += v;
        return s;
    }
};

inline PaperVector stationary_closed_form(const PolicySpec& pol, const SourceParams& src,
                                          const ChannelParams& ch) {
    using detail::divide;
    detail::check(pol, src, ch);
    const detail::Chan c(ch);
    const double p = src.p, q = src.q;
    const double s11 = c.s11, s112 = c.s112, s22 = c.s22, s212 = c.s212;
    const auto pr = pol.probabilities();

    double v000 = 0, v011 = 0, v1000 = 0, v1001 = 0, v1011 = 0;
    switch (pol.kind()) {
    case PolicyKind::RS: {
        const double a1 = pr[0], a2 = pr[1];
        const auto k = rs_coefficients(a1, a2, src, ch);
        const char* den = "RS (p+2q)[(2pG-G+1)...]";
        v000 = divide(a1 * s11 * (k.F + 2 * p * k.G + a1 * s11), k.den, den);
        v011 = divide(2 * p * q * (1 - a1 * s11) * (k.F + p * k.G + a1 * s11), k.den, den);
        v1000 = divide(q * (p + (1 - p) * a1 * a2 * s212 + (1 - p) * (1 - a1) * a2 * s22),
                       (p + 2 * q) * k.B, "RS (p+2q)B");
        v1001 = divide(p * q * (-k.K * a1 * a1 * a1 + k.I * a1 * a1 + k.D * a1 + k.A),
                       k.B * k.den, "RS B(p+2q)[...]");
        v1011 = divide(p * q * k.G * a1 * s11, k.den, den);
        break;
    }
    case PolicyKind::EA: {
        const double q1 = pr[0], q2 = pr[1];
        const auto k = ea_coefficients(q1, q2, src, ch);
        v000 = divide(q1 * s11 * (k.Fp + 2 * p * k.Gp + q1 * s11), k.Z1, "EA Z1");
        v011 = divide(2 * p * q * (1 - q1 * s11) * (k.Fp + p * k.Gp + q1 * s11), k.Z1, "EA Z1");
        v1000 = divide(q * k.N + q * q1 * s22 * (1 - k.Gp) * (2 * q + (1 - 2 * q) * q1 * s11) +
                           p * q * k.M * q1 * s11,
                       k.Z2, "EA Z2");
        v1001 = divide(p * q * ((p * k.Gp + k.J) * q1 * s11 + 4 * q * k.W * (1 - (1 - p) * k.Gp)),
                       k.Z2, "EA Z2");
        v1011 = divide(p * q * k.Gp * q1 * s11, k.Z1, "EA Z1");
        break;
    }
    case PolicyKind::SA: {
        const auto k = saca_coefficients(src, ch);
        const double common = s212 + (1 - s212) * (2 * p + (1 - 2 * p) * s112);
        v000 = divide(p * s11 * common, k.L1, "SA L1");
        v011 = divide(2 * p * q * (1 - s11) * common, k.L1, "SA L1");
        v1000 = divide(
            2 * q * p * p * (1 - s112) * (1 - s212) * (1 - s22) * (q + (1 - q) * s11) +
                q * (s112 * (1 - s212) + s212) * (2 * q + (1 - 2 * q) * s11) * s22 +
                2 * p * q * q * s22 + 2 * p * q * q * (1 - 2 * s22) * (s212 + s112 * (1 - s212)) +
                p * q * s11 * (s22 - 2 * q * s22 + (2 - 3 * s22 - 2 * q + 4 * q * s22) * s212) +
                p * q * s11 * s112 * (1 - s212) * (1 - 2 * q - (3 - 4 * q) * s22),
            k.L2, "SA L2");
        v1001 = divide(4 * p * q * q * (s212 + (1 - s212) * s112) * (1 - s22) +
                           q * p * p * (1 - s112) * (1 - s212) * (1 - s22) *
                               (4 * q + (1 - 4 * q) * s11) +
                           p * q * s11 * s112 * (1 - s212) * (2 - 4 * q - (1 - 4 * q) * s22) +
                           p * q * s11 * s212 * (1 - s22) * (1 - 4 * q),
                       k.L2, "SA L2");
        v1011 = divide(p * q * s11 * (1 - s112) * (1 - s212), k.L1, "SA L1");
        break;
    }
    case PolicyKind::CA: {
        const auto k = saca_coefficients(src, ch);
        v000 = divide(2 * p * s11, k.Y1, "CA Y1");
        v011 = divide(p * (1 - s11) * (1 + s112 * (1 - s212) + s212), k.Y1, "CA Y1");
        v1000 = divide(q * (1 + s212), (p + 2 * q) * (3 - s22), "CA (p+2q)(3-s22)");
        v1001 = divide(q * ((1 + s112 * (1 - s212) + s212) * (2 - s22 - s212) -
                            s11 * (1 - s112) * (1 - s212 * s212)),
                       k.Y2, "CA Y2");
        v1011 = divide(q * s11 * (1 - s112) * (1 - s212), k.Y1, "CA Y1");
        break;
    }
    }
    return {{v000, v011, v1000, v1001, v1011, v1000, v1001, v1011}};
}

} // namespace corrmon

#endif // CORRMON_CLOSED_FORM_HPP
