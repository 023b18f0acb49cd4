#pragma once

// Solvability certificates for lossless radial power flow.
//
// Two families are provided:
//  * certify_no_pqpq: networks without PQ-PQ branches. Bus-by-bus stress
//    measures give existence, uniqueness, voltage/angle bounds and voltage
//    bands that provably contain no solution.
//  * certify_general: any radial network. Aggregate (worst-case) stress
//    measures give existence and uniform bounds only.
//
// Conditions are strict inequalities with zero tolerance; each carries its
// margin so callers can apply their own safety factor.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "fppf/errors.hpp"
#include "fppf/fixed_point.hpp"
#include "fppf/incidence.hpp"
#include "fppf/linalg.hpp"
#include "fppf/network.hpp"
#include "fppf/stiffness.hpp"

namespace fppf {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool degenerate() const { return lo == hi; }
    double width() const { return hi - lo; }
};

struct TwoBusRoots {
    double v_plus = 0.0;       ///< high-voltage root, in (1/2, 1]
    double v_minus = 0.0;      ///< low-voltage root, in [0, 1/sqrt 2)
    double gamma_minus = 0.0;  ///< small angle root, sin = |Gamma| / v_plus
    double gamma_plus = 0.0;   ///< large angle root, sin = |Gamma| / v_minus
};

struct TwoBusResult {
    double gamma_stress = 0.0;
    double delta_stress = 0.0;
    double margin = 0.0;  ///< 1 - (Delta + 4 Gamma^2)
    bool feasible = false;
    /// Present whenever margin >= 0, so the closure of the feasible set
    /// (where the two roots coincide) can be evaluated too.
    std::optional<TwoBusRoots> roots;
};

/// Roots of v^4 - v^2 (1 - Delta/2) + Delta^2/16 + Gamma^2 = 0 and the
/// matching angle roots. Feasible iff Delta + 4 Gamma^2 < 1.
inline TwoBusResult two_bus_solve(double gamma, double delta) {
    if (!(delta >= 0.0)) throw InputError("reactive stress Delta must be nonnegative");
    TwoBusResult r;
    r.gamma_stress = gamma;
    r.delta_stress = delta;
    r.margin = 1.0 - (4.0 * gamma * gamma + delta);
    r.feasible = r.margin > 0.0;
    if (r.margin < 0.0) return r;

    TwoBusRoots z;
    const double vp2 = 0.5 * (1.0 - 0.5 * delta + std::sqrt(r.margin));
    z.v_plus = std::sqrt(vp2);
    // Product of the two roots in v^2 is Delta^2/16 + Gamma^2; this avoids
    // cancellation in the small root.
    z.v_minus = std::sqrt((delta * delta / 16.0 + gamma * gamma) / vp2);
    const double g = std::abs(gamma);
    z.gamma_minus = std::asin(std::min(1.0, g / z.v_plus));
    z.gamma_plus = g == 0.0 ? 0.0 : std::asin(std::min(1.0, g / z.v_minus));
    r.roots = z;
    return r;
}

/// Solution set of (1-d)^4 - (1-d)^2 (1 - Delta/2) + Gamma^2 + Delta^2/16 <= 0.
/// Empty when Delta + 4 Gamma^2 > 1; a single point on the boundary.
inline std::optional<Interval> quartic_interval(double delta, double gamma) {
    if (!(delta >= 0.0) || !(gamma >= 0.0)) throw InputError("quartic parameters must be nonnegative");
    const TwoBusResult r = two_bus_solve(gamma, delta);
    if (!r.roots) return std::nullopt;
    return Interval{1.0 - r.roots->v_plus, 1.0 - r.roots->v_minus};
}

/// Lipschitz bound of the scalar fixed-point map on [-delta_-, 0]:
/// Delta/(4 w^2) + Gamma^2 / (w^3 sqrt(1 - Gamma^2/w^2)) with w = 1 - delta_- = v_+.
/// Below one exactly when Delta + 4 Gamma^2 < 1.
inline double contraction_bound(double delta, double gamma) {
    const TwoBusResult r = two_bus_solve(gamma, delta);
    if (!r.roots) return INFINITY;
    const double w = r.roots->v_plus;
    const double g2 = gamma * gamma;
    return delta / (4.0 * w * w) + g2 / (w * w * w) / std::sqrt(1.0 - g2 / (w * w));
}

enum class Theorem { NoPqPq, General };

inline const char* to_string(Theorem t) { return t == Theorem::NoPqPq ? "no_pq_pq" : "general_radial"; }

enum class Necessity { None, SinglePvNeighbor, ProfileI, ProfileII, ProfileIII };

inline const char* to_string(Necessity n) {
    switch (n) {
        case Necessity::None: return "none";
        case Necessity::SinglePvNeighbor: return "single_pv_neighbor";
        case Necessity::ProfileI: return "profile_i";
        case Necessity::ProfileII: return "profile_ii";
        case Necessity::ProfileIII: return "profile_iii";
    }
    return "?";
}

struct Condition {
    std::string name;
    double lhs = 0.0;
    double limit = 0.0;
    double margin = 0.0;  ///< limit - lhs
    bool passed = false;
};

inline Condition make_condition(std::string name, double lhs, double limit) {
    return Condition{std::move(name), lhs, limit, limit - lhs, lhs < limit};
}

/// Stress measures for networks without PQ-PQ branches.
struct LocalStress {
    Vector delta;     ///< per PQ bus, Q_i / S_ii
    Vector gamma;     ///< per PQ bus, max over PV neighbours of |p_ji| / D_ji
    Vector gamma_gg;  ///< per GG branch, |p_ij| / D_ij
};

struct LocalBounds {
    Vector v_plus;     ///< v_{i,+}: lower bound on V_i / V_i*
    Vector v_minus;    ///< v_{i,-}
    Vector gamma_bus;  ///< gamma_i: bound on |eta| across GL branches into bus i
    Vector gamma_gg;   ///< gamma_ij: bound on |eta| across GG branches
    /// Open bands (v_{i,-}, v_{i,+}) without solutions; (1, inf) is excluded for every bus too.
    std::vector<Interval> dead_zones;
};

/// Aggregate stress measures for a general radial network.
struct AggregateStress {
    double delta = 0.0;
    double gamma_ll = 0.0;
    double gamma_gl = 0.0;
    double gamma_gg = 0.0;
};

struct AggregateBounds {
    double v_plus = 1.0;
    double gamma_ll = 0.0;
    double gamma_gl = 0.0;
    double gamma_gg = 0.0;
};

struct SolvabilityCertificate {
    Theorem theorem = Theorem::NoPqPq;
    std::vector<Condition> conditions;
    std::optional<LocalStress> local_stress;
    std::optional<LocalBounds> local_bounds;
    std::optional<AggregateStress> aggregate_stress;
    std::optional<AggregateBounds> aggregate_bounds;
    bool existence = false;
    bool uniqueness = false;
    Necessity necessity = Necessity::None;
    /// General case only: the PQ-PQ angle condition failed while the voltage
    /// condition held. Expected never to happen; kept as telemetry.
    bool ll_condition_only_failure = false;
    std::string binding_condition;  ///< condition with the smallest relative margin

    bool passed() const {
        return std::all_of(conditions.begin(), conditions.end(), [](const Condition& c) { return c.passed; });
    }
    const Condition* condition(const std::string& name) const {
        for (const auto& c : conditions)
            if (c.name == name) return &c;
        return nullptr;
    }
};

namespace detail {

inline void require_inductive_loads(const Vector& q_load) {
    for (Index i = 0; i < q_load.size(); ++i)
        if (q_load(i) > 0.0) throw AssumptionError("PQ bus " + std::to_string(i) + " has Q > 0; certificates require Q <= 0");
}

inline std::string tightest(const std::vector<Condition>& cs) {
    std::string name;
    double best = INFINITY;
    for (const auto& c : cs) {
        const double rel = c.margin / c.limit;
        if (rel < best) {
            best = rel;
            name = c.name;
        }
    }
    return name;
}

inline bool all_equal(const Vector& x, double rel_tol = 1e-9) {
    if (x.size() == 0) return true;
    const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
    return (x.array() - x(0)).abs().maxCoeff() <= rel_tol * scale;
}

inline Necessity detect_necessity(const PowerNetwork& net, const StiffnessSet& stiff, const Vector& p,
                                  const Vector& q_load) {
    const Index n = net.load_count();
    std::vector<int> pv_neighbours(n, 0);
    for (Index e = net.ll_count(); e < net.ll_count() + net.gl_count(); ++e) ++pv_neighbours[net.branches()[e].to];
    if (n > 0 && std::all_of(pv_neighbours.begin(), pv_neighbours.end(), [](int c) { return c == 1; }))
        return Necessity::SinglePvNeighbor;

    const double tol = 1e-9;
    const Vector ratio = p.cwiseQuotient(stiff.D);
    const Vector r_gl = ratio.segment(net.ll_count(), net.gl_count());
    const Vector r_gg = ratio.tail(net.gg_count());
    const bool no_q = q_load.size() == 0 || q_load.cwiseAbs().maxCoeff() <= tol;
    const bool no_p = p.size() == 0 || p.cwiseAbs().maxCoeff() <= tol;

    if (no_p && n > 0) {
        Vector per_bus(n);
        for (Index i = 0; i < n; ++i) per_bus(i) = q_load(i) / stiff.S.row(i).sum();
        if (all_equal(per_bus)) return Necessity::ProfileI;
    }
    if (no_q && !no_p) {
        const bool gg_zero = r_gg.size() == 0 || r_gg.cwiseAbs().maxCoeff() <= tol;
        const bool gl_zero = r_gl.size() == 0 || r_gl.cwiseAbs().maxCoeff() <= tol;
        if (gg_zero && r_gl.size() > 0 && all_equal(r_gl) && r_gl(0) >= 0.0) return Necessity::ProfileII;
        if (gl_zero && r_gg.size() > 0 && all_equal(r_gg) && r_gg(0) >= 0.0) return Necessity::ProfileIII;
    }
    return Necessity::None;
}

}  // namespace detail

/// Bus-by-bus certificate for radial networks without PQ-PQ branches.
/// Throws StructureError if such branches exist and AssumptionError if any Q_i > 0.
inline SolvabilityCertificate certify_no_pqpq(const PowerNetwork& net, const StiffnessSet& stiff, const Vector& p,
                                              const Vector& q_load) {
    if (net.ll_count() > 0) throw StructureError("network has PQ-PQ branches; use certify_general");
    detail::require_inductive_loads(q_load);
    const Index n = net.load_count();

    LocalStress st{Vector(n), Vector::Zero(n), Vector(net.gg_count())};
    for (Index i = 0; i < n; ++i) st.delta(i) = q_load(i) / stiff.S(i, i) + 0.0;  // no -0
    for (Index e = 0; e < net.gl_count(); ++e) {
        const Index k = net.ll_count() + e;
        const Index bus = net.branches()[k].to;
        st.gamma(bus) = std::max(st.gamma(bus), std::abs(p(k)) / stiff.D(k));
    }
    const Index gg0 = net.ll_count() + net.gl_count();
    for (Index e = 0; e < net.gg_count(); ++e) st.gamma_gg(e) = std::abs(p(gg0 + e)) / stiff.D(gg0 + e);

    SolvabilityCertificate cert;
    cert.theorem = Theorem::NoPqPq;
    const double voltage_lhs = n ? (st.delta.array() + 4.0 * st.gamma.array().square()).maxCoeff() : 0.0;
    const double angle_lhs = net.gg_count() ? st.gamma_gg.maxCoeff() : 0.0;
    cert.conditions.push_back(make_condition("voltage_stability", voltage_lhs, 1.0));
    cert.conditions.push_back(make_condition("pv_angle_stability", angle_lhs, 1.0));
    cert.binding_condition = detail::tightest(cert.conditions);
    cert.necessity = detail::detect_necessity(net, stiff, p, q_load);

    if (cert.passed()) {
        LocalBounds b{Vector(n), Vector(n), Vector(n), Vector(net.gg_count()), {}};
        for (Index i = 0; i < n; ++i) {
            const TwoBusResult r = two_bus_solve(st.gamma(i), st.delta(i));
            b.v_plus(i) = r.roots->v_plus;
            b.v_minus(i) = r.roots->v_minus;
            b.gamma_bus(i) = r.roots->gamma_minus;
            b.dead_zones.push_back({b.v_minus(i), b.v_plus(i)});
        }
        for (Index e = 0; e < net.gg_count(); ++e) b.gamma_gg(e) = std::asin(st.gamma_gg(e));
        cert.local_bounds = std::move(b);
        cert.existence = true;
        cert.uniqueness = true;
    }
    cert.local_stress = std::move(st);
    return cert;
}

/// Worst-case certificate for any radial network. Existence only.
inline SolvabilityCertificate certify_general(const PowerNetwork& net, const StiffnessSet& stiff, const Vector& p,
                                              const Vector& q_load) {
    detail::require_inductive_loads(q_load);
    const Index n = net.load_count();
    const Index ll = net.ll_count(), gl = net.gl_count(), gg = net.gg_count();

    Vector q_eff = q_load;
    for (Index e = 0; e < ll; ++e) {
        const double w = 4.0 * p(e) * p(e) / stiff.D(e);
        q_eff(net.branches()[e].from) -= w;
        q_eff(net.branches()[e].to) -= w;
    }
    const Vector ratio = p.cwiseQuotient(stiff.D).cwiseAbs();
    AggregateStress st;
    st.delta = n ? sup_norm(stiff.solve_s(q_eff)) : 0.0;
    st.gamma_ll = ll ? ratio.head(ll).maxCoeff() : 0.0;
    st.gamma_gl = gl ? ratio.segment(ll, gl).maxCoeff() : 0.0;
    st.gamma_gg = gg ? ratio.tail(gg).maxCoeff() : 0.0;

    SolvabilityCertificate cert;
    cert.theorem = Theorem::General;
    cert.conditions.push_back(make_condition("voltage_stability", st.delta + 4.0 * st.gamma_gl * st.gamma_gl, 1.0));
    cert.conditions.push_back(make_condition("pq_angle_stability", st.gamma_ll, 0.25));
    cert.conditions.push_back(make_condition("pv_angle_stability", st.gamma_gg, 1.0));
    cert.binding_condition = detail::tightest(cert.conditions);
    cert.ll_condition_only_failure = cert.conditions[0].passed && !cert.conditions[1].passed;

    if (cert.passed()) {
        const TwoBusResult r = two_bus_solve(st.gamma_gl, st.delta);
        AggregateBounds b;
        b.v_plus = r.roots->v_plus;
        b.gamma_ll = std::asin(st.gamma_ll / (b.v_plus * b.v_plus));
        b.gamma_gl = r.roots->gamma_minus;
        b.gamma_gg = std::asin(st.gamma_gg);
        cert.aggregate_bounds = b;
        cert.existence = true;
    }
    cert.aggregate_stress = st;
    return cert;
}

/// Picks the bus-by-bus certificate when there are no PQ-PQ branches.
inline SolvabilityCertificate certify(const FppfProblem& pr) {
    return pr.net.ll_count() == 0 ? certify_no_pqpq(pr.net, pr.stiff, pr.p, pr.q_load)
                                  : certify_general(pr.net, pr.stiff, pr.p, pr.q_load);
}

enum class LoadingScenario { I, II, III };

struct LoadingProfile {
    Vector p_inject;  ///< all buses, balanced
    Vector q_load;
};

/// Loading profiles for which the bus-by-bus conditions are also necessary:
///  (i)   Q_L = alpha S 1, P = 0
///  (ii)  Q_L = 0, P = alpha/2 A (0, D_gl 1, 0)
///  (iii) Q_L = 0, P = alpha A (0, 0, D_gg 1)
/// alpha >= 1 is accepted so callers can probe past the feasibility boundary.
inline LoadingProfile loading_profile(const PowerNetwork& net, const StiffnessSet& stiff, const IncidenceSet& inc,
                                      LoadingScenario scenario, double alpha) {
    if (!(alpha >= 0.0)) throw InputError("loading parameter alpha must be nonnegative");
    const Index n = net.load_count();
    LoadingProfile lp{Vector::Zero(net.bus_count()), Vector::Zero(n)};
    Vector flows = Vector::Zero(net.branch_count());
    switch (scenario) {
        case LoadingScenario::I:
            lp.q_load = alpha * stiff.S.rowwise().sum();
            return lp;
        case LoadingScenario::II:
            flows.segment(inc.n_ll, inc.n_gl) = 0.5 * alpha * stiff.D.segment(inc.n_ll, inc.n_gl);
            break;
        case LoadingScenario::III:
            flows.tail(inc.n_gg) = alpha * stiff.D.tail(inc.n_gg);
            break;
    }
    lp.p_inject = inc.oriented * flows;
    return lp;
}

struct SaddleNodePoint {
    double alpha = 0.0;
    double delta_minus = 0.0;  ///< x_-(alpha) = -delta_minus 1 is the high-voltage fixed point
    double delta_plus = 0.0;   ///< x_+(alpha) = -delta_plus 1 is the low-voltage fixed point
    double gap = 0.0;          ///< delta_plus - delta_minus
    double high_residual = 0.0;
    std::optional<double> low_residual;  ///< absent when the low root sits at v = 0
    double gap_law_error = 0.0;          ///< |v_+^2 - v_-^2 - sqrt(1 - alpha^2)|
};

struct SaddleNodeReport {
    std::vector<SaddleNodePoint> points;
};

/// Tracks both explicit fixed points of loading profile (ii) along an alpha
/// grid in [0, 1] and checks f(x) = x at each, plus the gap law.
inline SaddleNodeReport saddle_node_check(const PowerNetwork& net, const StiffnessSet& stiff, const IncidenceSet& inc,
                                          const std::vector<double>& alpha_grid) {
    if (net.ll_count() > 0) throw StructureError("saddle-node check requires a network without PQ-PQ branches");
    const Index n = net.load_count();
    SaddleNodeReport rep;
    for (double alpha : alpha_grid) {
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw InputError("alpha grid must lie in [0, 1]");
        const LoadingProfile lp = loading_profile(net, stiff, inc, LoadingScenario::II, alpha);
        const Vector p = branch_flows(net, lp.p_inject);

        const double root = std::sqrt(std::max(0.0, 1.0 - alpha * alpha));
        const double v_hi = std::sqrt(0.5 * (1.0 + root));
        // (1 - root)/2 written as alpha^2 / (2 (1 + root)).
        const double v_lo = std::sqrt(alpha * alpha / (2.0 * (1.0 + root)));

        SaddleNodePoint pt;
        pt.alpha = alpha;
        pt.delta_minus = 1.0 - v_hi;
        pt.delta_plus = 1.0 - v_lo;
        pt.gap = pt.delta_plus - pt.delta_minus;
        pt.gap_law_error = std::abs((v_hi * v_hi - v_lo * v_lo) - root);
        const Vector hi = Vector::Constant(n, v_hi);
        pt.high_residual = sup_norm(fppf_map(hi, stiff, inc, lp.q_load, p) - hi);
        if (v_lo > 0.0) {
            const Vector lo = Vector::Constant(n, v_lo);
            pt.low_residual = sup_norm(fppf_map(lo, stiff, inc, lp.q_load, p) - lo);
        }
        rep.points.push_back(pt);
    }
    return rep;
}

}  // namespace fppf
