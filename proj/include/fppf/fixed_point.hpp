#pragma once

// Fixed-point power flow for radial networks: the map v -> f(v) over
// normalized PQ voltages v_i = V_i / V_i*, its iteration from a flat start,
// and recovery of phase angles from a fixed point.

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "fppf/errors.hpp"
#include "fppf/incidence.hpp"
#include "fppf/linalg.hpp"
#include "fppf/network.hpp"
#include "fppf/stiffness.hpp"

namespace fppf {

/// Everything the map needs, derived once from a validated radial network.
struct FppfProblem {
    PowerNetwork net;
    IncidenceSet inc;
    StiffnessSet stiff;
    Vector p;       ///< branch flows from KCL, partition order
    Vector q_load;  ///< Q_L

    static FppfProblem build(const PowerNetwork& net, double balance_tol = 1e-9) {
        FppfProblem pr;
        pr.net = net;
        pr.inc = build_incidence(net);
        pr.stiff = compute_stiffness(net, pr.inc);
        pr.p = branch_flows(net, net.active_injections(), balance_tol);
        pr.q_load = net.reactive_loads();
        return pr;
    }
};

/// h_e(v): v_i v_j on LL branches, v_j (the load end) on GL branches, 1 on GG branches.
inline Vector edge_voltage_products(const IncidenceSet& inc, const Vector& v) {
    const Index E = static_cast<Index>(inc.from.size());
    Vector h(E);
    for (Index e = 0; e < E; ++e) {
        if (e < inc.n_ll)
            h(e) = v(inc.from[e]) * v(inc.to[e]);
        else if (e < inc.n_ll + inc.n_gl)
            h(e) = v(inc.to[e]);
        else
            h(e) = 1.0;
    }
    return h;
}

namespace detail {

// 1 - sqrt(1 - s^2) without cancellation for small s.
inline double one_minus_root(double s, std::size_t edge) {
    const double arg = 1.0 - s * s;
    if (!(arg >= 0.0)) throw SqrtDomainError(edge, arg);
    return s * s / (1.0 + std::sqrt(arg));
}

}  // namespace detail

/// Evaluates f(v). Throws SqrtDomainError when some branch needs
/// |p_e| > h_e(v) D_e, i.e. the iterate left the region where f is defined.
inline Vector fppf_map(const Vector& v, const StiffnessSet& stiff, const IncidenceSet& inc, const Vector& q_load,
                       const Vector& p) {
    const Index n = inc.n;
    if (v.size() != n) throw InputError("voltage vector does not match the number of PQ buses");
    const Vector h = edge_voltage_products(inc, v);

    // f(v) = 1 + 1/4 S^{-1} rhs
    Vector rhs = -q_load.cwiseQuotient(v);
    for (Index e = 0; e < inc.n_ll + inc.n_gl; ++e) {
        const double s = p(e) / (h(e) * stiff.D(e));
        const double w = stiff.D(e) * detail::one_minus_root(s, static_cast<std::size_t>(e));
        if (e < inc.n_ll) {
            rhs(inc.from[e]) += v(inc.to[e]) * w;
            rhs(inc.to[e]) += v(inc.from[e]) * w;
        } else {
            rhs(inc.to[e]) += w;
        }
    }
    return Vector::Ones(n) + 0.25 * stiff.solve_s(rhs);
}

inline Vector fppf_map(const FppfProblem& pr, const Vector& v) { return fppf_map(v, pr.stiff, pr.inc, pr.q_load, pr.p); }

struct FppfState {
    Vector v;
    Vector p;
    int iterations = 0;
    double residual = 0.0;  ///< |v - f(v)|_inf at the returned iterate
    bool converged = false;
    std::vector<double> history;   ///< sup-norm step |v_{k+1} - v_k| per iteration
    std::vector<Vector> iterates;  ///< v_0, v_1, ... when requested

    Vector offset() const { return v - Vector::Ones(v.size()); }
};

class NotConverged : public Error {
public:
    NotConverged(std::string what, FppfState state) : Error(std::move(what)), state_(std::move(state)) {}
    const FppfState& state() const noexcept { return state_; }

private:
    FppfState state_;
};

struct SolveOptions {
    double tol = 1e-10;
    int max_iter = 500;
    std::optional<Vector> start;  ///< defaults to the flat start v = 1
    bool record_iterates = false;
};

/// Iterates v_{k+1} = f(v_k) until the sup-norm step drops to `tol`.
/// Throws NotConverged (with the last valid iterate) on exhaustion or when an
/// iterate leaves v > 0, and SqrtDomainError tagged with the iteration index.
inline FppfState fppf_solve(const FppfProblem& pr, const SolveOptions& opt = {}) {
    FppfState st;
    st.p = pr.p;
    st.v = opt.start.value_or(Vector::Ones(pr.inc.n));
    if (st.v.size() != pr.inc.n) throw InputError("start vector does not match the number of PQ buses");
    if (opt.record_iterates) st.iterates.push_back(st.v);
    if (pr.inc.n == 0) {
        st.converged = true;
        return st;
    }
    for (int k = 1; k <= opt.max_iter; ++k) {
        Vector next;
        try {
            next = fppf_map(pr, st.v);
        } catch (const SqrtDomainError& e) {
            throw SqrtDomainError(e.edge(), e.argument(), k);
        }
        if (!(next.minCoeff() > 0.0)) {
            st.iterations = k - 1;
            throw NotConverged("iterate left the positive orthant at iteration " + std::to_string(k), std::move(st));
        }
        const double step = sup_norm(next - st.v);
        st.v = std::move(next);
        st.iterations = k;
        st.history.push_back(step);
        if (opt.record_iterates) st.iterates.push_back(st.v);
        if (step <= opt.tol) {
            st.converged = true;
            break;
        }
    }
    try {
        st.residual = sup_norm(st.v - fppf_map(pr, st.v));
    } catch (const SqrtDomainError&) {
        st.residual = INFINITY;
    }
    if (!st.converged)
        throw NotConverged("fixed-point iteration did not converge in " + std::to_string(opt.max_iter) + " iterations",
                           std::move(st));
    return st;
}

/// A power flow solution in physical units. The reference angle is the first PV bus.
struct PowerFlowSolution {
    Vector theta;  ///< all buses, radians
    Vector V;      ///< all buses, per-unit (PV entries are setpoints)
    Vector eta;    ///< A^T theta, partition order
    Vector q_pv;   ///< reactive output at PV buses

    Vector load_voltages(Index n) const { return V.head(n); }
};

/// Reactive outputs Q_k = -sum_j V_k V_j B_kj cos(theta_k - theta_j) at PV buses.
inline Vector generator_reactive_outputs(const PowerNetwork& net, const Vector& theta, const Vector& V) {
    const SusceptanceMatrix B = susceptance_matrix(net);
    const Index n = net.load_count();
    Vector q(net.gen_count());
    for (Index k = 0; k < net.gen_count(); ++k) {
        const Index i = n + k;
        double acc = 0.0;
        for (Index j = 0; j < net.bus_count(); ++j)
            if (B.full(i, j) != 0.0) acc += V(i) * V(j) * B.full(i, j) * std::cos(theta(i) - theta(j));
        q(k) = -acc;
    }
    return q;
}

/// Angle differences from sin(eta) = [h(v)]^{-1} D^{-1} p, then bus angles
/// by tree traversal. Throws AngleDomainError if some |sin eta_e| >= 1.
inline PowerFlowSolution recover_angles(const FppfProblem& pr, const FppfState& state) {
    const Index n = pr.inc.n;
    const Vector h = edge_voltage_products(pr.inc, state.v);
    PowerFlowSolution sol;
    sol.eta.resize(pr.p.size());
    for (Index e = 0; e < sol.eta.size(); ++e) {
        const double s = state.p(e) / (h(e) * pr.stiff.D(e));
        if (!(std::abs(s) < 1.0)) throw AngleDomainError(static_cast<std::size_t>(e), s);
        sol.eta(e) = std::asin(s);
    }
    sol.V = pr.stiff.v_ref;
    sol.V.head(n) = state.v.cwiseProduct(pr.stiff.v_oc);
    sol.theta = angles_from_differences(pr.net, sol.eta, n);
    sol.q_pv = generator_reactive_outputs(pr.net, sol.theta, sol.V);
    return sol;
}

struct PowerFlowResidual {
    Vector active;    ///< all buses
    Vector reactive;  ///< PQ buses

    double sup() const { return std::max(sup_norm(active), sup_norm(reactive)); }
};

/// Mismatch of the lossless power flow equations: P_i - sum_j V_i V_j B_ij sin(theta_i - theta_j)
/// at every bus and Q_i + sum_j V_i V_j B_ij cos(theta_i - theta_j) at PQ buses.
inline PowerFlowResidual residual(const PowerNetwork& net, const PowerFlowSolution& sol) {
    const SusceptanceMatrix B = susceptance_matrix(net);
    const Index N = net.bus_count(), n = net.load_count();
    PowerFlowResidual r{Vector(N), Vector(n)};
    for (Index i = 0; i < N; ++i) {
        double ps = 0.0, qs = 0.0;
        for (Index j = 0; j < N; ++j) {
            if (B.full(i, j) == 0.0) continue;
            const double w = sol.V(i) * sol.V(j) * B.full(i, j);
            ps += w * std::sin(sol.theta(i) - sol.theta(j));
            qs += w * std::cos(sol.theta(i) - sol.theta(j));
        }
        r.active(i) = net.buses()[i].p - ps;
        if (i < n) r.reactive(i) = net.buses()[i].q + qs;
    }
    return r;
}

}  // namespace fppf
