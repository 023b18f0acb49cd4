#pragma once

#include <cmath>
#include <vector>

#include "fppf/errors.hpp"
#include "fppf/linalg.hpp"
#include "fppf/network.hpp"

namespace fppf {

enum class BusBlock { L, G };
enum class EdgeBlock { LL, GL, GG };

/// Oriented incidence matrix A = A(+) - A(-) and its unoriented version |A|.
/// A(+) marks the sending bus of each branch, A(-) the receiving bus.
struct IncidenceSet {
    Matrix oriented;
    Matrix sending;
    Matrix receiving;
    Matrix unoriented;
    Index n = 0, m = 0;
    Index n_ll = 0, n_gl = 0, n_gg = 0;
    std::vector<Index> from, to;  ///< sending / receiving bus of each branch

    Index edge_offset(EdgeBlock e) const {
        switch (e) {
            case EdgeBlock::LL: return 0;
            case EdgeBlock::GL: return n_ll;
            case EdgeBlock::GG: return n_ll + n_gl;
        }
        return 0;
    }
    Index edge_size(EdgeBlock e) const {
        switch (e) {
            case EdgeBlock::LL: return n_ll;
            case EdgeBlock::GL: return n_gl;
            case EdgeBlock::GG: return n_gg;
        }
        return 0;
    }

    /// Block view such as block(unoriented, L, GL) for |A|_L^{gl}.
    auto block(const Matrix& which, BusBlock b, EdgeBlock e) const {
        const Index r0 = b == BusBlock::L ? 0 : n;
        const Index rows = b == BusBlock::L ? n : m;
        return which.block(r0, edge_offset(e), rows, edge_size(e));
    }
};

inline IncidenceSet build_incidence(const PowerNetwork& net) {
    const Index N = net.bus_count(), E = net.branch_count();
    IncidenceSet inc;
    inc.n = net.load_count();
    inc.m = net.gen_count();
    inc.n_ll = net.ll_count();
    inc.n_gl = net.gl_count();
    inc.n_gg = net.gg_count();
    inc.sending = Matrix::Zero(N, E);
    inc.receiving = Matrix::Zero(N, E);
    for (Index e = 0; e < E; ++e) {
        const auto& br = net.branches()[e];
        inc.sending(br.from, e) = 1.0;
        inc.receiving(br.to, e) = 1.0;
        inc.from.push_back(br.from);
        inc.to.push_back(br.to);
    }
    inc.oriented = inc.sending - inc.receiving;
    inc.unoriented = inc.sending + inc.receiving;
    return inc;
}

/// Breadth-first ordering of a radial network from `root`. parent_edge[v] is
/// the branch linking v to its parent (-1 for the root).
struct TreeWalk {
    std::vector<Index> order;
    std::vector<Index> parent;
    std::vector<Index> parent_edge;
};

inline TreeWalk walk_tree(const PowerNetwork& net, Index root) {
    const Index N = net.bus_count();
    std::vector<std::vector<Index>> adj(N);
    for (Index e = 0; e < net.branch_count(); ++e) {
        adj[net.branches()[e].from].push_back(e);
        adj[net.branches()[e].to].push_back(e);
    }
    TreeWalk w;
    w.parent.assign(N, -1);
    w.parent_edge.assign(N, -1);
    std::vector<bool> seen(N, false);
    w.order.reserve(N);
    w.order.push_back(root);
    seen[root] = true;
    for (std::size_t head = 0; head < w.order.size(); ++head) {
        const Index u = w.order[head];
        for (Index e : adj[u]) {
            const auto& br = net.branches()[e];
            const Index v = br.from == u ? br.to : br.from;
            if (seen[v]) continue;
            seen[v] = true;
            w.parent[v] = u;
            w.parent_edge[v] = e;
            w.order.push_back(v);
        }
    }
    if (static_cast<Index>(w.order.size()) != N) throw StructureError("network is not connected");
    return w;
}

/// Unique branch flows p with A p = P on a radial network, by stripping
/// leaves toward the root. Throws InfeasibleInjections if sum(P) exceeds `tol`.
inline Vector branch_flows(const PowerNetwork& net, const Vector& P, double tol = 1e-9) {
    if (P.size() != net.bus_count()) throw InputError("injection vector does not match the network size");
    if (net.branch_count() != net.bus_count() - 1) throw StructureError("branch flows require a radial network");
    const double imbalance = P.sum();
    if (std::abs(imbalance) > tol) throw InfeasibleInjections(imbalance);

    Vector p = Vector::Zero(net.branch_count());
    if (net.bus_count() == 0) return p;
    const TreeWalk w = walk_tree(net, 0);
    Vector remaining = P;
    for (auto it = w.order.rbegin(); it != w.order.rend(); ++it) {
        const Index v = *it;
        const Index e = w.parent_edge[v];
        if (e < 0) continue;
        // v must export its remaining injection through its parent branch.
        const double flow = net.branches()[e].from == v ? remaining(v) : -remaining(v);
        p(e) = flow;
        remaining(w.parent[v]) += remaining(v);
        remaining(v) = 0.0;
    }
    return p;
}

/// Bus angles theta with theta_from - theta_to = eta on every branch and
/// theta(reference) = 0.
inline Vector angles_from_differences(const PowerNetwork& net, const Vector& eta, Index reference) {
    const TreeWalk w = walk_tree(net, reference);
    Vector theta = Vector::Zero(net.bus_count());
    for (Index v : w.order) {
        const Index e = w.parent_edge[v];
        if (e < 0) continue;
        const auto& br = net.branches()[e];
        theta(v) = br.from == v ? theta(w.parent[v]) + eta(e) : theta(w.parent[v]) - eta(e);
    }
    return theta;
}

}  // namespace fppf
