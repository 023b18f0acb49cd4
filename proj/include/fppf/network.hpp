#pragma once

// Lossless radial network model: buses partitioned into loads (PQ) and
// generators (PV), branches partitioned into load-load, generator-load and
// generator-generator classes.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fppf/errors.hpp"
#include "fppf/linalg.hpp"

namespace fppf {

enum class BusKind { PQ, PV };

enum class BranchClass { LL, GL, GG };

inline const char* to_string(BusKind k) { return k == BusKind::PQ ? "PQ" : "PV"; }

inline const char* to_string(BranchClass c) {
    switch (c) {
        case BranchClass::LL: return "LL";
        case BranchClass::GL: return "GL";
        case BranchClass::GG: return "GG";
    }
    return "?";
}

/// A bus in per-unit. `v_set` is meaningful for PV buses only, `q` for PQ buses only.
struct Bus {
    int id = 0;
    BusKind kind = BusKind::PQ;
    double v_set = 0.0;
    double p = 0.0;
    double q = 0.0;
    double b_shunt = 0.0;

    bool operator==(const Bus&) const = default;
};

/// Branch as supplied by a caller, endpoints given by external bus id.
struct BranchSpec {
    int from = 0;
    int to = 0;
    double b = 0.0;
};

/// Branch in a normalized network. Endpoints are internal bus positions;
/// GL branches always run generator -> load.
struct Branch {
    Index from = 0;
    Index to = 0;
    double b = 0.0;
    BranchClass cls = BranchClass::GG;

    bool operator==(const Branch&) const = default;
};

/// Normalized network. Buses are ordered PQ first then PV (each group keeps
/// the caller's relative order); branches are grouped LL, GL, GG.
class PowerNetwork {
public:
    PowerNetwork() = default;

    /// Normalizes ordering and orientation. Throws InputError on unknown or
    /// duplicate bus ids; every other structural problem is left for
    /// validate_network to report.
    static PowerNetwork assemble(std::vector<Bus> buses, const std::vector<BranchSpec>& branches,
                                 double base_mva = 100.0) {
        PowerNetwork net;
        net.base_mva_ = base_mva;
        std::stable_partition(buses.begin(), buses.end(), [](const Bus& b) { return b.kind == BusKind::PQ; });
        net.n_ = std::count_if(buses.begin(), buses.end(), [](const Bus& b) { return b.kind == BusKind::PQ; });
        net.buses_ = std::move(buses);

        std::map<int, Index> position;
        for (Index i = 0; i < static_cast<Index>(net.buses_.size()); ++i) {
            if (!position.emplace(net.buses_[i].id, i).second)
                throw InputError("duplicate bus id " + std::to_string(net.buses_[i].id));
        }

        std::vector<Branch> ll, gl, gg;
        for (const auto& spec : branches) {
            auto f = position.find(spec.from);
            auto t = position.find(spec.to);
            if (f == position.end() || t == position.end())
                throw InputError("branch " + std::to_string(spec.from) + "-" + std::to_string(spec.to) +
                                 " references an unknown bus");
            Branch br{f->second, t->second, spec.b, BranchClass::GG};
            const bool from_load = net.is_load(br.from);
            const bool to_load = net.is_load(br.to);
            if (from_load && to_load) {
                br.cls = BranchClass::LL;
                ll.push_back(br);
            } else if (from_load || to_load) {
                br.cls = BranchClass::GL;
                if (from_load) std::swap(br.from, br.to);
                gl.push_back(br);
            } else {
                gg.push_back(br);
            }
        }
        net.n_ll_ = static_cast<Index>(ll.size());
        net.n_gl_ = static_cast<Index>(gl.size());
        net.n_gg_ = static_cast<Index>(gg.size());
        net.branches_ = std::move(ll);
        net.branches_.insert(net.branches_.end(), gl.begin(), gl.end());
        net.branches_.insert(net.branches_.end(), gg.begin(), gg.end());
        return net;
    }

    const std::vector<Bus>& buses() const { return buses_; }
    const std::vector<Branch>& branches() const { return branches_; }
    double base_mva() const { return base_mva_; }

    Index bus_count() const { return static_cast<Index>(buses_.size()); }
    Index branch_count() const { return static_cast<Index>(branches_.size()); }
    Index load_count() const { return n_; }
    Index gen_count() const { return bus_count() - n_; }
    Index ll_count() const { return n_ll_; }
    Index gl_count() const { return n_gl_; }
    Index gg_count() const { return n_gg_; }
    bool is_load(Index i) const { return i < n_; }

    Index index_of(int id) const {
        for (Index i = 0; i < bus_count(); ++i)
            if (buses_[i].id == id) return i;
        throw InputError("unknown bus id " + std::to_string(id));
    }

    Vector active_injections() const {
        Vector p(bus_count());
        for (Index i = 0; i < bus_count(); ++i) p(i) = buses_[i].p;
        return p;
    }

    Vector reactive_loads() const {
        Vector q(n_);
        for (Index i = 0; i < n_; ++i) q(i) = buses_[i].q;
        return q;
    }

    Vector generator_voltages() const {
        Vector v(gen_count());
        for (Index k = 0; k < gen_count(); ++k) v(k) = buses_[n_ + k].v_set;
        return v;
    }

    /// Copy with replaced injections: `p` over all buses, `q_load` over PQ buses.
    PowerNetwork with_injections(const Vector& p, const Vector& q_load) const {
        if (p.size() != bus_count() || q_load.size() != n_)
            throw InputError("injection vectors do not match the network size");
        PowerNetwork out = *this;
        for (Index i = 0; i < bus_count(); ++i) out.buses_[i].p = p(i);
        for (Index i = 0; i < n_; ++i) out.buses_[i].q = q_load(i);
        return out;
    }

    /// Copy with every PV setpoint multiplied by `kappa` and every injection by `injection_scale`.
    PowerNetwork scaled(double kappa, double injection_scale) const {
        PowerNetwork out = *this;
        for (auto& b : out.buses_) {
            if (b.kind == BusKind::PV) b.v_set *= kappa;
            b.p *= injection_scale;
            b.q *= injection_scale;
        }
        return out;
    }

    bool operator==(const PowerNetwork&) const = default;

private:
    std::vector<Bus> buses_;
    std::vector<Branch> branches_;
    Index n_ = 0;
    Index n_ll_ = 0, n_gl_ = 0, n_gg_ = 0;
    double base_mva_ = 100.0;
};

enum class Severity { Warning, Error };

struct Issue {
    Severity severity;
    std::string code;
    std::string message;
};

struct ValidationReport {
    std::vector<Issue> issues;

    bool accepted() const {
        return std::none_of(issues.begin(), issues.end(), [](const Issue& i) { return i.severity == Severity::Error; });
    }
    bool has(const std::string& code) const {
        return std::any_of(issues.begin(), issues.end(), [&](const Issue& i) { return i.code == code; });
    }
    bool empty() const { return issues.empty(); }
};

struct ValidationOptions {
    double balance_tol = 1e-9;
};

/// Checks the modelling assumptions: radial and connected, inductive lines,
/// positive generator setpoints, balanced active power, no self-loops or
/// parallel branches. Positive reactive injection at a load is a warning.
inline ValidationReport validate_network(const PowerNetwork& net, const ValidationOptions& opt = {}) {
    ValidationReport rep;
    auto error = [&](std::string code, std::string msg) {
        rep.issues.push_back({Severity::Error, std::move(code), std::move(msg)});
    };
    auto warn = [&](std::string code, std::string msg) {
        rep.issues.push_back({Severity::Warning, std::move(code), std::move(msg)});
    };

    const Index N = net.bus_count();
    if (N == 0) {
        error("empty", "network has no buses");
        return rep;
    }
    if (net.gen_count() == 0) error("no_pv_bus", "network has no PV bus to fix voltage and angle reference");

    for (const auto& b : net.buses()) {
        const std::string tag = "bus " + std::to_string(b.id);
        if (!std::isfinite(b.p) || !std::isfinite(b.q) || !std::isfinite(b.b_shunt) || !std::isfinite(b.v_set))
            error("non_finite", tag + ": non-finite value");
        if (b.kind == BusKind::PV && !(b.v_set > 0.0)) error("bad_setpoint", tag + ": PV voltage setpoint must be positive");
        if (b.kind == BusKind::PQ && b.q > 0.0)
            warn("inductive_load", tag + ": inductive-load assumption violated (Q > 0)");
    }

    std::set<std::pair<Index, Index>> seen;
    std::vector<Index> parent(N);
    std::iota(parent.begin(), parent.end(), Index{0});
    auto find = [&](Index x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    bool cycle = false;
    Index components = N;
    for (const auto& br : net.branches()) {
        const std::string tag = "branch " + std::to_string(net.buses()[br.from].id) + "-" +
                                std::to_string(net.buses()[br.to].id);
        if (!std::isfinite(br.b)) error("non_finite", tag + ": non-finite susceptance");
        if (!(br.b < 0.0)) error("nonnegative_susceptance", tag + ": series susceptance must be negative");
        if (br.from == br.to) {
            error("self_loop", tag + ": self-loop");
            continue;
        }
        auto key = std::minmax(br.from, br.to);
        if (!seen.insert(key).second) error("parallel_branch", tag + ": parallel branch");
        Index a = find(br.from), c = find(br.to);
        if (a == c) {
            cycle = true;
        } else {
            parent[a] = c;
            --components;
        }
    }
    if (cycle) error("cycle", "cycle detected");
    if (components > 1) error("disconnected", "network is disconnected (" + std::to_string(components) + " components)");

    double total = net.active_injections().sum();
    if (std::abs(total) > opt.balance_tol)
        error("unbalanced", "active power injections sum to " + std::to_string(total));
    return rep;
}

/// Susceptance matrix with the bus partition exposed as block views.
struct SusceptanceMatrix {
    Matrix full;
    Index n = 0;

    auto LL() const { return full.topLeftCorner(n, n); }
    auto LG() const { return full.topRightCorner(n, full.cols() - n); }
    auto GL() const { return full.bottomLeftCorner(full.rows() - n, n); }
    auto GG() const { return full.bottomRightCorner(full.rows() - n, full.cols() - n); }
};

/// B_ij = B_ji = -b_ij off the diagonal, B_ii = sum_j b_ij + b_shunt,i.
inline SusceptanceMatrix susceptance_matrix(const PowerNetwork& net) {
    const Index N = net.bus_count();
    SusceptanceMatrix B{Matrix::Zero(N, N), net.load_count()};
    for (const auto& br : net.branches()) {
        B.full(br.from, br.to) -= br.b;
        B.full(br.to, br.from) -= br.b;
        B.full(br.from, br.from) += br.b;
        B.full(br.to, br.to) += br.b;
    }
    for (Index i = 0; i < N; ++i) B.full(i, i) += net.buses()[i].b_shunt;
    return B;
}

}  // namespace fppf
