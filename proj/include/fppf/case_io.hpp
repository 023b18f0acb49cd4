#pragma once

// JSON case files and result serialization.
//
// Case schema:
//   {
//     "base_mva": 100,
//     "buses":    [{"id": 1, "kind": "PV", "v_set": 1.0, "p": 0.25},
//                  {"id": 2, "kind": "PQ", "p": -0.25, "q": -0.125, "b_shunt": 0.0}],
//     "branches": [{"from": 1, "to": 2, "b": -1.0}]
//   }
// All electrical quantities are per-unit. `v_set` is required on PV buses and
// rejected on PQ buses; `q` is optional on PQ buses (default 0) and rejected
// on PV buses. Extra top-level keys such as "name" are ignored.

#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <sstream>
#include <string>

#include "fppf/errors.hpp"
#include "fppf/fixed_point.hpp"
#include "fppf/network.hpp"
#include "fppf/solvability.hpp"

namespace fppf {

using json = nlohmann::json;

namespace detail {

template <class T>
T field(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw InputError(where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw InputError(where + ": field '" + std::string(key) + "' has the wrong type");
    }
}

inline json to_array(const Vector& x) {
    json a = json::array();
    for (Index i = 0; i < x.size(); ++i) a.push_back(x(i));
    return a;
}

inline double degrees(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace detail

inline PowerNetwork network_from_json(const json& j) {
    if (!j.is_object()) throw InputError("case file must be a JSON object");
    const double base = j.value("base_mva", 100.0);
    if (!j.contains("buses") || !j["buses"].is_array()) throw InputError("case file needs a 'buses' array");
    if (!j.contains("branches") || !j["branches"].is_array()) throw InputError("case file needs a 'branches' array");

    std::vector<Bus> buses;
    for (std::size_t k = 0; k < j["buses"].size(); ++k) {
        const json& jb = j["buses"][k];
        const std::string where = "buses[" + std::to_string(k) + "]";
        if (!jb.is_object()) throw InputError(where + ": expected an object");
        Bus b;
        b.id = detail::field<int>(jb, "id", where);
        const auto kind = detail::field<std::string>(jb, "kind", where);
        if (kind == "PQ" || kind == "pq")
            b.kind = BusKind::PQ;
        else if (kind == "PV" || kind == "pv")
            b.kind = BusKind::PV;
        else
            throw InputError(where + ": kind must be \"PQ\" or \"PV\"");
        b.p = detail::field<double>(jb, "p", where);
        if (b.kind == BusKind::PV) {
            b.v_set = detail::field<double>(jb, "v_set", where);
            if (jb.contains("q")) throw InputError(where + ": 'q' is not allowed on a PV bus");
        } else {
            if (jb.contains("v_set")) throw InputError(where + ": 'v_set' is not allowed on a PQ bus");
            if (jb.contains("q")) b.q = detail::field<double>(jb, "q", where);
        }
        if (jb.contains("b_shunt")) b.b_shunt = detail::field<double>(jb, "b_shunt", where);
        buses.push_back(b);
    }
    std::vector<BranchSpec> branches;
    for (std::size_t k = 0; k < j["branches"].size(); ++k) {
        const json& jb = j["branches"][k];
        const std::string where = "branches[" + std::to_string(k) + "]";
        if (!jb.is_object()) throw InputError(where + ": expected an object");
        branches.push_back({detail::field<int>(jb, "from", where), detail::field<int>(jb, "to", where),
                            detail::field<double>(jb, "b", where)});
    }
    return PowerNetwork::assemble(std::move(buses), branches, base);
}

inline json network_to_json(const PowerNetwork& net) {
    json j;
    j["base_mva"] = net.base_mva();
    j["buses"] = json::array();
    for (const auto& b : net.buses()) {
        json jb{{"id", b.id}, {"kind", to_string(b.kind)}, {"p", b.p}};
        if (b.kind == BusKind::PV)
            jb["v_set"] = b.v_set;
        else
            jb["q"] = b.q;
        if (b.b_shunt != 0.0) jb["b_shunt"] = b.b_shunt;
        j["buses"].push_back(jb);
    }
    j["branches"] = json::array();
    for (const auto& br : net.branches())
        j["branches"].push_back({{"from", net.buses()[br.from].id}, {"to", net.buses()[br.to].id}, {"b", br.b}});
    return j;
}

inline PowerNetwork load_case(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open case file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError("case file '" + path + "' is not valid JSON: " + e.what());
    }
    return network_from_json(j);
}

inline void save_case(const std::string& path, const PowerNetwork& net) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write case file '" + path + "'");
    out << network_to_json(net).dump(2) << '\n';
}

inline json solution_to_json(const FppfProblem& pr, const FppfState& st, const PowerFlowSolution& sol) {
    const PowerNetwork& net = pr.net;
    const PowerFlowResidual r = residual(net, sol);
    json j;
    j["converged"] = st.converged;
    j["iterations"] = st.iterations;
    j["fixed_point_residual"] = st.residual;
    j["residual"] = {{"active_sup", sup_norm(r.active)}, {"reactive_sup", sup_norm(r.reactive)}, {"sup", r.sup()}};
    j["step_history"] = st.history;
    j["buses"] = json::array();
    for (Index i = 0; i < net.bus_count(); ++i) {
        const Bus& b = net.buses()[i];
        json jb{{"id", b.id},
                {"kind", to_string(b.kind)},
                {"V", sol.V(i)},
                {"theta", sol.theta(i)},
                {"theta_deg", detail::degrees(sol.theta(i))}};
        if (b.kind == BusKind::PQ)
            jb["v"] = st.v(i);
        else
            jb["q_out"] = sol.q_pv(i - net.load_count());
        j["buses"].push_back(jb);
    }
    j["branches"] = json::array();
    for (Index e = 0; e < net.branch_count(); ++e) {
        const Branch& br = net.branches()[e];
        j["branches"].push_back({{"from", net.buses()[br.from].id},
                                 {"to", net.buses()[br.to].id},
                                 {"class", to_string(br.cls)},
                                 {"p", st.p(e)},
                                 {"eta", sol.eta(e)},
                                 {"eta_deg", detail::degrees(sol.eta(e))}});
    }
    return j;
}

inline json two_bus_to_json(const TwoBusResult& r) {
    json j{{"gamma", r.gamma_stress}, {"delta", r.delta_stress}, {"margin", r.margin}, {"feasible", r.feasible}};
    if (r.roots) {
        j["v_plus"] = r.roots->v_plus;
        j["v_minus"] = r.roots->v_minus;
        j["gamma_minus"] = r.roots->gamma_minus;
        j["gamma_minus_deg"] = detail::degrees(r.roots->gamma_minus);
        j["gamma_plus"] = r.roots->gamma_plus;
        j["gamma_plus_deg"] = detail::degrees(r.roots->gamma_plus);
        j["quartic_interval"] = {1.0 - r.roots->v_plus, 1.0 - r.roots->v_minus};
    }
    return j;
}

inline json certificate_to_json(const PowerNetwork& net, const SolvabilityCertificate& c) {
    json j;
    j["theorem"] = to_string(c.theorem);
    j["passed"] = c.passed();
    j["existence"] = c.existence;
    j["uniqueness"] = c.uniqueness;
    j["necessity"] = to_string(c.necessity);
    j["binding_condition"] = c.binding_condition;
    j["conditions"] = json::array();
    for (const auto& k : c.conditions)
        j["conditions"].push_back(
            {{"name", k.name}, {"lhs", k.lhs}, {"limit", k.limit}, {"margin", k.margin}, {"passed", k.passed}});

    const Index n = net.load_count();
    const Index gg0 = net.ll_count() + net.gl_count();
    auto gg_ids = [&](Index e) {
        const Branch& br = net.branches()[gg0 + e];
        return json{net.buses()[br.from].id, net.buses()[br.to].id};
    };
    if (c.local_stress) {
        const LocalStress& s = *c.local_stress;
        json buses = json::array();
        for (Index i = 0; i < n; ++i) {
            json jb{{"id", net.buses()[i].id}, {"delta", s.delta(i)}, {"gamma", s.gamma(i)},
                    {"stress", s.delta(i) + 4.0 * s.gamma(i) * s.gamma(i)}};
            if (c.local_bounds) {
                const LocalBounds& b = *c.local_bounds;
                jb["v_plus"] = b.v_plus(i);
                jb["v_minus"] = b.v_minus(i);
                jb["angle_bound"] = b.gamma_bus(i);
                jb["angle_bound_deg"] = detail::degrees(b.gamma_bus(i));
                jb["dead_zones"] = {{b.dead_zones[i].lo, b.dead_zones[i].hi}, {1.0, "inf"}};
            }
            buses.push_back(jb);
        }
        j["buses"] = buses;
        json gg = json::array();
        for (Index e = 0; e < s.gamma_gg.size(); ++e) {
            json jg{{"branch", gg_ids(e)}, {"gamma", s.gamma_gg(e)}};
            if (c.local_bounds) {
                jg["angle_bound"] = c.local_bounds->gamma_gg(e);
                jg["angle_bound_deg"] = detail::degrees(c.local_bounds->gamma_gg(e));
            }
            gg.push_back(jg);
        }
        j["gg_branches"] = gg;
    }
    if (c.aggregate_stress) {
        const AggregateStress& s = *c.aggregate_stress;
        j["stress"] = {{"delta", s.delta}, {"gamma_ll", s.gamma_ll}, {"gamma_gl", s.gamma_gl}, {"gamma_gg", s.gamma_gg}};
        j["ll_condition_only_failure"] = c.ll_condition_only_failure;
        if (c.aggregate_bounds) {
            const AggregateBounds& b = *c.aggregate_bounds;
            j["bounds"] = {{"v_plus", b.v_plus},
                           {"angle_ll", b.gamma_ll},
                           {"angle_ll_deg", detail::degrees(b.gamma_ll)},
                           {"angle_gl", b.gamma_gl},
                           {"angle_gl_deg", detail::degrees(b.gamma_gl)},
                           {"angle_gg", b.gamma_gg},
                           {"angle_gg_deg", detail::degrees(b.gamma_gg)}};
        }
    }
    return j;
}

}  // namespace fppf
