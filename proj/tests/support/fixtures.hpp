#pragma once

#include <string>

#include "fppf/fppf.hpp"

namespace fppf::testgen {

/// PV bus 1 feeding PQ bus 2 over susceptance b, loaded to stresses (gamma, delta):
/// V* = V_G, D = V_G^2 |b|, S = V_G^2 b / 4, so Q = delta S and p = gamma D.
inline PowerNetwork two_bus(double gamma, double delta, double v_g = 1.0, double b = -1.0) {
    const double D = v_g * v_g * -b;
    const double S = 0.25 * v_g * v_g * b;
    std::vector<Bus> buses{{1, BusKind::PV, v_g, gamma * D, 0.0, 0.0}, {2, BusKind::PQ, 0.0, -gamma * D, delta * S, 0.0}};
    return PowerNetwork::assemble(std::move(buses), {{1, 2, b}});
}

inline std::string case_path(const std::string& name) { return std::string(FPPF_CASES_DIR) + "/" + name; }

}  // namespace fppf::testgen
