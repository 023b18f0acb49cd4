// Two-bus walk-through: closed-form roots next to the fixed-point iteration.
#include <cstdio>

#include "fppf/fppf.hpp"

int main() {
    using namespace fppf;
    const double gamma = 0.25, delta = 0.5;

    const TwoBusResult r = two_bus_solve(gamma, delta);
    std::printf("margin %.6f  v+ %.12f  v- %.12f  angle %.12f rad\n", r.margin, r.roots->v_plus, r.roots->v_minus,
                r.roots->gamma_minus);

    // PV bus 1 at 1.0 pu feeding PQ bus 2 over b = -1: D = 1, S = -1/4.
    std::vector<Bus> buses{{1, BusKind::PV, 1.0, gamma, 0.0, 0.0}, {2, BusKind::PQ, 0.0, -gamma, -delta / 4, 0.0}};
    const PowerNetwork net = PowerNetwork::assemble(buses, {{1, 2, -1.0}});
    const FppfProblem pr = FppfProblem::build(net);

    SolveOptions opt;
    opt.record_iterates = true;
    const FppfState st = fppf_solve(pr, opt);
    for (std::size_t k = 0; k < st.iterates.size() && k < 8; ++k) std::printf("v_%zu = %.12f\n", k, st.iterates[k](0));
    const PowerFlowSolution sol = recover_angles(pr, st);
    std::printf("converged in %d iterations: V = %.12f, eta = %.12f, residual %.2e\n", st.iterations, sol.V(0),
                sol.eta(0), residual(net, sol).sup());
}
