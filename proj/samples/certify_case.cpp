// Loads a case file, prints the certificate verdict and the solved voltages.
#include <cstdio>
#include <iostream>

#include "fppf/fppf.hpp"

int main(int argc, char** argv) {
    using namespace fppf;
    if (argc != 2) {
        std::fprintf(stderr, "usage: %s case.json\n", argv[0]);
        return 2;
    }
    try {
        const FppfProblem pr = FppfProblem::build(load_case(argv[1]));
        const SolvabilityCertificate c = certify(pr);
        std::printf("%s: %s\n", to_string(c.theorem), c.passed() ? "certified" : "not certified");
        for (const auto& k : c.conditions)
            std::printf("  %-20s %.6f < %.2f  (margin %+.6f)\n", k.name.c_str(), k.lhs, k.limit, k.margin);
        const FppfState st = fppf_solve(pr);
        const PowerFlowSolution sol = recover_angles(pr, st);
        for (Index i = 0; i < pr.inc.n; ++i)
            std::printf("  bus %d  V = %.6f pu  theta = %+.6f rad\n", pr.net.buses()[i].id, sol.V(i), sol.theta(i));
        return c.passed() ? 0 : 1;
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }
}
