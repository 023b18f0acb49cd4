// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "support/fixtures.hpp"
#include "support/random_networks.hpp"

using namespace fppf;
using testgen::Topology;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;
};

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", x);
    return buf;
}

SolveOptions tight(double tol = 1e-14, int max_iter = 2000000) {
    SolveOptions o;
    o.tol = tol;
    o.max_iter = max_iter;
    return o;
}

// 1. Two-bus closed form against the iteration, random stiffness and setpoint.
Verdict two_bus_closed_form() {
    std::mt19937_64 rng(101);
    double worst_v = 0.0, worst_eta = 0.0, min_margin = 1.0;
    for (int k = 0; k < 1000; ++k) {
        const double gamma = testgen::uniform(rng, 0.0, 0.5);
        const double delta = testgen::uniform(rng, 0.0, 1.0 - 4.0 * gamma * gamma);
        const TwoBusResult r = two_bus_solve(gamma, delta);
        if (!r.feasible) continue;
        min_margin = std::min(min_margin, r.margin);
        const FppfProblem pr = FppfProblem::build(
            testgen::two_bus(gamma, delta, testgen::uniform(rng, 0.9, 1.1), testgen::uniform(rng, -5.0, -0.5)));
        const FppfState st = fppf_solve(pr, tight());
        const PowerFlowSolution sol = recover_angles(pr, st);
        worst_v = std::max(worst_v, std::abs(st.v(0) - r.roots->v_plus));
        worst_eta = std::max(worst_eta, std::abs(std::abs(sol.eta(0)) - r.roots->gamma_minus));
    }
    return {worst_v < 1e-9 && worst_eta < 1e-9,
            "max|v-v+| " + sci(worst_v) + ", max||eta|-gamma-| " + sci(worst_eta) + ", min margin " + sci(min_margin)};
}

// 2. Limits of v+ and v- at the two corners of the feasible set, evaluated on
//    the boundary arc Delta = 1 - 4 Gamma^2 at distance 1e-8 from each corner.
Verdict boundary_values() {
    auto on_arc = [](double gamma) {
        double delta = 1.0 - 4.0 * gamma * gamma;
        while (1.0 - (4.0 * gamma * gamma + delta) < 0.0) delta = std::nextafter(delta, 0.0);
        return two_bus_solve(gamma, delta);
    };
    const double h = 1e-8;
    const TwoBusResult a = on_arc(h);  // near (1, 0)
    // Near (0, 1/2): Delta = h, Gamma = sqrt(1 - h) / 2.
    const TwoBusResult b = on_arc(0.5 * std::sqrt(1.0 - h));
    const TwoBusResult a0 = two_bus_solve(0.0, 1.0), b0 = two_bus_solve(0.5, 0.0);
    const double ea = std::abs(a.roots->v_plus - 0.5), eb = std::abs(b.roots->v_minus - std::sqrt(0.5));
    const double ea0 = std::abs(a0.roots->v_plus - 0.5), eb0 = std::abs(b0.roots->v_minus - std::sqrt(0.5));
    // Interior points at distance h from the boundary, for reference only: the
    // roots carry a square-root singularity there, so the gap is O(sqrt(h)).
    const TwoBusResult ai = two_bus_solve(0.0, 1.0 - h), bi = two_bus_solve(0.5 * std::sqrt(1.0 - h), 0.0);
    const double wa = std::abs(ai.roots->v_plus - 0.5), wb = std::abs(bi.roots->v_minus - std::sqrt(0.5));
    const double worst = std::max({ea, eb, ea0, eb0});
    return {worst < 1e-6, "|v+ - 1/2| " + sci(ea) + ", |v- - 1/sqrt2| " + sci(eb) + " on the arc; corners " + sci(ea0) +
                              ", " + sci(eb0) + "; interior offset h gives " + sci(wa) + ", " + sci(wb)};
}

// 3. Row-stochastic coupling without PQ-PQ branches.
Verdict row_stochastic() {
    std::mt19937_64 rng(103);
    double row = 0.0, neg = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const int total = 2 + testgen::pick(rng, 49);
        const int n_pv = 1 + testgen::pick(rng, total - 1);
        const PowerNetwork net = testgen::random_regular_tree(rng, total - n_pv, n_pv, Topology::NoPqPq);
        const StochasticDefect d = row_stochastic_defect(compute_stiffness(net, build_incidence(net)).N);
        row = std::max(row, d.row_sum_error);
        neg = std::min(neg, d.min_entry);
    }
    return {row < 1e-11 && neg >= -1e-14, "max|N1-1| " + sci(row) + ", min N " + sci(neg)};
}

// 4. Explicit fixed points of loading profile (ii) and the gap law.
Verdict profile_two_fixed_points() {
    std::mt19937_64 rng(107);
    std::vector<double> grid;
    for (int k = 10; k <= 99; ++k) grid.push_back(k / 100.0);
    double res = 0.0, gap = 0.0;
    std::vector<PowerNetwork> nets{testgen::two_bus(0.0, 0.0)};
    for (int k = 0; k < 20; ++k)
        nets.push_back(testgen::random_regular_tree(rng, 1 + testgen::pick(rng, 10), 1 + testgen::pick(rng, 5),
                                                    Topology::NoPqPq));
    for (const auto& net : nets) {
        const IncidenceSet inc = build_incidence(net);
        const SaddleNodeReport rep = saddle_node_check(net, compute_stiffness(net, inc), inc, grid);
        for (const auto& pt : rep.points) {
            res = std::max({res, pt.high_residual, pt.low_residual.value_or(INFINITY)});
            gap = std::max(gap, pt.gap_law_error);
        }
    }
    return {res < 1e-10 && gap < 1e-10, "max|f(x)-x| " + sci(res) + ", gap-law error " + sci(gap)};
}

// 5. Bounds of the bus-by-bus certificate and uniqueness in the high-voltage box.
Verdict certificate_soundness() {
    std::mt19937_64 rng(109);
    double slack = INFINITY;
    int bad_count = 0, newton_total = 0;
    for (int k = 0; k < 200; ++k) {
        const PowerNetwork net =
            testgen::random_certified(rng, 1 + testgen::pick(rng, 8), 1 + testgen::pick(rng, 5), Topology::NoPqPq);
        const FppfProblem pr = FppfProblem::build(net);
        const SolvabilityCertificate c = certify(pr);
        if (!c.passed()) {
            ++bad_count;
            continue;
        }
        const LocalBounds& b = *c.local_bounds;
        const FppfState st = fppf_solve(pr, tight(1e-13));
        const PowerFlowSolution sol = recover_angles(pr, st);
        for (Index i = 0; i < pr.inc.n; ++i) slack = std::min({slack, st.v(i) - b.v_plus(i), 1.0 - st.v(i)});
        for (Index e = 0; e < pr.inc.n_gl; ++e) {
            const Index k2 = pr.inc.n_ll + e;
            slack = std::min(slack, b.gamma_bus(pr.inc.to[k2]) - std::abs(sol.eta(k2)));
        }
        for (Index e = 0; e < pr.inc.n_gg; ++e)
            slack = std::min(slack, b.gamma_gg(e) - std::abs(sol.eta(pr.inc.n_ll + pr.inc.n_gl + e)));

        NewtonConfig nc;
        nc.starts.push_back(open_circuit_start(pr));
        for (auto& s : random_starts(pr, 49, 1000 + k)) nc.starts.push_back(std::move(s));
        int in_box = 0;
        for (const auto& s : newton_solve(pr.net, nc).solutions) {
            if (!within_half_pi(s)) continue;
            const Vector v = s.V.head(pr.inc.n).cwiseQuotient(pr.stiff.v_oc);
            bool inside = true;
            for (Index i = 0; i < v.size(); ++i) inside &= v(i) >= b.v_plus(i) - 1e-9 && v(i) <= 1.0 + 1e-9;
            in_box += inside;
        }
        if (in_box != 1) ++bad_count;
        ++newton_total;
    }
    return {slack >= -1e-9 && bad_count == 0,
            "min bound slack " + sci(slack) + ", nets without exactly one box solution " + std::to_string(bad_count) +
                " of " + std::to_string(newton_total)};
}

// 6. No solutions in the medium-voltage band or above the open-circuit voltage.
Verdict dead_zones() {
    std::mt19937_64 rng(113);
    std::size_t found = 0, points = 0, refined_inside = 0;
    double closest = INFINITY;
    for (int k = 0; k < 20; ++k) {
        const int n = k < 10 ? 2 : 3;
        const PowerNetwork net = testgen::random_certified(rng, n, 1 + testgen::pick(rng, 3), Topology::NoPqPq);
        const FppfProblem pr = FppfProblem::build(net);
        const SolvabilityCertificate c = certify(pr);
        if (!c.passed()) return {false, "generated net failed its certificate"};
        const LocalBounds& b = *c.local_bounds;
        std::vector<Interval> band(n), high(n, Interval{1.0, 1.5});
        for (int i = 0; i < n; ++i) band[i] = b.dead_zones[i];
        GridScanOptions opt;
        opt.resolution = 400;
        opt.threshold = 1e-6;
        opt.keep_best = 8;
        for (const auto& box : {band, high}) {
            const GridScanResult r = grid_scan(pr, box, opt);
            found += r.near.size() + r.refined.size();
            points += r.evaluated;
            if (!r.best.empty()) closest = std::min(closest, r.best.front().residual);
            // Polish the closest grid points; whatever they converge to must avoid the zones.
            NewtonConfig nc;
            for (const auto& pt : r.best) {
                FppfState s;
                s.v = pt.v;
                s.p = pr.p;
                const PowerFlowSolution seed = recover_angles(pr, s);
                nc.starts.push_back({seed.theta, seed.V.head(n)});
            }
            for (const auto& s : newton_solve(pr.net, nc).solutions) {
                if (!within_half_pi(s)) continue;
                const Vector v = s.V.head(n).cwiseQuotient(pr.stiff.v_oc);
                for (int i = 0; i < n; ++i)
                    if ((v(i) > band[i].lo + 1e-9 && v(i) < band[i].hi - 1e-9) || v(i) > 1.0 + 1e-9) ++refined_inside;
            }
        }
    }
    return {found == 0 && refined_inside == 0,
            std::to_string(points) + " grid points, " + std::to_string(found) + " below 1e-6, smallest mismatch " +
                sci(closest) + ", polished solutions inside a zone " + std::to_string(refined_inside)};
}

// 7. Observed contraction of the iteration against the per-bus Lipschitz bound.
Verdict contraction_rate() {
    std::mt19937_64 rng(127);
    double excess = -INFINITY, worst_beta = 0.0;
    for (int k = 0; k < 200; ++k) {
        const PowerNetwork net = testgen::random_certified(rng, 1 + testgen::pick(rng, 10), 1 + testgen::pick(rng, 5),
                                                           Topology::NoPqPq, 0.05, 0.99);
        const FppfProblem pr = FppfProblem::build(net);
        const SolvabilityCertificate c = certify(pr);
        double beta = 0.0;
        for (Index i = 0; i < pr.inc.n; ++i)
            beta = std::max(beta, contraction_bound(c.local_stress->delta(i), c.local_stress->gamma(i)));
        worst_beta = std::max(worst_beta, beta);
        const FppfState st = fppf_solve(pr, tight(1e-15, 1000000));
        for (std::size_t j = 1; j < st.history.size(); ++j) {
            if (st.history[j - 1] < 1e-10) break;
            excess = std::max(excess, st.history[j] / st.history[j - 1] - beta);
        }
    }
    return {excess <= 0.05, "max(observed - beta) " + sci(excess) + ", largest beta " + sci(worst_beta)};
}

// 8. Aggregate certificate on general radial networks.
Verdict general_radial() {
    std::mt19937_64 rng(131);
    double slack = INFINITY;
    int failures = 0, telemetry = 0, with_ll = 0;
    for (int k = 0; k < 100; ++k) {
        PowerNetwork net = testgen::random_injections(
            rng, testgen::random_regular_tree(rng, 2 + testgen::pick(rng, 10), 1 + testgen::pick(rng, 4),
                                              Topology::General));
        SolvabilityCertificate c;
        for (;;) {
            const FppfProblem trial = FppfProblem::build(net);
            c = certify_general(trial.net, trial.stiff, trial.p, trial.q_load);
            if (c.ll_condition_only_failure) {
                ++telemetry;
                std::printf("  telemetry: PQ-PQ angle condition failed while voltage condition held (net %d)\n", k);
            }
            if (c.passed()) break;
            net = testgen::scale_loading(net, 0.8);
        }
        const FppfProblem pr = FppfProblem::build(net);
        with_ll += pr.inc.n_ll > 0;
        try {
            const FppfState st = fppf_solve(pr, tight(1e-13));
            const PowerFlowSolution sol = recover_angles(pr, st);
            const AggregateBounds& b = *c.aggregate_bounds;
            slack = std::min(slack, st.v.minCoeff() - b.v_plus);
            for (Index e = 0; e < pr.p.size(); ++e) {
                const double bound = e < pr.inc.n_ll ? b.gamma_ll : e < pr.inc.n_ll + pr.inc.n_gl ? b.gamma_gl : b.gamma_gg;
                slack = std::min(slack, bound - std::abs(sol.eta(e)));
            }
        } catch (const Error& e) {
            ++failures;
            std::printf("  net %d: %s\n", k, e.what());
        }
    }
    return {failures == 0 && slack >= -1e-9,
            "nonconverged " + std::to_string(failures) + ", min bound slack " + sci(slack) + ", nets with PQ-PQ branches " +
                std::to_string(with_ll) + ", open-condition telemetry events " + std::to_string(telemetry)};
}

// 9. Newton solutions inside |eta| < pi/2 and fixed points coincide on the bundled cases.
Verdict oracle_equivalence() {
    const char* cases[] = {"two_bus.json",
                           "two_bus_infeasible.json",
                           "star_multi_pv.json",
                           "star_multi_pv_infeasible.json",
                           "single_pv_neighbor.json",
                           "single_pv_neighbor_infeasible.json",
                           "mixed_radial.json",
                           "mixed_radial_infeasible.json",
                           "six_bus_tree.json"};
    double newton_to_fp = 0.0, fp_to_newton = 0.0;
    int mismatched = 0, newton_count = 0;
    for (const char* name : cases) {
        const FppfProblem pr = FppfProblem::build(load_case(testgen::case_path(name)));
        const Index n = pr.inc.n;
        NewtonConfig nc;
        nc.starts.push_back(open_circuit_start(pr));
        for (auto& s : random_starts(pr, 100, 7)) nc.starts.push_back(std::move(s));
        std::vector<PowerFlowSolution> inside;
        for (const auto& s : newton_solve(pr.net, nc).solutions)
            if (within_half_pi(s)) inside.push_back(s);
        newton_count += static_cast<int>(inside.size());
        for (const auto& s : inside) {
            const Vector v = s.V.head(n).cwiseQuotient(pr.stiff.v_oc);
            try {
                newton_to_fp = std::max(newton_to_fp, sup_norm(fppf_map(pr, v) - v));
            } catch (const SqrtDomainError&) {
                ++mismatched;
            }
        }
        std::optional<PowerFlowSolution> fp;
        try {
            fp = recover_angles(pr, fppf_solve(pr, tight(1e-13)));
        } catch (const Error&) {
        }
        if (fp) {
            double d = INFINITY;
            for (const auto& s : inside) d = std::min(d, detail::solution_distance(s, *fp, n));
            fp_to_newton = std::max(fp_to_newton, d);
            if (residual(pr.net, *fp).sup() > 1e-8) ++mismatched;
        } else if (!inside.empty()) {
            ++mismatched;
        }
    }
    return {newton_to_fp < 1e-8 && fp_to_newton < 1e-8 && mismatched == 0,
            std::to_string(newton_count) + " Newton solutions: max|f(v)-v| " + sci(newton_to_fp) +
                ", fixed point to nearest Newton solution " + sci(fp_to_newton) + ", mismatches " +
                std::to_string(mismatched)};
}

// 10. Setpoints scaled by kappa and injections by kappa^2.
Verdict scaling_invariance() {
    std::mt19937_64 rng(137);
    double worst = 0.0;
    for (int k = 0; k < 40; ++k) {
        const PowerNetwork net = testgen::random_certified(rng, 1 + testgen::pick(rng, 8), 1 + testgen::pick(rng, 4),
                                                           k % 2 ? Topology::General : Topology::NoPqPq);
        const FppfProblem base = FppfProblem::build(net);
        const FppfState st0 = fppf_solve(base, tight(1e-15, 100000));
        const PowerFlowSolution s0 = recover_angles(base, st0);
        const SolvabilityCertificate c0 = certify(base);
        for (double kappa : {0.5, 2.0, 10.0}) {
            const FppfProblem pr = FppfProblem::build(net.scaled(kappa, kappa * kappa));
            const FppfState st = fppf_solve(pr, tight(1e-15, 100000));
            const PowerFlowSolution s = recover_angles(pr, st);
            const SolvabilityCertificate c = certify(pr);
            worst = std::max({worst, sup_norm(st.v - st0.v), sup_norm(s.eta - s0.eta)});
            for (std::size_t j = 0; j < c.conditions.size(); ++j)
                worst = std::max({worst, std::abs(c.conditions[j].lhs - c0.conditions[j].lhs),
                                  std::abs(c.conditions[j].margin - c0.conditions[j].margin)});
            if (c.local_stress) {
                worst = std::max({worst, sup_norm(c.local_stress->delta - c0.local_stress->delta),
                                  sup_norm(c.local_stress->gamma - c0.local_stress->gamma),
                                  sup_norm(c.local_stress->gamma_gg - c0.local_stress->gamma_gg)});
            } else {
                const AggregateStress &a = *c.aggregate_stress, &a0 = *c0.aggregate_stress;
                worst = std::max({worst, std::abs(a.delta - a0.delta), std::abs(a.gamma_ll - a0.gamma_ll),
                                  std::abs(a.gamma_gl - a0.gamma_gl), std::abs(a.gamma_gg - a0.gamma_gg)});
            }
        }
    }
    return {worst < 1e-12, "max deviation " + sci(worst)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"two-bus closed form", two_bus_closed_form},
        {"boundary values", boundary_values},
        {"row-stochastic coupling", row_stochastic},
        {"profile (ii) fixed points and gap law", profile_two_fixed_points},
        {"certificate soundness and uniqueness", certificate_soundness},
        {"dead zones", dead_zones},
        {"contraction rate", contraction_rate},
        {"general radial certificate", general_radial},
        {"Newton / fixed-point equivalence", oracle_equivalence},
        {"scaling invariance", scaling_invariance},
    };
    int failed = 0, index = 0;
    const auto start = std::chrono::steady_clock::now();
    for (const auto& [name, check] : criteria) {
        ++index;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("AC%-2d %s  %s: %s (%.1fs)\n", index, v.pass ? "PASS" : "FAIL", name, v.detail.c_str(), secs);
        std::fflush(stdout);
        failed += !v.pass;
    }
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%d of %d criteria passed in %.1fs\n", index - failed, index, total);
    return failed == 0 ? 0 : 1;
}
