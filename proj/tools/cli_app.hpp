#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "fppf/fppf.hpp"

namespace fppf::cli {

enum class Command { Solve, Certify, Sweep, TwoBus, Verify };
enum class Format { Json, Csv };

struct SweepConfig {
    LoadingScenario scenario = LoadingScenario::II;
    double alpha_min = 0.0;
    double alpha_max = 0.99;
    int steps = 100;
};

struct RunConfig {
    Command command = Command::Solve;
    std::string case_path;
    std::string output_path;  ///< empty or "-" for stdout
    std::optional<double> tol;
    std::optional<int> max_iter;
    SweepConfig sweep;
    std::optional<Format> format;
    double gamma = 0.0;  ///< twobus
    double delta = 0.0;  ///< twobus
    int starts = 20;     ///< verify: random Newton starts besides the open-circuit one
    std::uint64_t seed = 1;
};

enum ExitCode { Ok = 0, Failed = 1, BadInput = 2 };

inline const char* to_string(LoadingScenario s) {
    switch (s) {
        case LoadingScenario::I: return "i";
        case LoadingScenario::II: return "ii";
        case LoadingScenario::III: return "iii";
    }
    return "?";
}

inline std::string fmt(double x) {
    if (!std::isfinite(x)) return std::isnan(x) ? "" : (x > 0 ? "inf" : "-inf");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Column order of `sweep` CSV output.
inline constexpr const char* sweep_columns =
    "alpha,scenario,theorem,delta,gamma,margin,v_plus,v_minus,gamma_angle_rad,gamma_angle_deg,converged,iterations,"
    "v_fppf_min";

namespace detail {

struct Input {
    PowerNetwork net;
    ValidationReport report;
};

inline void print_report(const ValidationReport& rep, std::ostream& err) {
    for (const auto& i : rep.issues)
        err << (i.severity == Severity::Error ? "error" : "warning") << " [" << i.code << "] " << i.message << '\n';
}

inline json report_json(const ValidationReport& rep) {
    json a = json::array();
    for (const auto& i : rep.issues)
        a.push_back({{"severity", i.severity == Severity::Error ? "error" : "warning"},
                     {"code", i.code},
                     {"message", i.message}});
    return a;
}

// Throws InputError with the validation report printed to `err` when the case is rejected.
inline Input load_validated(const std::string& path, std::ostream& err) {
    if (path.empty()) throw InputError("a case file is required");
    Input in{load_case(path), {}};
    in.report = validate_network(in.net);
    print_report(in.report, err);
    if (!in.report.accepted()) throw InputError("case '" + path + "' failed validation");
    return in;
}

inline SolveOptions solve_options(const RunConfig& cfg) {
    SolveOptions opt;
    if (cfg.tol) opt.tol = *cfg.tol;
    if (cfg.max_iter) opt.max_iter = *cfg.max_iter;
    if (!(opt.tol > 0.0) || opt.max_iter < 1) throw InputError("tol must be positive and max_iter at least 1");
    return opt;
}

inline void write_json(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

inline int run_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const Input in = load_validated(cfg.case_path, err);
    const FppfProblem pr = FppfProblem::build(in.net);
    const Format format = cfg.format.value_or(Format::Json);
    FppfState st;
    try {
        st = fppf_solve(pr, solve_options(cfg));
    } catch (const NotConverged& e) {
        err << "fppf: " << e.what() << '\n';
        if (format == Format::Json)
            write_json(out, {{"converged", false},
                             {"error", e.what()},
                             {"iterations", e.state().iterations},
                             {"step_history", e.state().history}});
        return Failed;
    } catch (const SqrtDomainError& e) {
        err << "fppf: " << e.what() << '\n';
        if (format == Format::Json)
            write_json(out, {{"converged", false}, {"error", e.what()}, {"iteration", e.iteration()}});
        return Failed;
    }
    PowerFlowSolution sol;
    try {
        sol = recover_angles(pr, st);
    } catch (const AngleDomainError& e) {
        err << "fppf: " << e.what() << '\n';
        return Failed;
    }
    if (format == Format::Csv) {
        out << "id,kind,V,theta,v\n";
        for (Index i = 0; i < pr.net.bus_count(); ++i)
            out << pr.net.buses()[i].id << ',' << to_string(pr.net.buses()[i].kind) << ',' << fmt(sol.V(i)) << ','
                << fmt(sol.theta(i)) << ',' << (i < pr.inc.n ? fmt(st.v(i)) : "") << '\n';
    } else {
        json j = solution_to_json(pr, st, sol);
        j["warnings"] = report_json(in.report);
        write_json(out, j);
    }
    return Ok;
}

inline int run_certify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const Input in = load_validated(cfg.case_path, err);
    const FppfProblem pr = FppfProblem::build(in.net);
    SolvabilityCertificate c;
    try {
        c = certify(pr);
    } catch (const AssumptionError& e) {
        throw InputError(e.what());
    }
    json j = certificate_to_json(pr.net, c);
    j["note"] = pr.net.ll_count() == 0 ? "no PQ-PQ branches: bus-by-bus conditions (existence and uniqueness)"
                                       : "PQ-PQ branches present: aggregate conditions (existence only)";
    j["warnings"] = report_json(in.report);
    write_json(out, j);
    if (c.ll_condition_only_failure)
        err << "fppf: PQ-PQ angle condition failed while the voltage condition held\n";
    return c.passed() ? Ok : Failed;
}

struct SweepRow {
    double alpha, delta = NAN, gamma = NAN, margin = NAN, v_plus = NAN, v_minus = NAN, angle = NAN, v_min = NAN;
    std::string theorem;
    bool converged = false;
    int iterations = 0;
};

inline SweepRow sweep_point(const PowerNetwork& net, const IncidenceSet& inc, const StiffnessSet& stiff,
                            const SweepConfig& sw, double alpha, const SolveOptions& opt) {
    SweepRow row{alpha};
    const LoadingProfile lp = loading_profile(net, stiff, inc, sw.scenario, alpha);
    const FppfProblem pr = FppfProblem::build(net.with_injections(lp.p_inject, lp.q_load));
    const SolvabilityCertificate c = certify(pr);
    row.theorem = to_string(c.theorem);
    double gl = 0.0, gg = 0.0;
    if (c.local_stress) {
        const LocalStress& s = *c.local_stress;
        row.delta = s.delta.size() ? s.delta.maxCoeff() : 0.0;
        gl = s.gamma.size() ? s.gamma.maxCoeff() : 0.0;
        gg = s.gamma_gg.size() ? s.gamma_gg.maxCoeff() : 0.0;
    } else {
        row.delta = c.aggregate_stress->delta;
        gl = c.aggregate_stress->gamma_gl;
        gg = c.aggregate_stress->gamma_gg;
    }
    row.gamma = sw.scenario == LoadingScenario::III ? gg : gl;
    row.margin = INFINITY;
    for (const auto& k : c.conditions) row.margin = std::min(row.margin, k.margin);
    const TwoBusResult r = two_bus_solve(gl, row.delta);
    if (r.feasible) {
        row.v_plus = r.roots->v_plus;
        row.v_minus = r.roots->v_minus;
    }
    if (sw.scenario == LoadingScenario::III)
        row.angle = gg < 1.0 ? std::asin(gg) : NAN;
    else if (r.feasible)
        row.angle = r.roots->gamma_minus;
    try {
        const FppfState st = fppf_solve(pr, opt);
        row.converged = true;
        row.iterations = st.iterations;
        row.v_min = st.v.size() ? st.v.minCoeff() : 1.0;
    } catch (const NotConverged& e) {
        row.iterations = e.state().iterations;
    } catch (const SqrtDomainError& e) {
        row.iterations = static_cast<int>(e.iteration());
    }
    return row;
}

inline int run_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const SweepConfig& sw = cfg.sweep;
    if (!(sw.alpha_min >= 0.0 && sw.alpha_max < 1.0 && sw.alpha_min <= sw.alpha_max))
        throw InputError("sweep range must satisfy 0 <= alpha_min <= alpha_max < 1");
    if (sw.steps < 2) throw InputError("sweep needs at least 2 steps");
    const Input in = load_validated(cfg.case_path, err);
    const IncidenceSet inc = build_incidence(in.net);
    const StiffnessSet stiff = compute_stiffness(in.net, inc);
    const SolveOptions opt = solve_options(cfg);
    const Format format = cfg.format.value_or(Format::Csv);

    json rows = json::array();
    if (format == Format::Csv) out << sweep_columns << '\n';
    for (int k = 0; k < sw.steps; ++k) {
        const double alpha = sw.alpha_min + (sw.alpha_max - sw.alpha_min) * k / (sw.steps - 1);
        const SweepRow r = sweep_point(in.net, inc, stiff, sw, alpha, opt);
        const double deg = r.angle * 180.0 / std::numbers::pi;
        if (format == Format::Csv) {
            out << fmt(r.alpha) << ',' << to_string(sw.scenario) << ',' << r.theorem << ',' << fmt(r.delta) << ','
                << fmt(r.gamma) << ',' << fmt(r.margin) << ',' << fmt(r.v_plus) << ',' << fmt(r.v_minus) << ','
                << fmt(r.angle) << ',' << fmt(deg) << ',' << (r.converged ? 1 : 0) << ',' << r.iterations << ','
                << fmt(r.v_min) << '\n';
        } else {
            auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
            rows.push_back({{"alpha", r.alpha},
                            {"scenario", to_string(sw.scenario)},
                            {"theorem", r.theorem},
                            {"delta", num(r.delta)},
                            {"gamma", num(r.gamma)},
                            {"margin", num(r.margin)},
                            {"v_plus", num(r.v_plus)},
                            {"v_minus", num(r.v_minus)},
                            {"gamma_angle_rad", num(r.angle)},
                            {"gamma_angle_deg", num(deg)},
                            {"converged", r.converged},
                            {"iterations", r.iterations},
                            {"v_fppf_min", num(r.v_min)}});
        }
    }
    if (format == Format::Json) write_json(out, rows);
    return Ok;
}

inline int run_two_bus(const RunConfig& cfg, std::ostream& out) {
    const TwoBusResult r = two_bus_solve(cfg.gamma, cfg.delta);
    write_json(out, two_bus_to_json(r));
    return r.feasible ? Ok : Failed;
}

inline int run_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const Input in = load_validated(cfg.case_path, err);
    const FppfProblem pr = FppfProblem::build(in.net);
    if (cfg.starts < 0) throw InputError("starts must be nonnegative");
    const Index n = pr.inc.n;

    json j;
    std::optional<PowerFlowSolution> fp;
    try {
        const FppfState st = fppf_solve(pr, solve_options(cfg));
        fp = recover_angles(pr, st);
        j["fppf"] = {{"converged", true}, {"iterations", st.iterations}, {"residual", residual(pr.net, *fp).sup()}};
    } catch (const Error& e) {
        j["fppf"] = {{"converged", false}, {"error", e.what()}};
    }

    NewtonConfig nc;
    nc.starts.push_back(open_circuit_start(pr));
    for (auto& s : random_starts(pr, cfg.starts, cfg.seed)) nc.starts.push_back(std::move(s));
    const NewtonResult nr = newton_solve(pr.net, nc);

    double agreement = INFINITY;
    int converged_starts = 0;
    for (const auto& o : nr.outcomes) converged_starts += o.converged;
    json sols = json::array();
    for (const auto& s : nr.solutions) {
        json js{{"within_half_pi", within_half_pi(s)}};
        js["min_v"] = n ? s.V.head(n).cwiseQuotient(pr.stiff.v_oc).minCoeff() : 1.0;
        if (within_half_pi(s)) {
            const Vector v = s.V.head(n).cwiseQuotient(pr.stiff.v_oc);
            try {
                js["fixed_point_residual"] = sup_norm(fppf_map(pr, v) - v);
            } catch (const SqrtDomainError&) {
                js["fixed_point_residual"] = nullptr;
            }
            if (fp) {
                const double d = fppf::detail::solution_distance(s, *fp, n);
                js["distance_to_fppf"] = d;
                agreement = std::min(agreement, d);
            }
        }
        sols.push_back(js);
    }
    j["newton"] = {{"starts", nc.starts.size()}, {"converged_starts", converged_starts}, {"distinct_solutions", sols}};
    j["agreement"] = std::isfinite(agreement) ? json(agreement) : json(nullptr);
    j["agree"] = std::isfinite(agreement) && agreement < 1e-7;
    write_json(out, j);
    return j["agree"].get<bool>() ? Ok : Failed;
}

}  // namespace detail

/// Runs one command. Results go to `out`; diagnostics and validation reports to `err`.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    std::ofstream file;
    std::ostream* sink = &out;
    if (!cfg.output_path.empty() && cfg.output_path != "-") {
        file.open(cfg.output_path);
        if (!file) {
            err << "fppf: cannot write '" << cfg.output_path << "'\n";
            return BadInput;
        }
        sink = &file;
    }
    const bool csv_ok = cfg.command == Command::Solve || cfg.command == Command::Sweep;
    if (cfg.format == Format::Csv && !csv_ok) {
        err << "fppf: csv output is only available for solve and sweep\n";
        return BadInput;
    }
    try {
        switch (cfg.command) {
            case Command::Solve: return detail::run_solve(cfg, *sink, err);
            case Command::Certify: return detail::run_certify(cfg, *sink, err);
            case Command::Sweep: return detail::run_sweep(cfg, *sink, err);
            case Command::TwoBus: return detail::run_two_bus(cfg, *sink);
            case Command::Verify: return detail::run_verify(cfg, *sink, err);
        }
    } catch (const InputError& e) {
        err << "fppf: " << e.what() << '\n';
        return BadInput;
    } catch (const InfeasibleInjections& e) {
        err << "fppf: " << e.what() << '\n';
        return BadInput;
    } catch (const SingularBLL& e) {
        err << "fppf: " << e.what() << '\n';
        return BadInput;
    } catch (const SingularS& e) {
        err << "fppf: " << e.what() << '\n';
        return BadInput;
    } catch (const StructureError& e) {
        err << "fppf: " << e.what() << '\n';
        return BadInput;
    } catch (const Error& e) {
        err << "fppf: " << e.what() << '\n';
        return Failed;
    }
    return BadInput;
}

}  // namespace fppf::cli
