#pragma once

// Independent verification paths: damped Newton-Raphson on the polar power
// flow mismatch, and a brute-force residual scan over normalized PQ voltages.
// Both are test oracles, not production solvers.

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <queue>
#include <random>
#include <vector>

#include "fppf/errors.hpp"
#include "fppf/fixed_point.hpp"
#include "fppf/linalg.hpp"
#include "fppf/network.hpp"
#include "fppf/solvability.hpp"

namespace fppf {

struct NewtonStart {
    Vector theta;   ///< all buses; the reference entry is ignored
    Vector v_load;  ///< PQ voltage magnitudes, per-unit
};

struct NewtonConfig {
    double tol = 1e-11;       ///< mismatch sup-norm target
    int max_iter = 150;
    double damping = 0.7;     ///< initial step fraction, halved on residual increase
    int max_backtracks = 30;
    double dedup_tol = 1e-6;  ///< sup distance on (theta, V_L) below which solutions merge
    std::vector<NewtonStart> starts;
};

struct StartOutcome {
    bool converged = false;
    int iterations = 0;
    double mismatch = 0.0;
    int solution = -1;  ///< index into NewtonResult::solutions
};

struct NewtonResult {
    std::vector<PowerFlowSolution> solutions;
    std::vector<StartOutcome> outcomes;
};

inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::remainder(a, two_pi);
    return a <= -std::numbers::pi ? a + two_pi : a;
}

/// theta = 0, V_L = V_L*.
inline NewtonStart open_circuit_start(const FppfProblem& pr) {
    return {Vector::Zero(pr.net.bus_count()), pr.stiff.v_oc};
}

/// V_L uniform in [0.2, 1.2] V_L*, theta uniform in [-pi/2, pi/2] per bus.
inline std::vector<NewtonStart> random_starts(const FppfProblem& pr, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> vdist(0.2, 1.2), tdist(-std::numbers::pi / 2, std::numbers::pi / 2);
    std::vector<NewtonStart> out;
    for (int k = 0; k < count; ++k) {
        NewtonStart s{Vector(pr.net.bus_count()), Vector(pr.net.load_count())};
        for (Index i = 0; i < s.theta.size(); ++i) s.theta(i) = tdist(rng);
        for (Index i = 0; i < s.v_load.size(); ++i) s.v_load(i) = vdist(rng) * pr.stiff.v_oc(i);
        out.push_back(std::move(s));
    }
    return out;
}

namespace detail {

// Unknowns: angles of every bus but the reference, then PQ magnitudes.
class PolarMismatch {
public:
    explicit PolarMismatch(const PowerNetwork& net)
        : net_(net), B_(susceptance_matrix(net).full), N_(net.bus_count()), n_(net.load_count()), ref_(n_) {
        for (Index i = 0; i < N_; ++i)
            for (Index j = 0; j < N_; ++j)
                if (i != j && B_(i, j) != 0.0) nbr_.push_back({i, j});
    }

    Index size() const { return N_ - 1 + n_; }
    Index reference() const { return ref_; }

    Vector pack(const Vector& theta, const Vector& v_load) const {
        Vector x(size());
        for (Index i = 0, k = 0; i < N_; ++i)
            if (i != ref_) x(k++) = theta(i) - theta(ref_);
        x.tail(n_) = v_load;
        return x;
    }

    void unpack(const Vector& x, Vector& theta, Vector& V) const {
        theta = Vector::Zero(N_);
        for (Index i = 0, k = 0; i < N_; ++i)
            if (i != ref_) theta(i) = x(k++);
        V.resize(N_);
        V.head(n_) = x.tail(n_);
        V.tail(N_ - n_) = net_.generator_voltages();
    }

    Index angle_slot(Index bus) const { return bus < ref_ ? bus : bus - 1; }

    // F = specified - calculated.
    Vector mismatch(const Vector& x) const {
        Vector theta, V;
        unpack(x, theta, V);
        Vector Pc = Vector::Zero(N_), Qc = Vector::Zero(N_);
        for (Index i = 0; i < N_; ++i) Qc(i) = -V(i) * V(i) * B_(i, i);
        for (auto [i, j] : nbr_) {
            const double w = V(i) * V(j) * B_(i, j);
            Pc(i) += w * std::sin(theta(i) - theta(j));
            Qc(i) -= w * std::cos(theta(i) - theta(j));
        }
        Vector F(size());
        for (Index i = 0, k = 0; i < N_; ++i)
            if (i != ref_) F(k++) = net_.buses()[i].p - Pc(i);
        for (Index i = 0; i < n_; ++i) F(N_ - 1 + i) = net_.buses()[i].q - Qc(i);
        return F;
    }

    // d(calculated)/dx.
    Matrix jacobian(const Vector& x) const {
        Vector theta, V;
        unpack(x, theta, V);
        Matrix J = Matrix::Zero(size(), size());
        const Index qrow0 = N_ - 1, vcol0 = N_ - 1;
        for (Index i = 0; i < n_; ++i) J(qrow0 + i, vcol0 + i) = -2.0 * V(i) * B_(i, i);
        for (auto [i, j] : nbr_) {
            const double t = theta(i) - theta(j);
            const double c = std::cos(t), s = std::sin(t);
            const double w = V(i) * V(j) * B_(i, j);
            const bool i_angle = i != ref_, j_angle = j != ref_;
            if (i_angle) {
                const Index r = angle_slot(i);
                J(r, r) += w * c;
                if (j_angle) J(r, angle_slot(j)) -= w * c;
                if (i < n_) J(r, vcol0 + i) += V(j) * B_(i, j) * s;
                if (j < n_) J(r, vcol0 + j) += V(i) * B_(i, j) * s;
            }
            if (i < n_) {
                const Index r = qrow0 + i;
                if (i_angle) J(r, angle_slot(i)) += w * s;
                if (j_angle) J(r, angle_slot(j)) -= w * s;
                J(r, vcol0 + i) -= V(j) * B_(i, j) * c;
                if (j < n_) J(r, vcol0 + j) -= V(i) * B_(i, j) * c;
            }
        }
        return J;
    }

private:
    const PowerNetwork& net_;
    Matrix B_;
    Index N_, n_, ref_;
    std::vector<std::pair<Index, Index>> nbr_;
};

inline double solution_distance(const PowerFlowSolution& a, const PowerFlowSolution& b, Index n) {
    double d = 0.0;
    for (Index i = 0; i < a.theta.size(); ++i) d = std::max(d, std::abs(wrap_angle(a.theta(i) - b.theta(i))));
    for (Index i = 0; i < n; ++i) d = std::max(d, std::abs(a.V(i) - b.V(i)));
    return d;
}

}  // namespace detail

/// Damped Newton from each configured start. Starts that fail are recorded in
/// `outcomes`; converged solutions are deduplicated.
inline NewtonResult newton_solve(const PowerNetwork& net, const NewtonConfig& cfg) {
    if (!(cfg.tol > 0.0) || !(cfg.damping > 0.0 && cfg.damping <= 1.0))
        throw InputError("Newton configuration requires tol > 0 and damping in (0, 1]");
    if (net.gen_count() == 0) throw StructureError("Newton oracle needs a PV reference bus");
    const detail::PolarMismatch F(net);
    const Index n = net.load_count();
    NewtonResult res;

    for (const auto& start : cfg.starts) {
        StartOutcome out;
        Vector x = F.pack(start.theta, start.v_load);
        Vector r = F.mismatch(x);
        double norm = sup_norm(r);
        for (; out.iterations < cfg.max_iter && norm >= cfg.tol; ++out.iterations) {
            Eigen::PartialPivLU<Matrix> lu(F.jacobian(x));
            const Vector dx = lu.solve(r);
            if (!dx.allFinite()) break;
            double t = cfg.damping;
            bool accepted = false;
            for (int b = 0; b <= cfg.max_backtracks; ++b, t *= 0.5) {
                const Vector trial = x + t * dx;
                if (n > 0 && !(trial.tail(n).minCoeff() > 0.0)) continue;
                const Vector rt = F.mismatch(trial);
                const double nt = sup_norm(rt);
                if (nt < norm || (t == cfg.damping && nt <= norm)) {
                    x = trial;
                    r = rt;
                    norm = nt;
                    accepted = true;
                    break;
                }
            }
            if (!accepted) break;
        }
        out.mismatch = norm;
        out.converged = norm < cfg.tol;
        if (out.converged) {
            PowerFlowSolution sol;
            F.unpack(x, sol.theta, sol.V);
            for (Index i = 0; i < sol.theta.size(); ++i) sol.theta(i) = wrap_angle(sol.theta(i));
            sol.eta.resize(net.branch_count());
            for (Index e = 0; e < net.branch_count(); ++e)
                sol.eta(e) = wrap_angle(sol.theta(net.branches()[e].from) - sol.theta(net.branches()[e].to));
            sol.q_pv = generator_reactive_outputs(net, sol.theta, sol.V);
            for (std::size_t k = 0; k < res.solutions.size(); ++k)
                if (detail::solution_distance(res.solutions[k], sol, n) < cfg.dedup_tol) out.solution = static_cast<int>(k);
            if (out.solution < 0) {
                out.solution = static_cast<int>(res.solutions.size());
                res.solutions.push_back(std::move(sol));
            }
        }
        res.outcomes.push_back(out);
    }
    return res;
}

inline bool within_half_pi(const PowerFlowSolution& sol) {
    return sol.eta.size() == 0 || sol.eta.cwiseAbs().maxCoeff() < std::numbers::pi / 2;
}

struct NearSolution {
    Vector v;          ///< normalized PQ voltages of the grid point
    double residual;   ///< power flow mismatch sup-norm after angle recovery
};

struct GridScanOptions {
    int resolution = 400;          ///< interior points per dimension
    double threshold = 1e-6;       ///< screening level on the mismatch sup-norm
    bool refine = true;
    std::size_t max_refine = 256;  ///< lowest-residual near points handed to Newton
    std::size_t keep_best = 0;     ///< also report this many lowest-residual points regardless of threshold
};

struct GridScanResult {
    std::size_t evaluated = 0;
    std::size_t angle_infeasible = 0;  ///< points where some |sin eta| >= 1
    std::vector<NearSolution> near;
    std::vector<NearSolution> best;  ///< ascending residual, at most keep_best entries
    std::vector<PowerFlowSolution> refined;
};

/// Scans the open box prod_i (lo_i, hi_i) of normalized PQ voltages. At each
/// point the angles come from sin(eta) = [h(v)]^{-1} D^{-1} p; points whose
/// mismatch is below the threshold are reported and, optionally, refined by Newton.
inline GridScanResult grid_scan(const FppfProblem& pr, const std::vector<Interval>& v_box,
                                const GridScanOptions& opt = {}) {
    const Index n = pr.inc.n;
    if (n > 3) throw TooLarge("grid scan is limited to 3 PQ buses (network has " + std::to_string(n) + ")");
    if (static_cast<Index>(v_box.size()) != n) throw InputError("scan box must give one interval per PQ bus");
    if (opt.resolution < 1) throw InputError("scan resolution must be positive");
    GridScanResult out;
    if (n == 0) return out;

    const PowerNetwork& net = pr.net;
    const SusceptanceMatrix B = susceptance_matrix(net);
    const Index E = net.branch_count();

    // Active mismatch does not depend on v: D_e h_e sin(eta_e) = p_e by construction.
    const double kcl = sup_norm(pr.net.active_injections() - pr.inc.oriented * pr.p);

    std::vector<std::vector<double>> axis(n);
    for (Index k = 0; k < n; ++k) {
        const double step = v_box[k].width() / (opt.resolution + 1);
        for (int j = 0; j < opt.resolution; ++j) axis[k].push_back(v_box[k].lo + (j + 1) * step);
    }
    std::vector<std::vector<Index>> incident(n);
    for (Index e = 0; e < E; ++e) {
        if (pr.inc.from[e] < n) incident[pr.inc.from[e]].push_back(e);
        if (pr.inc.to[e] < n) incident[pr.inc.to[e]].push_back(e);
    }
    Vector base(n);  // Q_i + V_i*^2 B_ii v_i^2 is split as q + diag * v^2
    for (Index i = 0; i < n; ++i) base(i) = pr.stiff.v_oc(i) * pr.stiff.v_oc(i) * B.full(i, i);

    auto by_residual = [](const NearSolution& a, const NearSolution& b) { return a.residual < b.residual; };
    std::priority_queue<NearSolution, std::vector<NearSolution>, decltype(by_residual)> best(by_residual);
    std::vector<int> idx(n, 0);
    Vector v(n);
    Vector s(E), c(E);
    for (bool done = false; !done;) {
        for (Index k = 0; k < n; ++k) v(k) = axis[k][idx[k]];
        ++out.evaluated;
        bool feasible = true;
        for (Index e = 0; e < E && feasible; ++e) {
            double h = 1.0;
            if (e < pr.inc.n_ll)
                h = v(pr.inc.from[e]) * v(pr.inc.to[e]);
            else if (e < pr.inc.n_ll + pr.inc.n_gl)
                h = v(pr.inc.to[e]);
            const double w = h * pr.stiff.D(e);
            s(e) = pr.p(e) / w;
            if (!(std::abs(s(e)) < 1.0)) feasible = false;
            c(e) = w * std::sqrt(1.0 - s(e) * s(e));  // V_i V_j B_ij cos(eta_e)
        }
        if (!feasible) {
            ++out.angle_infeasible;
        } else {
            // Early exit once a point can no longer matter.
            double cutoff = opt.threshold;
            if (opt.keep_best > 0) cutoff = std::max(cutoff, best.size() < opt.keep_best ? INFINITY : best.top().residual);
            double worst = kcl;
            for (Index i = 0; i < n && worst < cutoff; ++i) {
                double q = pr.q_load(i) + base(i) * v(i) * v(i);
                for (Index e : incident[i]) q += c(e);
                worst = std::max(worst, std::abs(q));
            }
            if (worst < opt.threshold) out.near.push_back({v, worst});
            if (opt.keep_best > 0 && (best.size() < opt.keep_best || worst < best.top().residual)) {
                best.push({v, worst});
                if (best.size() > opt.keep_best) best.pop();
            }
        }
        for (Index k = 0;; ++k) {
            if (k == n) {
                done = true;
                break;
            }
            if (++idx[k] < opt.resolution) break;
            idx[k] = 0;
        }
    }

    for (; !best.empty(); best.pop()) out.best.push_back(best.top());
    std::reverse(out.best.begin(), out.best.end());

    if (opt.refine && !out.near.empty()) {
        std::vector<NearSolution> ranked = out.near;
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.residual < b.residual; });
        if (ranked.size() > opt.max_refine) ranked.resize(opt.max_refine);
        NewtonConfig cfg;
        for (const auto& pt : ranked) {
            FppfState st;
            st.v = pt.v;
            st.p = pr.p;
            const PowerFlowSolution seed = recover_angles(pr, st);
            cfg.starts.push_back({seed.theta, seed.V.head(n)});
        }
        out.refined = newton_solve(net, cfg).solutions;
    }
    return out;
}

}  // namespace fppf
