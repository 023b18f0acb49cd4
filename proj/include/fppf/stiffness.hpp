#pragma once

// Power network stiffness quantities: open-circuit load voltages, branch
// stiffness D, nodal stiffness S and the normalized coupling N.

#include <Eigen/Cholesky>

#include "fppf/errors.hpp"
#include "fppf/incidence.hpp"
#include "fppf/linalg.hpp"
#include "fppf/network.hpp"

namespace fppf {

/// Immutable after construction; `neg_s_factor` holds the Cholesky factor of -S
/// so S^{-1} y is available without forming the inverse.
struct StiffnessSet {
    Vector v_oc;      ///< open-circuit PQ voltages V_L*
    Vector v_ref;     ///< V* over all buses (V_L* then PV setpoints)
    Vector D;         ///< diagonal of the branch stiffness matrix, partition order
    Matrix S;         ///< nodal stiffness, n x n, negative definite
    Matrix N;         ///< normalized coupling, n x |E_gl|
    Eigen::LLT<Matrix> neg_s_factor;

    /// S^{-1} y.
    Vector solve_s(const Vector& y) const { return y.size() == 0 ? y : Vector(-neg_s_factor.solve(y)); }
    Matrix solve_s(const Matrix& y) const { return y.size() == 0 ? y : Matrix(-neg_s_factor.solve(y)); }
};

/// V_L* = -B_LL^{-1} B_LG V_G. Throws SingularBLL unless B_LL is negative
/// definite, and also if any open-circuit voltage comes out nonpositive.
inline Vector open_circuit_voltages(const PowerNetwork& net, const SusceptanceMatrix& B) {
    const Index n = net.load_count();
    if (n == 0) return Vector(0);
    Eigen::LLT<Matrix> llt(-B.LL());
    if (llt.info() != Eigen::Success) throw SingularBLL("load block of the susceptance matrix is not negative definite");
    // -B_LL^{-1} B_LG V_G = (-B_LL)^{-1} B_LG V_G
    Vector v = llt.solve(B.LG() * net.generator_voltages());
    for (Index i = 0; i < n; ++i)
        if (!(v(i) > 0.0)) throw SingularBLL("open-circuit voltage at bus " + std::to_string(net.buses()[i].id) + " is not positive");
    return v;
}

/// D_e = V_i* V_j* B_ij per branch, PV endpoints taking their setpoint.
inline Vector branch_stiffness(const PowerNetwork& net, const Vector& v_oc) {
    Vector D(net.branch_count());
    auto ref = [&](Index i) { return net.is_load(i) ? v_oc(i) : net.buses()[i].v_set; };
    for (Index e = 0; e < net.branch_count(); ++e) {
        const auto& br = net.branches()[e];
        D(e) = ref(br.from) * ref(br.to) * (-br.b);
    }
    return D;
}

/// S = 1/4 [V_L*] B_LL [V_L*].
inline Matrix nodal_stiffness(const SusceptanceMatrix& B, const Vector& v_oc) {
    return 0.25 * v_oc.asDiagonal() * B.LL() * v_oc.asDiagonal();
}

/// N = -1/4 S^{-1} |A|_L^{gl} D_gl. `neg_s_factor` is the Cholesky factor of -S.
inline Matrix normalized_coupling(const Eigen::LLT<Matrix>& neg_s_factor, const IncidenceSet& inc, const Vector& D) {
    if (inc.n == 0 || inc.n_gl == 0) return Matrix::Zero(inc.n, inc.n_gl);
    const Matrix weighted = inc.block(inc.unoriented, BusBlock::L, EdgeBlock::GL) *
                            D.segment(inc.edge_offset(EdgeBlock::GL), inc.n_gl).asDiagonal();
    // -1/4 S^{-1} X = 1/4 (-S)^{-1} X
    return 0.25 * neg_s_factor.solve(weighted);
}

inline Matrix normalized_coupling(const Matrix& S, const IncidenceSet& inc, const Vector& D) {
    Eigen::LLT<Matrix> llt(-S);
    if (llt.info() != Eigen::Success) throw SingularS("nodal stiffness matrix is not negative definite");
    return normalized_coupling(llt, inc, D);
}

inline StiffnessSet compute_stiffness(const PowerNetwork& net, const IncidenceSet& inc) {
    const SusceptanceMatrix B = susceptance_matrix(net);
    StiffnessSet s;
    s.v_oc = open_circuit_voltages(net, B);
    s.v_ref.resize(net.bus_count());
    s.v_ref << s.v_oc, net.generator_voltages();
    s.D = branch_stiffness(net, s.v_oc);
    s.S = nodal_stiffness(B, s.v_oc);
    if (net.load_count() > 0) {
        s.neg_s_factor.compute(-s.S);
        if (s.neg_s_factor.info() != Eigen::Success) throw SingularS("nodal stiffness matrix is not negative definite");
    }
    s.N = normalized_coupling(s.neg_s_factor, inc, s.D);
    return s;
}

/// max(|N 1 - 1|_inf, -min N): zero for an exactly row-stochastic matrix.
struct StochasticDefect {
    double row_sum_error = 0.0;
    double min_entry = 0.0;
};

inline StochasticDefect row_stochastic_defect(const Matrix& N) {
    StochasticDefect d;
    if (N.rows() == 0) return d;
    d.row_sum_error = (N.rowwise().sum().array() - 1.0).abs().maxCoeff();
    d.min_entry = N.size() ? N.minCoeff() : 0.0;
    return d;
}

}  // namespace fppf
