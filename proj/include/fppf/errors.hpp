#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fppf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: unknown bus ids, bad JSON, negative stress parameters.
class InputError : public Error {
public:
    using Error::Error;
};

/// Active injections do not sum to zero within tolerance.
class InfeasibleInjections : public Error {
public:
    explicit InfeasibleInjections(double imbalance)
        : Error("active power injections are not balanced (sum = " + std::to_string(imbalance) + ")"),
          imbalance_(imbalance) {}
    double imbalance() const noexcept { return imbalance_; }

private:
    double imbalance_;
};

/// The load block of the susceptance matrix is not negative definite.
class SingularBLL : public Error {
public:
    using Error::Error;
};

/// The nodal stiffness matrix could not be factorized.
class SingularS : public Error {
public:
    using Error::Error;
};

/// A square-root argument in the fixed-point map went negative.
///
/// Carries the offending branch (position in the partitioned branch list) and,
/// when raised from the iteration, the iteration index.
class SqrtDomainError : public Error {
public:
    SqrtDomainError(std::size_t edge, double argument, long iteration = -1)
        : Error(describe(edge, argument, iteration)), edge_(edge), argument_(argument), iteration_(iteration) {}

    std::size_t edge() const noexcept { return edge_; }
    double argument() const noexcept { return argument_; }
    long iteration() const noexcept { return iteration_; }

private:
    static std::string describe(std::size_t edge, double argument, long iteration) {
        std::string s = "square-root domain violated on branch " + std::to_string(edge) +
                        " (argument " + std::to_string(argument) + ")";
        if (iteration >= 0) s += " at iteration " + std::to_string(iteration);
        return s;
    }

    std::size_t edge_;
    double argument_;
    long iteration_;
};

/// Some |sin(eta_e)| >= 1: no solution with all angle differences inside (-pi/2, pi/2).
class AngleDomainError : public Error {
public:
    AngleDomainError(std::size_t edge, double sine)
        : Error("branch " + std::to_string(edge) + " requires |sin(eta)| = " + std::to_string(sine) + " >= 1"),
          edge_(edge) {}
    std::size_t edge() const noexcept { return edge_; }

private:
    std::size_t edge_;
};

/// Network structure does not meet an operation's hypothesis (e.g. PQ-PQ branches).
class StructureError : public Error {
public:
    using Error::Error;
};

/// Injection data violates a theorem hypothesis (Q_i > 0 at a PQ bus).
class AssumptionError : public Error {
public:
    using Error::Error;
};

/// Brute-force scan refused: too many PQ buses.
class TooLarge : public Error {
public:
    using Error::Error;
};

}  // namespace fppf
