#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <string>

#include "qetlab/error.hpp"

namespace qetlab {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Norm tolerance for quantum states and unitarity checks.
inline constexpr double kNormTol = 1e-9;
/// Probabilities below this are treated as zero (measurement branches, collapse).
inline constexpr double kZeroProbTol = 1e-12;

/// An n-qubit pure state: 2^n complex amplitudes of unit 2-norm.
/// The first qubit is the most significant bit of the basis index.
class QState {
public:
    /// Validates dimension (2^n), finiteness and unit norm (within kNormTol).
    static QState make(int n_qubits, CVector amplitudes);

    /// Computational basis state |bits> (e.g. "10" -> |10>).
    static QState basis(const std::string& bits);

    int n_qubits() const { return n_qubits_; }
    Eigen::Index dim() const { return amps_.size(); }
    const CVector& amplitudes() const { return amps_; }

    bool approx_equal(const QState& other, double tol = 1e-12) const;

private:
    QState(int n, CVector a) : n_qubits_(n), amps_(std::move(a)) {}
    int n_qubits_;
    CVector amps_;
};

/// A unitary on l qubits; U U^dagger = I validated at construction (1e-9 entrywise).
class Unitary {
public:
    static Unitary make(std::string name, CMatrix matrix);

    const std::string& name() const { return name_; }
    int n_qubits() const { return n_qubits_; }
    const CMatrix& matrix() const { return mat_; }

private:
    Unitary(std::string nm, int n, CMatrix m)
        : name_(std::move(nm)), n_qubits_(n), mat_(std::move(m)) {}
    std::string name_;
    int n_qubits_;
    CMatrix mat_;
};

/// Kronecker product of states: |a> (x) |b>.
QState tensor(const QState& a, const QState& b);

/// Applies U extended to the state's width: U (x) I on the first qubits.
/// When the state is narrower than U, the extension is the identity.
QState apply_unitary(const Unitary& u, const QState& s);

/// Probability of measuring outcome i on the first qubit.
double measure_prob(int outcome, const QState& s);

/// Renormalized projection onto first-qubit = outcome. Identity when the
/// outcome has probability below kZeroProbTol.
QState post_measure(int outcome, const QState& s);

/// Named gate table: the built-ins H, X, Y, Z, S, T, CNOT, SWAP plus any
/// unitaries declared by matrix literal.
class GateTable {
public:
    /// Table seeded with the built-in gates.
    static GateTable builtins();

    void declare(const Unitary& u);
    bool contains(const std::string& name) const { return gates_.count(name) > 0; }
    const Unitary& get(const std::string& name) const;

private:
    std::map<std::string, Unitary> gates_;
};

} // namespace qetlab
