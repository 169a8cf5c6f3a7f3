#include "qetlab/linalg.hpp"

#include <cmath>

namespace qetlab {

namespace {

bool all_finite(const CVector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag())) return false;
    }
    return true;
}

} // namespace

QState QState::make(int n_qubits, CVector amplitudes) {
    if (n_qubits < 1) fail("InvalidState", "quantum state needs at least one qubit");
    const Eigen::Index want = Eigen::Index(1) << n_qubits;
    if (amplitudes.size() != want)
        fail("InvalidState", "amplitude vector has dimension " + std::to_string(amplitudes.size()) +
                                 ", expected " + std::to_string(want));
    if (!all_finite(amplitudes)) fail("InvalidState", "non-finite amplitude");
    const double norm = amplitudes.norm();
    if (std::abs(norm - 1.0) > kNormTol)
        fail("InvalidState", "state norm " + std::to_string(norm) + " is not 1");
    return QState(n_qubits, std::move(amplitudes));
}

QState QState::basis(const std::string& bits) {
    const int n = static_cast<int>(bits.size());
    if (n < 1) fail("InvalidState", "empty basis label");
    Eigen::Index idx = 0;
    for (char c : bits) {
        if (c != '0' && c != '1') fail("InvalidState", "basis label must be 0/1 bits");
        idx = (idx << 1) | (c == '1' ? 1 : 0);
    }
    CVector a = CVector::Zero(Eigen::Index(1) << n);
    a[idx] = 1.0;
    return QState(n, std::move(a));
}

bool QState::approx_equal(const QState& other, double tol) const {
    if (n_qubits_ != other.n_qubits_) return false;
    return (amps_ - other.amps_).lpNorm<Eigen::Infinity>() <= tol;
}

Unitary Unitary::make(std::string name, CMatrix matrix) {
    if (matrix.rows() != matrix.cols() || matrix.rows() < 2)
        fail("InvalidUnitary", "unitary '" + name + "' must be a square matrix of dimension >= 2");
    Eigen::Index d = matrix.rows();
    int n = 0;
    while ((Eigen::Index(1) << n) < d) ++n;
    if ((Eigen::Index(1) << n) != d)
        fail("InvalidUnitary", "unitary '" + name + "' dimension is not a power of two");
    CMatrix should_be_id = matrix * matrix.adjoint();
    if (!should_be_id.isApprox(CMatrix::Identity(d, d), kNormTol))
        fail("InvalidUnitary", "matrix for '" + name + "' is not unitary (U U^dagger != I)");
    return Unitary(std::move(name), n, std::move(matrix));
}

QState tensor(const QState& a, const QState& b) {
    const Eigen::Index da = a.dim(), db = b.dim();
    CVector out(da * db);
    for (Eigen::Index i = 0; i < da; ++i)
        out.segment(i * db, db) = a.amplitudes()[i] * b.amplitudes();
    return QState::make(a.n_qubits() + b.n_qubits(), std::move(out));
}

QState apply_unitary(const Unitary& u, const QState& s) {
    if (s.n_qubits() < u.n_qubits()) return s; // extension is the identity
    const Eigen::Index hi = u.matrix().rows();
    const Eigen::Index lo = s.dim() / hi;
    // (U (x) I) psi: view psi as a (hi x lo) row-major matrix and left-multiply.
    using RowMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMat> view(s.amplitudes().data(), hi, lo);
    RowMat result = u.matrix() * view;
    CVector out = Eigen::Map<CVector>(result.data(), s.dim());
    return QState::make(s.n_qubits(), std::move(out));
}

double measure_prob(int outcome, const QState& s) {
    if (outcome != 0 && outcome != 1) fail("InvalidOutcome", "measurement outcome must be 0 or 1");
    const Eigen::Index half = s.dim() / 2;
    const double p1 = std::clamp(s.amplitudes().segment(half, half).squaredNorm(), 0.0, 1.0);
    return outcome == 1 ? p1 : 1.0 - p1;
}

QState post_measure(int outcome, const QState& s) {
    const double p = measure_prob(outcome, s);
    if (p < kZeroProbTol) return s; // identity convention for impossible outcomes
    const Eigen::Index half = s.dim() / 2;
    CVector out = CVector::Zero(s.dim());
    if (outcome == 0)
        out.head(half) = s.amplitudes().head(half);
    else
        out.segment(half, half) = s.amplitudes().segment(half, half);
    out /= std::sqrt(p);
    return QState::make(s.n_qubits(), std::move(out));
}

GateTable GateTable::builtins() {
    GateTable t;
    const double is = 1.0 / std::sqrt(2.0);
    const Complex i(0, 1);

    CMatrix h(2, 2);
    h << is, is, is, -is;
    t.declare(Unitary::make("H", h));

    CMatrix x(2, 2);
    x << 0, 1, 1, 0;
    t.declare(Unitary::make("X", x));

    CMatrix y(2, 2);
    y << 0, -i, i, 0;
    t.declare(Unitary::make("Y", y));

    CMatrix z(2, 2);
    z << 1, 0, 0, -1;
    t.declare(Unitary::make("Z", z));

    CMatrix sg(2, 2);
    sg << 1, 0, 0, i;
    t.declare(Unitary::make("S", sg));

    CMatrix tg(2, 2);
    tg << 1, 0, 0, std::exp(i * (M_PI / 4));
    t.declare(Unitary::make("T", tg));

    CMatrix cnot = CMatrix::Identity(4, 4);
    cnot(2, 2) = 0;
    cnot(3, 3) = 0;
    cnot(2, 3) = 1;
    cnot(3, 2) = 1;
    t.declare(Unitary::make("CNOT", cnot));

    CMatrix swap = CMatrix::Identity(4, 4);
    swap(1, 1) = 0;
    swap(2, 2) = 0;
    swap(1, 2) = 1;
    swap(2, 1) = 1;
    t.declare(Unitary::make("SWAP", swap));

    return t;
}

void GateTable::declare(const Unitary& u) {
    auto [it, fresh] = gates_.insert({u.name(), u});
    if (!fresh) fail("DuplicateGate", "gate '" + u.name() + "' already declared");
}

const Unitary& GateTable::get(const std::string& name) const {
    auto it = gates_.find(name);
    if (it == gates_.end()) fail("UnknownGate", "unknown gate '" + name + "'");
    return it->second;
}

} // namespace qetlab
