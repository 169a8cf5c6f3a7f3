#pragma once

#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "qetlab/corpus.hpp"
#include "qetlab/cs_parser.hpp"
#include "qetlab/cs_typecheck.hpp"
#include "qetlab/denote.hpp"
#include "qetlab/parser.hpp"
#include "qetlab/pars.hpp"
#include "qetlab/qet.hpp"
#include "qetlab/refinement.hpp"
#include "qetlab/rty_parser.hpp"
#include "qetlab/soundness.hpp"
#include "qetlab/typecheck.hpp"

namespace qt {

using namespace qetlab;

inline std::string corpus_path(const std::string& name) {
    return std::string(QETLAB_SOURCE_DIR) + "/corpus/" + name;
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Program load_corpus(const std::string& name) {
    return parse_program(slurp(corpus_path(name)));
}

inline QState random_state(std::mt19937_64& rng, int n_qubits) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    CVector v(Eigen::Index(1) << n_qubits);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = Complex(gauss(rng), gauss(rng));
    v /= v.norm();
    return QState::make(n_qubits, std::move(v));
}

/// Haar-ish random unitary: QR of a complex Gaussian matrix.
inline Unitary random_unitary(std::mt19937_64& rng, int n_qubits) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::Index d = Eigen::Index(1) << n_qubits;
    CMatrix m(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) m(i, j) = Complex(gauss(rng), gauss(rng));
    Eigen::HouseholderQR<CMatrix> qr(m);
    CMatrix q = qr.householderQ();
    return Unitary::make("RND", std::move(q));
}

inline TermPtr ket_term(const QState& s) { return mk(KetT{s}); }

inline const QState& psi_paper() {
    // 1/2 |001> + 1/sqrt2 |011> + 1/2 |100>  (section 1.4 state)
    static const QState s = [] {
        CVector v = CVector::Zero(8);
        v[1] = 0.5;
        v[3] = 1.0 / std::sqrt(2.0);
        v[4] = 0.5;
        return QState::make(3, std::move(v));
    }();
    return s;
}

inline const QState& psi_43() {
    // 1/sqrt3 (|00> + |10> + |11>)  (section 4.3 state)
    static const QState s = [] {
        CVector v = CVector::Zero(4);
        double a = 1.0 / std::sqrt(3.0);
        v[0] = a;
        v[2] = a;
        v[3] = a;
        return QState::make(2, std::move(v));
    }();
    return s;
}

} // namespace qt
