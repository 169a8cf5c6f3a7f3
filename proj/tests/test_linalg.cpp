#include "helpers.hpp"

using namespace qt;

TEST_CASE("tensor of basis states concatenates labels") {
    QState q0 = QState::basis("0");
    QState q1 = QState::basis("1");
    QState q01 = tensor(q0, q1);
    CHECK(q01.approx_equal(QState::basis("01")));
}

TEST_CASE("tensor with |0> interleaves amplitudes with zeros") {
    std::mt19937_64 rng(1);
    QState psi = random_state(rng, 2);
    QState out = tensor(psi, QState::basis("0"));
    REQUIRE(out.dim() == 8);
    for (Eigen::Index i = 0; i < 4; ++i) {
        CHECK(std::abs(out.amplitudes()[2 * i] - psi.amplitudes()[i]) < 1e-12);
        CHECK(std::abs(out.amplitudes()[2 * i + 1]) == 0.0);
    }
}

TEST_CASE("tensor of plus states: the four-entry hand expansion") {
    GateTable gates = GateTable::builtins();
    QState plus = apply_unitary(gates.get("H"), QState::basis("0"));
    QState out = tensor(plus, plus);
    // (1/sqrt2 (|0>+|1>))^2 = 1/2 (|00>+|01>+|10>+|11>), expanded by hand.
    for (Eigen::Index i = 0; i < 4; ++i)
        CHECK(std::abs(out.amplitudes()[i] - Complex(0.5, 0)) < 1e-12);
}

TEST_CASE("Hadamard on |0> gives the plus state") {
    GateTable gates = GateTable::builtins();
    QState out = apply_unitary(gates.get("H"), QState::basis("0"));
    double is = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(out.amplitudes()[0] - Complex(is, 0)) < 1e-12);
    CHECK(std::abs(out.amplitudes()[1] - Complex(is, 0)) < 1e-12);
}

TEST_CASE("one-qubit H extends over |100>: 1/sqrt2 |000> - 1/sqrt2 |100>") {
    GateTable gates = GateTable::builtins();
    QState out = apply_unitary(gates.get("H"), QState::basis("100"));
    double is = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(out.amplitudes()[0] - Complex(is, 0)) < 1e-12);  // |000>
    CHECK(std::abs(out.amplitudes()[4] - Complex(-is, 0)) < 1e-12); // |100>, minus sign
    CHECK(out.amplitudes().norm() == doctest::Approx(1.0));
}

TEST_CASE("a wide gate on a narrow state is the identity") {
    GateTable gates = GateTable::builtins();
    QState one = QState::basis("1");
    CHECK(apply_unitary(gates.get("CNOT"), one).approx_equal(one));
}

TEST_CASE("measurement probabilities from the paper") {
    CHECK(measure_prob(1, psi_43()) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(measure_prob(0, psi_paper()) == doctest::Approx(3.0 / 4.0).epsilon(1e-9));
    CHECK(measure_prob(0, QState::basis("0")) == doctest::Approx(1.0));
}

TEST_CASE("post-measurement collapse from the paper") {
    QState m1 = post_measure(1, psi_43());
    CVector want = CVector::Zero(4);
    want[2] = 1.0 / std::sqrt(2.0);
    want[3] = 1.0 / std::sqrt(2.0);
    CHECK(m1.approx_equal(QState::make(2, want), 1e-9));

    QState m1p = post_measure(1, psi_paper());
    CHECK(m1p.approx_equal(QState::basis("100"), 1e-9));

    // p0 of |1> is zero: the identity convention applies.
    QState one = QState::basis("1");
    CHECK(post_measure(0, one).approx_equal(one));
}

TEST_CASE("probabilities sum to one and collapses are normalized") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        QState s = random_state(rng, 1 + int(rng() % 3));
        double p0 = measure_prob(0, s);
        double p1 = measure_prob(1, s);
        CHECK(std::abs(p0 + p1 - 1.0) < 1e-9);
        for (int b = 0; b < 2; ++b) {
            if (measure_prob(b, s) > kZeroProbTol)
                CHECK(std::abs(post_measure(b, s).amplitudes().norm() - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("unitaries preserve the norm (built-ins and random QR unitaries)") {
    std::mt19937_64 rng(11);
    GateTable gates = GateTable::builtins();
    for (const char* g : {"H", "X", "Y", "Z", "S", "T"}) {
        for (int i = 0; i < 20; ++i) {
            QState s = random_state(rng, 1 + int(rng() % 3));
            CHECK(std::abs(apply_unitary(gates.get(g), s).amplitudes().norm() - 1.0) < 1e-9);
        }
    }
    for (int i = 0; i < 40; ++i) {
        Unitary u = random_unitary(rng, 1 + int(rng() % 2));
        QState s = random_state(rng, 3);
        CHECK(std::abs(apply_unitary(u, s).amplitudes().norm() - 1.0) < 1e-9);
    }
}

TEST_CASE("tensor is associative up to 1e-12") {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 50; ++i) {
        QState a = random_state(rng, 1);
        QState b = random_state(rng, 1 + int(rng() % 2));
        QState c = random_state(rng, 1);
        CHECK(tensor(tensor(a, b), c).approx_equal(tensor(a, tensor(b, c)), 1e-12));
    }
}

TEST_CASE("weighted collapses reconstruct the state") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 100; ++i) {
        QState s = random_state(rng, 1 + int(rng() % 3));
        CVector sum = CVector::Zero(s.dim());
        for (int b = 0; b < 2; ++b) {
            double p = measure_prob(b, s);
            if (p <= kZeroProbTol) continue;
            sum += std::sqrt(p) * post_measure(b, s).amplitudes();
        }
        CHECK((sum - s.amplitudes()).lpNorm<Eigen::Infinity>() < 1e-9);
    }
}

TEST_CASE("invalid states and matrices are rejected") {
    CVector v(2);
    v << 0.5, 0.5; // norm != 1
    CHECK_THROWS_AS(QState::make(1, v), Error);

    CVector nan(2);
    nan << std::numeric_limits<double>::quiet_NaN(), 0.0;
    CHECK_THROWS_AS(QState::make(1, nan), Error);

    CMatrix m(2, 2);
    m << 1, 1, 0, 1; // not unitary
    CHECK_THROWS_AS(Unitary::make("BAD", m), Error);
}
