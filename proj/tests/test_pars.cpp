#include "helpers.hpp"

using namespace qt;

namespace {

GateTable& gates() {
    static GateTable g = GateTable::builtins();
    return g;
}

TermPtr cointoss_applied(const QState& psi) {
    Program p = load_corpus("cointoss.aql");
    return mk(App{p.defs[0].value, ket_term(psi)});
}

} // namespace

TEST_CASE("tick reduces with cost one") {
    TermPtr t = mk(TickT{ket_term(QState::basis("0"))});
    auto st = step(t, gates());
    REQUIRE(st.has_value());
    CHECK(st->cost == 1.0);
    REQUIRE(st->dist.entries.size() == 1);
    CHECK(alpha_eq(st->dist.entries[0].term, ket_term(QState::basis("0"))));
}

TEST_CASE("measurement produces the paper's two-outcome distribution") {
    TermPtr t = mk(Meas{ket_term(psi_paper())});
    auto st = step(t, gates());
    REQUIRE(st.has_value());
    CHECK(st->cost == 0.0);
    REQUIRE(st->dist.entries.size() == 2);
    double p0 = -1, p1 = -1;
    for (const auto& e : st->dist.entries) {
        const auto* c = as<ConsApp>(e.term);
        REQUIRE(c != nullptr);
        if (c->cons == "inj0") {
            p0 = e.prob;
            CHECK(as<KetT>(c->quantum_args[0])->state.approx_equal(post_measure(0, psi_paper()),
                                                                   1e-9));
        } else {
            p1 = e.prob;
            CHECK(as<KetT>(c->quantum_args[0])->state.approx_equal(QState::basis("100"), 1e-9));
        }
    }
    CHECK(p0 == doctest::Approx(0.75));
    CHECK(p1 == doctest::Approx(0.25));
}

TEST_CASE("beta reduction is a single zero-cost step") {
    TermPtr id = mk(Lam{"x", mk(Var{"x"}), nullptr});
    TermPtr t = mk(App{id, ket_term(QState::basis("0"))});
    auto st = step(t, gates());
    REQUIRE(st.has_value());
    CHECK(st->cost == 0.0);
    CHECK(alpha_eq(st->dist.entries[0].term, ket_term(QState::basis("0"))));
}

TEST_CASE("values are terminal") {
    CHECK_FALSE(step(ket_term(QState::basis("0")), gates()).has_value());
    CHECK_FALSE(step(mk(Lam{"x", mk(Var{"x"}), nullptr}), gates()).has_value());
}

TEST_CASE("lift: a value distribution is stable at cost zero") {
    WeightedDist d;
    d.entries.push_back({ket_term(QState::basis("0")), 1.0});
    ReductionStep st = lift_step(d, gates());
    CHECK(st.cost == 0.0);
    REQUIRE(st.dist.entries.size() == 1);
    CHECK(st.dist.entries[0].prob == doctest::Approx(1.0));
}

TEST_CASE("lift: cost is the convex sum of branch costs") {
    TermPtr v = ket_term(QState::basis("0"));
    WeightedDist d;
    d.entries.push_back({mk(TickT{v}), 0.5});
    d.entries.push_back({v, 0.5});
    ReductionStep st = lift_step(d, gates());
    CHECK(st.cost == doctest::Approx(0.5)); // 1/2 * 1 + 1/2 * 0
    REQUIRE(st.dist.entries.size() == 1);   // both collapse onto v and merge
    CHECK(st.dist.entries[0].prob == doctest::Approx(1.0));
}

TEST_CASE("lift: the empty distribution is a fixpoint") {
    WeightedDist d;
    ReductionStep st = lift_step(d, gates());
    CHECK(st.cost == 0.0);
    CHECK(st.dist.entries.empty());
}

TEST_CASE("cointoss run at depth 40 reaches 3/2 within 1e-9") {
    RunReport rep = run(cointoss_applied(psi_paper()), 40, gates());
    CHECK(std::abs(rep.accumulated_cost - 1.5) < 1e-9);
    CHECK(rep.normal_forms.mass() >= 1.0 - std::pow(2.0, -38));
    CHECK(rep.live.mass() + rep.normal_forms.mass() + rep.pruned_mass ==
          doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("running a value is immediate") {
    RunReport rep = run(ket_term(QState::basis("1")), 10, gates());
    CHECK(rep.accumulated_cost == 0.0);
    CHECK(rep.depth == 0);
    REQUIRE(rep.normal_forms.entries.size() == 1);
    CHECK(rep.normal_forms.mass() == doctest::Approx(1.0));
}

TEST_CASE("a certain measurement keeps only the possible branch") {
    TermPtr t = mk(Meas{ket_term(QState::basis("0"))});
    RunReport rep = run(t, 2, gates());
    CHECK(rep.accumulated_cost == 0.0);
    REQUIRE(rep.normal_forms.entries.size() == 1);
    const auto* c = as<ConsApp>(rep.normal_forms.entries[0].term);
    REQUIRE(c != nullptr);
    CHECK(c->cons == "inj0");
    CHECK(rep.normal_forms.entries[0].prob == doctest::Approx(1.0));
}

TEST_CASE("ecost lower bounds walk the paper's partial sums") {
    TermPtr t = cointoss_applied(psi_paper());
    // 1, 1 + 1/4, 1 + 1/4 + 1/8, ... converging to 3/2
    CHECK(ecost_lower(t, 1, gates()) == doctest::Approx(1.0));
    CHECK(ecost_lower(t, 2, gates()) == doctest::Approx(1.25));
    CHECK(ecost_lower(t, 3, gates()) == doctest::Approx(1.375));
    double prev = 0.0;
    for (int d = 1; d <= 12; ++d) {
        double c = ecost_lower(t, d, gates());
        CHECK(c >= prev - 1e-12); // monotone in depth
        prev = c;
    }
    CHECK(prev <= 1.5 + 1e-12);
}

TEST_CASE("nf distributions grow monotonically with depth") {
    for (const auto& e : corpus()) {
        if (!e.expect_error.empty()) continue;
        Program p = load_corpus(e.file);
        TypedProgram tp = check_program(p);
        WeightedDist prev;
        for (int d = 1; d <= 8; d += 2) {
            WeightedDist cur = nf_dist(tp.main, d, p.gates);
            // every entry of prev appears in cur with at least its mass
            for (const auto& pe : prev.entries) {
                double cur_mass = 0.0;
                for (const auto& ce : cur.entries)
                    if (alpha_eq(pe.term, ce.term)) cur_mass += ce.prob;
                CHECK(cur_mass >= pe.prob - 1e-12);
            }
            prev = cur;
        }
    }
}

TEST_CASE("mass is conserved through lifted steps") {
    for (const auto& e : corpus()) {
        if (!e.expect_error.empty()) continue;
        Program p = load_corpus(e.file);
        TypedProgram tp = check_program(p);
        WeightedDist d;
        d.entries.push_back({tp.main, 1.0});
        for (int i = 0; i < 30; ++i) {
            double before = d.mass();
            ReductionStep st = lift_step(d, p.gates);
            CHECK(std::abs(st.dist.mass() + st.pruned - before) < 1e-12);
            d = st.dist;
        }
    }
}

TEST_CASE("the step function is deterministic") {
    Program p = load_corpus("cointoss.aql");
    TypedProgram tp = check_program(p);
    WeightedDist d;
    d.entries.push_back({tp.main, 1.0});
    for (int i = 0; i < 25; ++i) {
        for (const auto& e : d.entries) {
            auto a = step(e.term, p.gates);
            auto b = step(e.term, p.gates);
            CHECK(a.has_value() == b.has_value());
            if (!a) continue;
            CHECK(a->cost == b->cost);
            REQUIRE(a->dist.entries.size() == b->dist.entries.size());
            for (size_t k = 0; k < a->dist.entries.size(); ++k) {
                CHECK(a->dist.entries[k].prob == b->dist.entries[k].prob);
                CHECK(alpha_eq(a->dist.entries[k].term, b->dist.entries[k].term));
            }
        }
        d = lift_step(d, p.gates).dist;
    }
}

TEST_CASE("subject reduction: reducts re-check at the program type") {
    for (const auto& e : corpus()) {
        if (!e.expect_error.empty()) continue;
        Program p = load_corpus(e.file);
        TypedProgram tp = check_program(p);
        WeightedDist d;
        d.entries.push_back({tp.main, 1.0});
        TypingContext empty;
        for (int i = 0; i < 12; ++i) {
            for (const auto& entry : d.entries)
                CHECK_NOTHROW(check_term(empty, entry.term, tp.main_type, p.sigs, p.gates));
            d = lift_step(d, p.gates).dist;
        }
    }
}

TEST_CASE("evalue computes expectations over normal forms") {
    TermPtr t = mk(Meas{ket_term(psi_paper())});
    auto is_inj0 = [](const TermPtr& v) -> ExtReal {
        const auto* c = as<ConsApp>(v);
        return ExtReal{c && c->cons == "inj0" ? 1.0 : 0.0};
    };
    ExtReal got = evalue(t, is_inj0, 4, *kegelspitze_unit(), gates());
    CHECK(got.v == doctest::Approx(0.75).epsilon(1e-9));

    // a constantly-bottom function yields bottom
    ExtReal bot = evalue(t, [](const TermPtr&) { return ExtReal{0.0}; }, 4,
                         *kegelspitze_unit(), gates());
    CHECK(bot.v == 0.0);
}

TEST_CASE("evalue of grover's error is the closed form") {
    Program p = load_corpus("grover2_i1.aql");
    TypedProgram tp = check_program(p);
    auto err = [](const TermPtr& v) -> ExtReal {
        const auto* k = as<KetT>(v);
        REQUIRE(k != nullptr);
        // failure mass: all basis states whose first two bits differ from 11
        double good = 0.0;
        for (Eigen::Index i = 6; i <= 7; ++i) // 110, 111
            good += std::norm(k->state.amplitudes()[i]);
        return ExtReal{1.0 - good};
    };
    ExtReal got = evalue(tp.main, err, 10, *kegelspitze_unit(), p.gates);
    // cos^2(3 asin(1/2)) = cos^2(pi/2) = 0
    CHECK(std::abs(got.v - 0.0) < 1e-9);
}

TEST_CASE("sampler agrees with the exact run on cointoss") {
    TermPtr t = cointoss_applied(psi_paper());
    SampleReport rep = sample(t, 42, 100000, gates());
    CHECK(rep.guard_tripped == 0);
    // exact mean 1.5; the outcome variance is 1.25, so 3 sigma of the
    // empirical mean at 1e5 trials is ~0.0106
    CHECK(std::abs(rep.mean_cost - 1.5) < 0.02);
    // reproducibility per seed
    SampleReport again = sample(t, 42, 1000, gates());
    SampleReport third = sample(t, 42, 1000, gates());
    CHECK(again.mean_cost == third.mean_cost);
    CHECK(again.outcomes == third.outcomes);
}

TEST_CASE("sampler exactness on deterministic programs") {
    TermPtr t = mk(TickT{mk(TickT{mk(TickT{ket_term(QState::basis("0"))})})});
    SampleReport rep = sample(t, 1, 50, gates());
    CHECK(rep.mean_cost == 3.0);

    TermPtr m = mk(Meas{ket_term(QState::basis("0"))});
    SampleReport mrep = sample(m, 1, 200, gates());
    REQUIRE(mrep.outcomes.size() == 1);
    CHECK(mrep.outcomes.begin()->first.find("inj0") != std::string::npos);
}

TEST_CASE("sampler consistency across the corpus") {
    for (const auto& e : corpus()) {
        if (!e.expect_error.empty() || e.expected_ecost < 0) continue;
        Program p = load_corpus(e.file);
        TypedProgram tp = check_program(p);
        SampleReport rep = sample(tp.main, 2024, 20000, p.gates);
        // all corpus costs are bounded by small geometric mixtures; 4 sigma
        // at 2e4 trials is comfortably below 0.05
        CHECK_MESSAGE(std::abs(rep.mean_cost - e.expected_ecost) < 0.05, e.name);
    }
}
