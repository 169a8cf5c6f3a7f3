#include "helpers.hpp"

using namespace qt;

namespace {

SigTable& sigs() {
    static SigTable s = SigTable::builtins();
    return s;
}
GateTable& gates() {
    static GateTable g = GateTable::builtins();
    return g;
}

TypePtr sty(const std::string& s) { return parse_type_string(s, sigs()); }

DenoteCtx ctx_rplus(int budget = 64) {
    DenoteCtx ctx;
    ctx.cs = instance_rplus();
    ctx.gates = &gates();
    ctx.sigs = &sigs();
    ctx.budget = budget;
    return ctx;
}

// Denotes a translated cost term under a valuation, iterating the budget.
double denote_cost(const CSTermPtr& t, const Valuation& rho) {
    CSTermPtr el = cs_check({}, t, CSType::k(), sigs(), gates(), KMode::RPlus);
    return denote_closed_cost(el, rho, ctx_rplus(), 64, 1e-10).value.v;
}

double denote_cost_ctx(const CSTermPtr& t, const CSContext& theta, const Valuation& rho) {
    CSTermPtr el = cs_check(theta, t, CSType::k(), sigs(), gates(), KMode::RPlus);
    return denote_closed_cost(el, rho, ctx_rplus(), 64, 1e-10).value.v;
}

} // namespace

TEST_CASE("type translation follows the CPS clauses") {
    CHECK(show_cs_type(*qet_translate_type(sty("Q"))) == "Q");
    CHECK(show_cs_type(*qet_translate_type(sty("Q -o Q"))) == "Q => (Q => K) => K");
    // compose the two clauses by hand for (Q -o Q) => Q
    CHECK(show_cs_type(*qet_translate_type(sty("(Q -o Q) => Q"))) ==
          "(Q => (Q => K) => K) => (Q => K) => K");
}

TEST_CASE("value translation: the identity becomes lam X. lam K. K X") {
    TypingContext empty;
    TermPtr id = check_term(empty, parse_term_string("lam x. x", sigs(), gates()),
                            sty("Q -o Q"), sigs(), gates());
    QetResult res = qet_translate_value(id, sigs(), gates());
    CSTermPtr want =
        parse_cs_term_string("lam (Xq : Q). lam (Kc : Q => K). Kc Xq", sigs(), gates());
    CHECK_MESSAGE(cs_alpha_eq(res.term, want), cs_pretty(res.term));
}

TEST_CASE("kets translate to themselves") {
    TermPtr k = ket_term(psi_paper());
    QetResult res = qet_translate_value(k, sigs(), gates());
    const auto* ck = cs_as<CSKet>(res.term);
    REQUIRE(ck != nullptr);
    CHECK(ck->state.approx_equal(psi_paper()));
}

TEST_CASE("a value under a continuation becomes an application") {
    TermPtr k = ket_term(QState::basis("0"));
    CSTermPtr cont = zero_continuation(CSType::basic("Q"));
    QetResult res = qet_translate_term(k, cont, sigs(), gates());
    const auto* app = cs_as<CSApp>(res.term);
    REQUIRE(app != nullptr);
    CHECK(cs_as<CSKet>(app->arg) != nullptr);
    CHECK(denote_cost(res.term, {}) == doctest::Approx(0.0));
}

TEST_CASE("tick and meas translate to cost and barycentric structure") {
    // qet[tick(meas x)]{K} with K = lam Z. 0: denotationally equal to the
    // inlined form 1 ^+ (K inj0(collapse0 X) (+p0 X) K inj1(collapse1 X)),
    // which collapses to the constant 1.
    TypingContext ctx;
    ctx.affine["x"] = sty("Q");
    TermPtr t = check_term(ctx, parse_term_string("tick(meas x)", sigs(), gates()), sty("Out"),
                           sigs(), gates());
    CSTermPtr cont = zero_continuation(CSType::basic("Out"));
    std::map<std::string, TypePtr> free_types{{"x", sty("Q")}};
    QetResult res = qet_translate_term(t, cont, sigs(), gates(), free_types);
    // the root must be the cost addition from the tick clause
    CHECK(cs_as<CSCAdd>(res.term) != nullptr);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 10; ++i) {
        Valuation rho;
        rho[res.rename.at("x")] = Denotation{QuantumVal{random_state(rng, 2)}};
        CSContext theta;
        theta[res.rename.at("x")] = CSType::basic("Q");
        CHECK(denote_cost_ctx(res.term, theta, rho) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("typing preservation on the corpus") {
    for (const auto& e : corpus()) {
        if (!e.expect_error.empty()) continue;
        Program p = load_corpus(e.file);
        TypedProgram tp = check_program(p);
        CSTermPtr cont = zero_continuation(qet_translate_type(tp.main_type));
        QetResult res = qet_translate_term(tp.main, cont, p.sigs, p.gates);
        CHECK_NOTHROW(cs_check({}, res.term, CSType::k(), p.sigs, p.gates, KMode::Abstract));
    }
}

TEST_CASE("typing preservation with a non-trivial continuation") {
    Program p = load_corpus("bell.aql");
    TypedProgram tp = check_program(p);
    CSProgram cont = parse_cs_program(slurp(corpus_path("indicator0.csl")));
    QetResult res = qet_translate_term(tp.main, cont.main, p.sigs, p.gates);
    CHECK_NOTHROW(cs_check({}, res.term, CSType::k(), p.sigs, p.gates, KMode::Abstract));
}

TEST_CASE("the translated cointoss agrees with ECOST denotationally") {
    Program p = load_corpus("cointoss.aql");
    TypingContext ctx;
    ctx.affine["y"] = sty("Q");
    TermPtr applied = mk(App{p.defs[0].value, mk(Var{"y"})});
    TermPtr et = check_term(ctx, applied, sty("Q"), p.sigs, p.gates);

    CSTermPtr cont = zero_continuation(CSType::basic("Q"));
    std::map<std::string, TypePtr> free_types{{"y", sty("Q")}};
    QetResult res = qet_translate_term(et, cont, p.sigs, p.gates, free_types);

    CSProgram ecost = parse_cs_program(slurp(corpus_path("ecost.csl")));
    CSTermPtr ecost_el = cs_check({}, ecost.main, ecost.main_annotation, p.sigs, p.gates,
                                  KMode::RPlus);

    std::mt19937_64 rng(17);
    for (int i = 0; i < 25; ++i) {
        QState psi = random_state(rng, 1 + int(rng() % 3));
        Valuation rho;
        rho[res.rename.at("y")] = Denotation{QuantumVal{psi}};
        CSContext theta;
        theta[res.rename.at("y")] = CSType::basic("Q");
        double lhs = denote_cost_ctx(res.term, theta, rho);

        CSTermPtr applied_ecost = cs_mk(CSApp{ecost_el, cs_mk(CSKet{psi})});
        double rhs = denote_closed_cost(applied_ecost, {}, ctx_rplus(), 64, 1e-10).value.v;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-7));
        // and both match the closed form 1 + 2 p1(psi)
        CHECK(lhs == doctest::Approx(1.0 + 2.0 * measure_prob(1, psi)).epsilon(1e-6));
    }
}

TEST_CASE("constructor sequences translate right-to-left like the evaluator") {
    // cons with a reducible quantum argument: the translation still types and
    // its denotation matches the operational expectation (cost of the ticks).
    SigTable s2 = SigTable::builtins();
    GateTable g2 = GateTable::builtins();
    TermPtr t = parse_term_string("inj0(; tick(H ket[1|0>]))", s2, g2);
    TypingContext empty;
    TermPtr et = check_term(empty, t, SourceType::basic("Out", false), s2, g2);
    QetResult res = qet_translate_term(et, zero_continuation(CSType::basic("Out")), s2, g2);
    CHECK(denote_cost(res.term, {}) == doctest::Approx(1.0)); // exactly the one tick
}

TEST_CASE("administrative redexes are kept, not inlined") {
    // qet[v]{lam X. 0} must literally be (lam X. 0) V, not 0.
    TermPtr k = ket_term(QState::basis("0"));
    QetResult res = qet_translate_term(k, zero_continuation(CSType::basic("Q")), sigs(), gates());
    CHECK(cs_as<CSApp>(res.term) != nullptr);
    CHECK(cs_as<CSReal>(res.term) == nullptr);
}
