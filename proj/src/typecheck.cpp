#include "qetlab/typecheck.hpp"

#include <algorithm>
#include <set>

namespace qetlab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Affine bindings with consumption state, threaded through the derivation.
struct Checker {
    const SigTable& sigs;
    const GateTable& gates;

    std::map<std::string, TypePtr> gamma;
    std::map<std::string, TypePtr> affine;    // still available
    std::set<std::string> consumed;           // used once already
    std::set<std::string> blocked;            // affine names hidden by =>_e / rec premises

    [[noreturn]] void err(const std::string& kind, const std::string& msg, const TermPtr& t,
                          const std::string& rule) const {
        fail(kind, msg, t->pos, rule);
    }

    void expect_type(const TypePtr& got, const TypePtr& want, const TermPtr& t,
                     const std::string& rule) const {
        if (!type_equal(*got, *want))
            err("TypeMismatch",
                "expected type " + show_type(*want) + " but found " + show_type(*got), t, rule);
    }

    TermPtr check(const TermPtr& t, const TypePtr& want);
    std::pair<TermPtr, TypePtr> infer(const TermPtr& t);

    TermPtr check_var(const TermPtr& t, const Var& v, const TypePtr& want) {
        auto g = gamma.find(v.name);
        if (g != gamma.end()) {
            expect_type(g->second, want, t, "ax_c");
            return t;
        }
        auto a = affine.find(v.name);
        if (a != affine.end()) {
            expect_type(a->second, want, t, "ax");
            consumed.insert(v.name);
            affine.erase(a);
            return t;
        }
        if (consumed.count(v.name))
            err("LinearityViolation", "affine variable '" + v.name + "' used twice", t, "ax");
        if (blocked.count(v.name))
            err("AffineLeak",
                "affine variable '" + v.name + "' crosses a =>/rec boundary", t, "ax");
        err("UnboundVariable", "unbound variable '" + v.name + "'", t, "ax");
    }

    // Runs `body` with an empty affine context (premises of =>_e and rec).
    template <class F>
    auto with_blocked_affine(F&& body) {
        auto saved_affine = std::move(affine);
        auto saved_consumed = std::move(consumed);
        auto saved_blocked = blocked;
        affine.clear();
        consumed.clear();
        for (const auto& [name, _] : saved_affine) blocked.insert(name);
        for (const auto& name : saved_consumed) blocked.insert(name);
        auto restore = [&]() {
            affine = std::move(saved_affine);
            consumed = std::move(saved_consumed);
            blocked = std::move(saved_blocked);
        };
        try {
            auto r = body();
            restore();
            return r;
        } catch (...) {
            restore();
            throw;
        }
    }

    struct Shadow {
        bool had_gamma = false, had_affine = false, was_consumed = false;
        TypePtr old_gamma, old_affine;
    };

    Shadow bind_affine(const std::string& x, const TypePtr& ty) {
        Shadow s;
        if (auto it = gamma.find(x); it != gamma.end()) {
            s.had_gamma = true;
            s.old_gamma = it->second;
            gamma.erase(it);
        }
        if (auto it = affine.find(x); it != affine.end()) {
            s.had_affine = true;
            s.old_affine = it->second;
        }
        s.was_consumed = consumed.count(x) > 0;
        consumed.erase(x);
        affine[x] = ty;
        return s;
    }

    Shadow bind_gamma(const std::string& x, const TypePtr& ty) {
        Shadow s;
        if (auto it = gamma.find(x); it != gamma.end()) {
            s.had_gamma = true;
            s.old_gamma = it->second;
        }
        if (auto it = affine.find(x); it != affine.end()) {
            s.had_affine = true;
            s.old_affine = it->second;
            affine.erase(it);
        }
        s.was_consumed = consumed.count(x) > 0;
        consumed.erase(x);
        gamma[x] = ty;
        return s;
    }

    void unbind(const std::string& x, const Shadow& s, bool was_affine_binding) {
        if (was_affine_binding)
            affine.erase(x);
        else
            gamma.erase(x);
        consumed.erase(x);
        if (s.had_gamma) gamma[x] = s.old_gamma;
        if (s.had_affine) affine[x] = s.old_affine;
        if (s.was_consumed) consumed.insert(x);
    }

    TypePtr basic_of(const std::string& name, const TermPtr& t, const std::string& rule) {
        if (!sigs.has_type(name)) err("UnknownType", "unknown basic type '" + name + "'", t, rule);
        return SourceType::basic(name, sigs.is_classical(name));
    }

    // Shared by check/infer: constructor applications.
    TermPtr elab_cons(const TermPtr& t, const ConsApp& c, const std::string& rule) {
        if (!sigs.has_cons(c.cons))
            err("UnknownConstructor", "unknown constructor '" + c.cons + "'", t, rule);
        const ConsSignature& sig = sigs.cons(c.cons);
        if (sig.classical_args.size() != c.classical_args.size() ||
            sig.quantum_args.size() != c.quantum_args.size())
            err("ArityMismatch", "constructor '" + c.cons + "' expects " +
                                     std::to_string(sig.classical_args.size()) + ";" +
                                     std::to_string(sig.quantum_args.size()) + " arguments",
                t, rule);
        ConsApp out{c.cons, {}, {}};
        for (size_t i = 0; i < c.classical_args.size(); ++i)
            out.classical_args.push_back(
                check(c.classical_args[i], basic_of(sig.classical_args[i], t, rule)));
        for (size_t i = 0; i < c.quantum_args.size(); ++i)
            out.quantum_args.push_back(
                check(c.quantum_args[i], basic_of(sig.quantum_args[i], t, rule)));
        return mk(std::move(out), t->pos);
    }

    // Case with known expected type (or inference via the first branch).
    std::pair<TermPtr, TypePtr> elab_case(const TermPtr& t, const CaseOf& c, TypePtr want) {
        if (c.arms.empty()) err("MissingDefault", "case needs at least one constructor arm", t, "case");
        const std::string& b_name = sigs.cons(c.arms[0].cons).result;
        for (const auto& arm : c.arms) {
            if (!sigs.has_cons(arm.cons))
                err("UnknownConstructor", "unknown constructor '" + arm.cons + "'", t, "case");
            if (sigs.cons(arm.cons).result != b_name)
                err("TypeMismatch", "case arms mix constructors of '" + b_name + "' and '" +
                                        sigs.cons(arm.cons).result + "'", t, "case");
        }
        TypePtr b_type = basic_of(b_name, t, "case");
        TermPtr scrut = check(c.scrutinee, b_type);

        if (!c.default_body) {
            std::set<std::string> covered;
            for (const auto& arm : c.arms)
                if (!covered.insert(arm.cons).second)
                    err("TypeMismatch", "duplicate case arm for '" + arm.cons + "'", t, "case");
            for (const auto& cn : sigs.constructors(b_name))
                if (!covered.count(cn))
                    err("MissingDefault",
                        "non-exhaustive case: missing arm for '" + cn + "' and no default", t,
                        "case");
        }

        // Branches start from the same affine state; afterwards, a variable
        // remains available only if no branch consumed it.
        auto affine_before = affine;
        auto consumed_before = consumed;
        std::map<std::string, TypePtr> affine_join;
        std::set<std::string> consumed_join;
        bool first_branch = true;
        auto join_branch = [&]() {
            if (first_branch) {
                affine_join = affine;
                consumed_join = consumed;
                first_branch = false;
            } else {
                for (auto it = affine_join.begin(); it != affine_join.end();) {
                    if (!affine.count(it->first))
                        it = affine_join.erase(it);
                    else
                        ++it;
                }
                consumed_join.insert(consumed.begin(), consumed.end());
            }
            affine = affine_before;
            consumed = consumed_before;
        };

        CaseOf out{scrut, {}, c.default_binder, nullptr};
        for (const auto& arm : c.arms) {
            const ConsSignature& sig = sigs.cons(arm.cons);
            if (sig.classical_args.size() != arm.classical_binders.size() ||
                sig.quantum_args.size() != arm.quantum_binders.size())
                err("ArityMismatch", "pattern '" + arm.cons + "' has wrong arity", t, "case");
            std::vector<std::pair<std::string, Shadow>> shadows_g, shadows_a;
            for (size_t i = 0; i < arm.classical_binders.size(); ++i)
                shadows_g.push_back({arm.classical_binders[i],
                                     bind_gamma(arm.classical_binders[i],
                                                basic_of(sig.classical_args[i], t, "case"))});
            for (size_t i = 0; i < arm.quantum_binders.size(); ++i)
                shadows_a.push_back({arm.quantum_binders[i],
                                     bind_affine(arm.quantum_binders[i],
                                                 basic_of(sig.quantum_args[i], t, "case"))});
            TermPtr body;
            if (want) {
                body = check(arm.body, want);
            } else {
                auto [eb, bt] = infer(arm.body);
                body = eb;
                want = bt;
            }
            for (auto it = shadows_a.rbegin(); it != shadows_a.rend(); ++it)
                unbind(it->first, it->second, true);
            for (auto it = shadows_g.rbegin(); it != shadows_g.rend(); ++it)
                unbind(it->first, it->second, false);
            out.arms.push_back({arm.cons, arm.classical_binders, arm.quantum_binders, body});
            join_branch();
        }
        if (c.default_body) {
            // The default binder is exponential for classical scrutinees,
            // affine for quantum ones (Fig. 3 side condition).
            bool classical = sigs.is_classical(b_name);
            Shadow s = classical ? bind_gamma(c.default_binder, b_type)
                                 : bind_affine(c.default_binder, b_type);
            TermPtr body;
            if (want) {
                body = check(c.default_body, want);
            } else {
                auto [eb, bt] = infer(c.default_body);
                body = eb;
                want = bt;
            }
            unbind(c.default_binder, s, !classical);
            out.default_body = body;
            join_branch();
        }
        affine = affine_join;
        consumed = consumed_join;
        return {mk(std::move(out), t->pos), want};
    }

    TermPtr elab_letrec(const TermPtr& t, const Letrec& l, const TypePtr& want) {
        if (!duplicable(*want))
            err("NotDuplicable",
                "letrec must have a duplicable type, got " + show_type(*want), t, "rec");
        if (l.annotation && !type_equal(*l.annotation, *want))
            err("TypeMismatch", "letrec annotated " + show_type(*l.annotation) +
                                    " but used at " + show_type(*want), t, "rec");
        return with_blocked_affine([&]() -> TermPtr {
            Shadow s = bind_gamma(l.fun, want);
            TermPtr lam = mk(Lam{l.param, l.body, nullptr}, t->pos);
            TermPtr elam = check(lam, want);
            unbind(l.fun, s, false);
            const auto& el = std::get<Lam>(elam->node);
            return mk(Letrec{l.fun, l.param, el.body, want}, t->pos);
        });
    }
};

TermPtr Checker::check(const TermPtr& t, const TypePtr& want) {
    return std::visit(
        overloaded{
            [&](const Var& v) { return check_var(t, v, want); },
            [&](const Lam& l) -> TermPtr {
                if (l.annotation && !type_equal(*l.annotation, *want))
                    err("TypeMismatch", "lambda annotated " + show_type(*l.annotation) +
                                            " but used at " + show_type(*want), t, "-o_i");
                if (want->kind == SourceType::Kind::LinArrow) {
                    Shadow s = bind_affine(l.param, want->from);
                    TermPtr body = check(l.body, want->to);
                    unbind(l.param, s, true);
                    return mk(Lam{l.param, body, want}, t->pos);
                }
                if (want->kind == SourceType::Kind::ExpArrow) {
                    Shadow s = bind_gamma(l.param, want->from);
                    TermPtr body = check(l.body, want->to);
                    unbind(l.param, s, false);
                    return mk(Lam{l.param, body, want}, t->pos);
                }
                err("TypeMismatch", "lambda cannot have basic type " + show_type(*want), t,
                    "-o_i");
            },
            [&](const App&) -> TermPtr {
                auto [et, ty] = infer(t);
                expect_type(ty, want, t, "-o_e");
                return et;
            },
            [&](const KetT&) -> TermPtr {
                expect_type(SourceType::basic("Q", false), want, t, "st");
                return t;
            },
            [&](const GateApp& g) -> TermPtr {
                if (!gates.contains(g.gate))
                    err("UnknownGate", "unknown gate '" + g.gate + "'", t, "un");
                expect_type(SourceType::basic("Q", false), want, t, "un");
                return mk(GateApp{g.gate, check(g.arg, SourceType::basic("Q", false))}, t->pos);
            },
            [&](const Meas& m) -> TermPtr {
                expect_type(SourceType::basic("Out", false), want, t, "meas");
                return mk(Meas{check(m.arg, SourceType::basic("Q", false))}, t->pos);
            },
            [&](const TensorT& s) -> TermPtr {
                expect_type(SourceType::basic("Q", false), want, t, "(x)");
                TypePtr q = SourceType::basic("Q", false);
                TermPtr lhs = check(s.lhs, q);
                TermPtr rhs = check(s.rhs, q);
                return mk(TensorT{lhs, rhs}, t->pos);
            },
            [&](const ConsApp& c) -> TermPtr {
                if (!sigs.has_cons(c.cons))
                    err("UnknownConstructor", "unknown constructor '" + c.cons + "'", t, "cons");
                expect_type(basic_of(sigs.cons(c.cons).result, t, "cons"), want, t, "cons");
                return elab_cons(t, c, "cons");
            },
            [&](const CaseOf& c) -> TermPtr { return elab_case(t, c, want).first; },
            [&](const Letrec& l) -> TermPtr { return elab_letrec(t, l, want); },
            [&](const TickT& k) -> TermPtr {
                return mk(TickT{check(k.arg, want)}, t->pos);
            },
        },
        t->node);
}

std::pair<TermPtr, TypePtr> Checker::infer(const TermPtr& t) {
    return std::visit(
        overloaded{
            [&](const Var& v) -> std::pair<TermPtr, TypePtr> {
                if (auto g = gamma.find(v.name); g != gamma.end()) return {t, g->second};
                if (auto a = affine.find(v.name); a != affine.end()) {
                    TypePtr ty = a->second;
                    consumed.insert(v.name);
                    affine.erase(a);
                    return {t, ty};
                }
                if (consumed.count(v.name))
                    err("LinearityViolation", "affine variable '" + v.name + "' used twice", t,
                        "ax");
                if (blocked.count(v.name))
                    err("AffineLeak",
                        "affine variable '" + v.name + "' crosses a =>/rec boundary", t, "ax");
                err("UnboundVariable", "unbound variable '" + v.name + "'", t, "ax");
            },
            [&](const Lam& l) -> std::pair<TermPtr, TypePtr> {
                if (!l.annotation)
                    err("CannotInfer", "cannot infer the type of an unannotated lambda", t,
                        "-o_i");
                return {check(t, l.annotation), l.annotation};
            },
            [&](const App& a) -> std::pair<TermPtr, TypePtr> {
                auto [ef, fty] = infer(a.fun);
                if (fty->kind == SourceType::Kind::LinArrow) {
                    TermPtr ea = check(a.arg, fty->from);
                    return {mk(App{ef, ea}, t->pos), fty->to};
                }
                if (fty->kind == SourceType::Kind::ExpArrow) {
                    TermPtr ea = with_blocked_affine(
                        [&]() { return check(a.arg, fty->from); });
                    return {mk(App{ef, ea}, t->pos), fty->to};
                }
                err("TypeMismatch",
                    "application head has non-arrow type " + show_type(*fty), t, "-o_e");
            },
            [&](const KetT&) -> std::pair<TermPtr, TypePtr> {
                return {t, SourceType::basic("Q", false)};
            },
            [&](const GateApp& g) -> std::pair<TermPtr, TypePtr> {
                if (!gates.contains(g.gate))
                    err("UnknownGate", "unknown gate '" + g.gate + "'", t, "un");
                TypePtr q = SourceType::basic("Q", false);
                return {mk(GateApp{g.gate, check(g.arg, q)}, t->pos), q};
            },
            [&](const Meas& m) -> std::pair<TermPtr, TypePtr> {
                TermPtr ea = check(m.arg, SourceType::basic("Q", false));
                return {mk(Meas{ea}, t->pos), SourceType::basic("Out", false)};
            },
            [&](const TensorT& s) -> std::pair<TermPtr, TypePtr> {
                TypePtr q = SourceType::basic("Q", false);
                TermPtr lhs = check(s.lhs, q);
                TermPtr rhs = check(s.rhs, q);
                return {mk(TensorT{lhs, rhs}, t->pos), q};
            },
            [&](const ConsApp& c) -> std::pair<TermPtr, TypePtr> {
                if (!sigs.has_cons(c.cons))
                    err("UnknownConstructor", "unknown constructor '" + c.cons + "'", t, "cons");
                TermPtr et = elab_cons(t, c, "cons");
                return {et, basic_of(sigs.cons(c.cons).result, t, "cons")};
            },
            [&](const CaseOf& c) -> std::pair<TermPtr, TypePtr> {
                return elab_case(t, c, nullptr);
            },
            [&](const Letrec& l) -> std::pair<TermPtr, TypePtr> {
                if (!l.annotation)
                    err("CannotInfer", "annotation required at letrec", t, "rec");
                return {elab_letrec(t, l, l.annotation), l.annotation};
            },
            [&](const TickT& k) -> std::pair<TermPtr, TypePtr> {
                auto [ea, ty] = infer(k.arg);
                return {mk(TickT{ea}, t->pos), ty};
            },
        },
        t->node);
}

} // namespace

TermPtr check_term(const TypingContext& ctx, const TermPtr& term, const TypePtr& expected,
                   const SigTable& sigs, const GateTable& gates) {
    Checker ck{sigs, gates};
    ck.gamma = ctx.exponential;
    ck.affine = ctx.affine;
    for (const auto& [name, _] : ctx.exponential)
        if (ctx.affine.count(name))
            fail("InvalidContext", "variable '" + name + "' bound in both contexts");
    return ck.check(term, expected);
}

std::pair<TermPtr, TypePtr> infer_term(const TypingContext& ctx, const TermPtr& term,
                                       const SigTable& sigs, const GateTable& gates) {
    Checker ck{sigs, gates};
    ck.gamma = ctx.exponential;
    ck.affine = ctx.affine;
    return ck.infer(term);
}

TypedProgram check_program(const Program& program, TypePtr annotation_override) {
    TypePtr want = annotation_override ? annotation_override : program.main_annotation;
    TypedProgram out{program, nullptr, nullptr};
    TypingContext empty;
    if (want) {
        out.main = check_term(empty, program.main, want, program.sigs, program.gates);
        out.main_type = want;
    } else {
        auto [et, ty] = infer_term(empty, program.main, program.sigs, program.gates);
        out.main = et;
        out.main_type = ty;
    }
    return out;
}

TypePtr simple_infer(const std::map<std::string, TypePtr>& env, const TermPtr& term,
                     const SigTable& sigs, const GateTable& gates) {
    // Linearity already established by check_term; one flat exponential context.
    Checker ck{sigs, gates};
    ck.gamma = env;
    return ck.infer(term).second;
}

} // namespace qetlab
