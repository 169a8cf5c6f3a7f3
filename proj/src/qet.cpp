#include "qetlab/qet.hpp"

#include <algorithm>
#include <cctype>

#include "qetlab/typecheck.hpp"

namespace qetlab {

namespace {
template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
} // namespace

CSTypePtr qet_translate_type(const TypePtr& t) {
    switch (t->kind) {
    case SourceType::Kind::Basic:
        return CSType::basic(t->name);
    case SourceType::Kind::LinArrow:
    case SourceType::Kind::ExpArrow: {
        CSTypePtr dom = qet_translate_type(t->from);
        CSTypePtr cod = qet_translate_type(t->to);
        return CSType::arrow(dom, CSType::arrow(CSType::arrow(cod, CSType::k()), CSType::k()));
    }
    }
    fail("TypeMismatch", "unreachable type kind");
}

CSTermPtr zero_continuation(const CSTypePtr& domain) {
    return cs_mk(CSLam{"X", cs_mk(CSReal{0.0}), domain});
}

namespace {

void collect_names(const TermPtr& t, std::set<std::string>& out) {
    std::visit(overloaded{
                   [&](const Var& v) { out.insert(v.name); },
                   [&](const Lam& l) {
                       out.insert(l.param);
                       collect_names(l.body, out);
                   },
                   [&](const App& a) {
                       collect_names(a.fun, out);
                       collect_names(a.arg, out);
                   },
                   [&](const KetT&) {},
                   [&](const GateApp& g) { collect_names(g.arg, out); },
                   [&](const Meas& m) { collect_names(m.arg, out); },
                   [&](const TensorT& s) {
                       collect_names(s.lhs, out);
                       collect_names(s.rhs, out);
                   },
                   [&](const ConsApp& c) {
                       for (const auto& a : c.classical_args) collect_names(a, out);
                       for (const auto& a : c.quantum_args) collect_names(a, out);
                   },
                   [&](const CaseOf& c) {
                       collect_names(c.scrutinee, out);
                       for (const auto& arm : c.arms) {
                           for (const auto& b : arm.classical_binders) out.insert(b);
                           for (const auto& b : arm.quantum_binders) out.insert(b);
                           collect_names(arm.body, out);
                       }
                       if (c.default_body) {
                           out.insert(c.default_binder);
                           collect_names(c.default_body, out);
                       }
                   },
                   [&](const Letrec& l) {
                       out.insert(l.fun);
                       out.insert(l.param);
                       collect_names(l.body, out);
                   },
                   [&](const TickT& k) { collect_names(k.arg, out); },
               },
               t->node);
}

struct Qet {
    const SigTable& sigs;
    const GateTable& gates;
    std::map<std::string, std::string> rename; // injective source -> target
    std::set<std::string> used;                // taken target names
    std::map<std::string, TypePtr> src_env;    // source types of in-scope vars
    int fresh_counter = 0;

    Qet(const SigTable& s, const GateTable& g, const TermPtr& root, const CSTermPtr& continuation,
        const std::map<std::string, TypePtr>& free_types)
        : sigs(s), gates(g), src_env(free_types) {
        std::set<std::string> names;
        collect_names(root, names);
        for (const auto& [n, _] : free_types) names.insert(n);
        if (continuation) {
            auto kf = cs_free_vars(continuation);
            used.insert(kf.begin(), kf.end());
        }
        for (const auto& n : names) {
            rename[n] = pick_target(n);
        }
    }

    // Capitalized counterpart of a source variable, avoiding taken names,
    // gates and constructors (they bind tighter in the concrete syntax).
    std::string pick_target(const std::string& src) {
        std::string cand = src;
        cand[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(cand[0])));
        while (used.count(cand) || gates.contains(cand) || sigs.has_cons(cand)) cand += "v";
        used.insert(cand);
        return cand;
    }

    std::string target(const std::string& src) {
        auto it = rename.find(src);
        if (it != rename.end()) return it->second;
        // Binders introduced after construction map on demand.
        std::string cand = pick_target(src);
        rename[src] = cand;
        return cand;
    }

    std::string fresh(const std::string& base) {
        std::string cand;
        do {
            cand = base + std::to_string(fresh_counter++);
        } while (used.count(cand) || gates.contains(cand) || sigs.has_cons(cand));
        used.insert(cand);
        return cand;
    }

    TypePtr type_of(const TermPtr& t) { return simple_infer(src_env, t, sigs, gates); }

    template <class F>
    auto with_binding(const std::string& x, const TypePtr& ty, F&& body) {
        auto saved = src_env;
        src_env[x] = ty;
        auto r = body();
        src_env = saved;
        return r;
    }

    CSTermPtr value(const TermPtr& v) {
        return std::visit(
            overloaded{
                [&](const Var& x) -> CSTermPtr { return cs_mk(CSVar{target(x.name)}, v->pos); },
                [&](const Lam& l) -> CSTermPtr {
                    if (!l.annotation)
                        fail("CannotInfer", "value translation needs an elaborated lambda",
                             v->pos);
                    CSTypePtr dom = qet_translate_type(l.annotation->from);
                    CSTypePtr kty =
                        CSType::arrow(qet_translate_type(l.annotation->to), CSType::k());
                    std::string k = fresh("K");
                    CSTermPtr body = with_binding(l.param, l.annotation->from, [&] {
                        return term(l.body, cs_mk(CSVar{k}));
                    });
                    return cs_mk(
                        CSLam{target(l.param), cs_mk(CSLam{k, body, kty}, v->pos), dom}, v->pos);
                },
                [&](const KetT& kq) -> CSTermPtr { return cs_mk(CSKet{kq.state}, v->pos); },
                [&](const ConsApp& c) -> CSTermPtr {
                    CSCons out{c.cons, {}};
                    for (const auto& a : c.classical_args) out.args.push_back(value(a));
                    for (const auto& a : c.quantum_args) out.args.push_back(value(a));
                    return cs_mk(std::move(out), v->pos);
                },
                [&](const Letrec& l) -> CSTermPtr {
                    if (!l.annotation)
                        fail("CannotInfer", "value translation needs an elaborated letrec",
                             v->pos);
                    const TypePtr& c = l.annotation;
                    if (c->kind == SourceType::Kind::Basic)
                        fail("TypeMismatch", "letrec value of basic type cannot be translated",
                             v->pos);
                    CSTypePtr fty = qet_translate_type(c);
                    CSTypePtr kty = CSType::arrow(qet_translate_type(c->to), CSType::k());
                    std::string k = fresh("K");
                    CSTermPtr body = with_binding(l.fun, c, [&] {
                        return with_binding(l.param, c->from, [&] {
                            return term(l.body, cs_mk(CSVar{k}));
                        });
                    });
                    return cs_mk(CSLetrec{target(l.fun), target(l.param),
                                          cs_mk(CSLam{k, body, kty}, v->pos), fty},
                                 v->pos);
                },
                [&](const auto&) -> CSTermPtr {
                    fail("TypeMismatch", "not a value: " + pretty(v), v->pos);
                },
            },
            v->node);
    }

    CSTermPtr term(const TermPtr& t, const CSTermPtr& k) {
        if (is_value(t)) return cs_mk(CSApp{k, value(t)}, t->pos);
        return std::visit(
            overloaded{
                [&](const App& a) -> CSTermPtr {
                    TypePtr t1ty = type_of(a.arg);
                    TypePtr t0ty = type_of(a.fun);
                    std::string x1 = fresh("X");
                    std::string x0 = fresh("X");
                    CSTermPtr inner = cs_mk(
                        CSApp{cs_mk(CSApp{cs_mk(CSVar{x0}), cs_mk(CSVar{x1})}, t->pos), k},
                        t->pos);
                    CSTermPtr k0 =
                        cs_mk(CSLam{x0, inner, qet_translate_type(t0ty)}, t->pos);
                    CSTermPtr mid = term(a.fun, k0);
                    CSTermPtr k1 = cs_mk(CSLam{x1, mid, qet_translate_type(t1ty)}, t->pos);
                    return term(a.arg, k1);
                },
                [&](const GateApp& g) -> CSTermPtr {
                    std::string x = fresh("X");
                    CSTermPtr body = cs_mk(
                        CSApp{k, cs_mk(CSGate{g.gate, cs_mk(CSVar{x})}, t->pos)}, t->pos);
                    return term(g.arg, cs_mk(CSLam{x, body, CSType::basic("Q")}, t->pos));
                },
                [&](const Meas& m) -> CSTermPtr {
                    std::string x = fresh("X");
                    auto inj = [&](int b) {
                        CSTermPtr collapsed = cs_mk(CSCollapse{b, cs_mk(CSVar{x})}, t->pos);
                        CSTermPtr cons =
                            cs_mk(CSCons{b == 0 ? "inj0" : "inj1", {collapsed}}, t->pos);
                        return cs_mk(CSApp{k, cons}, t->pos);
                    };
                    CSTermPtr body =
                        cs_mk(CSBary{inj(0), cs_mk(CSVar{x}), inj(1)}, t->pos);
                    return term(m.arg, cs_mk(CSLam{x, body, CSType::basic("Q")}, t->pos));
                },
                [&](const TensorT& s) -> CSTermPtr {
                    std::string x1 = fresh("X");
                    std::string x0 = fresh("X");
                    CSTermPtr pair =
                        cs_mk(CSTensor{cs_mk(CSVar{x0}), cs_mk(CSVar{x1})}, t->pos);
                    CSTermPtr inner = cs_mk(CSApp{k, pair}, t->pos);
                    CSTermPtr k0 = cs_mk(CSLam{x0, inner, CSType::basic("Q")}, t->pos);
                    CSTermPtr mid = term(s.lhs, k0);
                    CSTermPtr k1 = cs_mk(CSLam{x1, mid, CSType::basic("Q")}, t->pos);
                    return term(s.rhs, k1);
                },
                [&](const ConsApp& c) -> CSTermPtr {
                    // Quantum sequence evaluates before the classical one,
                    // each right to left.
                    std::vector<TermPtr> args = c.classical_args;
                    args.insert(args.end(), c.quantum_args.begin(), c.quantum_args.end());
                    std::vector<std::string> xs(args.size());
                    // Innermost: K . c(X...)
                    std::function<CSTermPtr(int)> build = [&](int i) -> CSTermPtr {
                        if (i < 0) {
                            CSCons cons{c.cons, {}};
                            for (const auto& x : xs) cons.args.push_back(cs_mk(CSVar{x}));
                            return cs_mk(CSApp{k, cs_mk(std::move(cons), t->pos)}, t->pos);
                        }
                        TypePtr ty = type_of(args[static_cast<size_t>(i)]);
                        xs[static_cast<size_t>(i)] = fresh("X");
                        CSTermPtr rest = build(i - 1);
                        return term(args[static_cast<size_t>(i)],
                                    cs_mk(CSLam{xs[static_cast<size_t>(i)], rest,
                                                qet_translate_type(ty)},
                                          t->pos));
                    };
                    return build(static_cast<int>(args.size()) - 1);
                },
                [&](const CaseOf& c) -> CSTermPtr {
                    TypePtr bty = type_of(c.scrutinee);
                    std::string x = fresh("X");
                    CSCase out{cs_mk(CSVar{x}), {}, "", nullptr};
                    for (const auto& arm : c.arms) {
                        const ConsSignature& sig = sigs.cons(arm.cons);
                        std::vector<std::string> binders;
                        for (const auto& b : arm.classical_binders) binders.push_back(target(b));
                        for (const auto& b : arm.quantum_binders) binders.push_back(target(b));
                        auto saved = src_env;
                        for (size_t i = 0; i < arm.classical_binders.size(); ++i)
                            src_env[arm.classical_binders[i]] = SourceType::basic(
                                sig.classical_args[i], sigs.is_classical(sig.classical_args[i]));
                        for (size_t i = 0; i < arm.quantum_binders.size(); ++i)
                            src_env[arm.quantum_binders[i]] = SourceType::basic(
                                sig.quantum_args[i], sigs.is_classical(sig.quantum_args[i]));
                        CSTermPtr body = term(arm.body, k);
                        src_env = saved;
                        out.arms.push_back({arm.cons, binders, body});
                    }
                    if (c.default_body) {
                        out.default_binder = target(c.default_binder);
                        CSTermPtr body = with_binding(c.default_binder, bty, [&] {
                            return term(c.default_body, k);
                        });
                        out.default_body = body;
                    }
                    CSTermPtr body = cs_mk(std::move(out), t->pos);
                    return term(c.scrutinee,
                                cs_mk(CSLam{x, body, qet_translate_type(bty)}, t->pos));
                },
                [&](const TickT& tk) -> CSTermPtr {
                    return cs_mk(CSCAdd{cs_mk(CSReal{1.0}), term(tk.arg, k)}, t->pos);
                },
                [&](const auto&) -> CSTermPtr {
                    fail("TypeMismatch", "unexpected value in term translation", t->pos);
                },
            },
            t->node);
    }
};

} // namespace

QetResult qet_translate_value(const TermPtr& value, const SigTable& sigs, const GateTable& gates,
                              const std::map<std::string, TypePtr>& free_var_types) {
    Qet q(sigs, gates, value, nullptr, free_var_types);
    return {q.value(value), q.rename};
}

QetResult qet_translate_term(const TermPtr& term, const CSTermPtr& continuation,
                             const SigTable& sigs, const GateTable& gates,
                             const std::map<std::string, TypePtr>& free_var_types) {
    if (!is_cs_value(continuation))
        fail("OperandNotValue", "the continuation must be a CS value");
    Qet q(sigs, gates, term, continuation, free_var_types);
    return {q.term(term, continuation), q.rename};
}

} // namespace qetlab
