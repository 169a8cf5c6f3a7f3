#include "qetlab/cs_typecheck.hpp"

namespace qetlab {

namespace {
template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool is_costy(const CSType& t) {
    return t.kind == CSType::Kind::K || t.kind == CSType::Kind::RInf;
}
} // namespace

bool cs_compatible(const CSType& from, const CSType& to, KMode mode) {
    if (from.kind == CSType::Kind::Arrow && to.kind == CSType::Kind::Arrow)
        return cs_compatible(*to.from, *from.from, mode) && cs_compatible(*from.to, *to.to, mode);
    if (cs_type_equal(from, to)) return true;
    if (mode == KMode::RPlus && is_costy(from) && is_costy(to)) return true;
    // Reals sit inside every cost carrier (checked at evaluation time).
    if (from.kind == CSType::Kind::RInf && to.kind == CSType::Kind::K) return true;
    return false;
}

namespace {

struct CSChecker {
    const SigTable& sigs;
    const GateTable& gates;
    KMode mode;
    CSContext theta;

    [[noreturn]] void err(const std::string& kind, const std::string& msg, const CSTermPtr& t,
                          const std::string& rule) const {
        fail(kind, msg, t->pos, rule);
    }

    void expect(const CSTypePtr& got, const CSTypePtr& want, const CSTermPtr& t,
                const std::string& rule) const {
        if (!cs_compatible(*got, *want, mode))
            err("TypeMismatch",
                "expected CS type " + show_cs_type(*want) + " but found " + show_cs_type(*got), t,
                rule);
    }

    void require_value(const CSTermPtr& v, const CSTermPtr& at, const std::string& rule) const {
        if (!is_cs_value(v))
            err("OperandNotValue",
                "operand must be a value (A-normal discipline): " + cs_pretty(v), at, rule);
    }

    CSTypePtr quantum() const { return CSType::basic("Q"); }

    CSTypePtr basic_of(const std::string& name, const CSTermPtr& t, const std::string& rule) {
        if (!sigs.has_type(name)) err("UnknownType", "unknown basic type '" + name + "'", t, rule);
        return CSType::basic(name);
    }

    // Erased constructor signature: classical then quantum argument types.
    std::vector<CSTypePtr> erased_args(const ConsSignature& sig, const CSTermPtr& t,
                                       const std::string& rule) {
        std::vector<CSTypePtr> out;
        for (const auto& a : sig.classical_args) out.push_back(basic_of(a, t, rule));
        for (const auto& a : sig.quantum_args) out.push_back(basic_of(a, t, rule));
        return out;
    }

    CSTermPtr check(const CSTermPtr& t, const CSTypePtr& want) {
        return std::visit(
            overloaded{
                [&](const CSLam& l) -> CSTermPtr {
                    if (want->kind != CSType::Kind::Arrow)
                        err("TypeMismatch",
                            "lambda cannot have type " + show_cs_type(*want), t, "=>_i");
                    if (l.param_ann && !cs_compatible(*want->from, *l.param_ann, mode))
                        err("TypeMismatch", "parameter annotated " + show_cs_type(*l.param_ann) +
                                                " but bound at " + show_cs_type(*want->from),
                            t, "=>_i");
                    auto saved = theta;
                    theta[l.param] = want->from;
                    CSTermPtr body = check(l.body, want->to);
                    theta = saved;
                    return cs_mk(CSLam{l.param, body, want->from}, t->pos);
                },
                [&](const CSLetrec& l) -> CSTermPtr {
                    if (!is_functional_cs_type_mod(*want))
                        err("NotFunctionalType",
                            "letrec requires a functional CS type, got " + show_cs_type(*want), t,
                            "rec");
                    if (l.annotation && !cs_compatible(*l.annotation, *want, mode))
                        err("TypeMismatch", "letrec annotated " + show_cs_type(*l.annotation) +
                                                " but used at " + show_cs_type(*want),
                            t, "rec");
                    auto saved = theta;
                    theta[l.fun] = want;
                    CSTermPtr lam = cs_mk(CSLam{l.param, l.body, nullptr}, t->pos);
                    CSTermPtr elam = check(lam, want);
                    theta = saved;
                    const auto& el = std::get<CSLam>(elam->node);
                    return cs_mk(CSLetrec{l.fun, l.param, el.body, want}, t->pos);
                },
                [&](const CSCase& c) -> CSTermPtr { return elab_case(t, c, want).first; },
                [&](const auto&) -> CSTermPtr {
                    auto [et, ty] = infer(t);
                    expect(ty, want, t, "expe");
                    return et;
                },
            },
            t->node);
    }

    // Functional CS types; under RPlus instantiation Rinf counts as K.
    bool is_functional_cs_type_mod(const CSType& t) const {
        if (t.kind == CSType::Kind::K) return true;
        if (mode == KMode::RPlus && t.kind == CSType::Kind::RInf) return true;
        if (t.kind == CSType::Kind::Arrow) return is_functional_cs_type_mod(*t.to);
        return false;
    }

    std::pair<CSTermPtr, CSTypePtr> elab_case(const CSTermPtr& t, const CSCase& c,
                                              CSTypePtr want) {
        if (c.arms.empty())
            err("MissingDefault", "case needs at least one constructor arm", t, "case");
        require_value(c.scrutinee, t, "case");
        const std::string& b_name = sigs.cons(c.arms[0].cons).result;
        CSTermPtr scrut = check(c.scrutinee, basic_of(b_name, t, "case"));
        if (!c.default_body) {
            std::set<std::string> covered;
            for (const auto& arm : c.arms) covered.insert(arm.cons);
            for (const auto& cn : sigs.constructors(b_name))
                if (!covered.count(cn))
                    err("MissingDefault",
                        "non-exhaustive case: missing arm for '" + cn + "' and no default", t,
                        "case");
        }
        CSCase out{scrut, {}, c.default_binder, nullptr};
        for (const auto& arm : c.arms) {
            if (!sigs.has_cons(arm.cons))
                err("UnknownConstructor", "unknown constructor '" + arm.cons + "'", t, "case");
            const ConsSignature& sig = sigs.cons(arm.cons);
            if (sig.result != b_name)
                err("TypeMismatch", "case arms mix scrutinee types", t, "case");
            auto args = erased_args(sig, t, "case");
            if (args.size() != arm.binders.size())
                err("ArityMismatch", "pattern '" + arm.cons + "' has wrong arity", t, "case");
            auto saved = theta;
            for (size_t i = 0; i < args.size(); ++i) theta[arm.binders[i]] = args[i];
            CSTermPtr body;
            if (want) {
                body = check(arm.body, want);
            } else {
                auto [eb, bt] = infer(arm.body);
                body = eb;
                want = bt;
            }
            theta = saved;
            out.arms.push_back({arm.cons, arm.binders, body});
        }
        if (c.default_body) {
            auto saved = theta;
            theta[c.default_binder] = basic_of(b_name, t, "case");
            CSTermPtr body;
            if (want) {
                body = check(c.default_body, want);
            } else {
                auto [eb, bt] = infer(c.default_body);
                body = eb;
                want = bt;
            }
            theta = saved;
            out.default_body = body;
        }
        return {cs_mk(std::move(out), t->pos), want};
    }

    std::pair<CSTermPtr, CSTypePtr> infer(const CSTermPtr& t) {
        return std::visit(
            overloaded{
                [&](const CSVar& v) -> std::pair<CSTermPtr, CSTypePtr> {
                    auto it = theta.find(v.name);
                    if (it == theta.end())
                        err("UnboundVariable", "unbound variable '" + v.name + "'", t, "ax");
                    return {t, it->second};
                },
                [&](const CSLam& l) -> std::pair<CSTermPtr, CSTypePtr> {
                    if (!l.param_ann)
                        err("CannotInfer", "cannot infer an unannotated lambda", t, "=>_i");
                    auto saved = theta;
                    theta[l.param] = l.param_ann;
                    auto [body, bty] = infer(l.body);
                    theta = saved;
                    return {cs_mk(CSLam{l.param, body, l.param_ann}, t->pos),
                            CSType::arrow(l.param_ann, bty)};
                },
                [&](const CSApp& a) -> std::pair<CSTermPtr, CSTypePtr> {
                    require_value(a.arg, t, "=>_e");
                    auto [ef, fty] = infer(a.fun);
                    if (fty->kind != CSType::Kind::Arrow)
                        err("TypeMismatch",
                            "application head has non-arrow type " + show_cs_type(*fty), t,
                            "=>_e");
                    CSTermPtr ea = check(a.arg, fty->from);
                    return {cs_mk(CSApp{ef, ea}, t->pos), fty->to};
                },
                [&](const CSKet&) -> std::pair<CSTermPtr, CSTypePtr> { return {t, quantum()}; },
                [&](const CSGate& g) -> std::pair<CSTermPtr, CSTypePtr> {
                    if (!gates.contains(g.gate))
                        err("UnknownGate", "unknown gate '" + g.gate + "'", t, "un");
                    require_value(g.arg, t, "un");
                    return {cs_mk(CSGate{g.gate, check(g.arg, quantum())}, t->pos), quantum()};
                },
                [&](const CSTensor& s) -> std::pair<CSTermPtr, CSTypePtr> {
                    require_value(s.lhs, t, "(x)");
                    require_value(s.rhs, t, "(x)");
                    CSTermPtr l = check(s.lhs, quantum());
                    CSTermPtr r = check(s.rhs, quantum());
                    return {cs_mk(CSTensor{l, r}, t->pos), quantum()};
                },
                [&](const CSCollapse& c) -> std::pair<CSTermPtr, CSTypePtr> {
                    require_value(c.arg, t, "meas");
                    return {cs_mk(CSCollapse{c.outcome, check(c.arg, quantum())}, t->pos),
                            quantum()};
                },
                [&](const CSCons& c) -> std::pair<CSTermPtr, CSTypePtr> {
                    if (!sigs.has_cons(c.cons))
                        err("UnknownConstructor", "unknown constructor '" + c.cons + "'", t,
                            "cons");
                    const ConsSignature& sig = sigs.cons(c.cons);
                    auto args = erased_args(sig, t, "cons");
                    if (args.size() != c.args.size())
                        err("ArityMismatch", "constructor '" + c.cons + "' expects " +
                                                 std::to_string(args.size()) + " arguments",
                            t, "cons");
                    CSCons out{c.cons, {}};
                    for (size_t i = 0; i < args.size(); ++i) {
                        require_value(c.args[i], t, "cons");
                        out.args.push_back(check(c.args[i], args[i]));
                    }
                    return {cs_mk(std::move(out), t->pos), basic_of(sig.result, t, "cons")};
                },
                [&](const CSCase& c) -> std::pair<CSTermPtr, CSTypePtr> {
                    return elab_case(t, c, nullptr);
                },
                [&](const CSLetrec& l) -> std::pair<CSTermPtr, CSTypePtr> {
                    if (!l.annotation)
                        err("CannotInfer", "annotation required at letrec", t, "rec");
                    return {check(t, l.annotation), l.annotation};
                },
                [&](const CSReal& r) -> std::pair<CSTermPtr, CSTypePtr> {
                    if (r.value < 0)
                        err("TypeMismatch", "real constants must be non-negative", t, "real");
                    return {t, CSType::rinf()};
                },
                [&](const CSCAdd& a) -> std::pair<CSTermPtr, CSTypePtr> {
                    CSTermPtr cost = check(a.cost, CSType::rinf());
                    CSTermPtr rest = check(a.rest, CSType::k());
                    return {cs_mk(CSCAdd{cost, rest}, t->pos), CSType::k()};
                },
                [&](const CSBary& b) -> std::pair<CSTermPtr, CSTypePtr> {
                    require_value(b.prob_state, t, "bary");
                    CSTermPtr l = check(b.left, CSType::k());
                    CSTermPtr v = check(b.prob_state, quantum());
                    CSTermPtr r = check(b.right, CSType::k());
                    return {cs_mk(CSBary{l, v, r}, t->pos), CSType::k()};
                },
            },
            t->node);
    }
};

} // namespace

CSTermPtr cs_check(const CSContext& theta, const CSTermPtr& term, const CSTypePtr& expected,
                   const SigTable& sigs, const GateTable& gates, KMode mode) {
    CSChecker ck{sigs, gates, mode, theta};
    return ck.check(term, expected);
}

std::pair<CSTermPtr, CSTypePtr> cs_infer(const CSContext& theta, const CSTermPtr& term,
                                         const SigTable& sigs, const GateTable& gates,
                                         KMode mode) {
    CSChecker ck{sigs, gates, mode, theta};
    return ck.infer(term);
}

} // namespace qetlab
