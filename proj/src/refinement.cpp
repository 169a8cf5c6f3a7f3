#include "qetlab/refinement.hpp"

#include <algorithm>
#include <random>
#include <sstream>

namespace qetlab {

namespace {
template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kPredEps = 1e-9;

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
} // namespace

// ---------------------------------------------------------------------------
// Constructors, printing, free variables, substitution
// ---------------------------------------------------------------------------

RExprPtr rx_mk(RExpr e) { return std::make_shared<const RExpr>(std::move(e)); }

RExprPtr rx_var(const std::string& name) {
    RExpr e;
    e.kind = RExpr::Kind::Var;
    e.name = name;
    return rx_mk(std::move(e));
}

RExprPtr rx_real(double r) {
    RExpr e;
    e.kind = RExpr::Kind::Real;
    e.real = r;
    return rx_mk(std::move(e));
}

namespace {
RExprPtr rx_node(RExpr::Kind k, std::vector<RExprPtr> args, std::string name = "", int bit = 0) {
    RExpr e;
    e.kind = k;
    e.args = std::move(args);
    e.name = std::move(name);
    e.bit = bit;
    return rx_mk(std::move(e));
}

std::string show_num(double d) {
    std::ostringstream os;
    os.precision(12);
    os << d;
    return os.str();
}
} // namespace

std::string show_rexpr(const RExprPtr& e) {
    switch (e->kind) {
    case RExpr::Kind::Var:
        return e->name;
    case RExpr::Kind::Real:
        return show_num(e->real);
    case RExpr::Kind::Add:
        return "(" + show_rexpr(e->args[0]) + " + " + show_rexpr(e->args[1]) + ")";
    case RExpr::Kind::Mul:
        return "(" + show_rexpr(e->args[0]) + " * " + show_rexpr(e->args[1]) + ")";
    case RExpr::Kind::CAdd:
        return "(" + show_rexpr(e->args[0]) + " +^ " + show_rexpr(e->args[1]) + ")";
    case RExpr::Kind::Bary:
        return "(" + show_rexpr(e->args[0]) + " (+p0 " + show_rexpr(e->args[1]) + ") " +
               show_rexpr(e->args[2]) + ")";
    case RExpr::Kind::Prob:
        return "p" + std::to_string(e->bit) + "(" + show_rexpr(e->args[0]) + ")";
    case RExpr::Kind::Gate:
        return e->name + "(" + show_rexpr(e->args[0]) + ")";
    case RExpr::Kind::Collapse:
        return "collapse" + std::to_string(e->bit) + "(" + show_rexpr(e->args[0]) + ")";
    case RExpr::Kind::Tensor:
        return "tensor(" + show_rexpr(e->args[0]) + ", " + show_rexpr(e->args[1]) + ")";
    case RExpr::Kind::Ket:
        return "ket[...]";
    case RExpr::Kind::Cons: {
        if (e->args.empty()) return e->name;
        std::string s = e->name + "(";
        for (size_t i = 0; i < e->args.size(); ++i) {
            if (i) s += ", ";
            s += show_rexpr(e->args[i]);
        }
        return s + ")";
    }
    case RExpr::Kind::App:
        return show_rexpr(e->args[0]) + "(" + show_rexpr(e->args[1]) + ")";
    }
    return "?";
}

std::set<std::string> rexpr_free_vars(const RExprPtr& e) {
    std::set<std::string> out;
    std::function<void(const RExprPtr&)> go = [&](const RExprPtr& x) {
        if (x->kind == RExpr::Kind::Var) out.insert(x->name);
        for (const auto& a : x->args) go(a);
    };
    go(e);
    return out;
}

RExprPtr rexpr_subst(const RExprPtr& e, const std::string& x, const RExprPtr& v) {
    if (e->kind == RExpr::Kind::Var) return e->name == x ? v : e;
    if (e->args.empty()) return e;
    RExpr out = *e;
    for (auto& a : out.args) a = rexpr_subst(a, x, v);
    return rx_mk(std::move(out));
}

bool rexpr_equal(const RExprPtr& a, const RExprPtr& b) {
    if (a->kind != b->kind || a->name != b->name || a->bit != b->bit ||
        a->args.size() != b->args.size())
        return false;
    if (a->kind == RExpr::Kind::Real && a->real != b->real) return false;
    if (a->kind == RExpr::Kind::Ket) {
        if (!a->ket || !b->ket) return false;
        if (!a->ket->approx_equal(*b->ket)) return false;
    }
    for (size_t i = 0; i < a->args.size(); ++i)
        if (!rexpr_equal(a->args[i], b->args[i])) return false;
    return true;
}

RExprPtr cs_value_to_rexpr(const CSTermPtr& v) {
    return std::visit(
        overloaded{
            [&](const CSVar& x) { return rx_var(x.name); },
            [&](const CSKet& k) {
                RExpr e;
                e.kind = RExpr::Kind::Ket;
                e.ket = k.state;
                return rx_mk(std::move(e));
            },
            [&](const CSGate& g) {
                return rx_node(RExpr::Kind::Gate, {cs_value_to_rexpr(g.arg)}, g.gate);
            },
            [&](const CSCollapse& c) {
                return rx_node(RExpr::Kind::Collapse, {cs_value_to_rexpr(c.arg)}, "", c.outcome);
            },
            [&](const CSTensor& s) {
                return rx_node(RExpr::Kind::Tensor,
                               {cs_value_to_rexpr(s.lhs), cs_value_to_rexpr(s.rhs)});
            },
            [&](const CSCons& c) {
                std::vector<RExprPtr> args;
                for (const auto& a : c.args) args.push_back(cs_value_to_rexpr(a));
                return rx_node(RExpr::Kind::Cons, std::move(args), c.cons);
            },
            [&](const CSReal& r) { return rx_real(r.value); },
            [&](const auto&) -> RExprPtr {
                fail("OperandNotValue", "cannot embed a non-value CS term into a formula: " +
                                            cs_pretty(v));
            },
        },
        v->node);
}

FormulaPtr f_top() {
    Formula f;
    f.kind = Formula::Kind::Top;
    return std::make_shared<const Formula>(std::move(f));
}

FormulaPtr f_pred(const std::string& pred, std::vector<RExprPtr> args) {
    Formula f;
    f.kind = Formula::Kind::Pred;
    f.pred = pred;
    f.args = std::move(args);
    return std::make_shared<const Formula>(std::move(f));
}

namespace {
FormulaPtr f_conn(Formula::Kind k, std::vector<FormulaPtr> subs) {
    Formula f;
    f.kind = k;
    f.subs = std::move(subs);
    return std::make_shared<const Formula>(std::move(f));
}
} // namespace

FormulaPtr f_not(FormulaPtr a) { return f_conn(Formula::Kind::Not, {std::move(a)}); }
FormulaPtr f_and(FormulaPtr a, FormulaPtr b) {
    return f_conn(Formula::Kind::And, {std::move(a), std::move(b)});
}
FormulaPtr f_or(FormulaPtr a, FormulaPtr b) {
    return f_conn(Formula::Kind::Or, {std::move(a), std::move(b)});
}
FormulaPtr f_implies(FormulaPtr a, FormulaPtr b) {
    return f_conn(Formula::Kind::Implies, {std::move(a), std::move(b)});
}

FormulaPtr f_forall(std::string var, CSTypePtr ty, FormulaPtr body) {
    Formula f;
    f.kind = Formula::Kind::Forall;
    f.var = std::move(var);
    f.var_type = std::move(ty);
    f.body = std::move(body);
    return std::make_shared<const Formula>(std::move(f));
}

FormulaPtr f_exists(std::string var, CSTypePtr ty, FormulaPtr body) {
    Formula f;
    f.kind = Formula::Kind::Exists;
    f.var = std::move(var);
    f.var_type = std::move(ty);
    f.body = std::move(body);
    return std::make_shared<const Formula>(std::move(f));
}

std::string show_formula(const FormulaPtr& f) {
    switch (f->kind) {
    case Formula::Kind::Top:
        return "T";
    case Formula::Kind::Pred: {
        if (f->args.size() == 2) {
            std::string op = f->pred == "eq" ? "=" : (f->pred == "le" ? "<=" : "[=");
            return show_rexpr(f->args[0]) + " " + op + " " + show_rexpr(f->args[1]);
        }
        std::string s = f->pred + "(";
        for (size_t i = 0; i < f->args.size(); ++i) {
            if (i) s += ", ";
            s += show_rexpr(f->args[i]);
        }
        return s + ")";
    }
    case Formula::Kind::Not:
        return "!(" + show_formula(f->subs[0]) + ")";
    case Formula::Kind::And:
        return "(" + show_formula(f->subs[0]) + " && " + show_formula(f->subs[1]) + ")";
    case Formula::Kind::Or:
        return "(" + show_formula(f->subs[0]) + " || " + show_formula(f->subs[1]) + ")";
    case Formula::Kind::Implies:
        return "(" + show_formula(f->subs[0]) + " => " + show_formula(f->subs[1]) + ")";
    case Formula::Kind::Forall:
        return "forall " + f->var + " : " + show_cs_type(*f->var_type) + ". " +
               show_formula(f->body);
    case Formula::Kind::Exists:
        return "exists " + f->var + " : " + show_cs_type(*f->var_type) + ". " +
               show_formula(f->body);
    }
    return "?";
}

std::set<std::string> formula_free_vars(const FormulaPtr& f) {
    std::set<std::string> out;
    switch (f->kind) {
    case Formula::Kind::Top:
        break;
    case Formula::Kind::Pred:
        for (const auto& a : f->args) {
            auto s = rexpr_free_vars(a);
            out.insert(s.begin(), s.end());
        }
        break;
    case Formula::Kind::Forall:
    case Formula::Kind::Exists: {
        auto s = formula_free_vars(f->body);
        s.erase(f->var);
        out.insert(s.begin(), s.end());
        break;
    }
    default:
        for (const auto& s : f->subs) {
            auto fs = formula_free_vars(s);
            out.insert(fs.begin(), fs.end());
        }
    }
    return out;
}

FormulaPtr formula_subst(const FormulaPtr& f, const std::string& x, const RExprPtr& v) {
    switch (f->kind) {
    case Formula::Kind::Top:
        return f;
    case Formula::Kind::Pred: {
        Formula out = *f;
        for (auto& a : out.args) a = rexpr_subst(a, x, v);
        return std::make_shared<const Formula>(std::move(out));
    }
    case Formula::Kind::Forall:
    case Formula::Kind::Exists: {
        if (f->var == x) return f;
        Formula out = *f;
        auto vf = rexpr_free_vars(v);
        if (vf.count(f->var)) {
            auto used = formula_free_vars(f->body);
            used.insert(vf.begin(), vf.end());
            used.insert(x);
            std::string nb = fresh_name(f->var, used);
            out.var = nb;
            out.body = formula_subst(f->body, f->var, rx_var(nb));
        }
        out.body = formula_subst(out.body, x, v);
        return std::make_shared<const Formula>(std::move(out));
    }
    default: {
        Formula out = *f;
        for (auto& s : out.subs) s = formula_subst(s, x, v);
        return std::make_shared<const Formula>(std::move(out));
    }
    }
}

bool formula_equal(const FormulaPtr& a, const FormulaPtr& b) {
    if (a->kind != b->kind) return false;
    switch (a->kind) {
    case Formula::Kind::Top:
        return true;
    case Formula::Kind::Pred:
        if (a->pred != b->pred || a->args.size() != b->args.size()) return false;
        for (size_t i = 0; i < a->args.size(); ++i)
            if (!rexpr_equal(a->args[i], b->args[i])) return false;
        return true;
    case Formula::Kind::Forall:
    case Formula::Kind::Exists: {
        if (!cs_type_equal(*a->var_type, *b->var_type)) return false;
        if (a->var == b->var) return formula_equal(a->body, b->body);
        auto used = formula_free_vars(a->body);
        auto ub = formula_free_vars(b->body);
        used.insert(ub.begin(), ub.end());
        std::string w = fresh_name("W", used);
        return formula_equal(formula_subst(a->body, a->var, rx_var(w)),
                             formula_subst(b->body, b->var, rx_var(w)));
    }
    default:
        if (a->subs.size() != b->subs.size()) return false;
        for (size_t i = 0; i < a->subs.size(); ++i)
            if (!formula_equal(a->subs[i], b->subs[i])) return false;
        return true;
    }
}

RefTypePtr RefType::mk_base(CSTypePtr base, std::string binder, FormulaPtr refinement) {
    RefType t;
    t.kind = Kind::Base;
    t.base = std::move(base);
    t.binder = std::move(binder);
    t.refinement = std::move(refinement);
    return std::make_shared<const RefType>(std::move(t));
}

RefTypePtr RefType::mk_arrow(std::string var, RefTypePtr dom, RefTypePtr cod) {
    RefType t;
    t.kind = Kind::DepArrow;
    t.var = std::move(var);
    t.dom = std::move(dom);
    t.cod = std::move(cod);
    return std::make_shared<const RefType>(std::move(t));
}

RefTypePtr RefType::mk_forall(std::string var, RefTypePtr dom, RefTypePtr cod) {
    RefType t;
    t.kind = Kind::Forall;
    t.var = std::move(var);
    t.dom = std::move(dom);
    t.cod = std::move(cod);
    return std::make_shared<const RefType>(std::move(t));
}

RefTypePtr RefType::top(CSTypePtr base) { return mk_base(std::move(base), "Z", f_top()); }

std::string show_reftype(const RefTypePtr& t) {
    switch (t->kind) {
    case RefType::Kind::Base:
        if (t->refinement->kind == Formula::Kind::Top) return show_cs_type(*t->base);
        return "{ " + t->binder + " : " + show_cs_type(*t->base) + " | " +
               show_formula(t->refinement) + " }";
    case RefType::Kind::DepArrow:
        return "(" + t->var + " : " + show_reftype(t->dom) + ") => " + show_reftype(t->cod);
    case RefType::Kind::Forall:
        return "forall " + t->var + " : " + show_reftype(t->dom) + ". " + show_reftype(t->cod);
    }
    return "?";
}

RefTypePtr reftype_subst(const RefTypePtr& t, const std::string& x, const RExprPtr& v) {
    switch (t->kind) {
    case RefType::Kind::Base: {
        if (t->binder == x) return t;
        return RefType::mk_base(t->base, t->binder, formula_subst(t->refinement, x, v));
    }
    case RefType::Kind::DepArrow:
    case RefType::Kind::Forall: {
        RefTypePtr dom = reftype_subst(t->dom, x, v);
        if (t->var == x)
            return t->kind == RefType::Kind::DepArrow ? RefType::mk_arrow(t->var, dom, t->cod)
                                                      : RefType::mk_forall(t->var, dom, t->cod);
        RefTypePtr cod = reftype_subst(t->cod, x, v);
        return t->kind == RefType::Kind::DepArrow ? RefType::mk_arrow(t->var, dom, cod)
                                                  : RefType::mk_forall(t->var, dom, cod);
    }
    }
    return t;
}

bool reftype_equal(const RefTypePtr& a, const RefTypePtr& b) {
    if (a->kind != b->kind) return false;
    switch (a->kind) {
    case RefType::Kind::Base: {
        if (!cs_type_equal(*a->base, *b->base)) return false;
        if (a->binder == b->binder) return formula_equal(a->refinement, b->refinement);
        return formula_equal(a->refinement,
                             formula_subst(b->refinement, b->binder, rx_var(a->binder)));
    }
    case RefType::Kind::DepArrow:
    case RefType::Kind::Forall: {
        if (!reftype_equal(a->dom, b->dom)) return false;
        if (a->var == b->var) return reftype_equal(a->cod, b->cod);
        RefTypePtr bc = reftype_subst(b->cod, b->var, rx_var(a->var));
        return reftype_equal(a->cod, bc);
    }
    }
    return false;
}

CSTypePtr skeleton(const RefTypePtr& t) {
    switch (t->kind) {
    case RefType::Kind::Base:
        return t->base;
    case RefType::Kind::DepArrow:
        return CSType::arrow(skeleton(t->dom), skeleton(t->cod));
    case RefType::Kind::Forall:
        return skeleton(t->cod);
    }
    fail("TypeMismatch", "unreachable refinement kind");
}

RefContext RefContext::extend(const std::string& name, RefTypePtr type) const {
    RefContext out = *this;
    out.entries.push_back(RefBinding{name, std::move(type)});
    return out;
}

RefContext RefContext::assume(FormulaPtr fact) const {
    RefContext out = *this;
    out.entries.push_back(RefFact{std::move(fact)});
    return out;
}

const RefTypePtr* RefContext::lookup(const std::string& name) const {
    for (auto it = entries.rbegin(); it != entries.rend(); ++it)
        if (const auto* b = std::get_if<RefBinding>(&*it))
            if (b->name == name) return &b->type;
    return nullptr;
}

Verdict meet(Verdict a, const Verdict& b) {
    Verdict out = std::move(a);
    out.trace.insert(out.trace.end(), b.trace.begin(), b.trace.end());
    if (b.kind == Verdict::Kind::Falsified ||
        (b.kind == Verdict::Kind::NotFalsified && out.kind == Verdict::Kind::VerifiedSyntactic)) {
        out.kind = b.kind;
        out.witness = b.witness;
        out.samples = b.samples;
    } else if (b.kind == out.kind && b.kind == Verdict::Kind::NotFalsified) {
        out.samples = std::min(out.samples, b.samples);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Simple typing of expressions and formulae
// ---------------------------------------------------------------------------

namespace {

bool numeric_type(const CSType& t) {
    return t.kind == CSType::Kind::K || t.kind == CSType::Kind::RInf;
}

CSContext fun_types(const OracleParams& params) {
    CSContext out;
    for (const auto& f : params.functions) {
        CSTypePtr ty = f.result;
        for (auto it = f.params.rbegin(); it != f.params.rend(); ++it)
            ty = CSType::arrow(it->second, ty);
        out[f.name] = ty;
    }
    return out;
}

} // namespace

CSTypePtr type_rexpr(const CSContext& theta, const RExprPtr& e, const RefEnv& env) {
    auto want_numeric = [&](const RExprPtr& sub) {
        CSTypePtr t = type_rexpr(theta, sub, env);
        if (!numeric_type(*t))
            fail("IllTypedFormula", "expected a numeric operand, got " + show_cs_type(*t) +
                                        " in " + show_rexpr(sub));
        return t;
    };
    auto want_quantum = [&](const RExprPtr& sub) {
        CSTypePtr t = type_rexpr(theta, sub, env);
        if (!(t->kind == CSType::Kind::Basic && t->name == "Q"))
            fail("IllTypedFormula", "expected a quantum operand, got " + show_cs_type(*t) +
                                        " in " + show_rexpr(sub));
    };
    switch (e->kind) {
    case RExpr::Kind::Var: {
        auto it = theta.find(e->name);
        if (it == theta.end())
            fail("UnboundVariable", "unbound variable '" + e->name + "' in formula");
        return it->second;
    }
    case RExpr::Kind::Real:
        return CSType::rinf();
    case RExpr::Kind::Add:
    case RExpr::Kind::Mul:
        want_numeric(e->args[0]);
        want_numeric(e->args[1]);
        return CSType::rinf();
    case RExpr::Kind::CAdd:
        want_numeric(e->args[0]);
        want_numeric(e->args[1]);
        return CSType::k();
    case RExpr::Kind::Bary:
        want_numeric(e->args[0]);
        want_quantum(e->args[1]);
        want_numeric(e->args[2]);
        return CSType::k();
    case RExpr::Kind::Prob:
        want_quantum(e->args[0]);
        return CSType::rinf();
    case RExpr::Kind::Gate:
        if (!env.gates->contains(e->name))
            fail("IllTypedFormula", "unknown gate '" + e->name + "' in formula");
        want_quantum(e->args[0]);
        return CSType::basic("Q");
    case RExpr::Kind::Collapse:
        want_quantum(e->args[0]);
        return CSType::basic("Q");
    case RExpr::Kind::Tensor:
        want_quantum(e->args[0]);
        want_quantum(e->args[1]);
        return CSType::basic("Q");
    case RExpr::Kind::Ket:
        return CSType::basic("Q");
    case RExpr::Kind::Cons: {
        if (!env.sigs->has_cons(e->name))
            fail("IllTypedFormula", "unknown constructor '" + e->name + "' in formula");
        const ConsSignature& sig = env.sigs->cons(e->name);
        std::vector<std::string> expected = sig.classical_args;
        expected.insert(expected.end(), sig.quantum_args.begin(), sig.quantum_args.end());
        if (expected.size() != e->args.size())
            fail("IllTypedFormula", "constructor arity mismatch in formula");
        for (size_t i = 0; i < expected.size(); ++i) {
            CSTypePtr t = type_rexpr(theta, e->args[i], env);
            if (!(t->kind == CSType::Kind::Basic && t->name == expected[i]))
                fail("IllTypedFormula", "constructor argument type mismatch in formula");
        }
        return CSType::basic(sig.result);
    }
    case RExpr::Kind::App: {
        CSTypePtr f = type_rexpr(theta, e->args[0], env);
        if (f->kind != CSType::Kind::Arrow)
            fail("IllTypedFormula", "application of a non-function in formula");
        CSTypePtr a = type_rexpr(theta, e->args[1], env);
        if (!cs_compatible(*a, *f->from, KMode::RPlus))
            fail("IllTypedFormula", "argument type mismatch in formula application");
        return f->to;
    }
    }
    fail("IllTypedFormula", "unreachable expression kind");
}

void type_formula(const CSContext& theta, const FormulaPtr& f, const RefEnv& env) {
    switch (f->kind) {
    case Formula::Kind::Top:
        return;
    case Formula::Kind::Pred: {
        if (f->args.size() != 2)
            fail("IllTypedFormula", "predicates are binary: " + f->pred);
        CSTypePtr a = type_rexpr(theta, f->args[0], env);
        CSTypePtr b = type_rexpr(theta, f->args[1], env);
        if (f->pred == "le" || f->pred == "sqle") {
            if (!numeric_type(*a) || !numeric_type(*b))
                fail("IllTypedFormula", "order predicates need numeric operands");
            return;
        }
        if (f->pred == "eq") {
            bool ok = (numeric_type(*a) && numeric_type(*b)) ||
                      cs_type_equal(*a, *b);
            if (!ok) fail("IllTypedFormula", "equality between incompatible carriers");
            return;
        }
        fail("IllTypedFormula", "unknown predicate '" + f->pred + "'");
    }
    case Formula::Kind::Forall:
    case Formula::Kind::Exists: {
        CSContext ext = theta;
        ext[f->var] = f->var_type;
        type_formula(ext, f->body, env);
        return;
    }
    default:
        for (const auto& s : f->subs) type_formula(theta, s, env);
        return;
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

ExtReal num_of(const Denotation& d) { return den_number(d); }

Denotation make_real(ExtReal v) { return {RealVal{v}}; }

} // namespace

Denotation eval_rexpr(const RExprPtr& e, const Valuation& rho, const RefEnv& env) {
    switch (e->kind) {
    case RExpr::Kind::Var: {
        auto it = rho.find(e->name);
        if (it == rho.end())
            fail("UnboundVariable", "valuation does not bind '" + e->name + "'");
        return it->second;
    }
    case RExpr::Kind::Real:
        return make_real(ExtReal{e->real});
    case RExpr::Kind::Add:
        return make_real(num_of(eval_rexpr(e->args[0], rho, env)) +
                         num_of(eval_rexpr(e->args[1], rho, env)));
    case RExpr::Kind::Mul: {
        ExtReal a = num_of(eval_rexpr(e->args[0], rho, env));
        ExtReal b = num_of(eval_rexpr(e->args[1], rho, env));
        if (a.v == 0.0 || b.v == 0.0) return make_real(ExtReal{0.0});
        return make_real(ExtReal{a.v * b.v});
    }
    case RExpr::Kind::CAdd: {
        ExtReal a = num_of(eval_rexpr(e->args[0], rho, env));
        ExtReal b = num_of(eval_rexpr(e->args[1], rho, env));
        return {CostVal{env.cs->cadd(a, b)}};
    }
    case RExpr::Kind::Bary: {
        Denotation q = eval_rexpr(e->args[1], rho, env);
        const auto* qs = std::get_if<QuantumVal>(&q.v);
        if (!qs) fail("IllTypedFormula", "barycentric weight is not quantum");
        double p0 = measure_prob(0, qs->state);
        ExtReal a = num_of(eval_rexpr(e->args[0], rho, env));
        ExtReal b = num_of(eval_rexpr(e->args[2], rho, env));
        return {CostVal{env.cs->bary(p0, a, b)}};
    }
    case RExpr::Kind::Prob: {
        Denotation q = eval_rexpr(e->args[0], rho, env);
        const auto* qs = std::get_if<QuantumVal>(&q.v);
        if (!qs) fail("IllTypedFormula", "p_i of a non-quantum value");
        return make_real(ExtReal{measure_prob(e->bit, qs->state)});
    }
    case RExpr::Kind::Gate: {
        Denotation q = eval_rexpr(e->args[0], rho, env);
        const auto* qs = std::get_if<QuantumVal>(&q.v);
        if (!qs) fail("IllTypedFormula", "gate applied to a non-quantum value");
        return {QuantumVal{apply_unitary(env.gates->get(e->name), qs->state)}};
    }
    case RExpr::Kind::Collapse: {
        Denotation q = eval_rexpr(e->args[0], rho, env);
        const auto* qs = std::get_if<QuantumVal>(&q.v);
        if (!qs) fail("IllTypedFormula", "collapse of a non-quantum value");
        return {QuantumVal{post_measure(e->bit, qs->state)}};
    }
    case RExpr::Kind::Tensor: {
        Denotation a = eval_rexpr(e->args[0], rho, env);
        Denotation b = eval_rexpr(e->args[1], rho, env);
        const auto* qa = std::get_if<QuantumVal>(&a.v);
        const auto* qb = std::get_if<QuantumVal>(&b.v);
        if (!qa || !qb) fail("IllTypedFormula", "tensor of non-quantum values");
        return {QuantumVal{tensor(qa->state, qb->state)}};
    }
    case RExpr::Kind::Ket:
        return {QuantumVal{*e->ket}};
    case RExpr::Kind::Cons: {
        BaseVal out{e->name, {}};
        for (const auto& a : e->args) out.args.push_back(eval_rexpr(a, rho, env));
        return {std::move(out)};
    }
    case RExpr::Kind::App: {
        Denotation f = eval_rexpr(e->args[0], rho, env);
        Denotation a = eval_rexpr(e->args[1], rho, env);
        return den_apply(f, a);
    }
    }
    fail("IllTypedFormula", "unreachable expression kind");
}

namespace {

// ------------------------- sampling machinery ------------------------------

struct Sampler {
    const RefEnv& env;
    const OracleParams& params;
    std::mt19937_64 rng;

    explicit Sampler(const RefEnv& e, const OracleParams& p, std::uint64_t seed)
        : env(e), params(p), rng(seed) {}

    double unif() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

    QState random_state() {
        int n = params.qubit_counts[rng() % params.qubit_counts.size()];
        Eigen::Index dim = Eigen::Index(1) << n;
        CVector v(dim);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (Eigen::Index i = 0; i < dim; ++i) v[i] = Complex(gauss(rng), gauss(rng));
        double norm = v.norm();
        if (norm < 1e-12) {
            v.setZero();
            v[0] = 1.0;
            norm = 1.0;
        }
        v /= norm;
        return QState::make(n, std::move(v));
    }

    ExtReal random_numeric() {
        static const double grid[] = {0.0, 0.1, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 10.0};
        double u = unif();
        if (u < 0.5) return ExtReal{grid[rng() % (sizeof(grid) / sizeof(grid[0]))]};
        if (u < 0.95) return ExtReal{4.0 * unif()};
        if (u < 0.98) return ExtReal{1.0 + 100.0 * unif()};
        return ExtReal::infinity();
    }

    Denotation sample_basic(const std::string& type_name, int depth) {
        if (type_name == "Q") return {QuantumVal{random_state()}};
        const auto& conses = env.sigs->constructors(type_name);
        if (conses.empty()) fail("IllTypedFormula", "cannot sample empty type " + type_name);
        // Geometric-style: lean on non-recursive constructors as depth grows.
        std::vector<std::string> base, rec;
        for (const auto& c : conses) {
            const auto& sig = env.sigs->cons(c);
            bool recursive = false;
            for (const auto& a : sig.classical_args) recursive |= (a == type_name);
            for (const auto& a : sig.quantum_args) recursive |= (a == type_name);
            (recursive ? rec : base).push_back(c);
        }
        std::string pick;
        if (depth <= 0 && !base.empty())
            pick = base[rng() % base.size()];
        else if (!rec.empty() && unif() < 0.5)
            pick = rec[rng() % rec.size()];
        else if (!base.empty())
            pick = base[rng() % base.size()];
        else
            pick = conses[rng() % conses.size()];
        const auto& sig = env.sigs->cons(pick);
        BaseVal out{pick, {}};
        for (const auto& a : sig.classical_args) out.args.push_back(sample_basic(a, depth - 1));
        for (const auto& a : sig.quantum_args) out.args.push_back(sample_basic(a, depth - 1));
        return {std::move(out)};
    }

    std::optional<Denotation> sample_skeleton(const CSType& t) {
        switch (t.kind) {
        case CSType::Kind::Basic:
            return sample_basic(t.name, 6);
        case CSType::Kind::RInf:
            return make_real(random_numeric());
        case CSType::Kind::K:
            return Denotation{CostVal{clamp_to_carrier(random_numeric())}};
        case CSType::Kind::Arrow: {
            // Function-typed variables only come from declared candidates.
            std::vector<Denotation> cands = function_candidates(t);
            if (cands.empty()) return std::nullopt;
            return cands[rng() % cands.size()];
        }
        }
        return std::nullopt;
    }

    ExtReal clamp_to_carrier(ExtReal v) {
        if (env.cs->contains(v)) return v;
        return ExtReal{std::min(1.0, std::max(0.0, std::isfinite(v.v) ? v.v : 1.0))};
    }

    std::vector<Denotation> function_candidates(const CSType& t) {
        std::vector<Denotation> out;
        for (const auto& f : params.functions) {
            CSTypePtr ty = f.result;
            for (auto it = f.params.rbegin(); it != f.params.rend(); ++it)
                ty = CSType::arrow(it->second, ty);
            if (cs_compatible(*ty, t, KMode::RPlus)) out.push_back(declared_denotation(f));
        }
        return out;
    }

    Denotation declared_denotation(const FunDecl& f) {
        // Curried interpreted function over the declared body.
        std::function<Denotation(size_t, Valuation)> build =
            [this, &f, &build](size_t i, Valuation captured) -> Denotation {
            if (i == f.params.size()) return eval_rexpr(f.body, captured, env);
            std::string param = f.params[i].first;
            const FunDecl* fp = &f;
            const RefEnv* envp = &env;
            auto rec = std::make_shared<std::function<Denotation(size_t, Valuation)>>();
            *rec = [fp, envp, rec](size_t j, Valuation cap) -> Denotation {
                if (j == fp->params.size()) return eval_rexpr(fp->body, cap, *envp);
                std::string p = fp->params[j].first;
                return {FuncVal{[rec, j, cap, p](const Denotation& x) {
                    Valuation c2 = cap;
                    c2[p] = x;
                    return (*rec)(j + 1, c2);
                }}};
            };
            return (*rec)(i, captured);
        };
        return build(0, {});
    }

    Valuation base_valuation() {
        Valuation rho;
        for (const auto& f : params.functions) rho[f.name] = declared_denotation(f);
        return rho;
    }
};

// ------------------------- formula evaluator -------------------------------

struct Evaluator {
    const RefEnv& env;
    const OracleParams& params;
    Sampler& sampler;

    bool eval(const FormulaPtr& f, const Valuation& rho) {
        switch (f->kind) {
        case Formula::Kind::Top:
            return true;
        case Formula::Kind::Pred:
            return eval_pred(f, rho);
        case Formula::Kind::Not:
            return !eval(f->subs[0], rho);
        case Formula::Kind::And:
            return eval(f->subs[0], rho) && eval(f->subs[1], rho);
        case Formula::Kind::Or:
            return eval(f->subs[0], rho) || eval(f->subs[1], rho);
        case Formula::Kind::Implies:
            return !eval(f->subs[0], rho) || eval(f->subs[1], rho);
        case Formula::Kind::Forall: {
            for (const auto& cand : quantifier_pool(f->var, *f->var_type, f->body, rho)) {
                Valuation r = rho;
                r[f->var] = cand;
                if (!eval_safe(f->body, r)) return false;
            }
            return true;
        }
        case Formula::Kind::Exists:
            return eval_exists(f, rho);
        }
        return false;
    }

    // Unevaluable instantiations (e.g. a candidate of the wrong shape) are
    // skipped rather than treated as counterexamples.
    bool eval_safe(const FormulaPtr& f, const Valuation& rho) {
        try {
            return eval(f, rho);
        } catch (const Error&) {
            return true;
        }
    }

    bool eval_pred(const FormulaPtr& f, const Valuation& rho) {
        Denotation a = eval_rexpr(f->args[0], rho, env);
        Denotation b = eval_rexpr(f->args[1], rho, env);
        if (f->pred == "eq") return den_equal(a, b, kPredEps);
        ExtReal x = den_number(a);
        ExtReal y = den_number(b);
        if (f->pred == "le") return y.is_inf() || x.v <= y.v + kPredEps;
        if (f->pred == "sqle") {
            if (env.cs->leq(x, y)) return true;
            return !x.is_inf() && !y.is_inf() && x.v <= y.v + kPredEps;
        }
        fail("IllTypedFormula", "unknown predicate '" + f->pred + "'");
    }

    // ---- existential scopes -------------------------------------------

    struct Scope {
        std::vector<std::pair<std::string, CSTypePtr>> vars;
        std::vector<FormulaPtr> conjuncts;
    };

    static void flatten_into(const FormulaPtr& f, Scope& s) {
        if (f->kind == Formula::Kind::Exists) {
            s.vars.push_back({f->var, f->var_type});
            flatten_into(f->body, s);
            return;
        }
        if (f->kind == Formula::Kind::And) {
            flatten_into(f->subs[0], s);
            flatten_into(f->subs[1], s);
            return;
        }
        s.conjuncts.push_back(f);
    }

    static Scope flatten(const FormulaPtr& f) {
        Scope s;
        flatten_into(f, s);
        return s;
    }

    // Directed solving: bind pending vars from Z = e atoms (then Z <= e upper
    // bounds) whose other side evaluates under the current assignment.
    Valuation solve_scope(const Scope& s, Valuation rho, std::set<std::string>& pending) {
        bool progress = true;
        auto try_eval = [&](const RExprPtr& e, Denotation& out) {
            auto fv = rexpr_free_vars(e);
            for (const auto& v : fv)
                if (pending.count(v)) return false;
            try {
                out = eval_rexpr(e, rho, env);
                return true;
            } catch (const Error&) {
                return false;
            }
        };
        while (progress && !pending.empty()) {
            progress = false;
            for (const auto& c : s.conjuncts) {
                if (c->kind != Formula::Kind::Pred || c->pred != "eq") continue;
                for (int side = 0; side < 2; ++side) {
                    const RExprPtr& l = c->args[static_cast<size_t>(side)];
                    const RExprPtr& r = c->args[static_cast<size_t>(1 - side)];
                    if (l->kind != RExpr::Kind::Var || !pending.count(l->name)) continue;
                    Denotation d;
                    if (try_eval(r, d)) {
                        rho[l->name] = d;
                        pending.erase(l->name);
                        progress = true;
                    }
                }
            }
            if (!progress) {
                // Upper-bound pass: instantiate at the bound.
                for (const auto& c : s.conjuncts) {
                    if (c->kind != Formula::Kind::Pred ||
                        (c->pred != "le" && c->pred != "sqle"))
                        continue;
                    const RExprPtr& l = c->args[0];
                    if (l->kind != RExpr::Kind::Var || !pending.count(l->name)) continue;
                    Denotation d;
                    if (try_eval(c->args[1], d)) {
                        rho[l->name] = d;
                        pending.erase(l->name);
                        progress = true;
                        break;
                    }
                }
            }
        }
        return rho;
    }

    bool eval_exists(const FormulaPtr& f, const Valuation& rho) {
        Scope s = flatten(f);
        std::set<std::string> pending;
        for (const auto& [v, _] : s.vars) pending.insert(v);
        Valuation solved = solve_scope(s, rho, pending);
        if (pending.empty()) {
            bool all = true;
            for (const auto& c : s.conjuncts)
                if (!eval_safe(c, solved)) {
                    all = false;
                    break;
                }
            if (all) return true;
        }
        // Bounded fallback search over per-variable pools.
        std::vector<std::pair<std::string, CSTypePtr>> open;
        for (const auto& [v, t] : s.vars)
            if (pending.count(v)) open.push_back({v, t});
        FormulaPtr conj = f_top();
        for (const auto& c : s.conjuncts) conj = f_and(conj, c);
        int evals = 0;
        std::function<bool(size_t, Valuation)> search = [&](size_t i, Valuation r) -> bool {
            if (i == open.size()) {
                if (++evals > 600) return false;
                for (const auto& c : s.conjuncts)
                    if (!eval_safe(c, r)) return false;
                return true;
            }
            for (const auto& cand : quantifier_pool(open[i].first, *open[i].second, conj, r)) {
                Valuation r2 = r;
                r2[open[i].first] = cand;
                if (search(i + 1, r2)) return true;
                if (evals > 600) return false;
            }
            return false;
        };
        return search(0, solved);
    }

    // ---- candidate harvesting ------------------------------------------

    void harvest(const std::string& z, const FormulaPtr& f, const Valuation& rho,
                 std::vector<Denotation>& out, int depth = 0) {
        if (depth > 6) return;
        Scope s = flatten(f);
        std::set<std::string> pending;
        for (const auto& [v, _] : s.vars)
            if (v != z) pending.insert(v);
        Valuation solved = solve_scope(s, rho, pending);
        auto try_side = [&](const RExprPtr& e) {
            auto fv = rexpr_free_vars(e);
            if (fv.count(z)) return;
            for (const auto& v : fv)
                if (pending.count(v)) return;
            try {
                out.push_back(eval_rexpr(e, solved, env));
            } catch (const Error&) {
            }
        };
        for (const auto& c : s.conjuncts) {
            if (c->kind == Formula::Kind::Pred) {
                if (c->args.size() != 2) continue;
                if (c->args[0]->kind == RExpr::Kind::Var && c->args[0]->name == z)
                    try_side(c->args[1]);
                if (c->args[1]->kind == RExpr::Kind::Var && c->args[1]->name == z)
                    try_side(c->args[0]);
                continue;
            }
            if (c->kind == Formula::Kind::Not || c->kind == Formula::Kind::And ||
                c->kind == Formula::Kind::Or || c->kind == Formula::Kind::Implies) {
                for (const auto& sub : c->subs) harvest(z, sub, solved, out, depth + 1);
                continue;
            }
            if (c->kind == Formula::Kind::Forall || c->kind == Formula::Kind::Exists) {
                if (c->var != z) harvest(z, c->body, solved, out, depth + 1);
                continue;
            }
        }
    }

    std::vector<Denotation> quantifier_pool(const std::string& var, const CSType& ty,
                                            const FormulaPtr& body, const Valuation& rho) {
        std::vector<Denotation> pool;
        harvest(var, body, rho, pool);
        switch (ty.kind) {
        case CSType::Kind::RInf:
        case CSType::Kind::K: {
            pool.push_back(make_real(ExtReal{0.0}));
            pool.push_back(make_real(ExtReal{1.0}));
            for (int i = 0; i < params.quantifier_pool; ++i)
                pool.push_back(make_real(sampler.random_numeric()));
            break;
        }
        case CSType::Kind::Basic: {
            for (int i = 0; i < params.quantifier_pool; ++i) {
                try {
                    pool.push_back(sampler.sample_basic(ty.name, 5));
                } catch (const Error&) {
                    break;
                }
            }
            break;
        }
        case CSType::Kind::Arrow: {
            auto cands = sampler.function_candidates(ty);
            pool.insert(pool.end(), cands.begin(), cands.end());
            break;
        }
        }
        return pool;
    }
};

} // namespace

bool eval_formula(const FormulaPtr& f, const Valuation& rho, const RefEnv& env,
                  const OracleParams& params, std::uint64_t seed) {
    Sampler sampler(env, params, mix(seed));
    Evaluator ev{env, params, sampler};
    return ev.eval(f, rho);
}

// ---------------------------------------------------------------------------
// Well-formedness
// ---------------------------------------------------------------------------

namespace {

CSContext skeleton_context(const RefContext& ctx, const OracleParams& params) {
    CSContext theta = fun_types(params);
    for (const auto& e : ctx.entries)
        if (const auto* b = std::get_if<RefBinding>(&e)) theta[b->name] = skeleton(b->type);
    return theta;
}

void wf_type(CSContext theta, const RefTypePtr& t, const RefEnv& env) {
    switch (t->kind) {
    case RefType::Kind::Base: {
        theta[t->binder] = t->base;
        type_formula(theta, t->refinement, env);
        return;
    }
    case RefType::Kind::DepArrow:
    case RefType::Kind::Forall: {
        wf_type(theta, t->dom, env);
        theta[t->var] = skeleton(t->dom);
        wf_type(theta, t->cod, env);
        return;
    }
    }
}

} // namespace

void wf(const RefContext& ctx, const RefTypePtr& t, const RefEnv& env,
        const OracleParams& params) {
    CSContext theta = fun_types(params);
    for (const auto& e : ctx.entries) {
        if (const auto* b = std::get_if<RefBinding>(&e)) {
            wf_type(theta, b->type, env);
            theta[b->name] = skeleton(b->type);
        } else {
            type_formula(theta, std::get<RefFact>(e).formula, env);
        }
    }
    wf_type(theta, t, env);
}

// ---------------------------------------------------------------------------
// Context sampling
// ---------------------------------------------------------------------------

namespace {

// Variables whose values the formula (transitively) depends on.
std::set<std::string> needed_vars(const RefContext& ctx, const FormulaPtr& phi) {
    std::set<std::string> needed = formula_free_vars(phi);
    for (auto it = ctx.entries.rbegin(); it != ctx.entries.rend(); ++it) {
        if (const auto* b = std::get_if<RefBinding>(&*it)) {
            if (!needed.count(b->name)) continue;
            if (b->type->kind == RefType::Kind::Base) {
                auto fv = formula_free_vars(b->type->refinement);
                fv.erase(b->type->binder);
                needed.insert(fv.begin(), fv.end());
            }
        } else {
            auto fv = formula_free_vars(std::get<RefFact>(*it).formula);
            needed.insert(fv.begin(), fv.end());
        }
    }
    return needed;
}

struct ContextSampler {
    const RefEnv& env;
    const OracleParams& params;
    Sampler& sampler;
    Evaluator& evaluator;

    std::optional<Denotation> sample_reftype(const RefTypePtr& t, const Valuation& rho) {
        switch (t->kind) {
        case RefType::Kind::Base: {
            // Directed forms first: Z = e pins the value, Z <= e scales it.
            const FormulaPtr& ref = t->refinement;
            if (ref->kind == Formula::Kind::Pred && ref->pred == "eq") {
                for (int side = 0; side < 2; ++side) {
                    const RExprPtr& l = ref->args[static_cast<size_t>(side)];
                    const RExprPtr& r = ref->args[static_cast<size_t>(1 - side)];
                    if (l->kind == RExpr::Kind::Var && l->name == t->binder &&
                        !rexpr_free_vars(r).count(t->binder)) {
                        try {
                            return eval_rexpr(r, rho, env);
                        } catch (const Error&) {
                        }
                    }
                }
            }
            if (ref->kind == Formula::Kind::Pred &&
                (ref->pred == "le" || ref->pred == "sqle") &&
                ref->args[0]->kind == RExpr::Kind::Var && ref->args[0]->name == t->binder) {
                try {
                    ExtReal bound = den_number(eval_rexpr(ref->args[1], rho, env));
                    double cap = bound.is_inf() ? 4.0 : bound.v;
                    return make_real(ExtReal{cap * sampler.unif()});
                } catch (const Error&) {
                }
            }
            for (int attempt = 0; attempt < 40; ++attempt) {
                auto cand = sampler.sample_skeleton(*t->base);
                if (!cand) return std::nullopt;
                Valuation r = rho;
                r[t->binder] = *cand;
                if (evaluator.eval_safe(t->refinement, r)) return cand;
            }
            return std::nullopt;
        }
        case RefType::Kind::DepArrow:
        case RefType::Kind::Forall: {
            // Function-typed: declared candidates only (spec decision).
            auto cands = sampler.function_candidates(*skeleton(t));
            if (cands.empty()) return std::nullopt;
            return cands[sampler.rng() % cands.size()];
        }
        }
        return std::nullopt;
    }

    // One attempt at rho |= ctx; nullopt when some entry cannot be satisfied.
    std::optional<Valuation> sample(const RefContext& ctx, const std::set<std::string>& needed) {
        Valuation rho = sampler.base_valuation();
        for (const auto& e : ctx.entries) {
            if (const auto* b = std::get_if<RefBinding>(&e)) {
                if (!needed.count(b->name)) continue;
                auto v = sample_reftype(b->type, rho);
                if (!v) return std::nullopt;
                rho[b->name] = *v;
                continue;
            }
            const FormulaPtr& fact = std::get<RefFact>(e).formula;
            // Directed facts: y = e rebinds y, c(xs) = e unpacks e.
            if (fact->kind == Formula::Kind::Pred && fact->pred == "eq") {
                bool handled = false;
                for (int side = 0; side < 2 && !handled; ++side) {
                    const RExprPtr& l = fact->args[static_cast<size_t>(side)];
                    const RExprPtr& r = fact->args[static_cast<size_t>(1 - side)];
                    if (l->kind == RExpr::Kind::Var && rho.count(l->name)) {
                        try {
                            rho[l->name] = eval_rexpr(r, rho, env);
                            handled = true;
                        } catch (const Error&) {
                        }
                    } else if (l->kind == RExpr::Kind::Cons) {
                        try {
                            Denotation d = eval_rexpr(r, rho, env);
                            const auto* bv = std::get_if<BaseVal>(&d.v);
                            if (bv && bv->cons == l->name &&
                                bv->args.size() == l->args.size()) {
                                bool all_vars = true;
                                for (const auto& a : l->args)
                                    all_vars &= (a->kind == RExpr::Kind::Var);
                                if (all_vars) {
                                    for (size_t i = 0; i < l->args.size(); ++i)
                                        rho[l->args[i]->name] = bv->args[i];
                                    handled = true;
                                } else {
                                    return std::nullopt;
                                }
                            } else {
                                return std::nullopt; // constructor mismatch: unsatisfiable here
                            }
                        } catch (const Error&) {
                        }
                    }
                }
                if (handled) continue;
            }
            if (!evaluator.eval_safe(fact, rho)) return std::nullopt;
        }
        return rho;
    }
};

} // namespace

// ---------------------------------------------------------------------------
// Validity
// ---------------------------------------------------------------------------

namespace {

bool conjunct_of(const FormulaPtr& needle, const FormulaPtr& hay) {
    if (formula_equal(needle, hay)) return true;
    if (hay->kind == Formula::Kind::And)
        return conjunct_of(needle, hay->subs[0]) || conjunct_of(needle, hay->subs[1]);
    return false;
}

// Structurally valid schemata: top, phi => phi, conjunct weakening, and
// reflexive atoms, under any forall prefix.
bool syntactically_valid(const FormulaPtr& f) {
    FormulaPtr cur = f;
    while (cur->kind == Formula::Kind::Forall) cur = cur->body;
    if (cur->kind == Formula::Kind::Top) return true;
    if (cur->kind == Formula::Kind::Implies)
        return conjunct_of(cur->subs[1], cur->subs[0]);
    if (cur->kind == Formula::Kind::Pred && cur->args.size() == 2)
        return rexpr_equal(cur->args[0], cur->args[1]);
    if (cur->kind == Formula::Kind::And)
        return syntactically_valid(cur->subs[0]) && syntactically_valid(cur->subs[1]);
    return false;
}

std::string render_denotation(const Denotation& d) {
    return std::visit(
        overloaded{
            [](const BaseVal& b) {
                std::string s = b.cons;
                if (!b.args.empty()) {
                    s += "(";
                    for (size_t i = 0; i < b.args.size(); ++i) {
                        if (i) s += ", ";
                        s += render_denotation(b.args[i]);
                    }
                    s += ")";
                }
                return s;
            },
            [](const QuantumVal& q) {
                std::ostringstream os;
                os << q.state.n_qubits() << "-qubit state [";
                for (Eigen::Index i = 0; i < q.state.dim(); ++i) {
                    if (i) os << ", ";
                    os << q.state.amplitudes()[i].real();
                    if (q.state.amplitudes()[i].imag() != 0)
                        os << (q.state.amplitudes()[i].imag() > 0 ? "+" : "")
                           << q.state.amplitudes()[i].imag() << "i";
                }
                os << "]";
                return os.str();
            },
            [](const RealVal& r) { return show_num(r.value.v); },
            [](const CostVal& c) { return show_num(c.value.v); },
            [](const FuncVal&) { return std::string("<function>"); },
        },
        d.v);
}

} // namespace

Verdict validity(const RefContext& ctx, const FormulaPtr& phi, const RefEnv& env,
                 const OracleParams& params) {
    {
        CSContext theta = skeleton_context(ctx, params);
        type_formula(theta, phi, env);
    }
    if (syntactically_valid(phi)) {
        Verdict v;
        v.kind = Verdict::Kind::VerifiedSyntactic;
        v.trace.push_back("syntactic: " + show_formula(phi));
        return v;
    }
    std::set<std::string> needed = needed_vars(ctx, phi);
    int accepted = 0;
    for (int i = 0; i < params.samples; ++i) {
        std::uint64_t sample_seed = mix(params.seed ^ (0x9e3779b97f4a7c15ULL * (i + 1)));
        Sampler sampler(env, params, sample_seed);
        Evaluator evaluator{env, params, sampler};
        ContextSampler cs{env, params, sampler, evaluator};
        auto rho = cs.sample(ctx, needed);
        if (!rho) continue; // unsatisfiable draw; try the next seed
        ++accepted;
        bool ok;
        try {
            ok = evaluator.eval(phi, *rho);
        } catch (const Error&) {
            continue; // not evaluable under this draw
        }
        if (!ok) {
            Verdict v;
            v.kind = Verdict::Kind::Falsified;
            v.samples = accepted;
            auto w = std::make_shared<Witness>();
            w->seed = params.seed;
            w->sample_index = i;
            w->valuation = *rho;
            w->violated = phi;
            for (const auto& [name, den] : *rho)
                if (needed.count(name)) w->rendered[name] = render_denotation(den);
            v.witness = w;
            v.trace.push_back("falsified: " + show_formula(phi) + " at sample " +
                              std::to_string(i));
            return v;
        }
    }
    Verdict v;
    v.kind = Verdict::Kind::NotFalsified;
    v.samples = accepted;
    v.trace.push_back("sampled " + std::to_string(accepted) + ": " + show_formula(phi));
    return v;
}

bool replay_witness(const Witness& w, const RefEnv& env, const OracleParams& params) {
    try {
        return !eval_formula(w.violated, w.valuation, env, params,
                             mix(w.seed ^ (0x9e3779b97f4a7c15ULL * (w.sample_index + 1))));
    } catch (const Error&) {
        return false;
    }
}

// ---------------------------------------------------------------------------
// Subtyping
// ---------------------------------------------------------------------------

namespace {
bool base_compatible(const CSType& a, const CSType& b) {
    if (cs_type_equal(a, b)) return true;
    // K and Rinf share the numeric carrier at the refinement level.
    auto costy = [](const CSType& t) {
        return t.kind == CSType::Kind::K || t.kind == CSType::Kind::RInf;
    };
    return costy(a) && costy(b);
}
} // namespace

Verdict subtype(const RefContext& ctx, const RefTypePtr& a, const RefTypePtr& b,
                const RefEnv& env, const OracleParams& params) {
    if (reftype_equal(a, b)) {
        Verdict v;
        v.kind = Verdict::Kind::VerifiedSyntactic;
        v.trace.push_back("re: " + show_reftype(a));
        return v;
    }
    if (a->kind == RefType::Kind::Base && b->kind == RefType::Kind::Base) {
        if (!base_compatible(*a->base, *b->base))
            fail("SkeletonMismatch", "base types " + show_cs_type(*a->base) + " vs " +
                                         show_cs_type(*b->base));
        FormulaPtr rb = a->binder == b->binder
                            ? b->refinement
                            : formula_subst(b->refinement, b->binder, rx_var(a->binder));
        FormulaPtr goal = f_forall(a->binder, a->base, f_implies(a->refinement, rb));
        return validity(ctx, goal, env, params);
    }
    if (a->kind == RefType::Kind::DepArrow && b->kind == RefType::Kind::DepArrow) {
        Verdict vd = subtype(ctx, b->dom, a->dom, env, params); // contravariant
        std::string w = b->var;
        RefTypePtr ac = a->var == w ? a->cod : reftype_subst(a->cod, a->var, rx_var(w));
        Verdict vc = subtype(ctx.extend(w, b->dom), ac, b->cod, env, params);
        return meet(vd, vc);
    }
    if (a->kind == RefType::Kind::Forall && b->kind == RefType::Kind::Forall &&
        reftype_equal(a->dom, b->dom)) {
        std::string w = b->var;
        RefTypePtr ac = a->var == w ? a->cod : reftype_subst(a->cod, a->var, rx_var(w));
        return subtype(ctx.extend(w, b->dom), ac, b->cod, env, params);
    }
    fail("SkeletonMismatch",
         "incomparable shapes: " + show_reftype(a) + " vs " + show_reftype(b));
}

// ---------------------------------------------------------------------------
// Admissibility (syntactic sufficient criterion)
// ---------------------------------------------------------------------------

AdmissibleResult admissible(const RefContext& ctx, const RefTypePtr& t) {
    switch (t->kind) {
    case RefType::Kind::Base: {
        if (!(t->base->kind == CSType::Kind::K || t->base->kind == CSType::Kind::RInf))
            return {false, "refinement base " + show_cs_type(*t->base) + " is not a cost type"};
        const FormulaPtr& f = t->refinement;
        if (f->kind == Formula::Kind::Top) return {true, "unrefined cost type"};
        if (f->kind == Formula::Kind::Pred && (f->pred == "le" || f->pred == "sqle") &&
            f->args[0]->kind == RExpr::Kind::Var && f->args[0]->name == t->binder &&
            !rexpr_free_vars(f->args[1]).count(t->binder))
            return {true, "upper bound " + t->binder + " <= " + show_rexpr(f->args[1]) +
                              " with " + t->binder + " not free in the bound"};
        return {false, "refinement is not of the shape " + t->binder +
                           " <= e with the binder absent from e"};
    }
    case RefType::Kind::DepArrow:
    case RefType::Kind::Forall:
        return admissible(ctx.extend(t->var, t->dom), t->cod);
    }
    return {false, "unreachable"};
}

// ---------------------------------------------------------------------------
// Refinement checking
// ---------------------------------------------------------------------------

namespace {

struct RefChecker {
    const RefEnv& env;
    const OracleParams& params;
    int fresh_counter = 0;

    std::string fresh(const std::string& base) {
        return base + "'" + std::to_string(fresh_counter++);
    }

    Verdict verified(const std::string& note) {
        Verdict v;
        v.kind = Verdict::Kind::VerifiedSyntactic;
        v.trace.push_back(note);
        return v;
    }

    // Exact-shape synthesis for values and operators.
    std::pair<RefTypePtr, Verdict> synth(const RefContext& ctx, const CSTermPtr& t) {
        return std::visit(
            overloaded{
                [&](const CSVar& v) -> std::pair<RefTypePtr, Verdict> {
                    const RefTypePtr* ty = ctx.lookup(v.name);
                    if (!ty)
                        fail("UnboundVariable", "unbound variable '" + v.name + "'", t->pos,
                             "ax");
                    return {*ty, verified("ax: " + v.name)};
                },
                [&](const CSKet& k) -> std::pair<RefTypePtr, Verdict> {
                    RExpr e;
                    e.kind = RExpr::Kind::Ket;
                    e.ket = k.state;
                    std::string z = fresh("Z");
                    return {RefType::mk_base(CSType::basic("Q"), z,
                                             f_pred("eq", {rx_var(z), rx_mk(std::move(e))})),
                            verified("st")};
                },
                [&](const CSGate& g) -> std::pair<RefTypePtr, Verdict> {
                    auto [at, av] = synth(ctx, g.arg);
                    RExprPtr ve = cs_value_to_rexpr(g.arg);
                    FormulaPtr carried = refinement_at(at, ve);
                    std::string z = fresh("Z");
                    RExprPtr self = rx_node(RExpr::Kind::Gate, {ve}, g.gate);
                    return {RefType::mk_base(
                                CSType::basic("Q"), z,
                                f_and(f_pred("eq", {rx_var(z), self}), carried)),
                            av};
                },
                [&](const CSCollapse& c) -> std::pair<RefTypePtr, Verdict> {
                    auto [at, av] = synth(ctx, c.arg);
                    RExprPtr ve = cs_value_to_rexpr(c.arg);
                    FormulaPtr carried = refinement_at(at, ve);
                    std::string z = fresh("Z");
                    RExprPtr self = rx_node(RExpr::Kind::Collapse, {ve}, "", c.outcome);
                    return {RefType::mk_base(
                                CSType::basic("Q"), z,
                                f_and(f_pred("eq", {rx_var(z), self}), carried)),
                            av};
                },
                [&](const CSTensor& s) -> std::pair<RefTypePtr, Verdict> {
                    auto [lt, lv] = synth(ctx, s.lhs);
                    auto [rt, rv] = synth(ctx, s.rhs);
                    RExprPtr le = cs_value_to_rexpr(s.lhs);
                    RExprPtr re = cs_value_to_rexpr(s.rhs);
                    std::string z = fresh("Z");
                    RExprPtr self = rx_node(RExpr::Kind::Tensor, {le, re});
                    FormulaPtr phi = f_and(f_pred("eq", {rx_var(z), self}),
                                           f_and(refinement_at(lt, le), refinement_at(rt, re)));
                    return {RefType::mk_base(CSType::basic("Q"), z, phi), meet(lv, rv)};
                },
                [&](const CSCons& c) -> std::pair<RefTypePtr, Verdict> {
                    const ConsSignature& sig = env.sigs->cons(c.cons);
                    std::vector<RExprPtr> arg_exprs;
                    FormulaPtr carried = f_top();
                    Verdict v = verified("cons");
                    for (const auto& a : c.args) {
                        auto [at, av] = synth(ctx, a);
                        RExprPtr ae = cs_value_to_rexpr(a);
                        carried = f_and(carried, refinement_at(at, ae));
                        arg_exprs.push_back(ae);
                        v = meet(v, av);
                    }
                    std::string z = fresh("Z");
                    RExprPtr self = rx_node(RExpr::Kind::Cons, std::move(arg_exprs), c.cons);
                    return {RefType::mk_base(CSType::basic(sig.result), z,
                                             f_and(f_pred("eq", {rx_var(z), self}), carried)),
                            v};
                },
                [&](const CSReal& r) -> std::pair<RefTypePtr, Verdict> {
                    std::string z = fresh("Z");
                    return {RefType::mk_base(CSType::rinf(), z,
                                             f_pred("eq", {rx_var(z), rx_real(r.value)})),
                            verified("real")};
                },
                [&](const CSCAdd& a) -> std::pair<RefTypePtr, Verdict> {
                    auto [t0, v0] = synth(ctx, a.cost);
                    auto [t1, v1] = synth(ctx, a.rest);
                    std::string z = fresh("Z"), z0 = fresh("Z"), z1 = fresh("Z");
                    FormulaPtr phi = f_and(
                        f_pred("eq", {rx_var(z),
                                      rx_node(RExpr::Kind::CAdd, {rx_var(z0), rx_var(z1)})}),
                        f_and(refinement_at(t0, rx_var(z0)), refinement_at(t1, rx_var(z1))));
                    FormulaPtr ex =
                        f_exists(z0, CSType::rinf(), f_exists(z1, CSType::k(), phi));
                    return {RefType::mk_base(CSType::k(), z, ex), meet(v0, v1)};
                },
                [&](const CSBary& b) -> std::pair<RefTypePtr, Verdict> {
                    auto [t0, v0] = synth(ctx, b.left);
                    auto [t2, v2] = synth(ctx, b.prob_state);
                    auto [t1, v1] = synth(ctx, b.right);
                    RExprPtr ve = cs_value_to_rexpr(b.prob_state);
                    std::string z = fresh("Z"), z0 = fresh("Z"), z1 = fresh("Z");
                    FormulaPtr phi = f_and(
                        f_pred("eq",
                               {rx_var(z),
                                rx_node(RExpr::Kind::Bary, {rx_var(z0), ve, rx_var(z1)})}),
                        f_and(f_and(refinement_at(t0, rx_var(z0)),
                                    refinement_at(t1, rx_var(z1))),
                              refinement_at(t2, ve)));
                    FormulaPtr ex = f_exists(z0, CSType::k(), f_exists(z1, CSType::k(), phi));
                    return {RefType::mk_base(CSType::k(), z, ex), meet(meet(v0, v1), v2)};
                },
                [&](const CSApp& a) -> std::pair<RefTypePtr, Verdict> {
                    auto [ft, fv] = synth(ctx, a.fun);
                    // Instantiate bounded quantifiers with declared candidates.
                    while (ft->kind == RefType::Kind::Forall) {
                        bool done = false;
                        for (const auto& fd : params.functions) {
                            CSTypePtr ty = fd.result;
                            for (auto it = fd.params.rbegin(); it != fd.params.rend(); ++it)
                                ty = CSType::arrow(it->second, ty);
                            if (cs_compatible(*ty, *skeleton(ft->dom), KMode::RPlus)) {
                                ft = reftype_subst(ft->cod, ft->var, rx_var(fd.name));
                                done = true;
                                break;
                            }
                        }
                        if (!done)
                            fail("CannotInstantiate",
                                 "no declared candidate instantiates " + show_reftype(ft),
                                 t->pos, "forall_e");
                    }
                    if (ft->kind != RefType::Kind::DepArrow)
                        fail("SkeletonMismatch", "application head is not a function type",
                             t->pos, "=>_e");
                    Verdict va = check(ctx, a.arg, ft->dom);
                    RExprPtr ve = cs_value_to_rexpr(a.arg);
                    return {reftype_subst(ft->cod, ft->var, ve), meet(fv, va)};
                },
                [&](const auto&) -> std::pair<RefTypePtr, Verdict> {
                    fail("CannotInfer",
                         "refinement synthesis needs a checking context for: " + cs_pretty(t),
                         t->pos, "");
                },
            },
            t->node);
    }

    // phi[v] of a base refinement; the whole-type refinement of arrows is T.
    FormulaPtr refinement_at(const RefTypePtr& t, const RExprPtr& v) {
        if (t->kind != RefType::Kind::Base) return f_top();
        return formula_subst(t->refinement, t->binder, v);
    }

    Verdict check(const RefContext& ctx, const CSTermPtr& t, const RefTypePtr& want) {
        if (want->kind == RefType::Kind::Forall) {
            // forall_i: generalize, binding the quantified variable.
            return check(ctx.extend(want->var, want->dom), t, want->cod);
        }
        if (const auto* l = cs_as<CSLam>(t)) {
            if (want->kind != RefType::Kind::DepArrow)
                fail("SkeletonMismatch", "lambda against non-arrow refinement type", t->pos,
                     "=>_i");
            RefTypePtr cod = want->var == l->param
                                 ? want->cod
                                 : reftype_subst(want->cod, want->var, rx_var(l->param));
            return check(ctx.extend(l->param, want->dom), l->body, cod);
        }
        if (const auto* l = cs_as<CSLetrec>(t)) {
            AdmissibleResult adm = admissible(ctx, want);
            if (!adm.ok)
                fail("NotAdmissible",
                     "rec rule requires an admissible type: " + adm.reason, t->pos, "rec");
            CSTermPtr lam = cs_mk(CSLam{l->param, l->body, nullptr}, t->pos);
            Verdict v = check(ctx.extend(l->fun, want), lam, want);
            v.trace.insert(v.trace.begin(), "rec: admissible because " + adm.reason);
            return v;
        }
        if (const auto* c = cs_as<CSCase>(t)) return check_case(ctx, t, *c, want);
        auto [ty, v] = synth(ctx, t);
        Verdict sub = subtype(ctx, ty, want, env, params);
        return meet(v, sub);
    }

    Verdict check_case(const RefContext& ctx, const CSTermPtr&, const CSCase& c,
                       const RefTypePtr& want) {
        auto [st, sv] = synth(ctx, c.scrutinee);
        RExprPtr ve = cs_value_to_rexpr(c.scrutinee);
        Verdict out = sv;
        for (const auto& arm : c.arms) {
            const ConsSignature& sig = env.sigs->cons(arm.cons);
            std::vector<std::string> arg_types = sig.classical_args;
            arg_types.insert(arg_types.end(), sig.quantum_args.begin(), sig.quantum_args.end());
            RefContext branch = ctx;
            std::vector<RExprPtr> binder_exprs;
            for (size_t i = 0; i < arm.binders.size(); ++i) {
                branch = branch.extend(arm.binders[i],
                                       RefType::top(CSType::basic(arg_types[i])));
                binder_exprs.push_back(rx_var(arm.binders[i]));
            }
            branch = branch.assume(f_pred(
                "eq", {ve, rx_node(RExpr::Kind::Cons, std::move(binder_exprs), arm.cons)}));
            out = meet(out, check(branch, arm.body, want));
        }
        if (c.default_body) {
            RefContext branch = ctx;
            if (st->kind == RefType::Kind::Base)
                branch = branch.extend(c.default_binder, st);
            else
                branch = branch.extend(c.default_binder, RefType::top(skeleton(st)));
            branch = branch.assume(f_pred("eq", {rx_var(c.default_binder), ve}));
            for (const auto& arm : c.arms) {
                const ConsSignature& sig = env.sigs->cons(arm.cons);
                std::vector<std::string> arg_types = sig.classical_args;
                arg_types.insert(arg_types.end(), sig.quantum_args.begin(),
                                 sig.quantum_args.end());
                FormulaPtr ne;
                std::vector<RExprPtr> vars;
                std::vector<std::pair<std::string, CSTypePtr>> bs;
                for (size_t i = 0; i < arg_types.size(); ++i) {
                    std::string x = fresh("X");
                    vars.push_back(rx_var(x));
                    bs.push_back({x, CSType::basic(arg_types[i])});
                }
                ne = f_not(f_pred("eq", {rx_var(c.default_binder),
                                         rx_node(RExpr::Kind::Cons, std::move(vars), arm.cons)}));
                for (auto it = bs.rbegin(); it != bs.rend(); ++it)
                    ne = f_forall(it->first, it->second, ne);
                branch = branch.assume(ne);
            }
            out = meet(out, check(branch, c.default_body, want));
        }
        return out;
    }
};

} // namespace

Verdict check_refined(const RefContext& ctx, const CSTermPtr& term, const RefTypePtr& type,
                      const RefEnv& env, const OracleParams& params) {
    wf(ctx, type, env, params);
    {
        // The skeleton must simple-typecheck first.
        CSContext theta = skeleton_context(ctx, params);
        cs_check(theta, term, skeleton(type), *env.sigs, *env.gates, KMode::RPlus);
    }
    RefChecker ck{env, params};
    return ck.check(ctx, term, type);
}

// ---------------------------------------------------------------------------
// Membership (the testable projection of type soundness)
// ---------------------------------------------------------------------------

bool member_of(const Denotation& d, const RefTypePtr& t, const Valuation& rho, const RefEnv& env,
               const OracleParams& params, std::uint64_t seed) {
    Sampler sampler(env, params, mix(seed));
    Evaluator evaluator{env, params, sampler};
    ContextSampler cs{env, params, sampler, evaluator};
    std::function<bool(const Denotation&, const RefTypePtr&, Valuation)> go =
        [&](const Denotation& dv, const RefTypePtr& ty, Valuation r) -> bool {
        switch (ty->kind) {
        case RefType::Kind::Base: {
            r[ty->binder] = dv;
            return evaluator.eval_safe(ty->refinement, r);
        }
        case RefType::Kind::DepArrow: {
            if (!is_func(dv)) return false;
            for (int i = 0; i < params.probes; ++i) {
                auto arg = cs.sample_reftype(ty->dom, r);
                if (!arg) return true; // domain unsampleable: vacuously member
                Valuation r2 = r;
                r2[ty->var] = *arg;
                Denotation res = den_apply(dv, *arg);
                if (!go(res, ty->cod, r2)) return false;
            }
            return true;
        }
        case RefType::Kind::Forall: {
            for (int i = 0; i < params.probes; ++i) {
                auto v = cs.sample_reftype(ty->dom, r);
                if (!v) return true;
                Valuation r2 = r;
                r2[ty->var] = *v;
                if (!go(dv, ty->cod, r2)) return false;
            }
            return true;
        }
        }
        return false;
    };
    return go(d, t, rho);
}

} // namespace qetlab
