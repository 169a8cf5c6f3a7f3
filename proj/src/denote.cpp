#include "qetlab/denote.hpp"

namespace qetlab {

namespace {
template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
} // namespace

ExtReal den_number(const Denotation& d) {
    if (const auto* r = std::get_if<RealVal>(&d.v)) return r->value;
    if (const auto* c = std::get_if<CostVal>(&d.v)) return c->value;
    fail("TypeMismatch", "denotation is not a numeric value");
}

bool is_func(const Denotation& d) { return std::holds_alternative<FuncVal>(d.v); }

Denotation den_apply(const Denotation& fun, const Denotation& arg) {
    const auto* f = std::get_if<FuncVal>(&fun.v);
    if (!f) fail("TypeMismatch", "application of a non-function denotation");
    return f->apply(arg);
}

bool den_equal(const Denotation& a, const Denotation& b, double tol) {
    if (a.v.index() != b.v.index()) {
        // Real and cost components share the numeric carrier.
        const bool a_num = std::holds_alternative<RealVal>(a.v) || std::holds_alternative<CostVal>(a.v);
        const bool b_num = std::holds_alternative<RealVal>(b.v) || std::holds_alternative<CostVal>(b.v);
        if (a_num && b_num) return ext_dist(den_number(a), den_number(b)) <= tol;
        return false;
    }
    return std::visit(
        overloaded{
            [&](const BaseVal& x) {
                const auto& y = std::get<BaseVal>(b.v);
                if (x.cons != y.cons || x.args.size() != y.args.size()) return false;
                for (size_t i = 0; i < x.args.size(); ++i)
                    if (!den_equal(x.args[i], y.args[i], tol)) return false;
                return true;
            },
            [&](const QuantumVal& x) {
                return x.state.approx_equal(std::get<QuantumVal>(b.v).state, tol);
            },
            [&](const RealVal& x) {
                return ext_dist(x.value, std::get<RealVal>(b.v).value) <= tol;
            },
            [&](const CostVal& x) {
                return ext_dist(x.value, std::get<CostVal>(b.v).value) <= tol;
            },
            [&](const FuncVal&) { return false; }, // functions are not comparable
        },
        a.v);
}

Denotation bottom_denotation(const CSType& type, const DenoteCtx& ctx) {
    switch (type.kind) {
    case CSType::Kind::K:
        return {CostVal{ctx.cs->bottom()}};
    case CSType::Kind::RInf:
        return {RealVal{ExtReal{0.0}}};
    case CSType::Kind::Arrow: {
        CSTypePtr to = type.to;
        DenoteCtx c = ctx;
        return {FuncVal{[to, c](const Denotation&) { return bottom_denotation(*to, c); }}};
    }
    case CSType::Kind::Basic:
        break;
    }
    fail("NotFunctionalType", "type " + show_cs_type(type) + " has no bottom element");
}

namespace {

// Bottom whose eventual cost component records that the budget truncated the
// fixed-point unrolling.
Denotation flagged_bottom(const CSType& type, const DenoteCtx& ctx) {
    if (type.kind == CSType::Kind::Arrow) {
        CSTypePtr to = type.to;
        DenoteCtx c = ctx;
        return {FuncVal{[to, c](const Denotation&) { return flagged_bottom(*to, c); }}};
    }
    *ctx.budget_exhausted = true;
    return bottom_denotation(type, ctx);
}

ExtReal to_cost(const Denotation& d, const DenoteCtx& ctx, const CSTermPtr& at) {
    ExtReal v = den_number(d);
    if (!ctx.cs->contains(v))
        fail("CarrierViolation",
             "value " + std::to_string(v.v) + " is outside the '" + ctx.cs->name() + "' carrier",
             at->pos);
    return v;
}

} // namespace

Denotation denote(const CSTermPtr& term, const Valuation& rho, const DenoteCtx& ctx) {
    return std::visit(
        overloaded{
            [&](const CSVar& v) -> Denotation {
                auto it = rho.find(v.name);
                if (it == rho.end())
                    fail("UnboundVariable", "valuation does not bind '" + v.name + "'",
                         term->pos);
                return it->second;
            },
            [&](const CSLam& l) -> Denotation {
                Valuation captured = rho;
                CSTermPtr body = l.body;
                std::string param = l.param;
                DenoteCtx c = ctx;
                return {FuncVal{[captured, body, param, c](const Denotation& x) {
                    Valuation r = captured;
                    r[param] = x;
                    return denote(body, r, c);
                }}};
            },
            [&](const CSApp& a) -> Denotation {
                Denotation f = denote(a.fun, rho, ctx);
                Denotation x = denote(a.arg, rho, ctx);
                return den_apply(f, x);
            },
            [&](const CSKet& k) -> Denotation { return {QuantumVal{k.state}}; },
            [&](const CSGate& g) -> Denotation {
                Denotation a = denote(g.arg, rho, ctx);
                const auto* q = std::get_if<QuantumVal>(&a.v);
                if (!q) fail("TypeMismatch", "gate applied to a non-quantum value", term->pos);
                return {QuantumVal{apply_unitary(ctx.gates->get(g.gate), q->state)}};
            },
            [&](const CSTensor& s) -> Denotation {
                Denotation l = denote(s.lhs, rho, ctx);
                Denotation r = denote(s.rhs, rho, ctx);
                const auto* ql = std::get_if<QuantumVal>(&l.v);
                const auto* qr = std::get_if<QuantumVal>(&r.v);
                if (!ql || !qr) fail("TypeMismatch", "tensor of non-quantum values", term->pos);
                return {QuantumVal{tensor(ql->state, qr->state)}};
            },
            [&](const CSCollapse& c) -> Denotation {
                Denotation a = denote(c.arg, rho, ctx);
                const auto* q = std::get_if<QuantumVal>(&a.v);
                if (!q) fail("TypeMismatch", "collapse of a non-quantum value", term->pos);
                return {QuantumVal{post_measure(c.outcome, q->state)}};
            },
            [&](const CSCons& c) -> Denotation {
                BaseVal out{c.cons, {}};
                for (const auto& a : c.args) out.args.push_back(denote(a, rho, ctx));
                return {std::move(out)};
            },
            [&](const CSCase& c) -> Denotation {
                Denotation s = denote(c.scrutinee, rho, ctx);
                if (const auto* bv = std::get_if<BaseVal>(&s.v)) {
                    for (const auto& arm : c.arms) {
                        if (arm.cons != bv->cons) continue;
                        if (arm.binders.size() != bv->args.size())
                            fail("ArityMismatch", "case pattern arity mismatch", term->pos);
                        Valuation r = rho;
                        for (size_t i = 0; i < arm.binders.size(); ++i)
                            r[arm.binders[i]] = bv->args[i];
                        return denote(arm.body, r, ctx);
                    }
                }
                if (!c.default_body)
                    fail("StuckTerm", "case denotation: no arm matches and no default",
                         term->pos);
                Valuation r = rho;
                r[c.default_binder] = s;
                return denote(c.default_body, r, ctx);
            },
            [&](const CSLetrec& l) -> Denotation {
                if (!l.annotation)
                    fail("CannotInfer",
                         "letrec denotation requires the elaborated type annotation", term->pos);
                CSTypePtr fty = l.annotation;
                Valuation captured = rho;
                CSTermPtr body = l.body;
                std::string fun = l.fun, param = l.param;
                DenoteCtx c = ctx;
                // unroll(d) is the d-th Kleene iterate of the body functional,
                // built lazily so only demanded unfoldings are evaluated.
                auto unroll = std::make_shared<std::function<Denotation(int)>>();
                *unroll = [=](int d) -> Denotation {
                    if (d <= 0) return flagged_bottom(*fty, c);
                    return {FuncVal{[=](const Denotation& x) {
                        Valuation r = captured;
                        r[fun] = (*unroll)(d - 1);
                        r[param] = x;
                        return denote(body, r, c);
                    }}};
                };
                return (*unroll)(ctx.budget);
            },
            [&](const CSReal& r) -> Denotation { return {RealVal{ExtReal{r.value}}}; },
            [&](const CSCAdd& a) -> Denotation {
                ExtReal cost = den_number(denote(a.cost, rho, ctx));
                ExtReal rest = to_cost(denote(a.rest, rho, ctx), ctx, term);
                return {CostVal{ctx.cs->cadd(cost, rest)}};
            },
            [&](const CSBary& b) -> Denotation {
                Denotation vs = denote(b.prob_state, rho, ctx);
                const auto* q = std::get_if<QuantumVal>(&vs.v);
                if (!q)
                    fail("TypeMismatch", "barycentric weight is not a quantum value", term->pos);
                double p0 = measure_prob(0, q->state);
                ExtReal l = to_cost(denote(b.left, rho, ctx), ctx, term);
                ExtReal r = to_cost(denote(b.right, rho, ctx), ctx, term);
                return {CostVal{ctx.cs->bary(p0, l, r)}};
            },
        },
        term->node);
}

ClosedCostResult denote_closed_cost(const CSTermPtr& term, const Valuation& rho,
                                    const DenoteCtx& base, int budget_cap, double tolerance) {
    ClosedCostResult res;
    bool have_prev = false, moved = false;
    ExtReal first{0.0}, prev{0.0};
    for (int b = 1; b <= budget_cap; ++b) {
        DenoteCtx ctx = base;
        ctx.budget = b;
        // Same flag object as `base`, so bottoms demanded by function values
        // inside `rho` (denoted earlier against `base`) are still seen.
        *ctx.budget_exhausted = false;
        ExtReal v = den_number(denote(term, rho, ctx));
        res.value = v;
        res.budget_used = b;
        res.exhausted = *ctx.budget_exhausted;
        if (!res.exhausted) {
            res.converged = true; // no bottom was demanded: the value is exact
            return res;
        }
        if (!have_prev) first = v;
        if (have_prev && ext_dist(v, first) > 0) moved = true;
        // Chains under non-additive structures can sit at bottom and then
        // jump, so the tolerance stop only applies once the iterates moved.
        if (have_prev && moved && ext_dist(v, prev) < tolerance) {
            res.converged = true;
            return res;
        }
        prev = v;
        have_prev = true;
    }
    res.converged = false;
    return res;
}

} // namespace qetlab
