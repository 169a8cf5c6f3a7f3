#include "qetlab/soundness.hpp"

#include "qetlab/cs_typecheck.hpp"
#include "qetlab/pars.hpp"
#include "qetlab/qet.hpp"
#include "qetlab/typecheck.hpp"

namespace qetlab {

namespace {

struct Prepared {
    TermPtr main;                           // elaborated, still open in sigma's variables
    TypePtr main_type;                      // must be basic
    TermPtr closed;                         // main with sigma applied
    std::map<std::string, TypePtr> sigma_types;
};

Prepared prepare(const Program& program, const ClosingSubstitution& sigma) {
    Prepared out;
    TypingContext ctx;
    for (const auto& [name, value] : sigma) {
        if (!is_value(value) || !free_vars(value).empty())
            fail("InvalidArgument", "closing substitution for '" + name + "' must be a closed value");
        auto [_, ty] = infer_term({}, value, program.sigs, program.gates);
        out.sigma_types[name] = ty;
        (duplicable(*ty) ? ctx.exponential : ctx.affine)[name] = ty;
    }
    if (program.main_annotation) {
        out.main = check_term(ctx, program.main, program.main_annotation, program.sigs,
                              program.gates);
        out.main_type = program.main_annotation;
    } else {
        auto [et, ty] = infer_term(ctx, program.main, program.sigs, program.gates);
        out.main = et;
        out.main_type = ty;
    }
    if (out.main_type->kind != SourceType::Kind::Basic)
        fail("HypothesisViolation", "the soundness theorem requires a program of basic type, got " +
                                          show_type(*out.main_type));
    out.closed = out.main;
    for (const auto& [name, value] : sigma) out.closed = subst(out.closed, name, value);
    if (!free_vars(out.closed).empty())
        fail("InvalidArgument", "program is not closed by the given substitution");
    return out;
}

// rho_sigma: target variables bound to denotations of translated sigma values.
Valuation valuation_of_sigma(const ClosingSubstitution& sigma,
                             const std::map<std::string, std::string>& rename,
                             const Program& program, const DenoteCtx& ctx) {
    Valuation rho;
    for (const auto& [name, value] : sigma) {
        auto it = rename.find(name);
        if (it == rename.end()) continue; // variable unused in the term
        auto [et, _] = infer_term({}, value, program.sigs, program.gates);
        QetResult v = qet_translate_value(et, program.sigs, program.gates);
        rho[it->second] = denote(v.term, {}, ctx);
    }
    return rho;
}

CSContext cs_context_of_sigma(const Prepared& prep,
                              const std::map<std::string, std::string>& rename) {
    CSContext theta;
    for (const auto& [name, ty] : prep.sigma_types) {
        auto it = rename.find(name);
        if (it != rename.end()) theta[it->second] = qet_translate_type(ty);
    }
    return theta;
}

ComparisonReport compare(const std::string& id, double op, const RunReport& rep,
                         const ClosedCostResult& den, double tol) {
    ComparisonReport out;
    out.program_id = id;
    out.tolerance = tol;
    out.operational = op;
    out.depth = rep.depth;
    out.residual_mass = rep.live.mass();
    out.pruned_mass = rep.pruned_mass;
    out.operational_divergent = out.residual_mass > 1e-6;
    out.denotational = den.value;
    out.budget = den.budget_used;
    out.denot_converged = den.converged;
    out.denot_divergent = !den.converged || den.value.is_inf();
    out.gap = den.value.is_inf() ? std::numeric_limits<double>::infinity()
                                 : std::abs(op - den.value.v);
    out.pass = (out.gap <= tol) || (out.operational_divergent && out.denot_divergent);
    return out;
}

} // namespace

ComparisonReport check_expected_cost(const Program& program, const ClosingSubstitution& sigma,
                                     int depth, int budget, double tol,
                                     const std::string& program_id) {
    Prepared prep = prepare(program, sigma);

    RunReport rep = run(prep.closed, depth, program.gates);

    CSTermPtr k = zero_continuation(qet_translate_type(prep.main_type));
    QetResult tr = qet_translate_term(prep.main, k, program.sigs, program.gates,
                                      prep.sigma_types);
    CSContext theta = cs_context_of_sigma(prep, tr.rename);
    CSTermPtr elaborated =
        cs_check(theta, tr.term, CSType::k(), program.sigs, program.gates, KMode::RPlus);

    DenoteCtx ctx;
    ctx.cs = instance_rplus();
    ctx.gates = &program.gates;
    ctx.sigs = &program.sigs;
    Valuation rho = valuation_of_sigma(sigma, tr.rename, program, ctx);
    ClosedCostResult den = denote_closed_cost(elaborated, rho, ctx, budget, tol * 1e-3);

    return compare(program_id, rep.accumulated_cost, rep, den, tol);
}

ComparisonReport check_expected_value(const Program& program, const ClosingSubstitution& sigma,
                                      const CSTermPtr& f, KegelspitzePtr carrier, int depth,
                                      int budget, double tol, const std::string& program_id) {
    return check_theorem(program, sigma, f, forgetful(std::move(carrier)), depth, budget, tol,
                         program_id);
}

ComparisonReport check_theorem(const Program& program, const ClosingSubstitution& sigma,
                               const CSTermPtr& f, CostStructurePtr cs, int depth, int budget,
                               double tol, const std::string& program_id) {
    Prepared prep = prepare(program, sigma);

    QetResult tr = qet_translate_term(prep.main, f, program.sigs, program.gates,
                                      prep.sigma_types);
    CSContext theta = cs_context_of_sigma(prep, tr.rename);
    CSTypePtr b = qet_translate_type(prep.main_type);
    // The continuation must type at B => K on its own.
    cs_check(theta, f, CSType::arrow(b, CSType::k()), program.sigs, program.gates,
             KMode::Abstract);
    CSTermPtr elaborated =
        cs_check(theta, tr.term, CSType::k(), program.sigs, program.gates, KMode::Abstract);

    DenoteCtx ctx;
    ctx.cs = cs;
    ctx.gates = &program.gates;
    ctx.sigs = &program.sigs;
    Valuation rho = valuation_of_sigma(sigma, tr.rename, program, ctx);

    // Operational side: ecost ^+ sum_b nf(b) . [[f]](V(b)).
    RunReport rep = run(prep.closed, depth, program.gates);
    CSTermPtr f_el = cs_check(theta, f, CSType::arrow(b, CSType::k()), program.sigs,
                              program.gates, KMode::Abstract);
    Denotation f_den = denote(f_el, rho, ctx);
    auto f_host = [&](const TermPtr& nf_value) -> ExtReal {
        auto [ev, _] = infer_term({}, nf_value, program.sigs, program.gates);
        QetResult v = qet_translate_value(ev, program.sigs, program.gates);
        Denotation d = denote(v.term, {}, ctx);
        return den_number(den_apply(f_den, d));
    };
    std::vector<std::pair<double, ExtReal>> pairs;
    for (const auto& e : rep.normal_forms.entries) pairs.push_back({e.prob, f_host(e.term)});
    ExtReal operational = cs->cadd(ExtReal{rep.accumulated_cost}, convex_sum(*cs, pairs));

    ClosedCostResult den = denote_closed_cost(elaborated, rho, ctx, budget, tol * 1e-3);

    ComparisonReport out = compare(program_id, operational.v, rep, den, tol);
    if (operational.is_inf() && den.value.is_inf()) {
        out.gap = 0.0;
        out.pass = true;
    }
    return out;
}

} // namespace qetlab
