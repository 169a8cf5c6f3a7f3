#include "qetlab/pars.hpp"

#include <algorithm>
#include <random>

namespace qetlab {

namespace {
template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
} // namespace

double WeightedDist::mass() const {
    double m = 0.0;
    for (const auto& e : entries) m += e.prob;
    return m;
}

double WeightedDist::merge_and_prune() {
    std::vector<WeightedEntry> merged;
    for (auto& e : entries) {
        bool found = false;
        for (auto& m : merged) {
            if (alpha_eq(m.term, e.term)) {
                m.prob += e.prob;
                found = true;
                break;
            }
        }
        if (!found) merged.push_back(std::move(e));
    }
    double pruned = 0.0;
    entries.clear();
    for (auto& m : merged) {
        if (m.prob < kPruneTol)
            pruned += m.prob;
        else
            entries.push_back(std::move(m));
    }
    return pruned;
}

namespace {

// Rebuilds the evaluation context around every support element of a substep.
ReductionStep plug(const ReductionStep& sub, const std::function<TermPtr(const TermPtr&)>& ctx) {
    ReductionStep out;
    out.cost = sub.cost;
    for (const auto& e : sub.dist.entries) out.dist.entries.push_back({ctx(e.term), e.prob});
    return out;
}

ReductionStep singleton(TermPtr t, double cost = 0.0) {
    ReductionStep s;
    s.cost = cost;
    s.dist.entries.push_back({std::move(t), 1.0});
    return s;
}

[[noreturn]] void stuck(const TermPtr& t, const std::string& why) {
    fail("StuckTerm", "stuck term (" + why + "): " + pretty(t), t->pos);
}

// The rightmost non-value position, if any (arguments evaluate right-to-left).
int rightmost_redex(const std::vector<TermPtr>& xs) {
    for (int i = static_cast<int>(xs.size()) - 1; i >= 0; --i)
        if (!is_value(xs[static_cast<size_t>(i)])) return i;
    return -1;
}

} // namespace

std::optional<ReductionStep> step(const TermPtr& t, const GateTable& gates) {
    if (is_value(t)) return std::nullopt;
    return std::visit(
        overloaded{
            [&](const App& a) -> std::optional<ReductionStep> {
                if (!is_value(a.arg)) {
                    auto sub = step(a.arg, gates);
                    if (!sub) stuck(t, "argument neither value nor reducible");
                    return plug(*sub,
                                [&](const TermPtr& s) { return mk(App{a.fun, s}, t->pos); });
                }
                if (!is_value(a.fun)) {
                    auto sub = step(a.fun, gates);
                    if (!sub) stuck(t, "head neither value nor reducible");
                    return plug(*sub,
                                [&](const TermPtr& s) { return mk(App{s, a.arg}, t->pos); });
                }
                if (const auto* l = as<Lam>(a.fun))
                    return singleton(subst(l->body, l->param, a.arg));
                if (const auto* l = as<Letrec>(a.fun)) {
                    TermPtr unfolded = subst(l->body, l->fun, a.fun);
                    return singleton(subst(unfolded, l->param, a.arg));
                }
                stuck(t, "application of a non-function value");
            },
            [&](const GateApp& g) -> std::optional<ReductionStep> {
                if (!is_value(g.arg)) {
                    auto sub = step(g.arg, gates);
                    if (!sub) stuck(t, "gate argument stuck");
                    return plug(*sub,
                                [&](const TermPtr& s) { return mk(GateApp{g.gate, s}, t->pos); });
                }
                const auto* k = as<KetT>(g.arg);
                if (!k) stuck(t, "gate applied to a non-ket value");
                return singleton(mk(KetT{apply_unitary(gates.get(g.gate), k->state)}, t->pos));
            },
            [&](const Meas& m) -> std::optional<ReductionStep> {
                if (!is_value(m.arg)) {
                    auto sub = step(m.arg, gates);
                    if (!sub) stuck(t, "measurement argument stuck");
                    return plug(*sub, [&](const TermPtr& s) { return mk(Meas{s}, t->pos); });
                }
                const auto* k = as<KetT>(m.arg);
                if (!k) stuck(t, "measurement of a non-ket value");
                ReductionStep out;
                for (int i = 0; i < 2; ++i) {
                    double p = measure_prob(i, k->state);
                    if (p < kZeroProbTol) continue; // zero-probability branch dropped
                    TermPtr collapsed = mk(KetT{post_measure(i, k->state)}, t->pos);
                    out.dist.entries.push_back(
                        {mk(ConsApp{i == 0 ? "inj0" : "inj1", {}, {collapsed}}, t->pos), p});
                }
                return out;
            },
            [&](const TensorT& s) -> std::optional<ReductionStep> {
                if (!is_value(s.rhs)) {
                    auto sub = step(s.rhs, gates);
                    if (!sub) stuck(t, "tensor rhs stuck");
                    return plug(*sub,
                                [&](const TermPtr& r) { return mk(TensorT{s.lhs, r}, t->pos); });
                }
                if (!is_value(s.lhs)) {
                    auto sub = step(s.lhs, gates);
                    if (!sub) stuck(t, "tensor lhs stuck");
                    return plug(*sub,
                                [&](const TermPtr& l) { return mk(TensorT{l, s.rhs}, t->pos); });
                }
                const auto* kl = as<KetT>(s.lhs);
                const auto* kr = as<KetT>(s.rhs);
                if (!kl || !kr) stuck(t, "tensor of non-ket values");
                return singleton(mk(KetT{tensor(kl->state, kr->state)}, t->pos));
            },
            [&](const ConsApp& c) -> std::optional<ReductionStep> {
                int qi = rightmost_redex(c.quantum_args);
                if (qi >= 0) {
                    auto sub = step(c.quantum_args[static_cast<size_t>(qi)], gates);
                    if (!sub) stuck(t, "constructor argument stuck");
                    return plug(*sub, [&](const TermPtr& s) {
                        ConsApp out = c;
                        out.quantum_args[static_cast<size_t>(qi)] = s;
                        return mk(std::move(out), t->pos);
                    });
                }
                int ci = rightmost_redex(c.classical_args);
                if (ci >= 0) {
                    auto sub = step(c.classical_args[static_cast<size_t>(ci)], gates);
                    if (!sub) stuck(t, "constructor argument stuck");
                    return plug(*sub, [&](const TermPtr& s) {
                        ConsApp out = c;
                        out.classical_args[static_cast<size_t>(ci)] = s;
                        return mk(std::move(out), t->pos);
                    });
                }
                stuck(t, "constructor of values is a value"); // unreachable
            },
            [&](const CaseOf& c) -> std::optional<ReductionStep> {
                if (!is_value(c.scrutinee)) {
                    auto sub = step(c.scrutinee, gates);
                    if (!sub) stuck(t, "case scrutinee stuck");
                    return plug(*sub, [&](const TermPtr& s) {
                        CaseOf out = c;
                        out.scrutinee = s;
                        return mk(std::move(out), t->pos);
                    });
                }
                const auto* v = as<ConsApp>(c.scrutinee);
                if (v) {
                    for (const auto& arm : c.arms) {
                        if (arm.cons != v->cons) continue;
                        if (arm.classical_binders.size() != v->classical_args.size() ||
                            arm.quantum_binders.size() != v->quantum_args.size())
                            stuck(t, "pattern arity mismatch");
                        TermPtr body = arm.body;
                        for (size_t i = 0; i < arm.classical_binders.size(); ++i)
                            body = subst(body, arm.classical_binders[i], v->classical_args[i]);
                        for (size_t i = 0; i < arm.quantum_binders.size(); ++i)
                            body = subst(body, arm.quantum_binders[i], v->quantum_args[i]);
                        return singleton(body);
                    }
                }
                if (c.default_body)
                    return singleton(subst(c.default_body, c.default_binder, c.scrutinee));
                stuck(t, "no case arm matches and no default");
            },
            [&](const TickT& k) -> std::optional<ReductionStep> {
                return singleton(k.arg, 1.0);
            },
            [&](const auto&) -> std::optional<ReductionStep> {
                stuck(t, "open or ill-formed term");
            },
        },
        t->node);
}

ReductionStep lift_step(const WeightedDist& dist, const GateTable& gates) {
    ReductionStep out;
    for (const auto& e : dist.entries) {
        auto sub = step(e.term, gates);
        if (!sub) {
            out.dist.entries.push_back(e); // terminal, carried at cost 0
            continue;
        }
        out.cost += e.prob * sub->cost;
        if (sub->dist.entries.size() > 1) out.branched = true;
        for (const auto& se : sub->dist.entries)
            out.dist.entries.push_back({se.term, e.prob * se.prob});
    }
    out.pruned = out.dist.merge_and_prune();
    return out;
}

RunReport run(const TermPtr& term, int max_depth, const GateTable& gates, int round_cap) {
    RunReport rep;
    WeightedDist dist;
    dist.entries.push_back({term, 1.0});
    auto all_terminal = [](const WeightedDist& d) {
        return std::all_of(d.entries.begin(), d.entries.end(),
                           [](const WeightedEntry& e) { return is_value(e.term); });
    };
    for (int d = 0; d < max_depth; ++d) {
        if (all_terminal(dist)) break;
        for (int i = 0; i < round_cap; ++i) {
            ReductionStep stepped = lift_step(dist, gates);
            rep.pruned_mass += stepped.pruned;
            rep.accumulated_cost += stepped.cost;
            dist = std::move(stepped.dist);
            ++rep.lifted_steps;
            if (stepped.branched || all_terminal(dist)) break;
        }
        rep.depth = d + 1;
    }
    for (const auto& e : dist.entries)
        (is_value(e.term) ? rep.normal_forms : rep.live).entries.push_back(e);
    return rep;
}

double ecost_lower(const TermPtr& term, int max_depth, const GateTable& gates) {
    return run(term, max_depth, gates).accumulated_cost;
}

WeightedDist nf_dist(const TermPtr& term, int max_depth, const GateTable& gates) {
    return run(term, max_depth, gates).normal_forms;
}

ExtReal evalue(const TermPtr& term, const std::function<ExtReal(const TermPtr&)>& f,
               int max_depth, const Kegelspitze& ks, const GateTable& gates) {
    WeightedDist nf = nf_dist(term, max_depth, gates);
    std::vector<std::pair<double, ExtReal>> pairs;
    for (const auto& e : nf.entries) pairs.push_back({e.prob, f(e.term)});
    return convex_sum(ks, pairs);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

SampleReport sample(const TermPtr& term, std::uint64_t seed, int trials, const GateTable& gates,
                    int step_budget) {
    if (trials < 1) fail("InvalidArgument", "sample needs at least one trial");
    SampleReport rep;
    rep.seed = seed;
    rep.trials = trials;
    double total_cost = 0.0;
    for (int k = 0; k < trials; ++k) {
        std::mt19937_64 rng(splitmix64(seed ^ (0x5851f42d4c957f2dULL * (std::uint64_t)(k + 1))));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        TermPtr cur = term;
        double cost = 0.0;
        bool done = false;
        for (int s = 0; s < step_budget; ++s) {
            auto st = step(cur, gates);
            if (!st) {
                done = true;
                break;
            }
            cost += st->cost;
            if (st->dist.entries.size() == 1) {
                cur = st->dist.entries[0].term;
            } else {
                double u = unif(rng);
                double acc = 0.0;
                cur = st->dist.entries.back().term;
                for (const auto& e : st->dist.entries) {
                    acc += e.prob;
                    if (u < acc) {
                        cur = e.term;
                        break;
                    }
                }
            }
        }
        if (done) {
            ++rep.completed;
            total_cost += cost;
            ++rep.outcomes[pretty(cur)];
        } else {
            ++rep.guard_tripped; // reported, not fatal
        }
    }
    rep.mean_cost = rep.completed ? total_cost / rep.completed : 0.0;
    return rep;
}

} // namespace qetlab
