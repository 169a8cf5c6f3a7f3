#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "qetlab/cost_structure.hpp"
#include "qetlab/source_ast.hpp"

namespace qetlab {

/// Entries below this probability are pruned (and accounted separately).
inline constexpr double kPruneTol = 1e-15;

struct WeightedEntry {
    TermPtr term;
    double prob;
};

/// Finite subdistribution over terms, mass <= 1 + 1e-9.
struct WeightedDist {
    std::vector<WeightedEntry> entries;

    double mass() const;
    /// Merges alpha-equivalent support terms (ket tolerance 1e-12) and prunes
    /// entries below kPruneTol; returns the pruned mass.
    double merge_and_prune();
};

struct ReductionStep {
    double cost = 0.0;
    WeightedDist dist;
    double pruned = 0.0;
    bool branched = false; // some support element split probabilistically
};

/// One Fig. 2 step at the unique redex; nullopt when the term is terminal.
/// Closed well-typed terms never stick; sticking raises StuckTerm.
std::optional<ReductionStep> step(const TermPtr& term, const GateTable& gates);

/// Lifts the step relation to distributions: rewrites every non-terminal
/// support element, cost is the probability-weighted sum; terminals carry
/// through at cost 0.
ReductionStep lift_step(const WeightedDist& dist, const GateTable& gates);

struct RunReport {
    int depth = 0;
    double accumulated_cost = 0.0; // lower bound on the expected cost
    WeightedDist live;             // non-terminal mass
    WeightedDist normal_forms;     // terminal mass
    double pruned_mass = 0.0;
    int lifted_steps = 0;          // total lift_step applications
};

/// Iterates lift_step until max_depth probabilistic rounds have resolved: a
/// depth unit fuses consecutive single-successor lifted steps and closes when
/// a support element genuinely splits (or everything terminates). Purely
/// deterministic stretches are capped at `round_cap` lifted steps per round.
RunReport run(const TermPtr& term, int max_depth, const GateTable& gates, int round_cap = 4096);

double ecost_lower(const TermPtr& term, int max_depth, const GateTable& gates);
WeightedDist nf_dist(const TermPtr& term, int max_depth, const GateTable& gates);

/// Expected value: sum_b nf(b) . f(b) computed in the Kegelspitze.
ExtReal evalue(const TermPtr& term, const std::function<ExtReal(const TermPtr&)>& f,
               int max_depth, const Kegelspitze& ks, const GateTable& gates);

struct SampleReport {
    std::uint64_t seed = 0;
    int trials = 0;
    int completed = 0;
    int guard_tripped = 0; // trials that hit the step budget
    double mean_cost = 0.0;
    std::map<std::string, int> outcomes; // pretty-printed normal form -> count
};

/// Monte-Carlo runs resolving measurements by pseudo-random draws.
/// Reproducible: the per-trial generator is derived from (seed, trial index).
SampleReport sample(const TermPtr& term, std::uint64_t seed, int trials, const GateTable& gates,
                    int step_budget = 1000000);

} // namespace qetlab
