#pragma once

#include <map>
#include <string>

#include "qetlab/cs_ast.hpp"
#include "qetlab/denote.hpp"
#include "qetlab/source_ast.hpp"

namespace qetlab {

/// Outcome of comparing an operational observable with the denotation of the
/// transformed term. `pass` holds when the gap is within tolerance, or when
/// both sides are flagged divergent/infinite.
struct ComparisonReport {
    std::string program_id;
    double tolerance = 1e-6;

    double operational = 0.0;
    int depth = 0;
    double residual_mass = 0.0; // live (non-terminal) mass at the depth bound
    double pruned_mass = 0.0;
    bool operational_divergent = false;

    ExtReal denotational{0.0};
    int budget = 0;
    bool denot_converged = false;
    bool denot_divergent = false;

    double gap = 0.0;
    bool pass = false;
};

using ClosingSubstitution = std::map<std::string, TermPtr>; // name -> closed value

/// Corollary 4.3(1): ecost(t sigma) against [[qet[t]{lam X. 0}]] under
/// (R^{+inf}, +). The program's type must be basic (HypothesisViolation).
ComparisonReport check_expected_cost(const Program& program, const ClosingSubstitution& sigma,
                                     int depth, int budget, double tol,
                                     const std::string& program_id = "");

/// Corollary 4.3(2): ev(t sigma)([[f]]) against [[qet[t]{f}]] under the
/// forgetful cost structure over `carrier`. `f` must check at B => K.
ComparisonReport check_expected_value(const Program& program, const ClosingSubstitution& sigma,
                                      const CSTermPtr& f, KegelspitzePtr carrier, int depth,
                                      int budget, double tol, const std::string& program_id = "");

/// Both sides of Theorem 4.2 under an arbitrary cost structure and
/// continuation: [[qet[t]{f}]] vs ecost(t sigma) ^+ ev(t sigma)([[f]]).
ComparisonReport check_theorem(const Program& program, const ClosingSubstitution& sigma,
                               const CSTermPtr& f, CostStructurePtr cs, int depth, int budget,
                               double tol, const std::string& program_id = "");

} // namespace qetlab
