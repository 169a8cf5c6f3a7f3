#pragma once

#include <string>

#include "qetlab/source_ast.hpp"

namespace qetlab {

/// Parses a .aql program: `data`/`qdata`/`unitary`/`def` declarations followed
/// by `main [: T] = term` (or a bare term). `def` values are inlined into the
/// main term. Errors carry source positions.
Program parse_program(const std::string& source);

/// Parses a type like "Q -o Q" against the given signature table.
TypePtr parse_type_string(const std::string& source, const SigTable& sigs);

/// Parses a single term (no declarations); for tests and tools.
TermPtr parse_term_string(const std::string& source, const SigTable& sigs, const GateTable& gates);

} // namespace qetlab
