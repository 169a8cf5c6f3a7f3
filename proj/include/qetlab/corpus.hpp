#pragma once

#include <string>
#include <vector>

namespace qetlab {

/// A bundled example program with its golden analysis results.
struct CorpusEntry {
    std::string name;
    std::string file; // relative to the corpus directory
    std::string expect_error;       // non-empty: checking must fail with this kind
    double expected_ecost = -1.0;   // golden expected cost (< 0: none)
    std::string continuation_file;  // optional continuation for expected-value runs
    double expected_evalue = -1.0;  // golden expected value under the continuation
    int depth = 60;                 // default analysis depth
    int budget = 64;                // default unrolling budget
};

/// The bundled corpus, in a stable order.
const std::vector<CorpusEntry>& corpus();

} // namespace qetlab
