#include "qetlab/corpus.hpp"

#include <cmath>

namespace qetlab {

namespace {
double grover_err(int n, int i) {
    double theta = std::asin(std::pow(2.0, -n / 2.0));
    double c = std::cos((2 * i + 1) * theta);
    return c * c;
}
} // namespace

const std::vector<CorpusEntry>& corpus() {
    static const std::vector<CorpusEntry> entries = [] {
        std::vector<CorpusEntry> v;
        v.push_back({"cointoss", "cointoss.aql", "", 1.5, "prob0.csl", 1.0, 60, 64});
        v.push_back({"qwalk", "qwalk.aql", "", 1.5, "prob0.csl", 1.0, 60, 64});
        v.push_back({"tickchain", "tickchain.aql", "", 3.0, "prob0.csl", 0.5, 60, 64});
        v.push_back({"bell", "bell.aql", "", 1.0, "indicator0.csl", 0.5, 60, 64});
        v.push_back({"meascascade", "meascascade.aql", "", 1.5, "indicator0.csl", 0.25, 60, 64});
        v.push_back({"nestedcase", "nestedcase.aql", "", 2.0, "prob0.csl", 1.0, 60, 64});
        v.push_back({"twice", "twice.aql", "", 2.0, "prob0.csl", 1.0, 60, 64});
        v.push_back({"grover1_i1", "grover1_i1.aql", "", 0.0, "err1.csl", grover_err(1, 1), 60, 64});
        v.push_back({"grover2_i0", "grover2_i0.aql", "", 0.0, "err2.csl", grover_err(2, 0), 60, 64});
        v.push_back({"grover2_i1", "grover2_i1.aql", "", 0.0, "err2.csl", grover_err(2, 1), 60, 64});
        v.push_back({"grover2_i2", "grover2_i2.aql", "", 0.0, "err2.csl", grover_err(2, 2), 60, 64});
        v.push_back({"grover3_i1", "grover3_i1.aql", "", 0.0, "err3.csl", grover_err(3, 1), 60, 64});
        v.push_back({"clone", "clone.aql", "LinearityViolation", -1.0, "", -1.0, 60, 64});
        return v;
    }();
    return entries;
}

} // namespace qetlab
