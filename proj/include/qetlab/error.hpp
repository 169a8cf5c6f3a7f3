#pragma once

#include <stdexcept>
#include <string>

namespace qetlab {

/// Position inside a source file; 1-based, 0 means "unknown".
struct SourcePos {
    int line = 0;
    int col = 0;
};

/// Uniform error for parse/type/analysis failures. `kind` is a stable
/// machine-readable tag (e.g. "LinearityViolation"), `rule` optionally names
/// the typing rule whose premise failed.
class Error : public std::runtime_error {
public:
    Error(std::string kind, std::string message, SourcePos pos = {}, std::string rule = "")
        : std::runtime_error(message), kind_(std::move(kind)), rule_(std::move(rule)), pos_(pos) {}

    const std::string& kind() const { return kind_; }
    const std::string& rule() const { return rule_; }
    SourcePos pos() const { return pos_; }

private:
    std::string kind_;
    std::string rule_;
    SourcePos pos_;
};

[[noreturn]] inline void fail(std::string kind, std::string message, SourcePos pos = {},
                              std::string rule = "") {
    throw Error(std::move(kind), std::move(message), pos, std::move(rule));
}

} // namespace qetlab
