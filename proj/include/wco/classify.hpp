#pragma once

#include "wco/oracle.hpp"
#include "wco/quantities.hpp"

#include <optional>
#include <string>
#include <vector>

namespace wco {

enum class Status { holds, fails, inconclusive };
enum class Mode { exact, numeric };

const char* to_string(Status s);
const char* to_string(Mode m);

/// Outcome of one property check. Exact-mode holds/fails always carry a
/// machine-checkable witness (a vertex, an exact value, or a validated
/// asserted fact); inconclusive verdicts carry the evidence that blocked the
/// decision.
struct Verdict {
    std::string property;
    Status status = Status::inconclusive;
    Mode mode = Mode::numeric;
    std::string rule;  // criterion identifier
    std::string explanation;
    std::vector<std::pair<std::string, std::string>> witnesses;
    std::vector<Verdict> sub;  // per-condition results (Fredholm)
};

struct QuantitySet {
    LimitEstimate sigma;
    LimitEstimate xi;
    LimitEstimate essential_norm;
    std::optional<LimitEstimate> essential_norm_limsup;
    std::optional<LimitEstimate> inverse_norm;
};

struct ComponentReport {
    std::string name;  // "cphi" | "mpsi"
    QuantitySet quantities;
    std::vector<Verdict> verdicts;
};

struct ClassificationReport {
    std::string instance;
    QuantitySet quantities;
    std::vector<Verdict> verdicts;
    std::vector<ComponentReport> components;
    std::vector<std::string> notes;

    const Verdict* find(const std::string& property) const;
};

/// Runs every classifier, the corollary cross-checks on pure instances, the
/// component classifications for genuine weighted compositions, and the
/// implication-lattice validation.
ClassificationReport classify(const OperatorInstance& inst, const Policy& policy,
                              bool with_components = true);

/// Sufficient Fredholm condition for composition instances: phi agrees with
/// eta off a finite set and C_eta is invertible. Never used to derive Fails.
Verdict classify_fredholm_perturbation(const OperatorInstance& inst, const MapRule& eta,
                                       const Policy& policy);

/// Consistency constraints between verdicts (invertible => bounded below =>
/// injective and closed range; surjective isometry => isometry and invertible;
/// compact excludes Fredholm; Fredholm => closed range; essential norm <=
/// operator norm; isometry => norm 1). Throws std::logic_error on violation.
void check_lattice(const ClassificationReport& report);

}  // namespace wco
