#pragma once

#include "wco/instance.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace wco {

/// One observation along a schedule: lo == hi for plain partial sups, a
/// min/max band for per-shell ratio intervals.
struct EvidencePoint {
    double x = 0;
    double lo = 0;
    double hi = 0;
};

/// A limit-type quantity with its evidence trail. `exact` kinds carry the
/// certificate source ("engine", "asserted", "finite-space", ...); numeric
/// kinds only report the trail and the convergence flag.
struct LimitEstimate {
    enum class Kind { exact, numeric };
    enum class Outcome { value, nonexistent, undetermined };
    Kind kind = Kind::numeric;
    Outcome outcome = Outcome::undetermined;
    bool infinite = false;
    double value = 0;
    std::optional<Scalar> exact_value;
    std::vector<EvidencePoint> evidence;
    bool converged = false;
    std::string source;
};

struct SigmaResult {
    Scalar partial_sup;            // exact max of the ratio over ball(R)
    std::optional<Vertex> argmax;
    LimitEstimate estimate;        // extension over the radius schedule
};

struct TailSupResult {
    Scalar value;
    bool empty = false;
    std::optional<Vertex> argmax;
};

/// mu(v) |psi(v)| / mu(phi(v)); exactness propagates through the Scalar.
Scalar ratio(const OperatorInstance& inst, const Vertex& v);

/// One pass over ball(R) as value-groups, with everything the schedule-based
/// estimates need. Entries are sorted by shell index.
struct ScanCache {
    struct Entry {
        Vertex rep;
        std::uint64_t count = 1;
        std::int64_t shell = 0;
        Scalar ratio;
        double ratio_d = 0;
        Rat image_len_sq;
        bool psi_zero = false;
    };
    Rat radius;
    std::vector<Entry> entries;
};
ScanCache make_scan_cache(const OperatorInstance& inst, const Rat& R, const Policy& policy);

SigmaResult sigma(const OperatorInstance& inst, const Rat& R, const Policy& policy,
                  const ScanCache* cache = nullptr);

LimitEstimate xi_estimate(const OperatorInstance& inst, const std::vector<Rat>& schedule,
                          const Policy& policy, const ScanCache* cache = nullptr);

/// sup of the ratio over {v in ball(R) : |phi(v)| >= N}.
TailSupResult tail_sup(const OperatorInstance& inst, const Rat& N, const Rat& R,
                       const Policy& policy);

/// All v in ball(R) with phi(v) = phi(w).
std::vector<Vertex> fiber(const OperatorInstance& inst, const Vertex& w, const Rat& R,
                          const Policy& policy);

/// Zeros of psi within ball(R) (exact when psi evaluates exactly, else by the
/// zero tolerance).
std::vector<Vertex> zero_set(const OperatorInstance& inst, const Rat& R, const Policy& policy);

/// {v in ball(R) : ratio(v) >= eps}.
std::vector<Vertex> u_epsilon(const OperatorInstance& inst, const Scalar& eps, const Rat& R,
                              const Policy& policy);

/// Tail estimate over an N-schedule plus certificates: the essential-norm
/// value when the instance's map has infinite range.
LimitEstimate essential_norm_estimate(const OperatorInstance& inst, const Policy& policy,
                                      const ScanCache* cache = nullptr);

/// The shell-tail form sup_{|v| >= N} ratio along the same N-schedule (the
/// essential norm on the little space under a typical weight).
LimitEstimate limsup_shell_estimate(const OperatorInstance& inst, const Policy& policy,
                                    const ScanCache* cache = nullptr);

/// Visits ball(R) as value-groups: `rep` carries the value shared by `count`
/// vertices. Falls back to vertex-by-vertex scanning without a cell model.
void for_each_group(const OperatorInstance& inst, const Rat& R, const Policy& policy,
                    const std::function<void(const Vertex& rep, std::uint64_t count)>& fn);

/// Cross-checks every asserted fact against structure, the exact engine and
/// truncation evidence; throws contradiction_error on a counterexample.
/// Also enforces weight positivity on the scanned region.
void validate_instance(const OperatorInstance& inst, const Policy& policy,
                       const ScanCache* cache = nullptr);

}  // namespace wco
