#pragma once

#include "wco/expr.hpp"
#include "wco/number.hpp"
#include "wco/space.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace wco {

/// Contradiction between asserted facts and structure or truncation evidence.
struct contradiction_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Piecewise scalar rule: ordered guarded clauses with a mandatory final
/// `else`, plus per-vertex overrides that take precedence. Finite spaces may
/// instead carry a direct value table (one complex value per vertex).
class ScalarRule {
public:
    struct Clause {
        Pred guard;
        Expr body;
    };
    struct Override {
        VertexLit at;
        Expr value;
    };

    static ScalarRule parse(const std::string& text);
    static ScalarRule table(std::vector<Complex> values);
    static ScalarRule constant_one() { return parse("[ else -> 1 ]"); }

    bool is_table() const { return is_table_; }
    const std::vector<Clause>& clauses() const { return clauses_; }
    const std::vector<Override>& overrides() const { return overrides_; }
    const std::vector<Complex>& table_values() const { return table_; }

    /// Static checks against a space kind (predicate applicability, literal
    /// resolution). Throws rule_error.
    void validate(const Space& s) const;

    Complex eval(const Space& s, const Vertex& v) const;

    std::string print() const;

    /// True when every clause body is structurally nonvanishing (a nonzero
    /// constant, or a monomial c*len^k with c != 0 evaluated off the root)
    /// and every override value is nonzero. Then the zero set is empty.
    bool provably_nonzero(const Space& s) const;

private:
    bool is_table_ = false;
    std::vector<Clause> clauses_;
    std::vector<Override> overrides_;
    std::vector<Complex> table_;
};

/// Self-map of the space. Kinds: identity, root_map, constant(vertex),
/// length resequencing n -> first vertex of length g(n), rotation by quarter
/// turns (Gaussian integers), an integer-valued expression map (integers),
/// piecewise combinations, and explicit tables on finite spaces.
class MapRule {
public:
    enum class Kind { identity, root_map, constant, resequence, rotation, intmap, piecewise, table };

    struct Branch {
        Pred guard;
        std::shared_ptr<MapRule> rule;
    };

    static MapRule parse(const std::string& text);
    static MapRule identity();
    static MapRule root_map();
    static MapRule table(std::vector<std::size_t> targets);
    static MapRule make_constant(VertexLit target);
    static MapRule make_resequence(Expr g);
    static MapRule make_rotation(int quarter_turns);
    static MapRule make_intmap(Expr f);
    static MapRule make_piecewise(std::vector<Branch> branches);
    static MapRule make_littable(std::vector<std::pair<VertexLit, VertexLit>> pairs);

    Kind kind() const { return kind_; }
    const Expr& formula() const { return formula_; }
    const VertexLit& target_lit() const { return target_; }
    int quarter_turns() const { return quarter_turns_; }
    const std::vector<Branch>& branches() const { return branches_; }
    const std::vector<std::size_t>& table_targets() const { return table_; }
    const std::vector<std::pair<VertexLit, VertexLit>>& lit_pairs() const { return lit_pairs_; }

    void validate(const Space& s) const;

    Vertex eval(const Space& s, const Vertex& v) const;

    std::string print() const;

private:
    Kind kind_ = Kind::identity;
    Expr formula_;          // resequence (var n) / intmap (var v)
    VertexLit target_;      // constant
    int quarter_turns_ = 1; // rotation
    std::vector<Branch> branches_;
    std::vector<std::size_t> table_;                            // resolved finite table
    std::vector<std::pair<VertexLit, VertexLit>> lit_pairs_;    // parsed finite table
};

/// Extended nonnegative assertion value: a rational or +infinity.
struct FactValue {
    bool infinite = false;
    Rat value;

    static FactValue inf() { return {true, Rat(0)}; }
    static FactValue of(Rat q) { return {false, std::move(q)}; }
};

/// Facts about an instance that replace symbolic limit evaluation. Booleans
/// describe the self-map; reals describe the ratio function
/// mu(v)|psi(v)|/mu(phi(v)). Every fact is opportunistically validated
/// against truncation evidence; a counterexample is a hard error.
///
/// ratio_inf is the infimum of the ratio over the non-vanishing set of psi
/// (over all of T when psi has no zeros).
struct AssertedFacts {
    std::optional<bool> surjective;
    std::optional<bool> injective;
    std::optional<bool> bijective;
    std::optional<bool> finite_range;
    std::optional<FactValue> ratio_sup;      // sigma; may be +inf
    std::optional<Rat> ratio_inf;
    std::optional<Rat> ratio_limit;          // xi, asserted to exist
    std::optional<ScalarRule> tail_sup_formula;  // N -> sup over |phi(v)| >= N, piecewise in n
    std::map<std::string, std::string> provenance;

    bool empty() const {
        return !surjective && !injective && !bijective && !finite_range && !ratio_sup &&
               !ratio_inf && !ratio_limit && !tail_sup_formula;
    }
};

/// What can be read off a map's structure alone.
struct MapStructure {
    std::optional<bool> surjective;
    std::optional<bool> injective;
    std::optional<bool> finite_range;
    /// identity off a finite exceptional set (the ex-vertices and images are
    /// exact): enables exact image/fiber bookkeeping.
    bool identity_off_finite = false;
    std::vector<Vertex> exceptional;  // identity_off_finite: where phi(v) != v may hold
};

MapStructure analyze_map(const Space& s, const MapRule& m);

/// Structural facts merged with user assertions; a conflict between the two
/// is a contradiction error.
AssertedFacts declared_facts(const Space& s, const MapRule& m, const AssertedFacts& user);

/// Evaluates a piecewise rule at a plain number (guards restricted to length
/// comparisons, parity and is_root, read against the number itself). Used for
/// asserted tail-supremum formulas N -> value.
Scalar eval_rule_at_number(const ScalarRule& r, const Scalar& n);

}  // namespace wco
