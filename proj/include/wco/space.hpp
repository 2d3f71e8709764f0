#pragma once

#include "wco/number.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace wco {

struct budget_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct domain_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class SpaceKind { tree, integers, gaussian, finite };

using TreeWord = std::vector<std::uint32_t>;

struct GaussInt {
    std::int64_t re = 0;
    std::int64_t im = 0;
    friend bool operator==(const GaussInt&, const GaussInt&) = default;
};

/// A point of the underlying metric space. The payload depends on the space
/// kind: path word from the root (tree), a signed integer, a Gaussian integer,
/// or an index into a finite table.
class Vertex {
public:
    Vertex() : data_(std::int64_t{0}) {}

    static Vertex tree(TreeWord w) { return Vertex(std::move(w)); }
    static Vertex integer(std::int64_t n) { return Vertex(n); }
    static Vertex gauss(std::int64_t re, std::int64_t im) { return Vertex(GaussInt{re, im}); }
    static Vertex finite(std::size_t idx) { return Vertex(idx); }

    bool is_tree() const { return std::holds_alternative<TreeWord>(data_); }
    bool is_integer() const { return std::holds_alternative<std::int64_t>(data_); }
    bool is_gauss() const { return std::holds_alternative<GaussInt>(data_); }
    bool is_finite() const { return std::holds_alternative<std::size_t>(data_); }

    const TreeWord& word() const { return std::get<TreeWord>(data_); }
    std::int64_t n() const { return std::get<std::int64_t>(data_); }
    const GaussInt& g() const { return std::get<GaussInt>(data_); }
    std::size_t idx() const { return std::get<std::size_t>(data_); }

    friend bool operator==(const Vertex& a, const Vertex& b) { return a.data_ == b.data_; }
    friend bool operator!=(const Vertex& a, const Vertex& b) { return !(a == b); }

    std::size_t hash() const;
    std::string str(const struct Space* owner = nullptr) const;

private:
    explicit Vertex(TreeWord w) : data_(std::move(w)) {}
    explicit Vertex(std::int64_t n) : data_(n) {}
    explicit Vertex(GaussInt g) : data_(g) {}
    explicit Vertex(std::size_t i) : data_(i) {}

    std::variant<TreeWord, std::int64_t, GaussInt, std::size_t> data_;
};

struct VertexHash {
    std::size_t operator()(const Vertex& v) const { return v.hash(); }
};

struct FiniteRow {
    std::string id;
    Rat length;
};

struct Space;

/// Finite window onto the space: all vertices with |v| <= radius, in canonical
/// order (length ascending, then the per-kind tie-break).
struct Truncation {
    Rat radius;
    std::vector<Vertex> vertices;
};

/// An unbounded (or finite custom) locally finite rooted metric space with a
/// length function |v| = d(o, v), enumerable shell by shell.
///
/// Canonical order within a shell: tree words lexicographically; integers with
/// the positive point first; Gaussian integers by angle from the positive real
/// axis, then modulus; finite tables in row order.
struct Space {
    SpaceKind kind = SpaceKind::integers;
    std::uint32_t branching = 2;                       // tree only, b >= 1
    std::shared_ptr<std::vector<FiniteRow>> table;     // finite only

    static Space tree(std::uint32_t b);
    static Space integers();
    static Space gaussian();
    static Space finite(std::vector<FiniteRow> rows);

    bool is_infinite() const { return kind != SpaceKind::finite; }

    Vertex root() const;
    bool contains(const Vertex& v) const;

    /// |v| = d(o, v). Exact: word length / |n| / sqrt(re^2+im^2) / table value.
    Scalar length(const Vertex& v) const;
    /// |v|^2 as a rational; avoids surds for comparisons.
    Rat length_sq(const Vertex& v) const;
    /// Smallest integer shell index containing v, i.e. ceil(|v|).
    std::uint64_t shell_index(const Vertex& v) const;

    /// Shell k = {v : k-1 < |v| <= k}, shell 0 = {root}. Canonical order.
    /// `budget` counts vertices; exceeding it throws budget_error.
    std::vector<Vertex> shell(std::uint64_t k, std::uint64_t budget) const;

    /// Number of vertices in shell k (cheap, no enumeration for tree/ints).
    std::uint64_t shell_size(std::uint64_t k) const;

    /// First vertex of shell k in canonical order, without enumerating the
    /// shell: all-zero word / +k / k+0i / first table row in the band.
    Vertex shell_representative(std::uint64_t k) const;

    /// Whether shell k is nonempty (finite tables thin out; infinite kinds
    /// always have nonempty integer shells, except empty gaussian bands).
    bool shell_nonempty(std::uint64_t k) const;

    Truncation ball(const Rat& radius, std::uint64_t budget) const;

    /// Total vertex count of ball(radius), without enumerating (may overshoot
    /// budget checks for trees; saturates at 2^63).
    std::uint64_t ball_size_hint(const Rat& radius) const;

    /// Canonical total order: by length, then per-kind tie-break.
    bool canon_less(const Vertex& a, const Vertex& b) const;

    std::optional<std::size_t> finite_index_of(const std::string& id) const;
};

/// Exact angle comparison for Gaussian integers: quadrant index (I..IV as
/// half-open angular sectors starting at the positive real axis), then the
/// cross product within the shared half-plane.
int gauss_quadrant(const GaussInt& v);  // 1..4, undefined for 0
bool gauss_angle_less(const GaussInt& a, const GaussInt& b);

}  // namespace wco
