#pragma once

#include "wco/cellmodel.hpp"
#include "wco/ratfn.hpp"
#include "wco/rules.hpp"

#include <optional>
#include <vector>

namespace wco {

/// Where a class of vertices is sent by the self-map.
struct ClassTarget {
    enum class Kind { identity, fixed, moving };
    Kind kind = Kind::identity;
    Vertex fixed;        // fixed targets (constant / root_map branches)
    Poly len;            // moving: |phi(v)| as a polynomial in the shell index
    int sign = 1;        // moving target side (+1 on trees; +/-1 on integers)
};

/// An arithmetic-progression class of cells sharing exact rational profiles.
struct TailClass {
    int sign = 1;        // source side
    ArgClass args;       // shell indices n (start already past all breakpoints)
    RatFn mu, psi, abs_psi, mu_abs_psi, ratio;
    ClassTarget target;
    std::uint64_t cell_growth = 1;  // tree branching (cells have b^n members), 1 on integers
};

/// A pointwise-evaluated region: one whole cell (minus carved exceptions) or
/// a single exceptional vertex.
struct PointVal {
    Vertex v;            // evaluation vertex
    bool whole_cell = false;
    std::int64_t n = 0;
    int sign = 0;
    std::uint64_t cell_size = 1;  // members sharing this value
    Scalar mu, abs_psi, mu_abs_psi, ratio;
    Vertex image;
};

/// Exact extremum with an optional witness vertex.
struct ExactExt {
    ExtReal value;
    bool attained = false;
    std::optional<Vertex> witness;
    /// witness sequence description for limits reached but not attained
    std::string approach;
};

/// Exact radial model of an instance over a tree or the integers: rational
/// ratio/weight profiles per class plus a finite pointwise prefix. All query
/// results are exact; queries return nullopt when the configuration is
/// outside the model's reach.
class RadialCert {
public:
    static std::optional<RadialCert> build(const Space& s, const ScalarRule& mu,
                                           const ScalarRule& psi, const MapRule& phi);

    const Space& space() const { return *space_; }
    const std::vector<TailClass>& classes() const { return classes_; }
    const std::vector<PointVal>& points() const { return points_; }

    ExactExt sup_ratio() const;
    /// Infimum of the ratio over the vertices where psi does not vanish.
    ExactExt inf_ratio_offzero() const;

    struct XiResult {
        bool exists = false;
        ExtReal value = ExtReal::finite(Rat(0));
    };
    XiResult xi() const;

    /// sup of the ratio over {v : |phi(v)| >= N}; nullopt value when empty.
    struct TailSup {
        bool empty = false;
        ExactExt ext;
    };
    TailSup tail_sup(const Rat& N) const;

    /// lim_{N->inf} of tail_sup: the essential-norm value.
    ExtReal essential_norm() const;

    bool mu_typical() const;             // lim mu = 0
    bool mu_abs_psi_vanishes() const;    // lim mu|psi| = 0
    /// limsup of mu|psi| is >= some c > 0 (certifies mu|psi| does not vanish)
    bool mu_abs_psi_stays_large() const;

    struct ZeroSet {
        enum class Kind { empty, finite, infinite };
        Kind kind = Kind::empty;
        /// for finite: every zero of psi, exactly
        std::vector<Vertex> zeros;
    };
    ZeroSet psi_zero_set() const;

    /// inf over targets t in phi(T) (restricted to images of non-psi-zero
    /// vertices when restrict_to_offzero) of max over the fiber of the ratio.
    std::optional<ExactExt> beta(bool restrict_to_offzero) const;

    std::optional<bool> image_complement_finite() const;
    std::optional<std::vector<Vertex>> image_complement_if_finite() const;
    std::optional<bool> fibers_uniformly_bounded() const;
    std::optional<bool> fibers_eventually_singleton() const;

    /// All fibers are singletons (injectivity seen through the model).
    std::optional<bool> injective() const;

private:
    const Space* space_ = nullptr;
    const ScalarRule* mu_rule_ = nullptr;
    const ScalarRule* psi_rule_ = nullptr;
    const MapRule* phi_rule_ = nullptr;
    std::vector<TailClass> classes_;
    std::vector<PointVal> points_;
    std::int64_t prefix_bound_ = 1;
    bool has_identity_class_ = false;
    bool has_moving_class_ = false;

    /// Exact max of the ratio over the full preimage set of one vertex.
    std::optional<ExactExt> fiber_max_at(const Vertex& t) const;

    friend struct RadialCertBuilder;
};

}  // namespace wco
