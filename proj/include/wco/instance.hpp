#pragma once

#include "wco/cellmodel.hpp"
#include "wco/radialcert.hpp"
#include "wco/rules.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace wco {

/// Scan and tolerance policy. Values are fixed here, not calibrated later:
/// convergence looks at the last `window` schedule points with 1e-9 relative
/// (1e-12 absolute near zero) tolerance; inexact psi values within 1e-12 of
/// zero count as zeros; numeric divergence needs 1e12 plus an asserted growth
/// fact before it upgrades to a failure.
struct Policy {
    std::uint64_t budget = 2'000'000;
    std::uint64_t seed = 1;
    std::uint64_t trials = 100;
    std::optional<Rat> radius;  // scan radius override
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double zero_tol = 1e-12;
    int window = 5;
    double divergence_threshold = 1e12;
    std::int64_t max_shells = 512;

    /// Default radius schedule: doubling radii on the integers and Gaussian
    /// integers, one shell at a time on trees (cellwise instances scan far
    /// beyond the raw vertex budget).
    std::vector<Rat> schedule(const Space& s, bool cellwise) const;

    Rat scan_radius(const Space& s, bool cellwise) const;
};

/// The operator W f = psi * (f o phi) on the weighted space carried by mu,
/// together with declared facts about the symbols. Immutable and cheap to
/// copy. Facts are merged with the map's structural facts at construction
/// (conflicts throw).
class OperatorInstance {
public:
    OperatorInstance(Space space, ScalarRule mu, ScalarRule psi, MapRule phi,
                     AssertedFacts user = {}, AssertedFacts cphi = {}, AssertedFacts mpsi = {});

    const Space& space() const { return impl_->space; }
    const ScalarRule& mu() const { return impl_->mu; }
    const ScalarRule& psi() const { return impl_->psi; }
    const MapRule& phi() const { return impl_->phi; }
    const AssertedFacts& facts() const { return impl_->facts; }
    const AssertedFacts& facts_cphi() const { return impl_->cphi; }
    const AssertedFacts& facts_mpsi() const { return impl_->mpsi; }
    const MapStructure& structure() const { return impl_->structure; }
    const std::optional<CellModel>& cells() const { return impl_->cells; }
    const RadialCert* cert() const { return impl_->cert ? &*impl_->cert : nullptr; }

    bool psi_is_one() const { return impl_->psi_is_one; }
    bool phi_is_identity() const { return impl_->phi.kind() == MapRule::Kind::identity; }

    /// The composition component C_phi (psi := 1) with its declared facts.
    OperatorInstance composition_part() const;
    /// The multiplication component M_psi (phi := identity) with its facts.
    OperatorInstance multiplication_part() const;

    std::string describe() const;

private:
    struct Impl {
        Space space;
        ScalarRule mu, psi;
        MapRule phi;
        AssertedFacts facts, cphi, mpsi;
        MapStructure structure;
        std::optional<CellModel> cells;
        std::optional<RadialCert> cert;
        bool psi_is_one = false;
    };
    std::shared_ptr<const Impl> impl_;
};

}  // namespace wco
