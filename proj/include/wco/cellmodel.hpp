#pragma once

#include "wco/rules.hpp"

#include <optional>
#include <vector>

namespace wco {

/// A (shell, sign) group of vertices on which all three rules are constant:
/// shells of a tree, or the single vertex {sign * n} on the integers. The
/// exceptional vertices carved out of the cell (rule overrides, vertex-pinned
/// guards) are listed separately and evaluated individually.
struct Cell {
    std::int64_t n = 0;   // shell index
    int sign = 1;         // +1 tree / positive ints, -1 negative ints, 0 the root shell
    std::uint64_t size = 1;          // total cell size (saturating for trees)
    Vertex rep;                      // canonical member
    Vertex generic_rep;              // a member outside the exceptional set
    bool has_generic = true;         // false when exceptions cover the cell
    std::vector<Vertex> exceptional; // members of this cell in the exceptional set
};

/// Flattened view of a map rule as guard/atom pairs (piecewise unfolded one
/// level; atoms are non-piecewise).
struct MapBranch {
    Pred guard;           // Kind::always for the final branch
    const MapRule* atom;  // non-owning, points into the original rule
};

std::vector<MapBranch> flatten_map(const MapRule& m);

/// Cell decomposition of a tree / integer space instance whose rules depend
/// only on length, parity, sign and finitely many pinned vertices. Evaluating
/// any rule at `generic_rep` gives the value shared by the whole cell minus
/// its exceptions.
class CellModel {
public:
    /// nullopt when the rules are not cellwise (quadrant predicates, value
    /// tables, rotation maps, or a non-tree/integer space).
    static std::optional<CellModel> build(const Space& s, const ScalarRule& mu,
                                          const ScalarRule& psi, const MapRule& phi);

    const Space& space() const { return *space_; }
    const std::vector<Vertex>& exceptional() const { return exceptional_; }

    /// All cells with shell index <= nmax, canonical order.
    std::vector<Cell> cells_upto(std::int64_t nmax) const;

    Cell cell_of(std::int64_t n, int sign) const;

private:
    const Space* space_ = nullptr;
    std::vector<Vertex> exceptional_;
};

/// The preimage set S of a target vertex under the instance's map.
struct FiberQuery {
    std::vector<Vertex> members;  // preimages with |v| <= scan radius
    bool complete = false;        // members is all of phi^{-1}(target)
    bool all_of_space = false;    // phi^{-1}(target) = T (constant maps)
};

/// Preimages of `target` within ball(R). Exact and complete for identity,
/// rotation, finite tables, polynomial resequencing, polynomial integer maps
/// and piecewise combinations of those; otherwise a ball scan with
/// complete = false.
FiberQuery preimages(const Space& s, const MapRule& phi, const Vertex& target, const Rat& R,
                     std::uint64_t budget);

}  // namespace wco
