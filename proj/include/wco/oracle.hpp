#pragma once

#include "wco/quantities.hpp"

#include <optional>
#include <random>
#include <vector>

namespace wco {

struct incomplete_preimage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Finitely supported complex function on the space; zero off the support.
struct FiniteFunction {
    std::vector<Vertex> support;
    std::vector<Complex> values;

    Complex at(const Vertex& v) const;
    bool is_zero() const;
    void normalize(const Space& s);  // sorts, drops zeros, checks duplicates
};

/// ||f||^2 in the weighted sup norm: max over the support of mu(v)^2 |f(v)|^2,
/// kept squared so surd weights stay exact.
Scalar norm_mu_sq(const OperatorInstance& inst, const FiniteFunction& f);
Scalar norm_mu(const OperatorInstance& inst, const FiniteFunction& f);

/// (Wf)(v) = psi(v) f(phi(v)) restricted to ball(R). Throws
/// incomplete_preimage_error when preimages of the support cannot be
/// enumerated exactly within the ball.
FiniteFunction apply(const OperatorInstance& inst, const FiniteFunction& f, const Rat& R,
                     const Policy& policy);

/// Largest Rayleigh quotient ||Wf|| / ||f|| over the structured test family
/// (1/mu on the ball, the normalized spikes (1/mu) at phi-image points) and
/// seeded random finitely supported unit-norm functions. Always a lower bound
/// for the partial supremum of the ratio, and attains it through the
/// structured family.
Scalar empirical_norm(const OperatorInstance& inst, const Rat& R, std::uint64_t trials,
                      std::uint64_t seed, const Policy& policy);

/// A nonzero finitely supported kernel element when one is visible in the
/// scan: a spike off the image of phi, or a spike at phi(w) when the whole
/// fiber of w sits inside the zero set of psi.
std::optional<FiniteFunction> kernel_search(const OperatorInstance& inst, const Rat& R,
                                            const Policy& policy);

struct BoundedBelowCheck {
    double min_ratio = 0;
    std::optional<FiniteFunction> violator;  // f with ||Wf|| < eps ||f||
};
BoundedBelowCheck bounded_below_check(const OperatorInstance& inst, const Scalar& eps,
                                      const Rat& R, std::uint64_t trials, std::uint64_t seed,
                                      const Policy& policy);

/// f restricted to lengths <= n (the compact truncation of f).
FiniteFunction truncation_projector(const Space& s, const FiniteFunction& f, const Rat& n);

struct ProjectorCheck {
    bool contraction_ok = true;       // ||A_n f|| <= ||f|| on the family
    bool complement_ok = true;        // ||f - A_n f|| <= ||f||
    double family_residual_sup = 0;   // sup over the family of ||(W - W A_n) f|| / ||f||
    double tail_bound = 0;            // tail_sup just beyond n, for comparison
};
ProjectorCheck projector_norm_check(const OperatorInstance& inst, const Rat& n, const Rat& R,
                                    std::uint64_t trials, std::uint64_t seed,
                                    const Policy& policy);

/// |f(v)| <= (1/mu(v)) ||f||, checked exactly.
bool point_eval_bound_check(const OperatorInstance& inst, const FiniteFunction& f,
                            const Vertex& v);

/// Exhaustive linear-algebra truth for finite custom spaces: kernel via exact
/// Gaussian elimination on the |T| x |T| operator matrix, norms via weighted
/// row maxima, the bounded-below constant via the fiber min-max form
/// cross-checked against spike-family minimization.
struct FiniteTruth {
    bool injective = false;
    bool bounded_below = false;
    Scalar bounded_below_constant;  // min over w of max over the fiber of the ratio
    bool closed_range = true;       // finite dimension: always
    bool invertible = false;
    Scalar inverse_norm;            // valid when invertible
    bool isometry = false;
    bool surjective_isometry = false;
    Scalar sigma;                   // exact operator norm
    std::size_t kernel_dim = 0;
};
FiniteTruth finite_truth(const OperatorInstance& inst);

/// Deterministic test-function generator: supports of size <= 16 sampled from
/// the ball, values on the complex unit circle scaled by 1/mu (exact
/// rational points on the circle), unit norm by construction.
FiniteFunction random_unit_function(const OperatorInstance& inst,
                                    const std::vector<Vertex>& ball_vertices,
                                    std::mt19937_64& gen);

}  // namespace wco
