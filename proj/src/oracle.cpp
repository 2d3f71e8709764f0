#include "wco/oracle.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace wco {

Complex FiniteFunction::at(const Vertex& v) const {
    for (std::size_t i = 0; i < support.size(); ++i)
        if (support[i] == v) return values[i];
    return Complex(Scalar(Rat(0)));
}

bool FiniteFunction::is_zero() const {
    for (const auto& z : values)
        if (!z.is_zero()) return false;
    return true;
}

void FiniteFunction::normalize(const Space& s) {
    std::vector<std::pair<Vertex, Complex>> items;
    for (std::size_t i = 0; i < support.size(); ++i)
        if (!values[i].is_zero()) items.emplace_back(support[i], values[i]);
    std::sort(items.begin(), items.end(),
              [&s](const auto& a, const auto& b) { return s.canon_less(a.first, b.first); });
    for (std::size_t i = 0; i + 1 < items.size(); ++i)
        if (items[i].first == items[i + 1].first)
            throw domain_error("finite function lists a vertex twice");
    support.clear();
    values.clear();
    for (auto& [v, z] : items) {
        support.push_back(v);
        values.push_back(z);
    }
}

Scalar norm_mu_sq(const OperatorInstance& inst, const FiniteFunction& f) {
    const Space& s = inst.space();
    Scalar best(Rat(0));
    for (std::size_t i = 0; i < f.support.size(); ++i) {
        Complex muv = inst.mu().eval(s, f.support[i]);
        Scalar m2 = muv.re.squared() * f.values[i].abs_sq();
        if (best < m2) best = m2;
    }
    return best;
}

Scalar norm_mu(const OperatorInstance& inst, const FiniteFunction& f) {
    return norm_mu_sq(inst, f).sqrt();
}

FiniteFunction apply(const OperatorInstance& inst, const FiniteFunction& f, const Rat& R,
                     const Policy& policy) {
    const Space& s = inst.space();
    FiniteFunction out;
    std::unordered_set<Vertex, VertexHash> seen;
    for (const auto& w : f.support) {
        FiberQuery q = preimages(s, inst.phi(), w, R, policy.budget);
        if (!q.complete && !q.all_of_space)
            throw incomplete_preimage_error(
                "preimages of the support are not enumerable within the ball");
        for (const auto& v : q.members) {
            if (!seen.insert(v).second) continue;
            Complex val = inst.psi().eval(s, v) * f.at(w);
            if (val.is_zero()) continue;
            out.support.push_back(v);
            out.values.push_back(val);
        }
    }
    out.normalize(s);
    return out;
}

namespace {

/// Exact rational point on the unit circle via the tangent half-angle map.
Complex unit_circle_point(std::mt19937_64& gen) {
    std::int64_t a = static_cast<std::int64_t>(gen() % 41) - 20;
    std::int64_t b = 1 + static_cast<std::int64_t>(gen() % 20);
    Rat t(a, b);
    Rat d = 1 + t * t;
    return Complex(Scalar((1 - t * t) / d), Scalar(2 * t / d));
}

Scalar inv_mu(const OperatorInstance& inst, const Vertex& v) {
    Complex muv = inst.mu().eval(inst.space(), v);
    return Scalar(Rat(1)) / muv.re;
}

}  // namespace

FiniteFunction random_unit_function(const OperatorInstance& inst,
                                    const std::vector<Vertex>& ball_vertices,
                                    std::mt19937_64& gen) {
    FiniteFunction f;
    std::size_t n = ball_vertices.size();
    std::size_t k = 1 + gen() % std::min<std::size_t>(16, n);
    std::unordered_set<std::size_t> picked;
    while (picked.size() < k) picked.insert(gen() % n);
    for (std::size_t i : picked) {
        f.support.push_back(ball_vertices[i]);
        f.values.push_back(inv_mu(inst, ball_vertices[i]) * unit_circle_point(gen));
    }
    f.normalize(inst.space());
    return f;
}

Scalar empirical_norm(const OperatorInstance& inst, const Rat& R, std::uint64_t trials,
                      std::uint64_t seed, const Policy& policy) {
    const Space& s = inst.space();
    auto ball = s.ball(R, policy.budget);
    Scalar best(Rat(0));
    auto consider = [&](const FiniteFunction& f) {
        if (f.support.empty()) return;
        Scalar fn2 = norm_mu_sq(inst, f);
        if (fn2.is_zero()) return;
        FiniteFunction wf = apply(inst, f, R, policy);
        Scalar q2 = norm_mu_sq(inst, wf) / fn2;
        if (best < q2) best = q2;
    };
    // g = 1/mu on the ball attains the partial supremum of the ratio
    {
        FiniteFunction g;
        for (const auto& v : ball.vertices) {
            g.support.push_back(v);
            g.values.push_back(Complex(inv_mu(inst, v)));
        }
        consider(g);
    }
    // normalized spikes at image points
    {
        std::unordered_set<Vertex, VertexHash> images;
        for (const auto& w : ball.vertices) images.insert(inst.phi().eval(s, w));
        for (const auto& t : images) {
            FiniteFunction g;
            g.support.push_back(t);
            g.values.push_back(Complex(inv_mu(inst, t)));
            consider(g);
        }
    }
    std::mt19937_64 gen(seed);
    for (std::uint64_t i = 0; i < trials; ++i) {
        std::mt19937_64 trial_gen(seed ^ (0x9e3779b97f4a7c15ULL * (i + 1)));
        consider(random_unit_function(inst, ball.vertices, trial_gen));
    }
    (void)gen;
    return best.sqrt();
}

std::optional<FiniteFunction> kernel_search(const OperatorInstance& inst, const Rat& R,
                                            const Policy& policy) {
    const Space& s = inst.space();
    auto ball = s.ball(R, policy.budget);
    // spikes off the image of phi
    std::unordered_set<Vertex, VertexHash> images;
    for (const auto& v : ball.vertices) images.insert(inst.phi().eval(s, v));
    for (const auto& w : ball.vertices) {
        if (images.count(w)) continue;
        FiberQuery q = preimages(s, inst.phi(), w, R, policy.budget);
        if (!q.complete || !q.members.empty() || q.all_of_space) continue;
        FiniteFunction f;
        f.support.push_back(w);
        f.values.push_back(Complex(Scalar(Rat(1))));
        return f;
    }
    // spikes at phi(w) for a fiber entirely inside psi's zero set
    auto psi_zero = [&](const Vertex& v) {
        Complex z = inst.psi().eval(s, v);
        if (z.exact()) return z.is_zero();
        return z.abs_sq().approx() <= policy.zero_tol * policy.zero_tol;
    };
    std::unordered_set<Vertex, VertexHash> tried;
    for (const auto& w : ball.vertices) {
        Vertex t = inst.phi().eval(s, w);
        if (!tried.insert(t).second) continue;
        FiberQuery q = preimages(s, inst.phi(), t, R, policy.budget);
        if (!q.complete || q.all_of_space) continue;
        bool all_zero = !q.members.empty();
        for (const auto& v : q.members) all_zero = all_zero && psi_zero(v);
        if (!all_zero) continue;
        FiniteFunction f;
        f.support.push_back(t);
        f.values.push_back(Complex(Scalar(Rat(1))));
        return f;
    }
    return std::nullopt;
}

BoundedBelowCheck bounded_below_check(const OperatorInstance& inst, const Scalar& eps,
                                      const Rat& R, std::uint64_t trials, std::uint64_t seed,
                                      const Policy& policy) {
    const Space& s = inst.space();
    auto ball = s.ball(R, policy.budget);
    BoundedBelowCheck out;
    out.min_ratio = std::numeric_limits<double>::infinity();
    Scalar eps2 = eps.squared();
    auto consider = [&](const FiniteFunction& f) {
        if (f.support.empty()) return;
        Scalar fn2 = norm_mu_sq(inst, f);
        if (fn2.is_zero()) return;
        FiniteFunction wf = apply(inst, f, R, policy);
        Scalar q2 = norm_mu_sq(inst, wf) / fn2;
        double q = std::sqrt(q2.approx());
        if (q < out.min_ratio) out.min_ratio = q;
        if (q2 < eps2 && !out.violator) out.violator = f;
    };
    std::unordered_set<Vertex, VertexHash> images;
    for (const auto& w : ball.vertices) images.insert(inst.phi().eval(s, w));
    for (const auto& t : images) {
        FiniteFunction g;
        g.support.push_back(t);
        g.values.push_back(Complex(inv_mu(inst, t)));
        consider(g);
    }
    for (std::uint64_t i = 0; i < trials; ++i) {
        std::mt19937_64 trial_gen(seed ^ (0xd1342543de82ef95ULL * (i + 1)));
        consider(random_unit_function(inst, ball.vertices, trial_gen));
    }
    if (!std::isfinite(out.min_ratio)) out.min_ratio = 0;
    return out;
}

FiniteFunction truncation_projector(const Space& s, const FiniteFunction& f, const Rat& n) {
    FiniteFunction out;
    Rat n2 = n * n;
    for (std::size_t i = 0; i < f.support.size(); ++i) {
        if (s.length_sq(f.support[i]) <= n2) {
            out.support.push_back(f.support[i]);
            out.values.push_back(f.values[i]);
        }
    }
    return out;
}

ProjectorCheck projector_norm_check(const OperatorInstance& inst, const Rat& n, const Rat& R,
                                    std::uint64_t trials, std::uint64_t seed,
                                    const Policy& policy) {
    const Space& s = inst.space();
    auto ball = s.ball(R, policy.budget);
    ProjectorCheck out;
    auto residual = [&](const FiniteFunction& f) {
        FiniteFunction fn = truncation_projector(s, f, n);
        Scalar f2 = norm_mu_sq(inst, f);
        if (!(norm_mu_sq(inst, fn) <= f2)) out.contraction_ok = false;
        FiniteFunction rest = f;
        // f - A_n f: drop the truncated part
        FiniteFunction diff;
        Rat n2 = n * n;
        for (std::size_t i = 0; i < f.support.size(); ++i)
            if (s.length_sq(f.support[i]) > n2) {
                diff.support.push_back(f.support[i]);
                diff.values.push_back(f.values[i]);
            }
        if (!(norm_mu_sq(inst, diff) <= f2)) out.complement_ok = false;
        if (f2.is_zero()) return;
        FiniteFunction wdiff = apply(inst, diff, R, policy);
        double q = std::sqrt((norm_mu_sq(inst, wdiff) / f2).approx());
        out.family_residual_sup = std::max(out.family_residual_sup, q);
        (void)rest;
    };
    // spike family at image points plus random functions
    std::unordered_set<Vertex, VertexHash> images;
    for (const auto& w : ball.vertices) images.insert(inst.phi().eval(s, w));
    for (const auto& t : images) {
        FiniteFunction g;
        g.support.push_back(t);
        g.values.push_back(Complex(inv_mu(inst, t)));
        residual(g);
    }
    for (std::uint64_t i = 0; i < trials; ++i) {
        std::mt19937_64 trial_gen(seed ^ (0xaf251af3b0f025b5ULL * (i + 1)));
        residual(random_unit_function(inst, ball.vertices, trial_gen));
    }
    auto t = tail_sup(inst, n + 1, R, policy);
    out.tail_bound = t.empty ? 0.0 : t.value.approx();
    return out;
}

bool point_eval_bound_check(const OperatorInstance& inst, const FiniteFunction& f,
                            const Vertex& v) {
    // |f(v)|^2 mu(v)^2 <= ||f||^2
    const Space& s = inst.space();
    Complex muv = inst.mu().eval(s, v);
    Scalar lhs = muv.re.squared() * f.at(v).abs_sq();
    return lhs <= norm_mu_sq(inst, f);
}

namespace {

/// Complex rational pair for exact Gaussian elimination.
struct CRat {
    Rat re, im;
    bool is_zero() const { return re == 0 && im == 0; }
    friend CRat operator+(const CRat& a, const CRat& b) { return {a.re + b.re, a.im + b.im}; }
    friend CRat operator-(const CRat& a, const CRat& b) { return {a.re - b.re, a.im - b.im}; }
    friend CRat operator*(const CRat& a, const CRat& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend CRat operator/(const CRat& a, const CRat& b) {
        Rat d = b.re * b.re + b.im * b.im;
        return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
    }
};

std::size_t matrix_rank(std::vector<std::vector<CRat>> m) {
    std::size_t rows = m.size();
    if (rows == 0) return 0;
    std::size_t cols = m[0].size();
    std::size_t rank = 0;
    for (std::size_t c = 0; c < cols && rank < rows; ++c) {
        std::size_t pivot = rank;
        while (pivot < rows && m[pivot][c].is_zero()) ++pivot;
        if (pivot == rows) continue;
        std::swap(m[rank], m[pivot]);
        CRat inv = CRat{Rat(1), Rat(0)} / m[rank][c];
        for (std::size_t j = c; j < cols; ++j) m[rank][j] = m[rank][j] * inv;
        for (std::size_t r = 0; r < rows; ++r) {
            if (r == rank || m[r][c].is_zero()) continue;
            CRat factor = m[r][c];
            for (std::size_t j = c; j < cols; ++j) m[r][j] = m[r][j] - factor * m[rank][j];
        }
        ++rank;
    }
    return rank;
}

}  // namespace

FiniteTruth finite_truth(const OperatorInstance& inst) {
    const Space& s = inst.space();
    if (s.kind != SpaceKind::finite)
        throw domain_error("finite_truth requires a finite custom space");
    std::size_t n = s.table->size();
    FiniteTruth out;

    // operator matrix M[v][w] = psi(v) [phi(v) = w] with exact complex entries
    std::vector<std::vector<CRat>> m(n, std::vector<CRat>(n, CRat{Rat(0), Rat(0)}));
    std::vector<Rat> mu(n);
    std::vector<CRat> psi(n);
    std::vector<std::size_t> phi(n);
    for (std::size_t i = 0; i < n; ++i) {
        Vertex v = Vertex::finite(i);
        Complex muv = inst.mu().eval(s, v);
        if (!muv.re.is_rational()) throw domain_error("finite truth needs rational weights");
        mu[i] = muv.re.rational();
        Complex pv = inst.psi().eval(s, v);
        if (!pv.re.is_rational() || !pv.im.is_rational())
            throw domain_error("finite truth needs rational symbols");
        psi[i] = {pv.re.rational(), pv.im.rational()};
        phi[i] = inst.phi().eval(s, v).idx();
        m[i][phi[i]] = psi[i];
    }

    std::size_t rank = matrix_rank(m);
    out.kernel_dim = n - rank;
    out.injective = out.kernel_dim == 0;

    // exact operator norm: weighted row maxima (one entry per row)
    Scalar sigma2(Rat(0));
    for (std::size_t i = 0; i < n; ++i) {
        Rat a2 = psi[i].re * psi[i].re + psi[i].im * psi[i].im;
        Rat q2 = mu[i] * mu[i] * a2 / (mu[phi[i]] * mu[phi[i]]);
        if (sigma2 < Scalar(q2)) sigma2 = Scalar(q2);
    }
    out.sigma = sigma2.sqrt();

    // bounded-below constant: min over w of max over the fiber of the ratio
    Scalar beta2(Rat(0));
    bool first = true;
    for (std::size_t w = 0; w < n; ++w) {
        Scalar fib(Rat(0));
        for (std::size_t v = 0; v < n; ++v) {
            if (phi[v] != phi[w]) continue;
            Rat a2 = psi[v].re * psi[v].re + psi[v].im * psi[v].im;
            Rat q2 = mu[v] * mu[v] * a2 / (mu[phi[v]] * mu[phi[v]]);
            if (fib < Scalar(q2)) fib = Scalar(q2);
        }
        if (first || Scalar(fib) < beta2) beta2 = fib;
        first = false;
    }
    // cross-check against direct minimization over the spike family
    {
        Scalar beta2b(Rat(0));
        bool fb = true;
        for (std::size_t w = 0; w < n; ++w) {
            // f = (1/mu) spike at phi(w): ||Wf||^2 = max over fiber of ratio^2
            Scalar best(Rat(0));
            for (std::size_t v = 0; v < n; ++v) {
                if (phi[v] != phi[w]) continue;
                Rat a2 = psi[v].re * psi[v].re + psi[v].im * psi[v].im;
                Rat q2 = mu[v] * mu[v] * a2 / (mu[phi[v]] * mu[phi[v]]);
                if (best < Scalar(q2)) best = Scalar(q2);
            }
            if (fb || best < beta2b) beta2b = best;
            fb = false;
        }
        if (!(beta2b == beta2))
            throw std::logic_error("finite bounded-below oracles disagree");
    }
    out.bounded_below_constant = beta2.sqrt();
    bool surjective = true;
    {
        std::vector<char> hit(n, 0);
        for (std::size_t v = 0; v < n; ++v) hit[phi[v]] = 1;
        for (char h : hit) surjective = surjective && h;
    }
    out.bounded_below = surjective && beta2.sign() > 0;
    out.closed_range = true;

    bool phi_injective = true;
    {
        std::vector<char> hit(n, 0);
        for (std::size_t v = 0; v < n; ++v) {
            if (hit[phi[v]]) phi_injective = false;
            hit[phi[v]] = 1;
        }
    }
    bool psi_nonvanishing = true;
    for (std::size_t i = 0; i < n; ++i) psi_nonvanishing = psi_nonvanishing && !psi[i].is_zero();
    out.invertible = surjective && phi_injective && psi_nonvanishing;
    if (out.invertible != (rank == n))
        throw std::logic_error("finite invertibility oracles disagree");
    if (out.invertible) {
        Scalar inv2(Rat(0));
        for (std::size_t v = 0; v < n; ++v) {
            Rat a2 = psi[v].re * psi[v].re + psi[v].im * psi[v].im;
            Rat q2 = mu[phi[v]] * mu[phi[v]] / (mu[v] * mu[v] * a2);
            if (inv2 < Scalar(q2)) inv2 = Scalar(q2);
        }
        out.inverse_norm = inv2.sqrt();
    }

    // isometry: surjective and every fiber max equals one
    bool fibers_one = true;
    for (std::size_t w = 0; w < n; ++w) {
        Scalar fib(Rat(0));
        for (std::size_t v = 0; v < n; ++v) {
            if (phi[v] != phi[w]) continue;
            Rat a2 = psi[v].re * psi[v].re + psi[v].im * psi[v].im;
            Rat q2 = mu[v] * mu[v] * a2 / (mu[phi[v]] * mu[phi[v]]);
            if (fib < Scalar(q2)) fib = Scalar(q2);
        }
        fibers_one = fibers_one && fib == Scalar(Rat(1));
    }
    out.isometry = surjective && fibers_one;
    bool ratio_all_one = true;
    for (std::size_t v = 0; v < n; ++v) {
        Rat a2 = psi[v].re * psi[v].re + psi[v].im * psi[v].im;
        ratio_all_one =
            ratio_all_one && mu[v] * mu[v] * a2 == mu[phi[v]] * mu[phi[v]];
    }
    out.surjective_isometry = surjective && phi_injective && ratio_all_one;
    return out;
}

}  // namespace wco
