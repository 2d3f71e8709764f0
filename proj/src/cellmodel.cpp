#include "wco/cellmodel.hpp"

#include <algorithm>
#include <unordered_set>

namespace wco {

namespace {

bool pred_cellwise(const Pred& p) {
    switch (p.kind) {
        case Pred::Kind::quadrant: return false;
        case Pred::Kind::conj:
            for (const auto& t : p.terms)
                if (!pred_cellwise(t)) return false;
            return true;
        default: return true;
    }
}

void collect_pinned(const Pred& p, const Space& s, std::vector<Vertex>& out) {
    switch (p.kind) {
        case Pred::Kind::is_root: out.push_back(s.root()); return;
        case Pred::Kind::vertex_eq: out.push_back(p.vlit.resolve(s)); return;
        case Pred::Kind::conj:
            for (const auto& t : p.terms) collect_pinned(t, s, out);
            return;
        default: return;
    }
}

bool scalar_cellwise(const ScalarRule& r, const Space& s, std::vector<Vertex>& pinned) {
    if (r.is_table()) return false;
    for (const auto& c : r.clauses()) {
        if (!pred_cellwise(c.guard)) return false;
        collect_pinned(c.guard, s, pinned);
    }
    for (const auto& o : r.overrides()) pinned.push_back(o.at.resolve(s));
    return true;
}

bool map_cellwise(const MapRule& m, const Space& s, std::vector<Vertex>& pinned) {
    switch (m.kind()) {
        case MapRule::Kind::identity:
        case MapRule::Kind::root_map: return true;
        case MapRule::Kind::constant: return true;
        case MapRule::Kind::resequence: return true;
        case MapRule::Kind::intmap: return s.kind == SpaceKind::integers;
        case MapRule::Kind::rotation: return false;
        case MapRule::Kind::table: return false;
        case MapRule::Kind::piecewise:
            for (const auto& b : m.branches()) {
                if (!pred_cellwise(b.guard)) return false;
                collect_pinned(b.guard, s, pinned);
                if (!map_cellwise(*b.rule, s, pinned)) return false;
            }
            return true;
    }
    return false;
}

Vertex next_in_cell(const Space& s, const Vertex& v) {
    // lexicographic successor within the same tree shell; integers cells are
    // singletons so this is never called for them
    TreeWord w = v.word();
    std::size_t i = w.size();
    while (i > 0 && w[i - 1] + 1 == s.branching) --i;
    if (i == 0) throw domain_error("cell exhausted");
    ++w[i - 1];
    std::fill(w.begin() + i, w.end(), 0);
    return Vertex::tree(std::move(w));
}

}  // namespace

std::vector<MapBranch> flatten_map(const MapRule& m) {
    std::vector<MapBranch> out;
    if (m.kind() == MapRule::Kind::piecewise) {
        for (const auto& b : m.branches()) {
            if (b.rule->kind() == MapRule::Kind::piecewise) {
                // nested piecewise: combine guards conjunctively
                for (auto& inner : flatten_map(*b.rule)) {
                    Pred g;
                    if (b.guard.kind == Pred::Kind::always) {
                        g = inner.guard;
                    } else if (inner.guard.kind == Pred::Kind::always) {
                        g = b.guard;
                    } else {
                        g.kind = Pred::Kind::conj;
                        g.terms.push_back(b.guard);
                        g.terms.push_back(inner.guard);
                    }
                    out.push_back({std::move(g), inner.atom});
                }
            } else {
                out.push_back({b.guard, b.rule.get()});
            }
        }
    } else {
        Pred always;
        always.kind = Pred::Kind::always;
        out.push_back({always, &m});
    }
    return out;
}

std::optional<CellModel> CellModel::build(const Space& s, const ScalarRule& mu,
                                          const ScalarRule& psi, const MapRule& phi) {
    if (s.kind != SpaceKind::tree && s.kind != SpaceKind::integers) return std::nullopt;
    CellModel cm;
    cm.space_ = &s;
    std::vector<Vertex> pinned;
    if (!scalar_cellwise(mu, s, pinned)) return std::nullopt;
    if (!scalar_cellwise(psi, s, pinned)) return std::nullopt;
    if (!map_cellwise(phi, s, pinned)) return std::nullopt;
    // also pin constant-map targets so fiber bookkeeping sees them
    std::sort(pinned.begin(), pinned.end(), [&s](const Vertex& a, const Vertex& b) {
        return s.canon_less(a, b);
    });
    pinned.erase(std::unique(pinned.begin(), pinned.end()), pinned.end());
    cm.exceptional_ = std::move(pinned);
    return cm;
}

Cell CellModel::cell_of(std::int64_t n, int sign) const {
    const Space& s = *space_;
    Cell c;
    c.n = n;
    c.sign = n == 0 ? 0 : sign;
    if (s.kind == SpaceKind::tree) {
        c.size = s.shell_size(static_cast<std::uint64_t>(n));
        c.rep = Vertex::tree(TreeWord(static_cast<std::size_t>(n), 0));
    } else {
        c.size = 1;
        c.rep = Vertex::integer(n == 0 ? 0 : sign * n);
    }
    for (const auto& e : exceptional_) {
        if (static_cast<std::int64_t>(s.shell_index(e)) != n) continue;
        if (s.kind == SpaceKind::integers) {
            int es = e.n() == 0 ? 0 : (e.n() > 0 ? 1 : -1);
            if (es != c.sign) continue;
        }
        c.exceptional.push_back(e);
    }
    if (c.exceptional.size() >= c.size) {
        c.has_generic = false;
        c.generic_rep = c.rep;
        return c;
    }
    // find a member outside the exceptional set
    Vertex g = c.rep;
    auto is_exc = [&](const Vertex& v) {
        return std::find(c.exceptional.begin(), c.exceptional.end(), v) != c.exceptional.end();
    };
    if (s.kind == SpaceKind::tree) {
        while (is_exc(g)) g = next_in_cell(s, g);
    }
    c.generic_rep = g;
    c.has_generic = true;
    return c;
}

std::vector<Cell> CellModel::cells_upto(std::int64_t nmax) const {
    std::vector<Cell> out;
    const Space& s = *space_;
    for (std::int64_t n = 0; n <= nmax; ++n) {
        if (n == 0) {
            out.push_back(cell_of(0, 0));
        } else if (s.kind == SpaceKind::tree) {
            out.push_back(cell_of(n, 1));
        } else {
            out.push_back(cell_of(n, 1));
            out.push_back(cell_of(n, -1));
        }
    }
    return out;
}

namespace {

/// Integer solutions of p(n) = value over class points, exact via root bound.
std::optional<std::vector<std::int64_t>> poly_int_solutions(const RatFn& f, const Rat& value,
                                                            const ArgClass& cls,
                                                            std::int64_t cap = 1'000'000) {
    RatFn shifted = f - RatFn::constant(value);
    if (shifted.is_zero()) return std::nullopt;  // every point solves: infinite
    Rat b = shifted.num().root_bound();
    Int num = boost::multiprecision::numerator(b);
    Int den = boost::multiprecision::denominator(b);
    Int hi = num / den + 1;
    if (hi > cap) return std::nullopt;
    std::int64_t h = static_cast<std::int64_t>(hi);
    std::vector<std::int64_t> roots;
    for (std::int64_t n = cls.first(); n <= h; n = cls.next_after(n)) {
        auto v = f.eval(Rat(n));
        if (v && *v == value) roots.push_back(n);
    }
    return roots;
}

void preimages_of_atom(const Space& s, const MapRule& atom, const Pred& guard,
                       const Vertex& target, const Rat& R, std::uint64_t budget,
                       FiberQuery& out) {
    Rat r2 = R * R;
    auto in_ball = [&](const Vertex& v) { return s.length_sq(v) <= r2; };
    auto guard_ok = [&](const Vertex& v) { return guard.matches(s, v); };
    switch (atom.kind()) {
        case MapRule::Kind::identity:
            if (guard_ok(target)) {
                if (in_ball(target))
                    out.members.push_back(target);
                else
                    out.complete = false;
            }
            return;
        case MapRule::Kind::rotation: {
            int back = (4 - atom.quarter_turns()) % 4;
            Vertex v = target;
            for (int i = 0; i < back; ++i) v = Vertex::gauss(-v.g().im, v.g().re);
            if (guard_ok(v)) {
                if (in_ball(v))
                    out.members.push_back(v);
                else
                    out.complete = false;
            }
            return;
        }
        case MapRule::Kind::root_map:
        case MapRule::Kind::constant: {
            Vertex c = atom.kind() == MapRule::Kind::root_map ? s.root()
                                                              : atom.target_lit().resolve(s);
            if (c == target) {
                // the whole guard region maps here
                if (guard.kind == Pred::Kind::always && !out.all_of_space) {
                    out.all_of_space = true;
                }
                auto ball = s.ball(R, budget);
                for (const auto& v : ball.vertices)
                    if (guard_ok(v)) out.members.push_back(v);
                if (s.kind == SpaceKind::finite) return;
                // infinite guard region: incomplete unless it pins single vertices
                std::vector<Vertex> pinned;
                collect_pinned(guard, s, pinned);
                if (pinned.empty()) out.complete = false;
            }
            return;
        }
        case MapRule::Kind::resequence: {
            // targets are canonical shell representatives
            std::uint64_t tlen = s.shell_index(target);
            if (!(target == s.shell_representative(tlen))) return;
            auto g = expr_as_ratfn(atom.formula(), true);
            Int rnum = boost::multiprecision::numerator(R);
            Int rden = boost::multiprecision::denominator(R);
            std::int64_t rfloor = static_cast<std::int64_t>(rnum / rden);
            ArgClass all{0, 0, 1};
            if (g && g->den().degree() == 0) {
                auto sols = poly_int_solutions(*g, Rat(tlen), all);
                if (sols) {
                    for (std::int64_t n : *sols) {
                        if (n < 0) continue;
                        if (n > rfloor) {
                            out.complete = false;  // whole source shell sits outside the ball
                            continue;
                        }
                        for (const auto& v : s.shell(static_cast<std::uint64_t>(n), budget))
                            if (guard_ok(v)) out.members.push_back(v);
                    }
                    return;
                }
            }
            // non-polynomial g: scan shells within the ball, completeness lost
            for (std::int64_t n = 0; n <= rfloor; ++n) {
                Scalar gv = eval_expr(atom.formula(), Scalar(Rat(n)));
                if (!gv.is_rational()) continue;
                if (gv.rational() != Rat(tlen)) continue;
                for (const auto& v : s.shell(static_cast<std::uint64_t>(n), budget))
                    if (guard_ok(v)) out.members.push_back(v);
            }
            out.complete = false;
            return;
        }
        case MapRule::Kind::intmap: {
            auto f = expr_as_ratfn(atom.formula(), false);
            if (f && f->den().degree() == 0 && f->num().degree() >= 1) {
                RatFn shifted = *f - RatFn::constant(Rat(target.n()));
                Rat b = shifted.num().root_bound();
                Int num = boost::multiprecision::numerator(b);
                Int den = boost::multiprecision::denominator(b);
                Int hi = num / den + 1;
                if (hi <= 1'000'000) {
                    std::int64_t h = static_cast<std::int64_t>(hi);
                    for (std::int64_t x = -h; x <= h; ++x) {
                        auto val = f->eval(Rat(x));
                        if (val && *val == Rat(target.n())) {
                            Vertex v = Vertex::integer(x);
                            if (guard_ok(v) && in_ball(v)) out.members.push_back(v);
                            else if (guard_ok(v) && !in_ball(v)) out.complete = false;
                        }
                    }
                    return;
                }
            }
            // fallback scan
            auto ball = s.ball(R, budget);
            for (const auto& v : ball.vertices)
                if (guard_ok(v) && atom.eval(s, v) == target) out.members.push_back(v);
            out.complete = false;
            return;
        }
        case MapRule::Kind::table: {
            for (std::size_t i = 0; i < s.table->size(); ++i) {
                Vertex v = Vertex::finite(i);
                if (guard_ok(v) && atom.eval(s, v) == target && in_ball(v))
                    out.members.push_back(v);
            }
            return;
        }
        case MapRule::Kind::piecewise:
            throw domain_error("piecewise atom after flattening");
    }
}

}  // namespace

FiberQuery preimages(const Space& s, const MapRule& phi, const Vertex& target, const Rat& R,
                     std::uint64_t budget) {
    FiberQuery out;
    out.complete = true;
    auto branches = flatten_map(phi);
    // guards are ordered: a vertex belongs to branch i only if guards 0..i-1
    // failed; preimages computed per branch then filtered by that rule
    for (std::size_t i = 0; i < branches.size(); ++i) {
        FiberQuery part;
        part.complete = true;
        preimages_of_atom(s, *branches[i].atom, branches[i].guard, target, R, budget, part);
        if (!part.complete) out.complete = false;
        if (part.all_of_space) out.all_of_space = true;
        for (const auto& v : part.members) {
            bool earlier = false;
            for (std::size_t j = 0; j < i; ++j)
                if (branches[j].guard.matches(s, v)) {
                    earlier = true;
                    break;
                }
            if (!earlier) out.members.push_back(v);
        }
    }
    std::sort(out.members.begin(), out.members.end(),
              [&s](const Vertex& a, const Vertex& b) { return s.canon_less(a, b); });
    out.members.erase(std::unique(out.members.begin(), out.members.end()), out.members.end());
    // verify, cheaply, that members actually map to the target
    for (const auto& v : out.members)
        if (!(phi.eval(s, v) == target))
            throw domain_error("internal: preimage solver produced a non-preimage");
    out.members.erase(
        std::remove_if(out.members.begin(), out.members.end(),
                       [&](const Vertex& v) { return s.length_sq(v) > R * R; }),
        out.members.end());
    return out;
}

}  // namespace wco
