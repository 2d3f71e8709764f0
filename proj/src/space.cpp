#include "wco/space.hpp"

#include <algorithm>
#include <sstream>

namespace wco {

std::size_t Vertex::hash() const {
    std::size_t h = data_.index() * 0x9e3779b97f4a7c15ULL;
    auto mix = [&h](std::size_t x) {
        h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    };
    if (is_tree()) {
        for (auto c : word()) mix(c + 1);
        mix(word().size());
    } else if (is_integer()) {
        mix(static_cast<std::size_t>(n()));
    } else if (is_gauss()) {
        mix(static_cast<std::size_t>(g().re));
        mix(static_cast<std::size_t>(g().im));
    } else {
        mix(idx());
    }
    return h;
}

std::string Vertex::str(const Space* owner) const {
    std::ostringstream os;
    if (is_tree()) {
        if (word().empty()) return "root";
        os << "w[";
        for (std::size_t i = 0; i < word().size(); ++i) {
            if (i) os << ".";
            os << word()[i];
        }
        os << "]";
    } else if (is_integer()) {
        os << n();
    } else if (is_gauss()) {
        os << g().re << (g().im < 0 ? "-" : "+") << (g().im < 0 ? -g().im : g().im) << "i";
    } else {
        if (owner && owner->table && idx() < owner->table->size())
            os << (*owner->table)[idx()].id;
        else
            os << "#" << idx();
    }
    return os.str();
}

Space Space::tree(std::uint32_t b) {
    if (b < 1) throw domain_error("tree branching must be >= 1");
    Space s;
    s.kind = SpaceKind::tree;
    s.branching = b;
    return s;
}

Space Space::integers() {
    Space s;
    s.kind = SpaceKind::integers;
    return s;
}

Space Space::gaussian() {
    Space s;
    s.kind = SpaceKind::gaussian;
    return s;
}

Space Space::finite(std::vector<FiniteRow> rows) {
    if (rows.empty()) throw domain_error("finite space table is empty");
    if (rows[0].length != 0) throw domain_error("finite space: first row must be the root (length 0)");
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].length < 0) throw domain_error("finite space: negative length");
    Space s;
    s.kind = SpaceKind::finite;
    s.table = std::make_shared<std::vector<FiniteRow>>(std::move(rows));
    return s;
}

Vertex Space::root() const {
    switch (kind) {
        case SpaceKind::tree: return Vertex::tree({});
        case SpaceKind::integers: return Vertex::integer(0);
        case SpaceKind::gaussian: return Vertex::gauss(0, 0);
        case SpaceKind::finite: return Vertex::finite(0);
    }
    throw domain_error("bad space kind");
}

bool Space::contains(const Vertex& v) const {
    switch (kind) {
        case SpaceKind::tree:
            if (!v.is_tree()) return false;
            for (auto c : v.word())
                if (c >= branching) return false;
            return true;
        case SpaceKind::integers: return v.is_integer();
        case SpaceKind::gaussian: return v.is_gauss();
        case SpaceKind::finite: return v.is_finite() && v.idx() < table->size();
    }
    return false;
}

Scalar Space::length(const Vertex& v) const {
    if (!contains(v)) throw domain_error("vertex does not belong to this space");
    switch (kind) {
        case SpaceKind::tree: return Scalar(Rat(v.word().size()));
        case SpaceKind::integers: return Scalar(Rat(v.n() < 0 ? -v.n() : v.n()));
        case SpaceKind::gaussian: {
            Int m = Int(v.g().re) * v.g().re + Int(v.g().im) * v.g().im;
            if (m == 0) return Scalar(Rat(0));
            return Scalar::surd(Rat(1), m);
        }
        case SpaceKind::finite: return Scalar((*table)[v.idx()].length);
    }
    throw domain_error("bad space kind");
}

Rat Space::length_sq(const Vertex& v) const {
    if (!contains(v)) throw domain_error("vertex does not belong to this space");
    switch (kind) {
        case SpaceKind::tree: {
            Rat l(v.word().size());
            return l * l;
        }
        case SpaceKind::integers: {
            Rat l(v.n());
            return l * l;
        }
        case SpaceKind::gaussian:
            return Rat(Int(v.g().re) * v.g().re + Int(v.g().im) * v.g().im);
        case SpaceKind::finite: {
            Rat l = (*table)[v.idx()].length;
            return l * l;
        }
    }
    throw domain_error("bad space kind");
}

std::uint64_t Space::shell_index(const Vertex& v) const {
    switch (kind) {
        case SpaceKind::tree: return v.word().size();
        case SpaceKind::integers: return static_cast<std::uint64_t>(v.n() < 0 ? -v.n() : v.n());
        case SpaceKind::gaussian: {
            Int m = Int(v.g().re) * v.g().re + Int(v.g().im) * v.g().im;
            Int r = isqrt(m);
            return static_cast<std::uint64_t>(r * r == m ? r : r + 1);
        }
        case SpaceKind::finite: {
            // ceil of a rational length
            const Rat& l = (*table)[v.idx()].length;
            Int num = boost::multiprecision::numerator(l);
            Int den = boost::multiprecision::denominator(l);
            return static_cast<std::uint64_t>((num + den - 1) / den);
        }
    }
    throw domain_error("bad space kind");
}

int gauss_quadrant(const GaussInt& v) {
    if (v.re > 0 && v.im >= 0) return 1;
    if (v.re <= 0 && v.im > 0) return 2;
    if (v.re < 0 && v.im <= 0) return 3;
    return 4;  // re >= 0, im < 0
}

bool gauss_angle_less(const GaussInt& a, const GaussInt& b) {
    int qa = gauss_quadrant(a), qb = gauss_quadrant(b);
    if (qa != qb) return qa < qb;
    // same quadrant spans less than pi: cross product decides
    Int cross = Int(a.re) * b.im - Int(b.re) * a.im;
    if (cross != 0) return cross > 0;
    Int ma = Int(a.re) * a.re + Int(a.im) * a.im;
    Int mb = Int(b.re) * b.re + Int(b.im) * b.im;
    return ma < mb;
}

std::uint64_t Space::shell_size(std::uint64_t k) const {
    switch (kind) {
        case SpaceKind::tree: {
            if (k == 0) return 1;
            std::uint64_t n = 1;
            for (std::uint64_t i = 0; i < k; ++i) {
                if (branching != 0 && n > (UINT64_MAX / 2) / branching) return UINT64_MAX;
                n *= branching;
            }
            return n;
        }
        case SpaceKind::integers: return k == 0 ? 1 : 2;
        case SpaceKind::gaussian: {
            if (k == 0) return 1;
            std::uint64_t c = 0;
            std::int64_t kk = static_cast<std::int64_t>(k);
            for (std::int64_t a = -kk; a <= kk; ++a) {
                // count b with (k-1)^2 < a^2+b^2 <= k^2
                Int lo = Int(kk - 1) * (kk - 1) - Int(a) * a;  // need b^2 > lo
                Int hi = Int(kk) * kk - Int(a) * a;            // need b^2 <= hi
                if (hi < 0) continue;
                Int bh = isqrt(hi);
                Int bl = lo < 0 ? Int(-1) : isqrt(lo);
                // b in [-bh, -bl-1] U [bl+1, bh], plus b = 0 if lo < 0 <= hi
                Int cnt = 2 * (bh - bl);
                if (lo < 0) cnt -= 1;  // b=0 counted twice
                c += static_cast<std::uint64_t>(cnt);
            }
            return c;
        }
        case SpaceKind::finite: {
            std::uint64_t c = 0;
            for (std::size_t i = 0; i < table->size(); ++i)
                if (shell_index(Vertex::finite(i)) == k) ++c;
            return c;
        }
    }
    return 0;
}

bool Space::shell_nonempty(std::uint64_t k) const {
    if (kind == SpaceKind::tree || kind == SpaceKind::integers) return true;
    return shell_size(k) > 0;
}

std::vector<Vertex> Space::shell(std::uint64_t k, std::uint64_t budget) const {
    std::vector<Vertex> out;
    switch (kind) {
        case SpaceKind::tree: {
            std::uint64_t sz = shell_size(k);
            if (sz > budget) throw budget_error("tree shell exceeds vertex budget");
            TreeWord w(k, 0);
            out.reserve(static_cast<std::size_t>(sz));
            while (true) {
                out.push_back(Vertex::tree(w));
                // next word in lexicographic order
                std::size_t i = w.size();
                while (i > 0 && w[i - 1] + 1 == branching) --i;
                if (i == 0) break;
                ++w[i - 1];
                std::fill(w.begin() + i, w.end(), 0);
            }
            return out;
        }
        case SpaceKind::integers:
            if (k == 0) return {Vertex::integer(0)};
            return {Vertex::integer(static_cast<std::int64_t>(k)),
                    Vertex::integer(-static_cast<std::int64_t>(k))};
        case SpaceKind::gaussian: {
            if (k == 0) return {Vertex::gauss(0, 0)};
            std::vector<GaussInt> pts;
            std::int64_t kk = static_cast<std::int64_t>(k);
            Int lo2 = Int(kk - 1) * (kk - 1), hi2 = Int(kk) * kk;
            for (std::int64_t a = -kk; a <= kk; ++a)
                for (std::int64_t b = -kk; b <= kk; ++b) {
                    Int m = Int(a) * a + Int(b) * b;
                    if (m > lo2 && m <= hi2) pts.push_back({a, b});
                }
            if (pts.size() > budget) throw budget_error("gaussian shell exceeds vertex budget");
            std::sort(pts.begin(), pts.end(), gauss_angle_less);
            out.reserve(pts.size());
            for (auto& p : pts) out.push_back(Vertex::gauss(p.re, p.im));
            return out;
        }
        case SpaceKind::finite:
            for (std::size_t i = 0; i < table->size(); ++i)
                if (shell_index(Vertex::finite(i)) == k) out.push_back(Vertex::finite(i));
            return out;
    }
    return out;
}

Vertex Space::shell_representative(std::uint64_t k) const {
    switch (kind) {
        case SpaceKind::tree: return Vertex::tree(TreeWord(k, 0));
        case SpaceKind::integers: return Vertex::integer(static_cast<std::int64_t>(k));
        case SpaceKind::gaussian:
            // (k, 0) has modulus exactly k and angle 0, the canonical first point
            return Vertex::gauss(static_cast<std::int64_t>(k), 0);
        case SpaceKind::finite: {
            for (std::size_t i = 0; i < table->size(); ++i)
                if (shell_index(Vertex::finite(i)) == k) return Vertex::finite(i);
            throw domain_error("empty finite shell has no representative");
        }
    }
    throw domain_error("bad space kind");
}

std::uint64_t Space::ball_size_hint(const Rat& radius) const {
    if (radius < 0) return 0;
    Int num = boost::multiprecision::numerator(radius);
    Int den = boost::multiprecision::denominator(radius);
    std::uint64_t rfloor = static_cast<std::uint64_t>(num / den);
    switch (kind) {
        case SpaceKind::tree: {
            std::uint64_t total = 0;
            for (std::uint64_t k = 0; k <= rfloor; ++k) {
                std::uint64_t s = shell_size(k);
                if (s == UINT64_MAX || total > UINT64_MAX - s) return UINT64_MAX;
                total += s;
            }
            return total;
        }
        case SpaceKind::integers: return 2 * rfloor + 1;
        case SpaceKind::gaussian: {
            // crude area bound, fine for budgeting
            long double r = static_cast<long double>(to_double(radius));
            return static_cast<std::uint64_t>(3.2L * r * r + 4 * r + 1);
        }
        case SpaceKind::finite: return table->size();
    }
    return 0;
}

Truncation Space::ball(const Rat& radius, std::uint64_t budget) const {
    if (radius < 0) throw domain_error("ball radius must be nonnegative");
    if (ball_size_hint(radius) > budget) throw budget_error("ball exceeds vertex budget");
    Truncation t;
    t.radius = radius;
    Rat r2 = radius * radius;
    Int num = boost::multiprecision::numerator(radius);
    Int den = boost::multiprecision::denominator(radius);
    std::uint64_t kmax = static_cast<std::uint64_t>((num + den - 1) / den);  // ceil
    if (kind == SpaceKind::finite) {
        for (std::size_t i = 0; i < table->size(); ++i) {
            Vertex v = Vertex::finite(i);
            if (length_sq(v) <= r2) t.vertices.push_back(v);
        }
        std::stable_sort(t.vertices.begin(), t.vertices.end(),
                         [this](const Vertex& a, const Vertex& b) { return canon_less(a, b); });
        return t;
    }
    for (std::uint64_t k = 0; k <= kmax; ++k) {
        auto sh = shell(k, budget);
        for (auto& v : sh) {
            if (length_sq(v) <= r2) t.vertices.push_back(v);
            if (t.vertices.size() > budget) throw budget_error("ball exceeds vertex budget");
        }
    }
    return t;
}

bool Space::canon_less(const Vertex& a, const Vertex& b) const {
    Rat la = length_sq(a), lb = length_sq(b);
    if (la != lb) return la < lb;
    switch (kind) {
        case SpaceKind::tree: return a.word() < b.word();
        case SpaceKind::integers:
            if (a.n() == b.n()) return false;
            return a.n() > b.n();  // positive point first
        case SpaceKind::gaussian:
            if (a.g() == b.g()) return false;
            return gauss_angle_less(a.g(), b.g());
        case SpaceKind::finite: return a.idx() < b.idx();
    }
    return false;
}

std::optional<std::size_t> Space::finite_index_of(const std::string& id) const {
    if (kind != SpaceKind::finite) return std::nullopt;
    for (std::size_t i = 0; i < table->size(); ++i)
        if ((*table)[i].id == id) return i;
    return std::nullopt;
}

}  // namespace wco
