#pragma once

#include "wco/number.hpp"
#include "wco/ratfn.hpp"
#include "wco/space.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace wco {

/// Parse or evaluation failure inside a rule; carries line/column when known.
struct rule_error : std::runtime_error {
    int line = 0, column = 0;
    rule_error(const std::string& msg, int l = 0, int c = 0)
        : std::runtime_error(l > 0 ? msg + " (line " + std::to_string(l) + ", col " +
                                         std::to_string(c) + ")"
                                   : msg),
          line(l),
          column(c) {}
};

/// Arithmetic expression in one real variable (`len`, `n`, or `v` depending
/// on context). Operators: + - * / ^(integer), floor, sqrt, abs.
struct Expr {
    enum class Op { constant, var, add, sub, mul, div, neg, pow, floor, sqrt, abs };
    Op op = Op::constant;
    Rat value;               // constant
    long long exponent = 1;  // pow
    std::vector<Expr> kids;

    static Expr constant(Rat q) {
        Expr e;
        e.op = Op::constant;
        e.value = std::move(q);
        return e;
    }
    static Expr var() {
        Expr e;
        e.op = Op::var;
        return e;
    }
    static Expr unary(Op o, Expr k) {
        Expr e;
        e.op = o;
        e.kids.push_back(std::move(k));
        return e;
    }
    static Expr binary(Op o, Expr a, Expr b) {
        Expr e;
        e.op = o;
        e.kids.push_back(std::move(a));
        e.kids.push_back(std::move(b));
        return e;
    }
};

Scalar eval_expr(const Expr& e, const Scalar& var);

/// Expression as an exact rational function of the variable, when it is one
/// (no floor/sqrt of non-constants; abs only around provably-signed parts is
/// not attempted — abs(var) folds to var under `var_nonneg`).
std::optional<RatFn> expr_as_ratfn(const Expr& e, bool var_nonneg);

std::string print_expr(const Expr& e, const std::string& varname);

/// Vertex literal as written in rule text; resolved against a space at bind
/// time. `first(L)` is the canonical first vertex of length L.
struct VertexLit {
    enum class Kind { root, first_of_length, integer, gauss, finite_id };
    Kind kind = Kind::root;
    std::uint64_t length = 0;
    std::int64_t n = 0;
    std::int64_t re = 0, im = 0;
    std::string id;

    Vertex resolve(const Space& s) const;
    std::string print() const;
};

/// Guard over vertex features. Conjunctions only; the final rule clause must
/// be `else` (Kind::always).
struct Pred {
    enum class Kind { always, len_cmp, parity, quadrant, is_root, vertex_eq, sign_is, conj };
    enum class Cmp { eq, ne, le, ge, lt, gt };

    Kind kind = Kind::always;
    Cmp cmp = Cmp::eq;
    Rat bound;            // len_cmp
    bool parity_odd = false;
    int quadrant = 1;     // 1..4
    VertexLit vlit;       // vertex_eq
    int sign = 0;         // sign_is: +1 / -1 / 0
    std::vector<Pred> terms;  // conj

    bool matches(const Space& s, const Vertex& v) const;
    std::string print() const;
};

/// Token stream shared by the rule parsers.
class Lexer {
public:
    explicit Lexer(const std::string& text);

    struct Token {
        enum class Kind { ident, integer, punct, end };
        Kind kind;
        std::string text;
        long long ivalue = 0;
        int line = 1, column = 1;
    };

    const Token& peek() const { return tokens_[pos_]; }
    const Token& get() { return tokens_[std::min(pos_++, tokens_.size() - 1)]; }
    bool accept(const std::string& t);
    void expect(const std::string& t);
    bool accept_ident(const std::string& id);
    void expect_ident(const std::string& id);
    [[noreturn]] void fail(const std::string& msg) const;
    bool at_end() const { return peek().kind == Token::Kind::end; }

private:
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

/// Parses an arithmetic expression whose variable is `varname` (one of
/// "len", "n", "v"; "len" texts also accept "n" as a synonym).
Expr parse_expr_text(const std::string& text, const std::string& varname);
Expr parse_expr(Lexer& lx, const std::string& varname);
Pred parse_pred(Lexer& lx);
VertexLit parse_vertex_lit(Lexer& lx);

}  // namespace wco
