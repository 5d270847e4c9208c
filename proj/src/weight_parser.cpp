#include "dbarlab/weights.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace dbarlab {

namespace {

constexpr std::size_t kMaxComplexDim = 8;

struct Node {
    Polynomial poly{2 * kMaxComplexDim};
    // Set when the node is syntactically a plain sum of abs2(z_j) calls.
    std::optional<std::vector<int>> abs2_sum;
    int radial_power = 0;
};

class Parser {
public:
    Parser(const std::string& text, std::size_t base_offset) : s_(text), base_(base_offset) {}

    Node parse_all() {
        skip_ws();
        Node n = expr();
        skip_ws();
        if (pos_ < s_.size()) fail(std::string("unexpected character '") + s_[pos_] + "'");
        return n;
    }

    int max_variable() const { return max_var_; }
    const std::set<int>& variables_used() const { return used_; }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw WeightSyntaxError(msg, base_ + pos_ + 1); }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    unsigned long read_uint(const char* what) {
        skip_ws();
        if (pos_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_])))
            fail(std::string("expected ") + what);
        unsigned long v = 0;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
            v = v * 10 + static_cast<unsigned long>(s_[pos_] - '0');
            if (v > 1000000) fail(std::string(what) + " too large");
            ++pos_;
        }
        return v;
    }

    int variable_index() {
        std::size_t at = pos_;
        if (pos_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_])))
            fail("expected variable index");
        unsigned long k = read_uint("variable index");
        if (k == 0) {
            pos_ = at;
            fail("variable indices start at 1");
        }
        if (k > kMaxComplexDim) {
            pos_ = at;
            fail("variable index exceeds supported dimension " + std::to_string(kMaxComplexDim));
        }
        max_var_ = std::max(max_var_, static_cast<int>(k));
        used_.insert(static_cast<int>(k));
        return static_cast<int>(k);
    }

    Node expr() {
        skip_ws();
        bool negate_first = false;
        if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) {
            negate_first = s_[pos_] == '-';
            ++pos_;
        }
        Node acc = term();
        if (negate_first) {
            acc.poly = -acc.poly;
            acc.abs2_sum.reset();
            acc.radial_power = 0;
        }
        for (;;) {
            skip_ws();
            if (pos_ >= s_.size() || (s_[pos_] != '+' && s_[pos_] != '-')) break;
            bool minus = s_[pos_] == '-';
            ++pos_;
            Node t = term();
            if (minus) {
                acc.poly = acc.poly - t.poly;
                acc.abs2_sum.reset();
            } else {
                acc.poly = acc.poly + t.poly;
                if (acc.abs2_sum && t.abs2_sum && t.radial_power == 1 && acc.radial_power == 1) {
                    acc.abs2_sum->insert(acc.abs2_sum->end(), t.abs2_sum->begin(), t.abs2_sum->end());
                } else {
                    acc.abs2_sum.reset();
                }
            }
            acc.radial_power = acc.abs2_sum ? 1 : 0;
        }
        return acc;
    }

    Node term() {
        Node acc = factor();
        while (accept('*')) {
            Node f = factor();
            acc.poly = acc.poly * f.poly;
            acc.abs2_sum.reset();
            acc.radial_power = 0;
        }
        return acc;
    }

    Node factor() {
        Node b = base();
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == '^') {
            ++pos_;
            skip_ws();
            if (pos_ < s_.size() && s_[pos_] == '-') fail("negative exponent is not polynomial");
            if (pos_ < s_.size() && s_[pos_] == '(') fail("exponent must be an unsigned integer literal");
            unsigned long e = read_uint("unsigned integer exponent");
            if (pos_ < s_.size() && (s_[pos_] == '.' || s_[pos_] == '/'))
                fail("fractional exponent is not polynomial");
            if (e > 64) fail("exponent too large");
            b.poly = b.poly.pow(static_cast<unsigned>(e));
            if (b.abs2_sum && b.radial_power == 1) {
                b.radial_power = static_cast<int>(e);
            } else {
                b.abs2_sum.reset();
                b.radial_power = 0;
            }
        }
        return b;
    }

    Node number() {
        Rational value = static_cast<long>(read_uint("number"));
        if (pos_ < s_.size() && s_[pos_] == '.') {
            ++pos_;
            Rational scale = 1;
            if (pos_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_])))
                fail("expected digits after decimal point");
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                scale /= 10;
                value += scale * (s_[pos_] - '0');
                ++pos_;
            }
        }
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == '/') {
            std::size_t save = pos_;
            ++pos_;
            skip_ws();
            if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                unsigned long d = read_uint("denominator");
                if (d == 0) fail("division by zero");
                value /= static_cast<long>(d);
            } else {
                pos_ = save;
                fail("only rational literals may be divided");
            }
        }
        Node n;
        n.poly = Polynomial::constant(2 * kMaxComplexDim, value);
        return n;
    }

    Node base() {
        skip_ws();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c))) return number();
        if (c == '(') {
            ++pos_;
            Node inner = expr();
            expect(')');
            return inner;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            std::string word = s_.substr(start, pos_ - start);
            if ((word == "x" || word == "y")) {
                int k = variable_index();
                Node n;
                n.poly = Polynomial::variable(2 * kMaxComplexDim, 2 * (k - 1) + (word == "y" ? 1 : 0));
                return n;
            }
            if (word == "abs") {
                if (pos_ < s_.size() && s_[pos_] == '2') {
                    ++pos_;
                    expect('(');
                    skip_ws();
                    if (pos_ >= s_.size() || s_[pos_] != 'z') fail("expected complex variable z<k>");
                    ++pos_;
                    int k = variable_index();
                    expect(')');
                    Node n;
                    Polynomial x = Polynomial::variable(2 * kMaxComplexDim, 2 * (k - 1));
                    Polynomial y = Polynomial::variable(2 * kMaxComplexDim, 2 * (k - 1) + 1);
                    n.poly = x * x + y * y;
                    n.abs2_sum = std::vector<int>{k};
                    n.radial_power = 1;
                    return n;
                }
            }
            pos_ = start;
            fail("non-polynomial construct '" + word + "'");
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    const std::string& s_;
    std::size_t base_;
    std::size_t pos_ = 0;
    int max_var_ = 0;
    std::set<int> used_;
};

bool is_full_abs2_sum(const std::vector<int>& vars, int n) {
    std::vector<int> v = vars;
    std::sort(v.begin(), v.end());
    if (static_cast<int>(v.size()) != n) return false;
    for (int i = 0; i < n; ++i)
        if (v[i] != i + 1) return false;
    return true;
}

std::vector<Polynomial> components_promoted(const std::vector<Polynomial>& parts, int n) {
    std::vector<Polynomial> out;
    for (const auto& p : parts) out.push_back(p.promoted(2 * n));
    return out;
}

WeightSpec parse_decoupled_list(const std::string& source, int declared_n) {
    struct Piece {
        int var;
        Polynomial poly;
    };
    std::vector<Piece> pieces;
    std::size_t start = 0;
    int max_var = 0;
    while (start <= source.size()) {
        std::size_t end = source.find(';', start);
        if (end == std::string::npos) end = source.size();
        std::string chunk = source.substr(start, end - start);
        std::size_t colon = chunk.find(':');
        bool blank = std::all_of(chunk.begin(), chunk.end(), [](char ch) { return std::isspace(static_cast<unsigned char>(ch)); });
        if (!blank) {
            if (colon == std::string::npos) throw WeightSyntaxError("expected 'z<k>:' in decoupled list", start + 1);
            std::size_t i = 0;
            while (i < colon && std::isspace(static_cast<unsigned char>(chunk[i]))) ++i;
            if (i >= colon || chunk[i] != 'z') throw WeightSyntaxError("expected 'z<k>' before ':'", start + i + 1);
            ++i;
            std::size_t digits = i;
            int k = 0;
            while (i < colon && std::isdigit(static_cast<unsigned char>(chunk[i]))) k = k * 10 + (chunk[i++] - '0');
            if (i == digits || k == 0) throw WeightSyntaxError("expected variable index", start + digits + 1);
            while (i < colon && std::isspace(static_cast<unsigned char>(chunk[i]))) ++i;
            if (i != colon) throw WeightSyntaxError("unexpected text before ':'", start + i + 1);
            std::string body = chunk.substr(colon + 1);
            Parser p(body, start + colon + 1);
            Node node = p.parse_all();
            for (int v : p.variables_used()) {
                if (v != k)
                    throw WeightDimensionError("component for z" + std::to_string(k) + " uses variable of z" +
                                               std::to_string(v));
            }
            for (const auto& piece : pieces)
                if (piece.var == k) throw WeightSyntaxError("duplicate component for z" + std::to_string(k), start + 1);
            max_var = std::max(max_var, k);
            pieces.push_back({k, node.poly});
        }
        if (end == source.size()) break;
        start = end + 1;
    }
    if (pieces.empty()) throw WeightSyntaxError("empty decoupled list", 1);
    int n = declared_n > 0 ? declared_n : max_var;
    if (max_var > n)
        throw WeightDimensionError("weight uses z" + std::to_string(max_var) + " but n = " + std::to_string(n));
    WeightSpec w;
    w.n = n;
    w.source = source;
    w.kind = WeightKind::Decoupled;
    std::vector<Polynomial> parts(n, Polynomial(2 * n));
    Polynomial phi(2 * n);
    for (auto& piece : pieces) {
        Polynomial r = piece.poly.promoted(2 * n);
        parts[piece.var - 1] = r;
        phi += r;
    }
    w.phi = phi;
    w.components = parts;
    return w;
}

}  // namespace

WeightSpec parse_weight(const std::string& source, int declared_n) {
    if (declared_n < 0 || declared_n > static_cast<int>(kMaxComplexDim))
        throw WeightDimensionError("declared dimension out of range");
    if (source.find(':') != std::string::npos) return parse_decoupled_list(source, declared_n);

    Parser p(source, 0);
    Node node = p.parse_all();
    int used = p.max_variable();
    int n = declared_n > 0 ? declared_n : std::max(used, 1);
    if (used > n)
        throw WeightDimensionError("weight uses z" + std::to_string(used) + " but n = " + std::to_string(n));

    WeightSpec w = make_weight(node.poly.promoted(2 * n), n);
    w.source = source;
    if (node.abs2_sum && node.radial_power >= 2 && is_full_abs2_sum(*node.abs2_sum, n)) {
        w.kind = WeightKind::RadialPower;
        w.radial_power = node.radial_power;
    }
    return w;
}

WeightSpec make_weight(const Polynomial& phi, int n) {
    if (n < 1) throw WeightDimensionError("complex dimension must be at least 1");
    for (std::size_t v = 2 * n; v < phi.num_vars(); ++v)
        if (phi.depends_on(v)) throw WeightDimensionError("polynomial uses variables beyond dimension n");
    WeightSpec w;
    w.n = n;
    w.phi = phi.promoted(2 * n);
    if (auto parts = split_by_variable(w.phi, n)) {
        w.kind = WeightKind::Decoupled;
        w.components = components_promoted(*parts, n);
    }
    return w;
}

std::optional<std::vector<Polynomial>> split_by_variable(const Polynomial& phi, int n) {
    Polynomial p = phi.promoted(2 * n);
    std::vector<Polynomial> parts(n, Polynomial(2 * n));
    for (const auto& [e, c] : p.terms()) {
        int owner = -1;
        for (int j = 0; j < n; ++j) {
            if (e[2 * j] == 0 && e[2 * j + 1] == 0) continue;
            if (owner >= 0) return std::nullopt;
            owner = j;
        }
        Polynomial t = Polynomial::constant(2 * n, c);
        for (std::size_t v = 0; v < e.size(); ++v)
            if (e[v]) t = t * Polynomial::variable(2 * n, v).pow(e[v]);
        // Constants go with the first variable.
        parts[owner < 0 ? 0 : owner] += t;
    }
    return parts;
}

Polynomial component_in_one_variable(const WeightSpec& w, int j) {
    std::vector<Polynomial> parts;
    if (!w.components.empty()) {
        parts = w.components;
    } else if (auto split = split_by_variable(w.phi, w.n)) {
        parts = *split;
    } else {
        throw std::invalid_argument("weight is not decoupled");
    }
    if (j < 0 || j >= w.n) throw std::out_of_range("component index out of range");
    std::vector<std::size_t> map(2 * w.n, 2);
    map[2 * j] = 0;
    map[2 * j + 1] = 1;
    const Polynomial& part = parts[j];
    for (int k = 0; k < w.n; ++k) {
        if (k == j) continue;
        if (part.depends_on(2 * k) || part.depends_on(2 * k + 1))
            throw std::invalid_argument("component depends on another variable");
    }
    // Variables other than (x_j, y_j) do not occur, so mapping them onto an
    // unused slot is harmless.
    return part.relabeled(map, 3).promoted(2);
}

std::string canonical_text(const WeightSpec& w) { return w.phi.to_string(); }

}  // namespace dbarlab
