#include "dbarlab/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dbarlab {

double to_double(const Rational& r) { return r.convert_to<double>(); }

Polynomial Polynomial::constant(std::size_t nvars, const Rational& c) {
    Polynomial p(nvars);
    p.add_term(Exponents(nvars, 0), c);
    return p;
}

Polynomial Polynomial::variable(std::size_t nvars, std::size_t index) {
    if (index >= nvars) throw std::out_of_range("variable index out of range");
    Polynomial p(nvars);
    Exponents e(nvars, 0);
    e[index] = 1;
    p.add_term(e, Rational(1));
    return p;
}

void Polynomial::add_term(const Exponents& e, const Rational& c) {
    if (c == 0) return;
    auto it = terms_.find(e);
    if (it == terms_.end()) {
        terms_.emplace(e, c);
    } else {
        it->second += c;
        if (it->second == 0) terms_.erase(it);
    }
}

bool Polynomial::is_constant() const {
    return terms_.empty() || (terms_.size() == 1 && degree() == 0);
}

unsigned Polynomial::degree() const {
    unsigned d = 0;
    for (const auto& [e, c] : terms_) {
        unsigned s = 0;
        for (unsigned k : e) s += k;
        d = std::max(d, s);
    }
    return d;
}

bool Polynomial::depends_on(std::size_t var) const {
    if (var >= nvars_) return false;
    for (const auto& [e, c] : terms_)
        if (e[var] != 0) return true;
    return false;
}

Polynomial Polynomial::promoted(std::size_t nvars) const {
    if (nvars < nvars_) {
        for (std::size_t v = nvars; v < nvars_; ++v)
            if (depends_on(v)) throw std::invalid_argument("cannot drop a variable the polynomial depends on");
    }
    Polynomial p(nvars);
    for (const auto& [e, c] : terms_) {
        Exponents f(nvars, 0);
        for (std::size_t i = 0; i < std::min(nvars, nvars_); ++i) f[i] = e[i];
        p.add_term(f, c);
    }
    return p;
}

Polynomial Polynomial::relabeled(const std::vector<std::size_t>& map, std::size_t nvars) const {
    if (map.size() != nvars_) throw std::invalid_argument("relabel map has wrong length");
    Polynomial p(nvars);
    for (const auto& [e, c] : terms_) {
        Exponents f(nvars, 0);
        for (std::size_t i = 0; i < nvars_; ++i) {
            if (e[i] == 0) continue;
            if (map[i] >= nvars) throw std::out_of_range("relabel target out of range");
            f[map[i]] += e[i];
        }
        p.add_term(f, c);
    }
    return p;
}

Polynomial Polynomial::operator-() const {
    Polynomial p(nvars_);
    for (const auto& [e, c] : terms_) p.terms_.emplace(e, -c);
    return p;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
    Polynomial r = *this;
    r += o;
    return r;
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
    if (o.nvars_ > nvars_) *this = promoted(o.nvars_);
    const Polynomial& src = o.nvars_ < nvars_ ? o.promoted(nvars_) : o;
    for (const auto& [e, c] : src.terms_) add_term(e, c);
    return *this;
}

Polynomial Polynomial::operator-(const Polynomial& o) const { return *this + (-o); }

Polynomial Polynomial::operator*(const Polynomial& o) const {
    std::size_t nv = std::max(nvars_, o.nvars_);
    Polynomial a = promoted(nv), b = o.promoted(nv);
    Polynomial r(nv);
    Exponents f(nv);
    for (const auto& [ea, ca] : a.terms_) {
        for (const auto& [eb, cb] : b.terms_) {
            for (std::size_t i = 0; i < nv; ++i) f[i] = ea[i] + eb[i];
            r.add_term(f, ca * cb);
        }
    }
    return r;
}

Polynomial Polynomial::operator*(const Rational& c) const {
    Polynomial r(nvars_);
    if (c == 0) return r;
    for (const auto& [e, k] : terms_) r.terms_.emplace(e, k * c);
    return r;
}

Polynomial Polynomial::pow(unsigned e) const {
    Polynomial result = constant(nvars_, Rational(1));
    Polynomial base = *this;
    while (e > 0) {
        if (e & 1u) result = result * base;
        e >>= 1;
        if (e) base = base * base;
    }
    return result;
}

Polynomial Polynomial::derivative(std::size_t var) const {
    Polynomial r(nvars_);
    if (var >= nvars_) return r;
    for (const auto& [e, c] : terms_) {
        if (e[var] == 0) continue;
        Exponents f = e;
        f[var] -= 1;
        r.add_term(f, c * e[var]);
    }
    return r;
}

Polynomial Polynomial::antiderivative(std::size_t var) const {
    if (var >= nvars_) throw std::out_of_range("antiderivative variable out of range");
    Polynomial r(nvars_);
    for (const auto& [e, c] : terms_) {
        Exponents f = e;
        f[var] += 1;
        r.add_term(f, c / f[var]);
    }
    return r;
}

bool Polynomial::operator==(const Polynomial& o) const {
    if (nvars_ == o.nvars_) return terms_ == o.terms_;
    std::size_t nv = std::max(nvars_, o.nvars_);
    return promoted(nv).terms_ == o.promoted(nv).terms_;
}

Rational Polynomial::evaluate_exact(const std::vector<Rational>& x) const {
    if (x.size() < nvars_) throw std::invalid_argument("too few coordinates for polynomial evaluation");
    Rational s = 0;
    for (const auto& [e, c] : terms_) {
        Rational t = c;
        for (std::size_t i = 0; i < nvars_; ++i)
            for (unsigned k = 0; k < e[i]; ++k) t *= x[i];
        s += t;
    }
    return s;
}

double Polynomial::evaluate(const std::vector<double>& x) const {
    return CompiledPolynomial(*this)(x);
}

std::string Polynomial::variable_name(std::size_t index) {
    return std::string(index % 2 == 0 ? "x" : "y") + std::to_string(index / 2 + 1);
}

std::string Polynomial::to_string() const {
    if (terms_.empty()) return "0";
    // Highest total degree first; ties broken by descending exponent vector.
    std::vector<std::pair<Exponents, Rational>> ordered(terms_.begin(), terms_.end());
    auto total = [](const Exponents& e) {
        unsigned s = 0;
        for (unsigned k : e) s += k;
        return s;
    };
    std::stable_sort(ordered.begin(), ordered.end(), [&](const auto& a, const auto& b) {
        unsigned da = total(a.first), db = total(b.first);
        if (da != db) return da > db;
        return a.first > b.first;
    });
    std::ostringstream os;
    bool first = true;
    for (const auto& [e, c] : ordered) {
        bool neg = c < 0;
        Rational mag = neg ? Rational(-c) : c;
        if (first) {
            if (neg) os << "-";
        } else {
            os << (neg ? " - " : " + ");
        }
        first = false;
        std::vector<std::string> factors;
        for (std::size_t i = 0; i < e.size(); ++i) {
            if (e[i] == 0) continue;
            std::string f = variable_name(i);
            if (e[i] > 1) f += "^" + std::to_string(e[i]);
            factors.push_back(f);
        }
        bool unit = (mag == 1);
        if (!unit || factors.empty()) {
            os << mag.str();
            if (!factors.empty()) os << "*";
        }
        for (std::size_t i = 0; i < factors.size(); ++i) {
            if (i) os << "*";
            os << factors[i];
        }
    }
    return os.str();
}

CompiledPolynomial::CompiledPolynomial(const Polynomial& p) : nvars_(p.num_vars()) {
    for (const auto& [e, c] : p.terms()) {
        coeffs_.push_back(to_double(c));
        for (unsigned k : e) {
            exps_.push_back(k);
            max_degree_ = std::max(max_degree_, k);
        }
    }
}

double CompiledPolynomial::operator()(const double* x) const {
    double s = 0.0;
    const unsigned* e = exps_.data();
    for (std::size_t t = 0; t < coeffs_.size(); ++t) {
        double v = coeffs_[t];
        for (std::size_t i = 0; i < nvars_; ++i, ++e) {
            unsigned k = *e;
            if (k == 0) continue;
            double xi = x[i], pw = xi;
            for (unsigned j = 1; j < k; ++j) pw *= xi;
            v *= pw;
        }
        s += v;
    }
    return s;
}

}  // namespace dbarlab
