#include "dbarlab/moments.hpp"

#include <cmath>
#include <stdexcept>

namespace dbarlab {

namespace {

void require_plane(const Polynomial& p) {
    for (std::size_t v = 2; v < p.num_vars(); ++v)
        if (p.depends_on(v)) throw std::invalid_argument("planar moment of a polynomial in more than two variables");
}

Rational power(const Rational& x, unsigned k) {
    Rational r = 1;
    for (unsigned i = 0; i < k; ++i) r *= x;
    return r;
}

// q = (2i-1)!! (2j-1)!! / (2^(i+j) (i+j)!), the mean of cos^(2i) sin^(2j)
// over the circle, so that the unit-disc integral of x^(2i) y^(2j) is
// 2 pi q / (2i + 2j + 2).
Rational disc_angular_factor(unsigned i, unsigned j) {
    Rational num = 1, den = 1;
    for (unsigned k = 1; k <= i; ++k) num *= 2 * k - 1;
    for (unsigned k = 1; k <= j; ++k) num *= 2 * k - 1;
    for (unsigned k = 1; k <= i + j; ++k) den *= 2 * k;
    return num / den;
}

}  // namespace

Polynomial translated(const Polynomial& p, const Rational& cx, const Rational& cy) {
    require_plane(p);
    const std::size_t nv = std::max<std::size_t>(p.num_vars(), 2);
    Polynomial sx = Polynomial::variable(nv, 0) + Polynomial::constant(nv, cx);
    Polynomial sy = Polynomial::variable(nv, 1) + Polynomial::constant(nv, cy);
    Polynomial out(nv);
    for (const auto& [e, c] : p.terms()) {
        Polynomial t = Polynomial::constant(nv, c);
        if (e.size() > 0 && e[0]) t = t * sx.pow(e[0]);
        if (e.size() > 1 && e[1]) t = t * sy.pow(e[1]);
        out += t;
    }
    return out;
}

double disc_integral(const Polynomial& p, double cx, double cy, double r) {
    if (!(r >= 0.0)) throw std::invalid_argument("disc radius must be non-negative");
    Polynomial q = translated(p, Rational(cx), Rational(cy));
    // Group by total degree: sum_d r^(d+2) * pi * (exact rational).
    std::vector<Rational> by_degree;
    for (const auto& [e, c] : q.terms()) {
        unsigned a = e.size() > 0 ? e[0] : 0, b = e.size() > 1 ? e[1] : 0;
        if (a % 2 || b % 2) continue;
        unsigned d = a + b;
        if (by_degree.size() <= d) by_degree.resize(d + 1, Rational(0));
        by_degree[d] += c * disc_angular_factor(a / 2, b / 2) * 2 / (d + 2);
    }
    long double s = 0.0L;
    for (std::size_t d = 0; d < by_degree.size(); ++d) {
        if (by_degree[d] == 0) continue;
        s += static_cast<long double>(to_double(by_degree[d])) * std::pow(static_cast<long double>(r), d + 2);
    }
    return static_cast<double>(s * 3.141592653589793238462643383279502884L);
}

Rational rectangle_integral_exact(const Polynomial& p, const Rational& x0, const Rational& x1, const Rational& y0,
                                  const Rational& y1) {
    require_plane(p);
    Rational s = 0;
    for (const auto& [e, c] : p.terms()) {
        unsigned a = e.size() > 0 ? e[0] : 0, b = e.size() > 1 ? e[1] : 0;
        Rational ix = (power(x1, a + 1) - power(x0, a + 1)) / (a + 1);
        Rational iy = (power(y1, b + 1) - power(y0, b + 1)) / (b + 1);
        s += c * ix * iy;
    }
    return s;
}

double rectangle_integral(const Polynomial& p, double x0, double x1, double y0, double y1) {
    return to_double(rectangle_integral_exact(p, Rational(x0), Rational(x1), Rational(y0), Rational(y1)));
}

double square_integral(const Polynomial& p, double cx, double cy, double side) {
    Rational c_x(cx), c_y(cy), half = Rational(side) / 2;
    return to_double(rectangle_integral_exact(p, c_x - half, c_x + half, c_y - half, c_y + half));
}

}  // namespace dbarlab
