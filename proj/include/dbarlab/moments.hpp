#pragma once

#include "dbarlab/polynomial.hpp"

namespace dbarlab {

// Exact integrals of polynomials in (x, y) (the first two variables; any
// others must be absent). Centres and bounds given as doubles are converted to
// rationals without rounding; the only inexact steps are the final powers of
// the radius and the factor pi.

// Integral over the disc |(x, y) - (cx, cy)| <= r.
double disc_integral(const Polynomial& p, double cx, double cy, double r);

// Integral over the rectangle [x0, x1] x [y0, y1], exact in rationals.
Rational rectangle_integral_exact(const Polynomial& p, const Rational& x0, const Rational& x1, const Rational& y0,
                                  const Rational& y1);
double rectangle_integral(const Polynomial& p, double x0, double x1, double y0, double y1);

// Axis-aligned square of side `side` centred at (cx, cy).
double square_integral(const Polynomial& p, double cx, double cy, double side);

// p(x + cx, y + cy), exactly.
Polynomial translated(const Polynomial& p, const Rational& cx, const Rational& cy);

}  // namespace dbarlab
