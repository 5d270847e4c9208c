#pragma once

#include <cstddef>
#include <vector>

namespace dbarlab {

// Cell-centred tensor grid on [-L, L]^(2n): along every real axis the nodes
// are -L + (i + 1/2) h, i = 0..N-1, and the field vanishes outside
// (Dirichlet truncation). Axes are ordered (x1, y1, ..., xn, yn); the last
// axis varies fastest in the linear index.
struct GridSpec {
    int n = 1;
    double L = 0.0;
    double h = 0.0;
    int N = 0;

    static constexpr std::size_t kDefaultMaxUnknowns = 8'000'000;

    static GridSpec make(int n, double L, double h, std::size_t max_unknowns = kDefaultMaxUnknowns);

    int axes() const { return 2 * n; }
    std::size_t size() const;
    std::size_t stride(int axis) const;
    double coord(int i) const { return -L + (i + 0.5) * h; }
    int index_along(std::size_t idx, int axis) const;
    void point(std::size_t idx, double* out) const;
    std::vector<double> point(std::size_t idx) const;
    // Distance (in nodes) from idx to the nearest face of the box.
    int boundary_distance(std::size_t idx) const;
};

// Grid on one complex variable with the same L and h.
GridSpec one_variable_grid(const GridSpec& g);

}  // namespace dbarlab
