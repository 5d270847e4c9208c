#include "dbarlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dbarlab {

GridSpec GridSpec::make(int n, double L, double h, std::size_t max_unknowns) {
    if (n < 1) throw std::invalid_argument("grid dimension must be at least 1");
    if (!(h > 0.0) || !(L > 0.0)) throw std::invalid_argument("grid needs L > 0 and h > 0");
    double ratio = 2.0 * L / h;
    long N = std::lround(ratio);
    if (std::abs(ratio - static_cast<double>(N)) > 1e-9 * std::max(1.0, ratio))
        throw std::invalid_argument("2L/h must be an integer (got " + std::to_string(ratio) + ")");
    if (N < 8) throw std::invalid_argument("grid needs at least 8 points per axis");
    double total = std::pow(static_cast<double>(N), 2 * n);
    if (total > static_cast<double>(max_unknowns))
        throw std::length_error("grid has " + std::to_string(static_cast<long long>(total)) +
                                " unknowns, above the memory budget of " + std::to_string(max_unknowns));
    GridSpec g;
    g.n = n;
    g.L = L;
    g.h = h;
    g.N = static_cast<int>(N);
    return g;
}

std::size_t GridSpec::size() const {
    std::size_t s = 1;
    for (int a = 0; a < axes(); ++a) s *= static_cast<std::size_t>(N);
    return s;
}

std::size_t GridSpec::stride(int axis) const {
    std::size_t s = 1;
    for (int a = axes() - 1; a > axis; --a) s *= static_cast<std::size_t>(N);
    return s;
}

int GridSpec::index_along(std::size_t idx, int axis) const {
    return static_cast<int>((idx / stride(axis)) % static_cast<std::size_t>(N));
}

void GridSpec::point(std::size_t idx, double* out) const {
    for (int a = axes() - 1; a >= 0; --a) {
        out[a] = coord(static_cast<int>(idx % static_cast<std::size_t>(N)));
        idx /= static_cast<std::size_t>(N);
    }
}

std::vector<double> GridSpec::point(std::size_t idx) const {
    std::vector<double> p(axes());
    point(idx, p.data());
    return p;
}

int GridSpec::boundary_distance(std::size_t idx) const {
    int d = N;
    for (int a = axes() - 1; a >= 0; --a) {
        int i = static_cast<int>(idx % static_cast<std::size_t>(N));
        idx /= static_cast<std::size_t>(N);
        d = std::min({d, i, N - 1 - i});
    }
    return d;
}

GridSpec one_variable_grid(const GridSpec& g) {
    GridSpec o = g;
    o.n = 1;
    return o;
}

}  // namespace dbarlab
