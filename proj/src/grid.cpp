#include "splitnls/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace splitnls {

double Grid::max_wavenumber() const {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) {
        const double nyq = M_PI * points[a] / box_length[a];
        s += nyq * nyq;
    }
    return std::sqrt(s);
}

GridPtr make_grid(const std::vector<int>& points, const std::vector<double>& box_length) {
    if (points.size() < 1 || points.size() > 3)
        throw std::invalid_argument("make_grid: dimension must be 1, 2 or 3");
    if (box_length.size() != points.size())
        throw std::invalid_argument("make_grid: points and box_length must have equal length");

    auto g = std::make_shared<Grid>();
    g->dim = static_cast<int>(points.size());
    for (int a = 0; a < g->dim; ++a) {
        const int m = points[a];
        const double len = box_length[a];
        if (m < 8 || m % 2 != 0)
            throw std::invalid_argument("make_grid: points[" + std::to_string(a) +
                                        "] must be even and >= 8");
        if (!(len > 0.0) || !std::isfinite(len))
            throw std::invalid_argument("make_grid: box_length[" + std::to_string(a) +
                                        "] must be positive and finite");
        g->points[a] = m;
        g->box_length[a] = len;
        auto& ks = g->wavenumbers[a];
        ks.resize(m);
        for (int i = 0; i < m; ++i) {
            const int mt = (i < m / 2) ? i : i - m;  // Nyquist lands on -m/2
            ks[i] = 2.0 * M_PI * mt / len;
        }
    }
    for (int a = g->dim; a < 3; ++a) {
        g->points[a] = 1;
        g->box_length[a] = 1.0;
        g->wavenumbers[a] = {0.0};
    }
    return g;
}

}  // namespace splitnls
