#pragma once

#include <complex>
#include <vector>

#include "splitnls/grid.hpp"

namespace splitnls {

enum class Space { physical, spectral };

// A complex scalar field sampled on a Grid, tagged with the space its values
// currently live in. Operations that mix spaces must transform explicitly;
// mismatched tags are an error, never a silent reinterpretation.
struct Field {
    GridPtr grid;
    Space space = Space::physical;
    std::vector<std::complex<double>> values;
};

inline Field make_field(GridPtr grid, Space space = Space::physical) {
    Field f;
    f.grid = std::move(grid);
    f.space = space;
    f.values.assign(f.grid->total_points(), std::complex<double>(0.0, 0.0));
    return f;
}

bool all_finite(const Field& f);

}  // namespace splitnls
