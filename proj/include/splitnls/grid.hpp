#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <vector>

namespace splitnls {

// Uniform periodic grid on the centered box  prod_a [-L_a/2, L_a/2),  d in {1,2,3}.
// Wavenumbers follow the standard DFT layout k = 2*pi*m/L with m running over
// [-points/2, points/2) and the Nyquist mode assigned to m = -points/2.
// Axes beyond dim are collapsed to a single dummy point so loops stay d-agnostic.
struct Grid {
    int dim = 1;
    std::array<int, 3> points{1, 1, 1};
    std::array<double, 3> box_length{0.0, 0.0, 0.0};
    std::array<std::vector<double>, 3> wavenumbers;

    std::size_t total_points() const {
        return std::size_t(points[0]) * std::size_t(points[1]) * std::size_t(points[2]);
    }
    double cell_volume() const {
        double v = 1.0;
        for (int a = 0; a < dim; ++a) v *= box_length[a] / points[a];
        return v;
    }
    double volume() const {
        double v = 1.0;
        for (int a = 0; a < dim; ++a) v *= box_length[a];
        return v;
    }
    double node_coord(int axis, int index) const {
        return -0.5 * box_length[axis] + index * (box_length[axis] / points[axis]);
    }
    // Euclidean norm of the largest wavenumber vector the grid can represent
    // (all axes at their Nyquist magnitude pi*M/L).
    double max_wavenumber() const;
};

using GridPtr = std::shared_ptr<const Grid>;

// Validates: 1 <= d <= 3 (d = points.size()), points even and >= 8, box lengths > 0.
GridPtr make_grid(const std::vector<int>& points, const std::vector<double>& box_length);

// Calls fn(flat_index, k) for every mode in row-major order; k is the wavenumber
// vector, zero-padded above dim.
template <typename F>
void for_each_mode(const Grid& g, F&& fn) {
    const int n0 = g.points[0], n1 = g.points[1], n2 = g.points[2];
    std::size_t flat = 0;
    std::array<double, 3> k{0.0, 0.0, 0.0};
    for (int i0 = 0; i0 < n0; ++i0) {
        k[0] = g.wavenumbers[0][i0];
        for (int i1 = 0; i1 < n1; ++i1) {
            k[1] = g.wavenumbers[1][i1];
            for (int i2 = 0; i2 < n2; ++i2, ++flat) {
                k[2] = g.wavenumbers[2][i2];
                fn(flat, k);
            }
        }
    }
}

// Calls fn(flat_index, x) for every node in row-major order; x is the node
// coordinate in the centered box, zero-padded above dim.
template <typename F>
void for_each_node(const Grid& g, F&& fn) {
    const int n0 = g.points[0], n1 = g.points[1], n2 = g.points[2];
    std::size_t flat = 0;
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int i0 = 0; i0 < n0; ++i0) {
        if (g.dim >= 1) x[0] = g.node_coord(0, i0);
        for (int i1 = 0; i1 < n1; ++i1) {
            if (g.dim >= 2) x[1] = g.node_coord(1, i1);
            for (int i2 = 0; i2 < n2; ++i2, ++flat) {
                if (g.dim >= 3) x[2] = g.node_coord(2, i2);
                fn(flat, x);
            }
        }
    }
}

}  // namespace splitnls
