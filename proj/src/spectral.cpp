#include "splitnls/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace splitnls {

bool all_finite(const Field& f) {
    for (const auto& v : f.values)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

namespace {

// Process-lifetime cache of FFTW plans keyed by (dims, sign). Plans are created
// with FFTW_ESTIMATE so results do not depend on runtime timing experiments,
// and FFTW_UNALIGNED so they can execute on any buffer via the new-array
// interface. Creation is serialized (the FFTW planner is not thread safe);
// execution through fftw_execute_dft is.
class PlanCache {
  public:
    fftw_plan get(const Grid& g, int sign) {
        const Key key{{g.points[0], g.points[1], g.points[2]}, sign};
        std::scoped_lock lock(mu_);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;

        std::vector<std::complex<double>> in(g.total_points()), out(g.total_points());
        int n[3] = {g.points[0], g.points[1], g.points[2]};
        fftw_plan p = fftw_plan_dft(g.dim, n,
                                    reinterpret_cast<fftw_complex*>(in.data()),
                                    reinterpret_cast<fftw_complex*>(out.data()),
                                    sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!p) throw std::runtime_error("fftw_plan_dft failed");
        plans_.emplace(key, p);
        return p;
    }

  private:
    using Key = std::pair<std::array<int, 3>, int>;
    std::mutex mu_;
    std::map<Key, fftw_plan> plans_;
};

PlanCache& plan_cache() {
    static PlanCache c;
    return c;
}

Field transform(const Field& f, int sign, Space out_space) {
    Field out;
    out.grid = f.grid;
    out.space = out_space;
    out.values.resize(f.values.size());
    fftw_plan p = plan_cache().get(*f.grid, sign);
    fftw_execute_dft(p,
                     reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(f.values.data())),
                     reinterpret_cast<fftw_complex*>(out.values.data()));
    const double scale = 1.0 / std::sqrt(static_cast<double>(f.grid->total_points()));
    for (auto& v : out.values) v *= scale;
    return out;
}

}  // namespace

Field forward_dft(const Field& f) {
    if (f.space != Space::physical)
        throw std::invalid_argument("forward_dft: input must be tagged physical");
    return transform(f, FFTW_FORWARD, Space::spectral);
}

Field inverse_dft(const Field& f) {
    if (f.space != Space::spectral)
        throw std::invalid_argument("inverse_dft: input must be tagged spectral");
    return transform(f, FFTW_BACKWARD, Space::physical);
}

std::vector<Field> gradient(const Field& f) {
    const Field fhat = (f.space == Space::spectral) ? f : forward_dft(f);
    std::vector<Field> out;
    out.reserve(f.grid->dim);
    for (int axis = 0; axis < f.grid->dim; ++axis) {
        Field comp = fhat;
        for_each_mode(*f.grid, [&](std::size_t i, const std::array<double, 3>& k) {
            comp.values[i] *= std::complex<double>(0.0, k[axis]);
        });
        out.push_back(inverse_dft(comp));
    }
    return out;
}

double lp_norm(const Field& f, double r) {
    if (!(r >= 1.0)) throw std::domain_error("lp_norm: r must satisfy r >= 1");
    if (f.space == Space::spectral && r != 2.0)
        throw std::invalid_argument("lp_norm: spectral input only supported for r = 2");
    if (std::isinf(r)) {
        double m = 0.0;
        for (const auto& v : f.values) m = std::max(m, std::abs(v));
        return m;
    }
    const double cv = f.grid->cell_volume();
    double s = 0.0;
    if (r == 2.0) {
        for (const auto& v : f.values) s += std::norm(v);
        return std::sqrt(cv * s);
    }
    for (const auto& v : f.values) s += std::pow(std::abs(v), r);
    return std::pow(cv * s, 1.0 / r);
}

double sobolev_norm(const Field& f, double s) {
    if (!(s >= 0.0)) throw std::domain_error("sobolev_norm: s must satisfy s >= 0");
    const Field fhat = (f.space == Space::spectral) ? f : forward_dft(f);
    const double cv = f.grid->cell_volume();
    double acc = 0.0;
    if (s == 0.0) {
        for (const auto& v : fhat.values) acc += std::norm(v);
    } else if (s == 1.0) {
        for_each_mode(*f.grid, [&](std::size_t i, const std::array<double, 3>& k) {
            const double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            acc += (1.0 + k2) * std::norm(fhat.values[i]);
        });
    } else {
        for_each_mode(*f.grid, [&](std::size_t i, const std::array<double, 3>& k) {
            const double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            acc += std::pow(1.0 + k2, s) * std::norm(fhat.values[i]);
        });
    }
    return std::sqrt(cv * acc);
}

double w1r_norm(const Field& f, double r) {
    const Field& phys = f;
    if (f.space != Space::physical)
        throw std::invalid_argument("w1r_norm: input must be tagged physical");
    double total = lp_norm(phys, r);
    for (const auto& comp : gradient(phys)) total += lp_norm(comp, r);
    return total;
}

double l2_distance(const Field& a, const Field& b) {
    if (a.grid.get() != b.grid.get() &&
        (a.grid->dim != b.grid->dim || a.grid->points != b.grid->points ||
         a.grid->box_length != b.grid->box_length))
        throw std::invalid_argument("l2_distance: fields must share a grid");
    if (a.space != b.space)
        throw std::invalid_argument("l2_distance: fields must share a space tag");
    if (a.values.size() != b.values.size())
        throw std::invalid_argument("l2_distance: size mismatch");
    const double cv = a.grid->cell_volume();
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) s += std::norm(a.values[i] - b.values[i]);
    return std::sqrt(cv * s);
}

}  // namespace splitnls
