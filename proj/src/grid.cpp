#include "chanflow/grid.hpp"

#include "chanflow/errors.hpp"
#include "quadrature.hpp"

#include <sstream>

namespace chanflow {

double Grid::integrate(const std::vector<double>& values) const {
    double s = 0.0;
    for (std::size_t n = 0; n < weight.size(); ++n) s += weight[n] * values[n];
    return s;
}

Grid make_grid(const ChannelProfile& profile, double a, double b, int nx, int ny) {
    if (nx < 8 || ny < 8 || !(b > a)) {
        std::ostringstream os;
        os << "grid [" << a << ", " << b << "] with " << nx << " x " << ny
           << " cells (need b > a and at least 8 cells per direction)";
        throw DegenerateGrid(os.str());
    }
    Grid g;
    g.profile_ = std::make_shared<const ChannelProfile>(profile);
    g.a = a;
    g.b = b;
    g.nx = nx;
    g.ny = ny;
    g.dxi = (b - a) / nx;
    g.deta = 1.0 / ny;

    g.xi.resize(nx + 1);
    g.walls.resize(nx + 1);
    for (int i = 0; i <= nx; ++i) {
        g.xi[i] = i == nx ? b : a + i * g.dxi;
        g.walls[i] = profile.eval(g.xi[i]);
        if (!(g.walls[i].width() > 0.0)) {
            throw DegenerateGrid("non-positive Jacobian at x1 = " + std::to_string(g.xi[i]));
        }
    }
    g.eta.resize(ny + 1);
    for (int j = 0; j <= ny; ++j) g.eta[j] = j == ny ? 1.0 : j * g.deta;

    // ξ weights: ∫ hat_i f over the two adjacent cells
    std::vector<double> wxi(nx + 1, 0.0);
    for (int i = 0; i < nx; ++i) {
        const double x0 = g.xi[i], x1 = g.xi[i + 1], h = x1 - x0;
        wxi[i] += detail::integrate(
            [&](double t) { return (x1 - t) / h * profile.width(t); }, x0, x1, profile.breakpoints(), 1e-12);
        wxi[i + 1] += detail::integrate(
            [&](double t) { return (t - x0) / h * profile.width(t); }, x0, x1, profile.breakpoints(), 1e-12);
    }

    const int n = g.size();
    g.eta_x.resize(n);
    g.eta_xx.resize(n);
    g.weight.resize(n);
    for (int i = 0; i <= nx; ++i) {
        const WallSample& w = g.walls[i];
        const double f = w.width(), fp = w.dwidth(), fpp = w.ddwidth();
        for (int j = 0; j <= ny; ++j) {
            const int k = g.index(i, j);
            const double e = g.eta[j];
            const double ex = -(w.df1 + e * fp) / f;
            g.eta_x[k] = ex;
            g.eta_xx[k] = -(w.ddf1 + e * fpp) / f - 2.0 * ex * fp / f;
            const double weta = (j == 0 || j == ny) ? 0.5 * g.deta : g.deta;
            g.weight[k] = wxi[i] * weta;
        }
    }
    return g;
}

}  // namespace chanflow
