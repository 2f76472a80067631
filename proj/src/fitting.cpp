#include "collapsim/fitting.hpp"

#include <algorithm>
#include <cmath>

#include "collapsim/error.hpp"

namespace collapsim {

namespace {

struct Moments {
    double mean_x = 0.0;
    double mean_y = 0.0;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
};

Moments moments(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size(), ErrorKind::Data, "fit series lengths differ");
    require(x.size() >= 2, ErrorKind::Data, "fit needs at least two points");
    Moments m;
    const auto n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        m.mean_x += x[i];
        m.mean_y += y[i];
    }
    m.mean_x /= n;
    m.mean_y /= n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - m.mean_x;
        const double dy = y[i] - m.mean_y;
        m.sxx += dx * dx;
        m.sxy += dx * dy;
        m.syy += dy * dy;
    }
    require(m.sxx > 0.0, ErrorKind::Data, "fit abscissae are all equal");
    return m;
}

}  // namespace

double ols_slope(std::span<const double> x, std::span<const double> y) {
    const Moments m = moments(x, y);
    return m.sxy / m.sxx;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
    const Moments m = moments(x, y);
    LinearFit fit;
    fit.points = x.size();
    fit.slope = m.sxy / m.sxx;
    fit.intercept = m.mean_y - fit.slope * m.mean_x;

    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ss_res += r * r;
    }
    const double scale = std::max(1.0, m.mean_y * m.mean_y) * static_cast<double>(x.size());
    fit.r_squared = m.syy <= 1e-24 * scale ? 1.0 : std::max(0.0, 1.0 - ss_res / m.syy);
    if (x.size() > 2) fit.slope_se = std::sqrt(ss_res / (static_cast<double>(x.size()) - 2.0) / m.sxx);
    return fit;
}

}  // namespace collapsim
