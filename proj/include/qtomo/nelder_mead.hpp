#pragma once

// Nelder-Mead downhill simplex with dimension-adaptive coefficients
// (reflection 1, expansion 1 + 2/n, contraction 0.75 - 1/(2n), shrink 1 - 1/n).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>

namespace qtomo {

template <std::size_t N>
struct SimplexResult {
    std::array<double, N> x{};
    double value = std::numeric_limits<double>::infinity();
    int evaluations = 0;
    bool converged = false;
};

struct SimplexOptions {
    int max_evaluations = 20000;
    double tolerance = 1e-10;     // stop when f_worst - f_best < tolerance * (1 + |f_best|)
    double initial_step = 0.1;    // offset of the initial vertices along each axis
};

template <std::size_t N, typename F>
SimplexResult<N> nelder_mead(F&& f, const std::array<double, N>& start, const SimplexOptions& opt)
{
    using Point = std::array<double, N>;
    constexpr double n = static_cast<double>(N);
    constexpr double alpha = 1.0;
    constexpr double gamma = 1.0 + 2.0 / n;
    constexpr double rho = 0.75 - 1.0 / (2.0 * n);
    constexpr double sigma = 1.0 - 1.0 / n;

    SimplexResult<N> res;
    std::array<Point, N + 1> x;
    std::array<double, N + 1> fx;

    auto eval = [&](const Point& p) {
        ++res.evaluations;
        const double v = f(p);
        return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
    };

    x[0] = start;
    for (std::size_t i = 0; i < N; ++i) {
        x[i + 1] = start;
        x[i + 1][i] += opt.initial_step;
    }
    for (std::size_t j = 0; j <= N; ++j) fx[j] = eval(x[j]);

    std::array<std::size_t, N + 1> order;
    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
        std::array<Point, N + 1> xs;
        std::array<double, N + 1> fs;
        for (std::size_t j = 0; j <= N; ++j) {
            xs[j] = x[order[j]];
            fs[j] = fx[order[j]];
        }
        x = xs;
        fx = fs;
    };

    auto along = [](const Point& base, const Point& toward, double t) {
        Point p;
        for (std::size_t i = 0; i < N; ++i) p[i] = base[i] + t * (toward[i] - base[i]);
        return p;
    };

    for (;;) {
        sort_simplex();
        const double spread = fx[N] - fx[0];
        if (std::isfinite(fx[0]) && spread < opt.tolerance * (1.0 + std::abs(fx[0]))) {
            res.converged = true;
            break;
        }
        if (res.evaluations >= opt.max_evaluations) break;

        Point c{};
        for (std::size_t j = 0; j < N; ++j)
            for (std::size_t i = 0; i < N; ++i) c[i] += x[j][i];
        for (auto& ci : c) ci /= n;

        const Point xr = along(c, x[N], -alpha);
        const double fr = eval(xr);

        if (fr < fx[0]) {
            const Point xe = along(c, x[N], -alpha * gamma);
            const double fe = eval(xe);
            if (fe < fr) {
                x[N] = xe;
                fx[N] = fe;
            } else {
                x[N] = xr;
                fx[N] = fr;
            }
            continue;
        }
        if (fr < fx[N - 1]) {
            x[N] = xr;
            fx[N] = fr;
            continue;
        }

        const bool outside = fr < fx[N];
        const Point xc = outside ? along(c, xr, rho) : along(c, x[N], rho);
        const double fc = eval(xc);
        if (fc < (outside ? fr : fx[N])) {
            x[N] = xc;
            fx[N] = fc;
            continue;
        }

        for (std::size_t j = 1; j <= N; ++j) {
            x[j] = along(x[0], x[j], sigma);
            fx[j] = eval(x[j]);
        }
    }

    res.x = x[0];
    res.value = fx[0];
    return res;
}

} // namespace qtomo
