#pragma once

// Static SVG line charts of averaged figures of merit versus dark-count rate.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qtomo/harness.hpp"

namespace qtomo {

enum class Metric { Fidelity, Purity, Entropy };

inline std::optional<Metric> parse_metric(std::string_view s) noexcept
{
    if (s == "fidelity") return Metric::Fidelity;
    if (s == "purity") return Metric::Purity;
    if (s == "entropy") return Metric::Entropy;
    return std::nullopt;
}

inline double metric_value(const SweepRecord& r, Metric m) noexcept
{
    switch (m) {
    case Metric::Fidelity: return r.F_av;
    case Metric::Purity: return r.gamma_av;
    case Metric::Entropy: return r.S_av;
    }
    return 0.0;
}

inline std::string_view metric_axis_label(Metric m) noexcept
{
    switch (m) {
    case Metric::Fidelity: return "average fidelity F_av";
    case Metric::Purity: return "average purity gamma_av";
    case Metric::Entropy: return "average entropy S_av";
    }
    return "";
}

struct PlotSeries {
    Scheme scheme;
    std::vector<std::pair<double, double>> points;  // (p, value), ascending p
};

/// Series per scheme (SIC first) for the given photon mean.
inline std::vector<PlotSeries> collect_series(const std::vector<SweepRecord>& records, Metric metric, double photon_mean)
{
    std::map<Scheme, PlotSeries> by_scheme;
    for (const auto& r : records) {
        if (r.photon_mean != photon_mean) continue;
        auto& s = by_scheme.try_emplace(r.scheme, PlotSeries{r.scheme, {}}).first->second;
        s.points.emplace_back(r.p, metric_value(r, metric));
    }
    std::vector<PlotSeries> out;
    for (auto& [scheme, s] : by_scheme) {
        std::sort(s.points.begin(), s.points.end());
        out.push_back(std::move(s));
    }
    return out;
}

namespace detail {

inline std::string fmt(double x, int prec = 3)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", prec, x);
    return buf;
}

} // namespace detail

/// Throws InvalidInput if no record matches `photon_mean`.
inline std::string render_svg(const std::vector<SweepRecord>& records, Metric metric, double photon_mean)
{
    const auto series = collect_series(records, metric, photon_mean);
    if (series.empty()) throw InvalidInput("plot: no records for photon mean " + format_real(photon_mean));

    constexpr double width = 640, height = 420;
    constexpr double left = 70, right = 20, top = 40, bottom = 60;
    const double pw = width - left - right;
    const double ph = height - top - bottom;

    double ylo = metric == Metric::Entropy ? 0.0 : 1.0, yhi = metric == Metric::Entropy ? std::log(3.0) : 0.0;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            ylo = std::min(ylo, y);
            yhi = std::max(yhi, y);
        }
    if (metric != Metric::Entropy) {
        ylo = std::min(ylo, metric == Metric::Purity ? 1.0 / 3.0 : 0.0);
        yhi = std::max(yhi, 1.0);
    }
    const double pad = 0.05 * std::max(yhi - ylo, 1e-6);
    ylo -= pad;
    yhi += pad;

    auto sx = [&](double p) { return left + p * pw; };
    auto sy = [&](double y) { return top + (yhi - y) / (yhi - ylo) * ph; };

    static constexpr const char* colors[] = {"#1f77b4", "#d62728"};
    static constexpr const char* dashes[] = {"", " stroke-dasharray=\"6 4\""};

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << metric_axis_label(metric)
       << " vs dark count rate, N = " << format_real(photon_mean) << "</text>\n";

    // axes and ticks
    os << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
       << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double p = i / 5.0;
        os << "<line x1=\"" << sx(p) << "\" y1=\"" << top + ph << "\" x2=\"" << sx(p) << "\" y2=\"" << top + ph + 5
           << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << sx(p) << "\" y=\"" << top + ph + 20 << "\" text-anchor=\"middle\">" << detail::fmt(p, 1)
           << "</text>\n";
        const double y = ylo + (yhi - ylo) * i / 5.0;
        os << "<line x1=\"" << left - 5 << "\" y1=\"" << sy(y) << "\" x2=\"" << left << "\" y2=\"" << sy(y)
           << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << left - 8 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\">" << detail::fmt(y)
           << "</text>\n";
    }
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">dark count rate p</text>\n";
    os << "<text x=\"18\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << top + ph / 2
       << ")\">" << metric_axis_label(metric) << "</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const std::size_t c = s.scheme == Scheme::SIC ? 0 : 1;
        os << "<polyline fill=\"none\" stroke=\"" << colors[c] << "\" stroke-width=\"2\"" << dashes[c] << " points=\"";
        for (std::size_t k = 0; k < s.points.size(); ++k)
            os << (k ? " " : "") << detail::fmt(sx(s.points[k].first), 2) << ',' << detail::fmt(sy(s.points[k].second), 2);
        os << "\"/>\n";

        const double ly = top + 15 + 18.0 * static_cast<double>(i);
        const double lx = left + pw - 120;
        os << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 30 << "\" y2=\"" << ly << "\" stroke=\""
           << colors[c] << "\" stroke-width=\"2\"" << dashes[c] << "/>\n";
        os << "<text x=\"" << lx + 36 << "\" y=\"" << ly + 4 << "\">" << scheme_display_name(s.scheme) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace qtomo
