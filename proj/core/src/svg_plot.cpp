#include "mfcavi/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

namespace mfcavi {

namespace {

constexpr double kWidth = 860.0;
constexpr double kHeight = 540.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 830.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 490.0;

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
}

struct Axes {
    double n_min, n_max;
    double y_min, y_max;  // log10 of gap

    double x(double n) const {
        const double t = n_max > n_min ? (n - n_min) / (n_max - n_min) : 0.5;
        return kLeft + t * (kRight - kLeft);
    }
    double y(double log_gap) const {
        const double t = y_max > y_min ? (log_gap - y_min) / (y_max - y_min) : 0.5;
        return kBottom - t * (kBottom - kTop);
    }
};

std::string polyline(const std::vector<std::pair<double, double>>& points, const Axes& axes,
                     const std::string& cls, const std::string& style) {
    std::string out = "  <polyline class=\"" + cls + "\" " + style + " points=\"";
    bool first = true;
    for (const auto& [n, log_gap] : points) {
        if (!first) out += " ";
        out += num(axes.x(n)) + "," + num(axes.y(log_gap));
        first = false;
    }
    out += "\"/>\n";
    return out;
}

}  // namespace

std::string render_gap_plot_svg(const CsvTable& table) {
    const auto trial_col = table.column("trial");
    const auto n_col = table.column("n");
    const auto gap_col = table.column("gap");
    if (!trial_col || !n_col || !gap_col)
        throw std::runtime_error("plot: CSV needs columns trial, n and gap");
    if (table.rows.empty()) throw std::runtime_error("plot: CSV has no data rows");
    const auto envelope_col = table.column("envelope");

    // floor nonpositive gaps at the smallest positive value seen
    double positive_floor = std::numeric_limits<double>::infinity();
    for (const auto& row : table.rows) {
        const double g = row[static_cast<std::size_t>(*gap_col)];
        if (g > 0.0) positive_floor = std::min(positive_floor, g);
    }
    if (!std::isfinite(positive_floor)) positive_floor = 1e-300;
    const auto log_gap = [&](double g) { return std::log10(std::max(g, positive_floor)); };

    std::map<int, std::vector<std::pair<double, double>>> trials;
    std::map<int, std::pair<double, int>> mean_acc;  // n -> (sum gap, count)
    std::map<int, double> envelope;
    Axes axes{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
              std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& row : table.rows) {
        const int trial = static_cast<int>(row[static_cast<std::size_t>(*trial_col)]);
        const double n = row[static_cast<std::size_t>(*n_col)];
        const double g = row[static_cast<std::size_t>(*gap_col)];
        trials[trial].emplace_back(n, log_gap(g));
        auto& [sum, count] = mean_acc[static_cast<int>(n)];
        sum += g;
        ++count;
        if (envelope_col) envelope[static_cast<int>(n)] = row[static_cast<std::size_t>(*envelope_col)];
        axes.n_min = std::min(axes.n_min, n);
        axes.n_max = std::max(axes.n_max, n);
        axes.y_min = std::min(axes.y_min, log_gap(g));
        axes.y_max = std::max(axes.y_max, log_gap(g));
    }
    if (envelope_col)
        for (const auto& [n, env] : envelope) {
            axes.y_min = std::min(axes.y_min, log_gap(env));
            axes.y_max = std::max(axes.y_max, log_gap(env));
        }
    if (axes.y_max - axes.y_min < 1.0) axes.y_max = axes.y_min + 1.0;
    axes.y_min -= 0.05 * (axes.y_max - axes.y_min);
    axes.y_max += 0.05 * (axes.y_max - axes.y_min);

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
           num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
    svg += "  <rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
           "\" fill=\"white\"/>\n";

    // axes
    svg += "  <line x1=\"" + num(kLeft) + "\" y1=\"" + num(kBottom) + "\" x2=\"" + num(kRight) +
           "\" y2=\"" + num(kBottom) + "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg += "  <line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) +
           "\" y2=\"" + num(kBottom) + "\" stroke=\"black\" stroke-width=\"1\"/>\n";

    // y ticks at integer decades
    const int dec_lo = static_cast<int>(std::ceil(axes.y_min));
    const int dec_hi = static_cast<int>(std::floor(axes.y_max));
    const int dec_step = std::max(1, (dec_hi - dec_lo) / 8 + ((dec_hi - dec_lo) % 8 ? 1 : 0));
    for (int dec = dec_lo; dec <= dec_hi; dec += dec_step) {
        const double y = axes.y(dec);
        svg += "  <line x1=\"" + num(kLeft - 5) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kLeft) +
               "\" y2=\"" + num(y) + "\" stroke=\"black\" stroke-width=\"1\"/>\n";
        svg += "  <text x=\"" + num(kLeft - 8) + "\" y=\"" + num(y + 4) +
               "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"12\">1e" +
               std::to_string(dec) + "</text>\n";
    }
    // x ticks
    const int x_ticks = 6;
    for (int t = 0; t <= x_ticks; ++t) {
        const double n = axes.n_min + (axes.n_max - axes.n_min) * t / x_ticks;
        const double x = axes.x(n);
        svg += "  <line x1=\"" + num(x) + "\" y1=\"" + num(kBottom) + "\" x2=\"" + num(x) +
               "\" y2=\"" + num(kBottom + 5) + "\" stroke=\"black\" stroke-width=\"1\"/>\n";
        svg += "  <text x=\"" + num(x) + "\" y=\"" + num(kBottom + 20) +
               "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"12\">" +
               std::to_string(static_cast<long long>(std::llround(n))) + "</text>\n";
    }
    svg += "  <text x=\"" + num((kLeft + kRight) / 2) + "\" y=\"" + num(kBottom + 42) +
           "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"14\">update count"
           "</text>\n";
    svg += "  <text x=\"18\" y=\"" + num((kTop + kBottom) / 2) +
           "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"14\" "
           "transform=\"rotate(-90 18 " +
           num((kTop + kBottom) / 2) + ")\">suboptimality gap</text>\n";

    // thin per-trial traces
    for (const auto& [trial, points] : trials)
        svg += polyline(points, axes, "trial",
                        "fill=\"none\" stroke=\"#9ecae1\" stroke-width=\"1\" opacity=\"0.7\"");

    // thick ensemble mean
    std::vector<std::pair<double, double>> mean_points;
    mean_points.reserve(mean_acc.size());
    for (const auto& [n, acc] : mean_acc)
        mean_points.emplace_back(static_cast<double>(n), log_gap(acc.first / acc.second));
    svg += polyline(mean_points, axes, "mean",
                    "fill=\"none\" stroke=\"#08519c\" stroke-width=\"2.5\"");

    // dashed theoretical envelope
    if (envelope_col) {
        std::vector<std::pair<double, double>> env_points;
        env_points.reserve(envelope.size());
        for (const auto& [n, env] : envelope)
            env_points.emplace_back(static_cast<double>(n), log_gap(env));
        svg += polyline(env_points, axes, "envelope",
                        "fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.8\" "
                        "stroke-dasharray=\"7 4\"");
    }

    svg += "</svg>\n";
    return svg;
}

}  // namespace mfcavi
