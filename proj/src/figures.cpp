#include "sentinel/figures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "sentinel/error.hpp"
#include "sentinel/io.hpp"

namespace sentinel {

namespace {

constexpr double kWidth = 900.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 30.0;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// Smallest 1, 2 or 5 times a power of ten that is >= v (at least 1).
double nice_ceiling(double v) {
    if (!(v > 1.0)) return 1.0;
    const double p = std::pow(10.0, std::floor(std::log10(v)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * p >= v) return m * p;
    return 10.0 * p;
}

std::string format_tick(double v) {
    if (v == std::floor(v) && std::abs(v) < 1e15) return std::to_string(static_cast<long long>(v));
    return format_double(std::round(v * 1e6) / 1e6);
}

struct Frame {
    double x0, y0, w, h;  // plot area, y0 at the top
    double day_lo, day_hi;
    double ymax;

    double x(double day) const { return x0 + (day - day_lo) / (day_hi - day_lo) * w; }
    double y(double v) const { return y0 + h - v / ymax * h; }
};

void axes(std::ostringstream& out, const Frame& f, const std::string& title, const std::string& ylabel,
          bool day_labels) {
    out << "<g class=\"axes\">\n";
    out << "<rect x=\"" << num(f.x0) << "\" y=\"" << num(f.y0) << "\" width=\"" << num(f.w) << "\" height=\""
        << num(f.h) << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = f.ymax * i / 4.0;
        out << "<line x1=\"" << num(f.x0 - 4) << "\" y1=\"" << num(f.y(v)) << "\" x2=\"" << num(f.x0) << "\" y2=\""
            << num(f.y(v)) << "\" stroke=\"#444\"/>\n";
        out << "<text x=\"" << num(f.x0 - 7) << "\" y=\"" << num(f.y(v) + 4)
            << "\" font-size=\"11\" text-anchor=\"end\">" << format_tick(v) << "</text>\n";
    }
    const double span = f.day_hi - f.day_lo;
    const double step = span > 200 ? 50.0 : span > 80 ? 20.0 : span > 30 ? 10.0 : 5.0;
    for (double d = std::ceil(f.day_lo / step) * step; d <= f.day_hi; d += step) {
        out << "<line x1=\"" << num(f.x(d)) << "\" y1=\"" << num(f.y0 + f.h) << "\" x2=\"" << num(f.x(d))
            << "\" y2=\"" << num(f.y0 + f.h + 4) << "\" stroke=\"#444\"/>\n";
        if (day_labels)
            out << "<text x=\"" << num(f.x(d)) << "\" y=\"" << num(f.y0 + f.h + 16)
                << "\" font-size=\"11\" text-anchor=\"middle\">" << format_tick(d) << "</text>\n";
    }
    out << "<text x=\"" << num(f.x0) << "\" y=\"" << num(f.y0 - 8) << "\" font-size=\"13\" font-weight=\"bold\">"
        << escape(title) << "</text>\n";
    out << "<text transform=\"translate(" << num(f.x0 - 50) << "," << num(f.y0 + f.h / 2)
        << ") rotate(-90)\" font-size=\"11\" text-anchor=\"middle\">" << escape(ylabel) << "</text>\n";
    out << "</g>\n";
}

void bars(std::ostringstream& out, const Frame& f, std::span<const std::int64_t> values, const std::string& cls,
          const std::string& color) {
    const double bw = f.w / (f.day_hi - f.day_lo);
    out << "<g class=\"" << cls << "\" fill=\"" << color << "\">\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = static_cast<double>(values[i]);
        const double day = static_cast<double>(i + 1);
        const double top = f.y(v);
        out << "<rect class=\"bar\" data-day=\"" << i + 1 << "\" data-value=\"" << values[i] << "\" x=\""
            << num(f.x(day - 0.5)) << "\" y=\"" << num(top) << "\" width=\"" << num(bw * 0.9) << "\" height=\""
            << num(f.y0 + f.h - top) << "\"/>\n";
    }
    out << "</g>\n";
}

std::string header(double height) {
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\"" << num(height)
        << "\" viewBox=\"0 0 " << num(kWidth) << " " << num(height) << "\" font-family=\"sans-serif\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    return out.str();
}

const char* metric_color(Metric m) {
    switch (m) {
        case Metric::FAR: return "#d62728";
        case Metric::ADD: return "#ff7f0e";
        case Metric::AATQ: return "#2ca02c";
        case Metric::FATQ: return "#17becf";
        case Metric::WAATQ: return "#9467bd";
        case Metric::WFATQ: return "#8c564b";
    }
    return "#000";
}

}  // namespace

std::string render_epidemic_figure(const EpidemicSeries& series) {
    if (series.new_inf.empty()) throw ContractError("epidemic figure needs a non-empty series");
    const double T = static_cast<double>(series.horizon());
    const double panel_h = 200.0;
    const double height = 2 * panel_h + 150.0;

    auto peak = [](std::span<const std::int64_t> v) {
        return static_cast<double>(*std::max_element(v.begin(), v.end()));
    };
    const Frame top{kLeft, 40.0, kWidth - kLeft - kRight, panel_h, 0.5, T + 0.5, nice_ceiling(peak(series.new_inf))};
    const Frame bottom{kLeft, 40.0 + panel_h + 60.0, kWidth - kLeft - kRight, panel_h, 0.5, T + 0.5,
                       nice_ceiling(peak(series.reported))};

    std::ostringstream out;
    out << header(height);
    out << "<g id=\"new-infections\">\n";
    axes(out, top, "New infections (season " + std::to_string(series.replicate_id) + ")", "new infections", true);
    bars(out, top, series.new_inf, "new-inf", "#4c72b0");
    out << "</g>\n<g id=\"reported-cases\">\n";
    axes(out, bottom, "Reported cases", "reported cases", true);
    bars(out, bottom, series.reported, "reported", "#c44e52");
    out << "</g>\n";
    out << "<text x=\"" << num(kLeft + (kWidth - kLeft - kRight) / 2) << "\" y=\"" << num(height - 12)
        << "\" font-size=\"12\" text-anchor=\"middle\">day</text>\n";
    out << "</svg>\n";
    return out.str();
}

std::string render_alert_figure(std::span<const SurveillanceRow> year_rows,
                                const std::map<Metric, std::vector<int>>& alert_days, int ref) {
    if (year_rows.empty()) throw ContractError("alert figure needs at least one row");
    const double day_lo = year_rows.front().date - 0.5;
    const double day_hi = year_rows.back().date + 0.5;
    if (ref < year_rows.front().date || ref > year_rows.back().date)
        throw ContractError("reference date " + std::to_string(ref) + " lies outside the plotted days");

    std::vector<Metric> rows, missing;
    for (Metric m : kAllMetrics) {
        auto it = alert_days.find(m);
        (it != alert_days.end() && !it->second.empty() ? rows : missing).push_back(m);
    }

    double pct_max = 0.0, rep_max = 0.0;
    for (const auto& r : year_rows) {
        pct_max = std::max(pct_max, 100.0 * r.pct_absent);
        rep_max = std::max(rep_max, static_cast<double>(r.reported_cases));
    }
    const double plot_w = kWidth - kLeft - 60.0;
    const Frame abs_frame{kLeft, 40.0, plot_w, 220.0, day_lo, day_hi, nice_ceiling(pct_max)};
    const Frame rep_frame{kLeft, 40.0, plot_w, 220.0, day_lo, day_hi, nice_ceiling(rep_max)};
    const double row_h = 22.0;
    const double rows_top = abs_frame.y0 + abs_frame.h + 40.0;
    const double legend_top = rows_top + row_h * static_cast<double>(rows.size()) + 30.0;
    const double height = legend_top + 20.0 * static_cast<double>(2 + missing.size()) + 20.0;

    std::ostringstream out;
    out << header(height);
    axes(out, abs_frame, "Absenteeism, reported cases and alerts", "% absent", true);

    // secondary axis for reported cases
    for (int i = 0; i <= 4; ++i) {
        const double v = rep_frame.ymax * i / 4.0;
        out << "<text x=\"" << num(kLeft + plot_w + 6) << "\" y=\"" << num(rep_frame.y(v) + 4)
            << "\" font-size=\"11\" fill=\"#c44e52\">" << format_tick(v) << "</text>\n";
    }

    auto area = [&](const Frame& f, auto value, const std::string& id, const std::string& color) {
        out << "<path id=\"" << id << "\" fill=\"" << color << "\" fill-opacity=\"0.45\" stroke=\"" << color
            << "\" d=\"M" << num(f.x(year_rows.front().date)) << "," << num(f.y(0));
        for (const auto& r : year_rows) out << " L" << num(f.x(r.date)) << "," << num(f.y(value(r)));
        out << " L" << num(f.x(year_rows.back().date)) << "," << num(f.y(0)) << " Z\"/>\n";
    };
    area(abs_frame, [](const SurveillanceRow& r) { return 100.0 * r.pct_absent; }, "absenteeism", "#4c72b0");
    area(rep_frame, [](const SurveillanceRow& r) { return static_cast<double>(r.reported_cases); }, "reported-cases",
         "#c44e52");

    const double ref_x = abs_frame.x(ref);
    out << "<line id=\"reference\" data-day=\"" << ref << "\" x1=\"" << num(ref_x) << "\" y1=\"" << num(abs_frame.y0)
        << "\" x2=\"" << num(ref_x) << "\" y2=\"" << num(rows_top + row_h * static_cast<double>(rows.size()))
        << "\" stroke=\"black\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\"/>\n";

    out << "<g id=\"alerts\">\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Metric m = rows[i];
        const double y = rows_top + row_h * (static_cast<double>(i) + 0.5);
        out << "<g class=\"alert-row\" data-metric=\"" << metric_name(m) << "\">\n";
        out << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(y + 4) << "\" font-size=\"11\" text-anchor=\"end\">"
            << metric_name(m) << "</text>\n";
        for (int day : alert_days.at(m))
            out << "<circle class=\"alert\" data-metric=\"" << metric_name(m) << "\" data-day=\"" << day
                << "\" cx=\"" << num(abs_frame.x(day)) << "\" cy=\"" << num(y) << "\" r=\"4\" fill=\""
                << metric_color(m) << "\"/>\n";
        out << "</g>\n";
    }
    out << "</g>\n";

    out << "<g id=\"legend\" font-size=\"11\">\n";
    double ly = legend_top;
    out << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(ly - 9) << "\" width=\"12\" height=\"10\" fill=\"#4c72b0\" "
        << "fill-opacity=\"0.45\"/><text x=\"" << num(kLeft + 18) << "\" y=\"" << num(ly)
        << "\">% students absent (left axis)</text>\n";
    out << "<rect x=\"" << num(kLeft + 260) << "\" y=\"" << num(ly - 9)
        << "\" width=\"12\" height=\"10\" fill=\"#c44e52\" fill-opacity=\"0.45\"/><text x=\"" << num(kLeft + 278)
        << "\" y=\"" << num(ly) << "\">reported cases (right axis)</text>\n";
    out << "<line x1=\"" << num(kLeft + 500) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(kLeft + 530)
        << "\" y2=\"" << num(ly - 4) << "\" stroke=\"black\" stroke-dasharray=\"6,4\"/><text x=\"" << num(kLeft + 536)
        << "\" y=\"" << num(ly) << "\">reference date (day " << ref << ")</text>\n";
    ly += 20.0;
    for (Metric m : missing) {
        out << "<text class=\"no-alert\" data-metric=\"" << metric_name(m) << "\" x=\"" << num(kLeft) << "\" y=\""
            << num(ly) << "\">" << metric_name(m) << ": no alert raised</text>\n";
        ly += 20.0;
    }
    out << "</g>\n";
    out << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << num(abs_frame.y0 + abs_frame.h + 30)
        << "\" font-size=\"12\" text-anchor=\"middle\">day</text>\n";
    out << "</svg>\n";
    return out.str();
}

void emit_epidemic_figure(const EpidemicSeries& series, const std::filesystem::path& path) {
    write_text(render_epidemic_figure(series), path);
}

void emit_alert_figure(std::span<const SurveillanceRow> year_rows, const std::map<Metric, std::vector<int>>& alert_days,
                       int ref, const std::filesystem::path& path) {
    write_text(render_alert_figure(year_rows, alert_days, ref), path);
}

}  // namespace sentinel
