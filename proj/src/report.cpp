#include "steerbench/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "steerbench/errors.hpp"
#include "steerbench/format.hpp"

namespace steerbench {

namespace {

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\n") == std::string::npos) return value;
    std::string quoted = "\"";
    for (char c : value) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

constexpr const char* kCsvSchemaLine = "# schema_version=1\n";

} // namespace

std::string curves_to_csv(const std::vector<SteerabilityCurve>& curves) {
    std::ostringstream out;
    out << kCsvSchemaLine << "dimension,direction,k,mean,std\n";
    for (const SteerabilityCurve& curve : curves)
        for (const CurvePoint& point : curve.points)
            out << csv_field(curve.dimension) << ',' << to_string(curve.direction) << ','
                << point.budget_k << ',' << format_double(point.mean) << ','
                << format_double(point.std) << '\n';
    return out.str();
}

std::string indices_to_json(const std::vector<SteerabilityIndex>& indices) {
    nlohmann::json entries = nlohmann::json::array();
    for (const SteerabilityIndex& index : indices) {
        entries.push_back({
            {"dimension", index.dimension},
            {"direction", to_string(index.direction)},
            {"budget_k", index.budget_k},
            {"experiment_trial", index.experiment_trial},
            {"value", index.value},
            {"capacity", index.capacity},
            {"residual", index.residual},
            {"normalizer", index.normalizer},
        });
    }
    const nlohmann::json doc = {{"schema_version", 1}, {"indices", entries}};
    return doc.dump(2) + "\n";
}

std::string baseline_to_csv(const std::vector<BaselineRow>& rows) {
    std::ostringstream out;
    out << kCsvSchemaLine << "dimension,mean,std\n";
    for (const BaselineRow& row : rows)
        out << csv_field(row.dimension) << ',' << format_double(row.mean) << ','
            << format_double(row.std) << '\n';
    return out.str();
}

std::string baseline_to_markdown(const std::vector<BaselineRow>& rows) {
    std::ostringstream out;
    out << "| dimension | probability (mean ± std) |\n| --- | --- |\n";
    for (const BaselineRow& row : rows)
        out << "| " << row.dimension << " | " << format_fixed(row.mean, 3) << " ± "
            << format_fixed(row.std, 3) << " |\n";
    return out.str();
}

std::string one_shot_to_csv(const OneShotSummary& summary) {
    std::ostringstream out;
    out << kCsvSchemaLine << "category,positive,negative,dimensions\n";
    auto emit = [&out](const OneShotRow& row) {
        out << csv_field(row.category) << ',' << format_double(row.positive) << ','
            << format_double(row.negative) << ',' << row.dimension_count << '\n';
    };
    for (const OneShotRow& row : summary.rows) emit(row);
    emit(summary.average);
    return out.str();
}

std::string one_shot_to_markdown(const OneShotSummary& summary) {
    std::ostringstream out;
    out << "| category | positive | negative |\n| --- | ---: | ---: |\n";
    for (const OneShotRow& row : summary.rows)
        out << "| " << row.category << " | " << format_fixed(row.positive, 2) << " | "
            << format_fixed(row.negative, 2) << " |\n";
    out << "| **" << summary.average.category << "** | **"
        << format_fixed(summary.average.positive, 2) << "** | **"
        << format_fixed(summary.average.negative, 2) << "** |\n";
    return out.str();
}

// ─── SVG ─────────────────────────────────────────────────────────────────

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 62, kRight = 20, kTop = 44, kBottom = 48;

struct Scale {
    int k_min, k_max;

    double x(double k) const {
        const double span = std::max(1, k_max - k_min);
        return kLeft + (k - k_min) / span * (kWidth - kLeft - kRight);
    }
    double y(double v) const { // index axis fixed to [-1, 1]
        const double clamped = std::clamp(v, -1.0, 1.0);
        return kTop + (1.0 - clamped) / 2.0 * (kHeight - kTop - kBottom);
    }
};

const char* series_color(Valence v) {
    return v == Valence::positive ? "#2563eb" : "#dc2626";
}

std::string fmt(double v) { return format_fixed(v, 2); }

} // namespace

std::string curves_to_svg(const std::string& dimension,
                          const std::vector<SteerabilityCurve>& curves) {
    int k_min = std::numeric_limits<int>::max();
    int k_max = std::numeric_limits<int>::min();
    for (const SteerabilityCurve& curve : curves) {
        if (curve.dimension != dimension)
            throw Error("curve for '" + curve.dimension + "' in the '" + dimension + "' plot");
        for (const CurvePoint& point : curve.points) {
            k_min = std::min(k_min, point.budget_k);
            k_max = std::max(k_max, point.budget_k);
        }
    }
    if (k_min > k_max) { // no points at all: render an empty frame
        k_min = 0;
        k_max = 1;
    }
    const Scale scale{k_min, k_max};

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << kWidth << ' '
        << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    svg << "<text x=\"" << fmt(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-size=\"15\">" << dimension << "</text>\n";

    // horizontal gridlines every 0.5 index units
    for (int i = -2; i <= 2; ++i) {
        const double v = i / 2.0;
        const double yy = scale.y(v);
        const bool axis = i == 0;
        svg << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(yy) << "\" x2=\""
            << fmt(kWidth - kRight) << "\" y2=\"" << fmt(yy) << "\" stroke=\""
            << (axis ? "#9ca3af" : "#e5e7eb") << "\"/>\n";
        svg << "<text x=\"" << fmt(kLeft - 8) << "\" y=\"" << fmt(yy + 4)
            << "\" text-anchor=\"end\">" << format_fixed(v, 1) << "</text>\n";
    }
    // x ticks at integer budgets (thinned when dense)
    const int tick_step = std::max(1, (k_max - k_min) / 10);
    for (int k = k_min; k <= k_max; k += tick_step) {
        const double xx = scale.x(k);
        svg << "<line x1=\"" << fmt(xx) << "\" y1=\"" << fmt(kHeight - kBottom) << "\" x2=\""
            << fmt(xx) << "\" y2=\"" << fmt(kHeight - kBottom + 5) << "\" stroke=\"#6b7280\"/>\n";
        svg << "<text x=\"" << fmt(xx) << "\" y=\"" << fmt(kHeight - kBottom + 18)
            << "\" text-anchor=\"middle\">" << k << "</text>\n";
    }
    svg << "<text x=\"" << fmt((kLeft + kWidth - kRight) / 2) << "\" y=\""
        << fmt(kHeight - 12) << "\" text-anchor=\"middle\">steering budget k</text>\n";
    svg << "<text x=\"16\" y=\"" << fmt((kTop + kHeight - kBottom) / 2)
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << fmt((kTop + kHeight - kBottom) / 2) << ")\">steerability index</text>\n";

    for (const SteerabilityCurve& curve : curves) {
        if (curve.points.empty()) continue;
        const char* color = series_color(curve.direction);
        // dispersion band: mean + std forward, mean - std back
        std::ostringstream band;
        for (const CurvePoint& p : curve.points)
            band << fmt(scale.x(p.budget_k)) << ',' << fmt(scale.y(p.mean + p.std)) << ' ';
        for (auto it = curve.points.rbegin(); it != curve.points.rend(); ++it)
            band << fmt(scale.x(it->budget_k)) << ',' << fmt(scale.y(it->mean - it->std)) << ' ';
        svg << "<polygon points=\"" << band.str() << "\" fill=\"" << color
            << "\" opacity=\"0.15\"/>\n";
        std::ostringstream line;
        for (const CurvePoint& p : curve.points)
            line << fmt(scale.x(p.budget_k)) << ',' << fmt(scale.y(p.mean)) << ' ';
        svg << "<polyline points=\"" << line.str() << "\" fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        for (const CurvePoint& p : curve.points)
            svg << "<circle cx=\"" << fmt(scale.x(p.budget_k)) << "\" cy=\""
                << fmt(scale.y(p.mean)) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }

    // legend, top-right inside the frame
    double legend_y = kTop + 14;
    for (const SteerabilityCurve& curve : curves) {
        const double x0 = kWidth - kRight - 150;
        svg << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(legend_y - 4) << "\" x2=\""
            << fmt(x0 + 24) << "\" y2=\"" << fmt(legend_y - 4) << "\" stroke=\""
            << series_color(curve.direction) << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << fmt(x0 + 30) << "\" y=\"" << fmt(legend_y) << "\">"
            << to_string(curve.direction) << " steering</text>\n";
        legend_y += 18;
    }
    svg << "</svg>\n";
    return svg.str();
}

} // namespace steerbench
