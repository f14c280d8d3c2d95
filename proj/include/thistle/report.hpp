#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "eval.hpp"

namespace thistle {

inline std::string render_table(std::span<const EvalReport> reports) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof line, "%-15s %7s %3s %7s %8s %8s %8s %10s %10s %10s %10s\n",
                  "backend", "N", "k", "queries", "accuracy", "hit@k", "recall", "dist/query",
                  "insert_s", "query_s", "total_s");
    out << line;
    for (const auto& r : reports) {
        std::snprintf(line, sizeof line,
                      "%-15s %7zu %3zu %7zu %8.4f %8.4f %8.4f %10.1f %10.4f %10.4f %10.4f\n",
                      std::string(to_string(r.backend)).c_str(), r.n, r.k, r.queries, r.accuracy,
                      r.hit_rate_at_k, r.recall_vs_exact, r.mean_distance_evals,
                      seconds(r.insert_time), seconds(r.query_time), seconds(r.total_time));
        out << line;
    }
    return out.str();
}

inline nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json params;
    if (r.backend == Backend::hnsw_cosine || r.backend == Backend::hnsw_euclidean) {
        params = {{"M", r.config.hnsw.M},
                  {"ef_construction", r.config.hnsw.ef_construction},
                  {"ef_search", r.config.hnsw.ef_search},
                  {"level_norm", r.config.hnsw.level_norm},
                  {"max_layers", r.config.hnsw.max_layers}};
    } else if (r.backend == Backend::lsh) {
        params = {{"n_projections", r.config.lsh.n_projections},
                  {"n_tables", r.config.lsh.n_tables}};
    } else {
        params = nlohmann::json::object();
    }
    const std::uint64_t seed =
        r.backend == Backend::lsh ? r.config.lsh.seed : r.config.hnsw.seed;
    return {{"backend", std::string(to_string(r.backend))},
            {"n", r.n},
            {"k", r.k},
            {"queries", r.queries},
            {"correct", r.correct},
            {"accuracy", r.accuracy},
            {"hit_rate_at_k", r.hit_rate_at_k},
            {"recall_vs_exact", r.recall_vs_exact},
            {"mean_distance_evals", r.mean_distance_evals},
            {"insert_time_ns", r.insert_time.count()},
            {"query_time_ns", r.query_time.count()},
            {"total_time_ns", r.total_time.count()},
            {"dim", r.config.dim},
            {"normalize", r.config.normalize_on_insert},
            {"params", params},
            {"seed", seed}};
}

/// One JSON object per line, one line per report.
inline void write_report_jsonl(const std::filesystem::path& path,
                               std::span<const EvalReport> reports) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorCode::io_error, "cannot open '" + path.string() + "' for writing");
    for (const auto& r : reports) out << to_json(r).dump() << '\n';
    if (!out) fail(ErrorCode::io_error, "write to '" + path.string() + "' failed");
}

namespace detail {

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points; // (N, value)
};

inline std::string svg_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out += c;
        }
    }
    return out;
}

/// Line chart with a log10 x axis; the y axis is log10 when `log_y`.
inline std::string line_chart(const std::string& title, const std::string& y_label,
                              const std::vector<Series>& series, bool log_y) {
    constexpr double W = 720, H = 440, L = 80, R = 180, T = 40, B = 60;
    const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

    double x_min = INFINITY, x_max = -INFINITY, y_min = INFINITY, y_max = -INFINITY;
    auto ty = [&](double v) { return log_y ? std::log10(std::max(v, 1e-9)) : v; };
    for (const auto& s : series) {
        for (auto [x, y] : s.points) {
            x_min = std::min(x_min, std::log10(x));
            x_max = std::max(x_max, std::log10(x));
            y_min = std::min(y_min, ty(y));
            y_max = std::max(y_max, ty(y));
        }
    }
    if (!std::isfinite(x_min)) x_min = 0, x_max = 1, y_min = 0, y_max = 1;
    if (!log_y) y_min = std::min(y_min, 0.0), y_max = std::max(y_max, 1.0);
    if (x_max - x_min < 1e-12) x_min -= 0.5, x_max += 0.5;
    if (y_max - y_min < 1e-12) y_min -= 0.5, y_max += 0.5;

    auto px = [&](double x) { return L + (std::log10(x) - x_min) / (x_max - x_min) * (W - L - R); };
    auto py = [&](double y) { return H - B - (ty(y) - y_min) / (y_max - y_min) * (H - T - B); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << svg_escape(title) << "</text>\n"
        << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
        << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
        << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15
        << "\" text-anchor=\"middle\">N (log scale)</text>\n"
        << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << (T + H - B) / 2 << ")\">" << svg_escape(y_label) << "</text>\n";

    std::map<double, bool> x_ticks;
    for (const auto& s : series) for (auto [x, y] : s.points) x_ticks[x] = true;
    for (const auto& [x, unused] : x_ticks) {
        svg << "<text x=\"" << px(x) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">"
            << x << "</text>\n";
    }
    for (int i = 0; i <= 4; ++i) {
        const double yt = y_min + (y_max - y_min) * i / 4.0;
        const double value = log_y ? std::pow(10.0, yt) : yt;
        const double y = H - B - (yt - y_min) / (y_max - y_min) * (H - T - B);
        char label[32];
        std::snprintf(label, sizeof label, log_y ? "%.3g" : "%.2f", value);
        svg << "<text x=\"" << L - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << label
            << "</text>\n<line x1=\"" << L << "\" y1=\"" << y << "\" x2=\"" << W - R << "\" y2=\""
            << y << "\" stroke=\"#ddd\"/>\n";
    }

    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = colors[i % std::size(colors)];
        auto pts = series[i].points;
        std::sort(pts.begin(), pts.end());
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (auto [x, y] : pts) svg << px(x) << ',' << py(y) << ' ';
        svg << "\"/>\n";
        for (auto [x, y] : pts) {
            svg << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\"" << color
                << "\"/>\n";
        }
        const double ly = T + 20 + 18.0 * static_cast<double>(i);
        svg << "<line x1=\"" << W - R + 15 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 35
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
            << "<text x=\"" << W - R + 40 << "\" y=\"" << ly + 4 << "\">"
            << svg_escape(series[i].name) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

template <class Value>
std::vector<Series> series_by_backend(std::span<const EvalReport> reports, Value value) {
    std::vector<Series> out;
    for (const auto& r : reports) {
        const std::string name(to_string(r.backend));
        auto it = std::find_if(out.begin(), out.end(), [&](const Series& s) { return s.name == name; });
        if (it == out.end()) {
            out.push_back({name, {}});
            it = std::prev(out.end());
        }
        it->points.emplace_back(static_cast<double>(r.n), value(r));
    }
    return out;
}

} // namespace detail

/// Writes accuracy_vs_n.svg and total_time_vs_n.svg into `dir`; returns their paths.
inline std::vector<std::filesystem::path> write_plots(const std::filesystem::path& dir,
                                                      std::span<const EvalReport> reports) {
    std::filesystem::create_directories(dir);
    const std::vector<std::pair<std::string, std::string>> charts = {
        {"accuracy_vs_n.svg",
         detail::line_chart("Accuracy vs N", "accuracy (expected id at rank 1)",
                            detail::series_by_backend(reports, [](const EvalReport& r) { return r.accuracy; }),
                            false)},
        {"total_time_vs_n.svg",
         detail::line_chart("Total time (insert + query) vs N", "seconds (log scale)",
                            detail::series_by_backend(reports, [](const EvalReport& r) { return seconds(r.total_time); }),
                            true)},
    };
    std::vector<std::filesystem::path> written;
    for (const auto& [name, body] : charts) {
        const auto path = dir / name;
        std::ofstream out(path, std::ios::trunc);
        if (!out) fail(ErrorCode::io_error, "cannot open '" + path.string() + "' for writing");
        out << body;
        written.push_back(path);
    }
    return written;
}

} // namespace thistle
