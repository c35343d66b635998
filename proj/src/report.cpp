#include "ctxsub/report.hpp"

#include <cstdio>

#include "ctxsub/error.hpp"
#include "ctxsub/evaluation.hpp"

namespace ctxsub {

std::string format_percent(double proportion) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", proportion * 100.0);
    return buf;
}

namespace {

std::string format_value(const ReportTable& t, const ReportCell& c) {
    if (!c.value) return "NA";
    if (t.percent) return format_percent(*c.value);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", *c.value);
    return buf;
}

bool dagger(const ReportCell& c) { return c.p_value && *c.p_value > kSignificanceLevel; }

}  // namespace

std::string render_tsv(const EvalReport& report) {
    std::string out = "table\trow\tcolumn\tvalue\tdenominator\tdagger\n";
    for (const auto& t : report.tables) {
        for (const auto& row : t.rows) {
            for (std::size_t c = 0; c < row.cells.size() && c < t.columns.size(); ++c) {
                const auto& cell = row.cells[c];
                out += t.name + '\t' + row.label + '\t' + t.columns[c] + '\t' + format_value(t, cell) + '\t' +
                       std::to_string(cell.denominator) + '\t' + (dagger(cell) ? "†" : "") + '\n';
            }
        }
    }
    return out;
}

std::string render_json(const EvalReport& report) {
    ordered_json j;
    j["config"] = report.config;
    j["counts"] = ordered_json::object();
    for (const auto& [k, v] : report.counts) j["counts"][k] = v;
    j["tables"] = ordered_json::array();
    for (const auto& t : report.tables) {
        ordered_json tj;
        tj["name"] = t.name;
        tj["percent"] = t.percent;
        tj["reference"] = t.reference ? ordered_json(*t.reference) : ordered_json(nullptr);
        tj["columns"] = t.columns;
        tj["rows"] = ordered_json::array();
        for (const auto& row : t.rows) {
            ordered_json rj;
            rj["label"] = row.label;
            rj["cells"] = ordered_json::array();
            for (std::size_t c = 0; c < row.cells.size() && c < t.columns.size(); ++c) {
                const auto& cell = row.cells[c];
                ordered_json cj;
                cj["column"] = t.columns[c];
                cj["value"] = cell.value ? ordered_json(*cell.value) : ordered_json(nullptr);
                cj["denominator"] = cell.denominator;
                cj["p_value"] = cell.p_value ? ordered_json(*cell.p_value) : ordered_json(nullptr);
                cj["dagger"] = dagger(cell);
                rj["cells"].push_back(std::move(cj));
            }
            tj["rows"].push_back(std::move(rj));
        }
        j["tables"].push_back(std::move(tj));
    }
    return j.dump(2) + "\n";
}

std::string render(const EvalReport& report, ReportFormat format) {
    return format == ReportFormat::Tsv ? render_tsv(report) : render_json(report);
}

void emit_report(const EvalReport& report, ReportFormat format, const std::string& path) {
    write_file(path, render(report, format));
}

}  // namespace ctxsub
