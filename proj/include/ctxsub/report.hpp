#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctxsub/io.hpp"

namespace ctxsub {

struct ReportCell {
    std::optional<double> value;
    std::size_t denominator = 0;
    /// Set when the cell was compared against the table reference.
    std::optional<double> p_value;
};

struct ReportRow {
    std::string label;
    std::vector<ReportCell> cells;
};

struct ReportTable {
    std::string name;
    std::vector<std::string> columns;
    std::vector<ReportRow> rows;
    /// Label of the row significance is measured against.
    std::optional<std::string> reference;
    /// Values are proportions rendered x100; otherwise rendered as-is.
    bool percent = true;
};

struct EvalReport {
    ordered_json config = ordered_json::object();
    std::vector<ReportTable> tables;
    std::map<std::string, std::size_t> counts;
};

enum class ReportFormat { Tsv, Json };

/// Long-format tsv: table, row, column, value (x100, one decimal), denominator, dagger.
/// The dagger marks a cell whose difference to the reference is not significant (p > 0.01).
std::string render_tsv(const EvalReport& report);
std::string render_json(const EvalReport& report);
std::string render(const EvalReport& report, ReportFormat format);
void emit_report(const EvalReport& report, ReportFormat format, const std::string& path);

std::string format_percent(double proportion);

}  // namespace ctxsub
