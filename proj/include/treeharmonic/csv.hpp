#pragma once

#include <treeharmonic/error.hpp>
#include <treeharmonic/scalar.hpp>

#include <json.hpp>

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#ifndef TREEHARMONIC_VERSION
#define TREEHARMONIC_VERSION "0.1.0"
#endif

namespace treeharmonic {

enum class table_format { csv, tsv, json_lines };

[[nodiscard]] inline table_format parse_table_format(std::string_view text) {
    if (text == "csv") {
        return table_format::csv;
    }
    if (text == "tsv") {
        return table_format::tsv;
    }
    if (text == "json-lines") {
        return table_format::json_lines;
    }
    throw input_error("unknown format '" + std::string(text) + "' (expected csv, tsv or json-lines)");
}

using cell = std::variant<std::string, double, std::int64_t, bool>;

/// Run description written after the last row.
struct run_meta {
    std::string config;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> extra;
};

/**
 * Writes a header row, data rows and a trailing meta line. Doubles use the
 * shortest round-trip form, so equal values always print identically. In
 * csv/tsv the meta line is `# meta {json}`; in json-lines it is a final
 * object with the single key "meta".
 */
class table_writer {
public:
    table_writer(std::ostream &out, std::vector<std::string> columns, table_format format = table_format::csv) :
        out_{out}, columns_{std::move(columns)}, format_{format} {
        if (columns_.empty()) {
            throw precondition_error("a table needs at least one column");
        }
        if (format_ != table_format::json_lines) {
            for (std::size_t i = 0; i < columns_.size(); ++i) {
                out_ << (i ? separator() : "") << quoted(columns_[i]);
            }
            out_ << '\n';
        }
    }

    void row(const std::vector<cell> &values) {
        if (values.size() != columns_.size()) {
            throw precondition_error("row has " + std::to_string(values.size()) + " cells, table has " +
                                     std::to_string(columns_.size()) + " columns");
        }
        if (format_ == table_format::json_lines) {
            nlohmann::ordered_json object;
            for (std::size_t i = 0; i < values.size(); ++i) {
                std::visit([&](const auto &v) { object[columns_[i]] = v; }, values[i]);
            }
            out_ << object.dump() << '\n';
            return;
        }
        for (std::size_t i = 0; i < values.size(); ++i) {
            out_ << (i ? separator() : "") << quoted(text(values[i]));
        }
        out_ << '\n';
    }

    void finish(const run_meta &meta) {
        nlohmann::ordered_json m;
        m["version"] = TREEHARMONIC_VERSION;
        m["config"] = meta.config;
        m["seed"] = meta.seed;
        for (const auto &[key, value] : meta.extra) {
            m[key] = value;
        }
        if (format_ == table_format::json_lines) {
            out_ << nlohmann::ordered_json{{"meta", m}}.dump() << '\n';
        } else {
            out_ << "# meta " << m.dump() << '\n';
        }
        out_.flush();
        if (!out_) {
            throw input_error("failed to write output");
        }
    }

    [[nodiscard]] static std::string text(const cell &value) {
        return std::visit(
            [](const auto &v) -> std::string {
                using V = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<V, std::string>) {
                    return v;
                } else if constexpr (std::is_same_v<V, double>) {
                    return format_double(v);
                } else if constexpr (std::is_same_v<V, bool>) {
                    return v ? "true" : "false";
                } else {
                    return std::to_string(v);
                }
            },
            value);
    }

private:
    [[nodiscard]] const char *separator() const { return format_ == table_format::tsv ? "\t" : ","; }

    [[nodiscard]] std::string quoted(const std::string &s) const {
        if (format_ == table_format::tsv) {
            std::string out = s;
            for (auto &ch : out) {
                if (ch == '\t' || ch == '\n') {
                    ch = ' ';
                }
            }
            return out;
        }
        if (s.find_first_of(",\"\n") == std::string::npos) {
            return s;
        }
        std::string out = "\"";
        for (const char ch : s) {
            out += ch;
            if (ch == '"') {
                out += '"';
            }
        }
        return out + "\"";
    }

    std::ostream &out_;
    std::vector<std::string> columns_;
    table_format format_;
};

}  // namespace treeharmonic
