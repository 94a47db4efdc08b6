#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cad/error.hpp"
#include "cad/external_scorer.hpp"
#include "cad/rouge.hpp"

namespace cad {

// Rendering of an absent metric in tables.
inline constexpr const char* kMissingCell = "—";

inline const std::vector<std::string>& cell_table_header() {
    static const std::vector<std::string> h{"Datasets", "Model",   "Decoding",    "ROUGE-1",
                                            "ROUGE-2",  "ROUGE-L", "BERTScore-P", "FactKB"};
    return h;
}

inline const std::vector<std::string>& alpha_table_header() {
    static const std::vector<std::string> h{"Datasets", "α value", "ROUGE-1", "ROUGE-2",
                                            "ROUGE-L",  "BERTScore-P",   "FactKB"};
    return h;
}

// Scores in [0, 1] are shown x100 with one decimal.
inline std::string format_score(std::optional<double> v) {
    if (!v) return kMissingCell;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", *v * 100.0);
    return buf;
}

// Shortest form that keeps one decimal for whole numbers: 0 -> "0.0", 0.15 -> "0.15".
inline std::string format_alpha(double a) {
    char buf[32];
    if (a == std::floor(a)) {
        std::snprintf(buf, sizeof buf, "%.1f", a);
    } else {
        std::snprintf(buf, sizeof buf, "%.10g", a);
    }
    return buf;
}

inline std::string decoding_label(std::optional<double> alpha) {
    if (!alpha || *alpha == 0.0) return "Vanilla";
    return "CAD (α=" + format_alpha(*alpha) + ")";
}

// Means over one cell's examples; metrics stay nullopt when never scored.
struct CellScores {
    std::optional<double> rouge1;
    std::optional<double> rouge2;
    std::optional<double> rougeL;
    std::optional<double> bertscore_p;
    std::optional<double> factkb;
    std::size_t n_examples = 0;
    std::size_t n_external_missing = 0;
};

struct EvalCell {
    std::string dataset;
    std::string model;
    std::optional<double> alpha;  // nullopt or 0: vanilla
    CellScores scores;
    bool complete = true;
    std::string error;
    // Provenance.
    std::string template_id;
    std::string config_hash;
    std::uint64_t seed = 0;
    nlohmann::ordered_json config;
    std::size_t total_forward_passes = 0;
    std::size_t total_tokens = 0;
    std::size_t total_steps = 0;
};

struct EvalReport {
    std::vector<EvalCell> cells;
};

struct ScoredPair {
    std::string candidate;
    std::string reference;
    std::string document;
};

// Arithmetic means of ROUGE-1/2/L F1 over the pairs, plus external metrics
// for every metric registered in `scorers`. An external metric is reported
// only when every pair was scored; any transport failure leaves it missing.
inline CellScores score_pairs(const std::vector<ScoredPair>& pairs, const rouge::RougeOptions& rouge_options,
                              const ExternalScorers* scorers = nullptr) {
    CellScores s;
    s.n_examples = pairs.size();
    if (pairs.empty()) return s;
    double r1 = 0, r2 = 0, rl = 0;
    for (const auto& p : pairs) {
        auto sc = rouge::score(p.candidate, p.reference, rouge_options);
        r1 += sc.rouge1.f1;
        r2 += sc.rouge2.f1;
        rl += sc.rougeL.f1;
    }
    const double n = static_cast<double>(pairs.size());
    s.rouge1 = r1 / n;
    s.rouge2 = r2 / n;
    s.rougeL = rl / n;
    if (!scorers) return s;
    for (const char* metric : {kMetricBertScoreP, kMetricFactKb}) {
        if (!scorers->has(metric)) continue;
        double sum = 0.0;
        bool all = true;
        for (const auto& p : pairs) {
            auto resp = scorers->score({metric, p.candidate, p.reference, p.document});
            if (resp.missing()) {
                all = false;
                ++s.n_external_missing;
            } else {
                sum += *resp.score;
            }
        }
        if (all) (std::string(metric) == kMetricBertScoreP ? s.bertscore_p : s.factkb) = sum / n;
    }
    return s;
}

namespace detail {

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::vector<std::string> csv_split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

inline std::string join_csv(const std::vector<std::string>& row) {
    std::string s;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) s += ',';
        s += csv_escape(row[i]);
    }
    return s + "\n";
}

inline std::string join_md(const std::vector<std::string>& row) {
    std::string s = "|";
    for (const auto& c : row) s += " " + c + " |";
    return s + "\n";
}

inline std::vector<std::string> score_cells(const CellScores& s) {
    return {format_score(s.rouge1), format_score(s.rouge2), format_score(s.rougeL), format_score(s.bertscore_p),
            format_score(s.factkb)};
}

}  // namespace detail

inline std::vector<std::vector<std::string>> cell_rows(const EvalReport& report) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& c : report.cells) {
        std::vector<std::string> row{c.dataset, c.model, decoding_label(c.alpha)};
        auto scores = detail::score_cells(c.scores);
        row.insert(row.end(), scores.begin(), scores.end());
        rows.push_back(std::move(row));
    }
    return rows;
}

// Per-(dataset, alpha) means across models, in first-seen dataset order and
// ascending alpha.
struct AlphaRow {
    std::string dataset;
    double alpha = 0.0;
    CellScores scores;
    std::size_t n_models = 0;
};

inline std::vector<AlphaRow> aggregate_by_alpha(const EvalReport& report) {
    std::vector<std::string> dataset_order;
    std::map<std::string, std::map<double, std::vector<const EvalCell*>>> groups;
    for (const auto& c : report.cells) {
        if (!groups.count(c.dataset)) dataset_order.push_back(c.dataset);
        groups[c.dataset][c.alpha.value_or(0.0)].push_back(&c);
    }
    auto mean = [](const std::vector<const EvalCell*>& cells, auto member) -> std::optional<double> {
        double sum = 0.0;
        for (const auto* c : cells) {
            const auto& v = c->scores.*member;
            if (!v) return std::nullopt;
            sum += *v;
        }
        return sum / static_cast<double>(cells.size());
    };
    std::vector<AlphaRow> rows;
    for (const auto& ds : dataset_order) {
        for (const auto& [alpha, cells] : groups[ds]) {
            AlphaRow r;
            r.dataset = ds;
            r.alpha = alpha;
            r.n_models = cells.size();
            r.scores.rouge1 = mean(cells, &CellScores::rouge1);
            r.scores.rouge2 = mean(cells, &CellScores::rouge2);
            r.scores.rougeL = mean(cells, &CellScores::rougeL);
            r.scores.bertscore_p = mean(cells, &CellScores::bertscore_p);
            r.scores.factkb = mean(cells, &CellScores::factkb);
            rows.push_back(std::move(r));
        }
    }
    return rows;
}

inline std::vector<std::vector<std::string>> alpha_rows(const EvalReport& report) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : aggregate_by_alpha(report)) {
        std::vector<std::string> row{r.dataset, "α=" + format_alpha(r.alpha)};
        auto scores = detail::score_cells(r.scores);
        row.insert(row.end(), scores.begin(), scores.end());
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string to_csv(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::string s = detail::join_csv(header);
    for (const auto& r : rows) s += detail::join_csv(r);
    return s;
}

inline std::string to_markdown(const std::vector<std::string>& header,
                               const std::vector<std::vector<std::string>>& rows) {
    std::string s = detail::join_md(header);
    s += "|";
    for (std::size_t i = 0; i < header.size(); ++i) s += i < 2 ? " --- |" : " ---: |";
    s += "\n";
    for (const auto& r : rows) s += detail::join_md(r);
    return s;
}

inline std::string cells_csv(const EvalReport& r) { return to_csv(cell_table_header(), cell_rows(r)); }

inline std::string cells_markdown(const EvalReport& r) {
    std::string md = to_markdown(cell_table_header(), cell_rows(r));
    std::string notes;
    for (const auto& c : r.cells) {
        if (!c.complete) {
            notes += "- incomplete: " + c.dataset + " / " + c.model + " / " + decoding_label(c.alpha);
            if (!c.error.empty()) notes += " (" + c.error + ")";
            notes += "\n";
        }
    }
    return notes.empty() ? md : md + "\n" + notes;
}

inline std::string alpha_csv(const EvalReport& r) { return to_csv(alpha_table_header(), alpha_rows(r)); }
inline std::string alpha_markdown(const EvalReport& r) { return to_markdown(alpha_table_header(), alpha_rows(r)); }

struct ParsedTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline ParsedTable parse_csv(const std::string& text) {
    ParsedTable t;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = detail::csv_split(line);
        if (first) {
            t.header = std::move(fields);
            first = false;
        } else {
            t.rows.push_back(std::move(fields));
        }
    }
    return t;
}

// Numeric value of a rendered score cell, in table units (x100).
inline std::optional<double> parse_score_cell(const std::string& cell) {
    if (cell == kMissingCell) return std::nullopt;
    std::size_t used = 0;
    double v = std::stod(cell, &used);
    if (used != cell.size()) throw InvalidInput("not a score cell: '" + cell + "'");
    return v;
}

inline nlohmann::ordered_json provenance_json(const EvalReport& report) {
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& c : report.cells) {
        nlohmann::ordered_json j;
        j["dataset"] = c.dataset;
        j["model"] = c.model;
        j["alpha"] = c.alpha ? nlohmann::ordered_json(*c.alpha) : nlohmann::ordered_json(nullptr);
        j["decoding"] = decoding_label(c.alpha);
        j["template"] = c.template_id;
        j["seed"] = c.seed;
        j["config_hash"] = c.config_hash;
        j["config"] = c.config;
        j["n_examples"] = c.scores.n_examples;
        j["n_forward"] = c.total_forward_passes;
        j["n_tokens"] = c.total_tokens;
        j["n_steps"] = c.total_steps;
        j["complete"] = c.complete;
        if (!c.error.empty()) j["error"] = c.error;
        if (c.scores.n_external_missing) j["external_missing"] = c.scores.n_external_missing;
        cells.push_back(std::move(j));
    }
    return cells;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// report.csv / report.md (one row per cell), alpha_report.csv / .md (means
// across models) and cells.json (provenance).
inline void emit_report(const EvalReport& report, const std::filesystem::path& dir) {
    if (report.cells.empty()) throw InvalidInput("cannot emit an empty report");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    write_text_file(dir / "report.csv", cells_csv(report));
    write_text_file(dir / "report.md", cells_markdown(report));
    write_text_file(dir / "alpha_report.csv", alpha_csv(report));
    write_text_file(dir / "alpha_report.md", alpha_markdown(report));
    write_text_file(dir / "cells.json", provenance_json(report).dump(2) + "\n");
}

}  // namespace cad
