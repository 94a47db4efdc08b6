#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cad/error.hpp"
#include "cad/language_model.hpp"
#include "cad/sampler.hpp"
#include "cad/templates.hpp"

namespace cad {

struct DatasetExample {
    std::string id;
    std::string query;  // empty for news summarization
    std::string document;
    std::string reference;
};

struct RowDiagnostic {
    std::size_t line = 0;  // 1-based
    std::string field;     // empty when the whole row is bad
    std::string message;
};

inline std::string to_string(const RowDiagnostic& d) {
    std::string s = "line " + std::to_string(d.line);
    if (!d.field.empty()) s += ", field '" + d.field + "'";
    return s + ": " + d.message;
}

class DatasetError : public InvalidInput {
public:
    DatasetError(const std::string& what, std::vector<RowDiagnostic> diagnostics)
        : InvalidInput(what), diagnostics_(std::move(diagnostics)) {}
    const std::vector<RowDiagnostic>& diagnostics() const noexcept { return diagnostics_; }

private:
    std::vector<RowDiagnostic> diagnostics_;
};

struct LoadedDataset {
    std::vector<DatasetExample> examples;
    std::vector<RowDiagnostic> diagnostics;  // rejected rows (non-strict mode)
};

enum class DatasetFormat { jsonl };

namespace detail {

inline std::optional<std::string> text_field(const nlohmann::json& row, const char* name, bool required,
                                             std::size_t line, std::vector<RowDiagnostic>& diags) {
    if (!row.contains(name) || row[name].is_null()) {
        if (required) diags.push_back({line, name, "missing required field"});
        return required ? std::nullopt : std::optional<std::string>(std::string{});
    }
    const auto& v = row[name];
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    diags.push_back({line, name, "expected a string"});
    return std::nullopt;
}

}  // namespace detail

// Parses JSONL rows {"id", "query"?, "document", "reference"}. Bad rows are
// collected with line numbers; strict mode turns any bad row into an error.
inline LoadedDataset parse_dataset_jsonl(std::istream& in, bool strict) {
    LoadedDataset out;
    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++rows;
        auto row = nlohmann::json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.is_object()) {
            out.diagnostics.push_back({lineno, "", "not a JSON object"});
            continue;
        }
        std::vector<RowDiagnostic> diags;
        auto id = detail::text_field(row, "id", true, lineno, diags);
        auto query = detail::text_field(row, "query", false, lineno, diags);
        auto document = detail::text_field(row, "document", true, lineno, diags);
        auto reference = detail::text_field(row, "reference", true, lineno, diags);
        if (document && document->empty()) diags.push_back({lineno, "document", "must not be empty"});
        if (reference && reference->empty()) diags.push_back({lineno, "reference", "must not be empty"});
        if (id && diags.empty() && !seen.insert(*id).second) diags.push_back({lineno, "id", "duplicate id '" + *id + "'"});
        if (!diags.empty()) {
            out.diagnostics.insert(out.diagnostics.end(), diags.begin(), diags.end());
            continue;
        }
        out.examples.push_back({*id, *query, *document, *reference});
    }
    if (rows == 0) throw DatasetError("dataset is empty", {});
    if (strict && !out.diagnostics.empty()) {
        throw DatasetError("dataset has malformed rows: " + to_string(out.diagnostics.front()), out.diagnostics);
    }
    if (out.examples.empty()) throw DatasetError("dataset has no valid rows", out.diagnostics);
    return out;
}

inline LoadedDataset load_dataset(const std::filesystem::path& path, DatasetFormat format = DatasetFormat::jsonl,
                                  bool strict = false) {
    (void)format;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset '" + path.string() + "'");
    try {
        return parse_dataset_jsonl(in, strict);
    } catch (const DatasetError& e) {
        throw DatasetError(path.string() + ": " + e.what(), e.diagnostics());
    }
}

inline RenderedPrompts render(const PromptTemplate& tmpl, const DatasetExample& example) {
    return render(tmpl, example.query, example.document);
}

// Standard per-dataset decoding settings. Every dataset uses top-k 50,
// top-p 0.9, one beam, repetition penalty 1.0 and temperature 1.0; only the
// generation length bounds differ.
struct DatasetDecodingDefaults {
    SamplingConfig sampling;
    double temperature = 1.0;
    int num_beams = 1;
};

inline std::optional<DatasetDecodingDefaults> benchmark_defaults(const std::string& dataset) {
    auto canonical = canonical_dataset_name(dataset);
    if (!canonical) return std::nullopt;
    DatasetDecodingDefaults d;
    d.sampling.strategy = SamplingStrategy::topk_topp;
    d.sampling.top_k = 50;
    d.sampling.top_p = 0.9;
    d.sampling.repetition_penalty = 1.0;
    if (*canonical == "dbpedia") {
        d.sampling.min_new_tokens = 5;
        d.sampling.max_new_tokens = 30;
    } else if (*canonical == "pubmedqa") {
        d.sampling.min_new_tokens = 40;
        d.sampling.max_new_tokens = 100;
    } else if (*canonical == "cnn_dailymail") {
        d.sampling.min_new_tokens = 30;
        d.sampling.max_new_tokens = 70;
    } else {
        d.sampling.min_new_tokens = 20;
        d.sampling.max_new_tokens = 50;
    }
    return d;
}

// Fallback for datasets outside the benchmark set.
inline DatasetDecodingDefaults generic_defaults() {
    DatasetDecodingDefaults d;
    d.sampling.top_k = 50;
    d.sampling.top_p = 0.9;
    d.sampling.min_new_tokens = 0;
    d.sampling.max_new_tokens = 64;
    return d;
}

// Head-truncates the document (keeps its first words) until both prompts
// plus the generation budget fit the backend's input limit. The query and
// the instruction text are never cut.
inline std::string fit_document(const LanguageModel& model, const PromptTemplate& tmpl, const DatasetExample& ex,
                                std::size_t max_new_tokens) {
    const auto limit = model.max_input_length();
    if (!limit) return ex.document;
    const std::size_t budget = max_new_tokens > 0 ? max_new_tokens - 1 : 0;
    auto fits = [&](const std::string& doc) {
        auto p = render(tmpl, ex.query, doc);
        return model.tokenize(p.with_context).size() + budget <= *limit &&
               model.tokenize(p.without_context).size() + budget <= *limit;
    };
    if (fits(ex.document)) return ex.document;

    std::vector<std::string> words;
    {
        std::istringstream in(ex.document);
        for (std::string w; in >> w;) words.push_back(w);
    }
    auto join = [&](std::size_t n) {
        std::string s;
        for (std::size_t i = 0; i < n; ++i) {
            if (i) s += ' ';
            s += words[i];
        }
        return s;
    };
    std::size_t lo = 0;
    std::size_t hi = words.size();  // invariant: join(lo) fits or lo == 0; join(hi) does not
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (fits(join(mid))) lo = mid; else hi = mid;
    }
    if (!fits(join(lo))) {
        auto p = render(tmpl, ex.query, join(lo));
        throw InputTooLong("with_context", model.tokenize(p.with_context).size() + budget, *limit);
    }
    return join(lo);
}

}  // namespace cad
