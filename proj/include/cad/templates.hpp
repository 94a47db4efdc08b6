#pragma once

#include <array>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cad/error.hpp"
#include "cad/language_model.hpp"

namespace cad {

// The literal that fills the document slot of the context-free prompt.
inline constexpr std::string_view kNoneDocument = "None";

// A prompt pair. Slots are {query} and {document}; the context-free text has
// its document slot already replaced by "None".
struct PromptTemplate {
    std::string id;
    std::string with_context;
    std::string without_context;
    ModelFamily family = ModelFamily::decoder_only;

    // Builds the context-free text by replacing every {document} slot with "None".
    static PromptTemplate from_with_context(std::string id, std::string with_context, ModelFamily family) {
        PromptTemplate t{std::move(id), std::move(with_context), {}, family};
        t.without_context = t.with_context;
        const std::string slot = "{document}";
        for (std::size_t pos = t.without_context.find(slot); pos != std::string::npos;
             pos = t.without_context.find(slot, pos + kNoneDocument.size())) {
            t.without_context.replace(pos, slot.size(), kNoneDocument);
        }
        t.validate();
        return t;
    }

    void validate() const {
        if (with_context.find("{document}") == std::string::npos) {
            throw TemplateError("template '" + id + "': with-context text has no {document} slot");
        }
    }
};

struct RenderedPrompts {
    std::string with_context;
    std::string without_context;
};

namespace detail {

// Single left-to-right pass; substituted values are never rescanned.
inline std::string substitute(const std::string& text, const std::string& query, const std::string& document,
                              const std::string& template_id) {
    std::string out;
    out.reserve(text.size() + query.size() + document.size());
    for (std::size_t i = 0; i < text.size();) {
        if (text[i] != '{') {
            out += text[i++];
            continue;
        }
        const std::size_t close = text.find('}', i);
        if (close == std::string::npos) throw TemplateError("template '" + template_id + "': unterminated slot");
        const std::string name = text.substr(i + 1, close - i - 1);
        if (name == "query") {
            out += query;
        } else if (name == "document") {
            out += document;
        } else if (name == "None") {
            out += kNoneDocument;
        } else {
            throw TemplateError("template '" + template_id + "': unresolved slot {" + name + "}");
        }
        i = close + 1;
    }
    return out;
}

}  // namespace detail

inline RenderedPrompts render(const PromptTemplate& tmpl, const std::string& query, const std::string& document) {
    return {detail::substitute(tmpl.with_context, query, document, tmpl.id),
            detail::substitute(tmpl.without_context, query, document, tmpl.id)};
}

// ---------------------------------------------------------------------------
// Built-in templates for the four benchmark datasets.

enum class Decoding { vanilla, cad };

struct TemplateOptions {
    // Reproduce the reference template table verbatim, including its PubMedQA
    // decoder-only CAD row that keeps {document} in the context-free prompt.
    bool literal_template_table = false;
};

inline const std::array<std::string_view, 4>& builtin_datasets() {
    static const std::array<std::string_view, 4> names{"dbpedia", "pubmedqa", "cnn_dailymail", "xsum"};
    return names;
}

// Maps common spellings ("cnn", "CNN Dailymail", "debatepedia") onto the
// canonical dataset names; nullopt when unrecognized.
inline std::optional<std::string> canonical_dataset_name(std::string name) {
    std::string s;
    for (char c : name) {
        if (c == ' ' || c == '-' || c == '_') continue;
        s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    if (s == "dbpedia" || s == "debatepedia") return "dbpedia";
    if (s == "pubmedqa" || s == "pubmed") return "pubmedqa";
    if (s == "cnndailymail" || s == "cnndm" || s == "cnn") return "cnn_dailymail";
    if (s == "xsum") return "xsum";
    return std::nullopt;
}

inline std::string builtin_template_text(const std::string& dataset, ModelFamily family) {
    if (dataset == "dbpedia") {
        return "Question: {query}. Document: {document}. "
               "According to the Document, the one-sentence answer to the Question is:";
    }
    if (dataset == "pubmedqa") {
        return "Question: {query}. Document: {document}. "
               "According to the Document, the detailed answer to the Question is:";
    }
    if (dataset == "cnn_dailymail" || dataset == "xsum") {
        if (family == ModelFamily::decoder_only) return "News article: {document}. Summary of the above news article:";
        return "Summarize the following article in one or two sentences. {document}:";
    }
    throw TemplateError("no built-in template for dataset '" + dataset + "'");
}

inline PromptTemplate builtin_template(const std::string& dataset, ModelFamily family,
                                       const TemplateOptions& options = {}) {
    auto canonical = canonical_dataset_name(dataset);
    if (!canonical) throw TemplateError("no built-in template for dataset '" + dataset + "'");
    auto tmpl = PromptTemplate::from_with_context(*canonical + "/" + to_string(family),
                                                  builtin_template_text(*canonical, family), family);
    if (options.literal_template_table && *canonical == "pubmedqa" && family == ModelFamily::decoder_only) {
        tmpl.without_context = tmpl.with_context;
    }
    return tmpl;
}

// Resolves "<dataset>/<family>" ids such as "dbpedia/decoder_only".
inline PromptTemplate builtin_template(const std::string& template_id, const TemplateOptions& options = {}) {
    const auto slash = template_id.find('/');
    if (slash == std::string::npos) return builtin_template(template_id, ModelFamily::decoder_only, options);
    ModelFamily family;
    try {
        family = parse_model_family(template_id.substr(slash + 1));
    } catch (const InvalidInput&) {
        throw TemplateError("unknown template id '" + template_id + "'");
    }
    return builtin_template(template_id.substr(0, slash), family, options);
}

// The prompt that one row of the template table shows: the with-context text
// for vanilla rows, the context-free text for CAD rows.
inline std::string render_table_row(const std::string& dataset, ModelFamily family, Decoding decoding,
                                    const std::string& query, const std::string& document,
                                    const TemplateOptions& options = {}) {
    auto prompts = render(builtin_template(dataset, family, options), query, document);
    return decoding == Decoding::vanilla ? prompts.with_context : prompts.without_context;
}

}  // namespace cad
