#include <gtest/gtest.h>

#include "cad/dataset.hpp"
#include "cad/templates.hpp"

namespace {

using cad::Decoding;
using cad::ModelFamily;

struct Row {
    const char* dataset;
    ModelFamily family;
    Decoding decoding;
    const char* expected;  // rendered with query "Q" and document "D"
};

constexpr const char* kDbVan = "Question: Q. Document: D. According to the Document, the one-sentence answer to the Question is:";
constexpr const char* kDbCad =
    "Question: Q. Document: None. According to the Document, the one-sentence answer to the Question is:";
constexpr const char* kPmVan = "Question: Q. Document: D. According to the Document, the detailed answer to the Question is:";
constexpr const char* kPmCad =
    "Question: Q. Document: None. According to the Document, the detailed answer to the Question is:";
constexpr const char* kNewsDecVan = "News article: D. Summary of the above news article:";
constexpr const char* kNewsDecCad = "News article: None. Summary of the above news article:";
constexpr const char* kNewsEncVan = "Summarize the following article in one or two sentences. D:";
constexpr const char* kNewsEncCad = "Summarize the following article in one or two sentences. None:";

const Row kRows[] = {
    {"dbpedia", ModelFamily::decoder_only, Decoding::vanilla, kDbVan},
    {"dbpedia", ModelFamily::decoder_only, Decoding::cad, kDbCad},
    {"dbpedia", ModelFamily::encoder_decoder, Decoding::vanilla, kDbVan},
    {"dbpedia", ModelFamily::encoder_decoder, Decoding::cad, kDbCad},
    {"pubmedqa", ModelFamily::decoder_only, Decoding::vanilla, kPmVan},
    {"pubmedqa", ModelFamily::decoder_only, Decoding::cad, kPmCad},
    {"pubmedqa", ModelFamily::encoder_decoder, Decoding::vanilla, kPmVan},
    {"pubmedqa", ModelFamily::encoder_decoder, Decoding::cad, kPmCad},
    {"cnn_dailymail", ModelFamily::decoder_only, Decoding::vanilla, kNewsDecVan},
    {"cnn_dailymail", ModelFamily::decoder_only, Decoding::cad, kNewsDecCad},
    {"cnn_dailymail", ModelFamily::encoder_decoder, Decoding::vanilla, kNewsEncVan},
    {"cnn_dailymail", ModelFamily::encoder_decoder, Decoding::cad, kNewsEncCad},
    {"xsum", ModelFamily::decoder_only, Decoding::vanilla, kNewsDecVan},
    {"xsum", ModelFamily::decoder_only, Decoding::cad, kNewsDecCad},
    {"xsum", ModelFamily::encoder_decoder, Decoding::vanilla, kNewsEncVan},
    {"xsum", ModelFamily::encoder_decoder, Decoding::cad, kNewsEncCad},
};

TEST(BuiltinTemplates, AllSixteenRowsByteExact) {
    for (const auto& r : kRows) {
        EXPECT_EQ(cad::render_table_row(r.dataset, r.family, r.decoding, "Q", "D"), r.expected)
            << r.dataset << " " << cad::to_string(r.family) << " " << (r.decoding == Decoding::cad ? "cad" : "vanilla");
    }
}

TEST(BuiltinTemplates, LiteralTableKeepsDocumentInOnePubmedRow) {
    const cad::TemplateOptions literal{true};
    EXPECT_EQ(cad::render_table_row("pubmedqa", ModelFamily::decoder_only, Decoding::cad, "Q", "D", literal), kPmVan);
    EXPECT_EQ(cad::render_table_row("pubmedqa", ModelFamily::encoder_decoder, Decoding::cad, "Q", "D", literal),
              kPmCad);
    EXPECT_EQ(cad::render_table_row("dbpedia", ModelFamily::decoder_only, Decoding::cad, "Q", "D", literal), kDbCad);
}

TEST(BuiltinTemplates, AliasesAndIds) {
    EXPECT_EQ(cad::canonical_dataset_name("CNN Dailymail"), "cnn_dailymail");
    EXPECT_EQ(cad::canonical_dataset_name("XSUM"), "xsum");
    EXPECT_EQ(cad::canonical_dataset_name("imdb"), std::nullopt);
    const auto t = cad::builtin_template("xsum/encoder_decoder");
    EXPECT_EQ(t.id, "xsum/encoder_decoder");
    EXPECT_EQ(cad::render(t, "", "D").with_context, kNewsEncVan);
    EXPECT_THROW(cad::builtin_template("imdb/decoder_only"), cad::TemplateError);
    EXPECT_THROW(cad::builtin_template("xsum/rnn"), cad::TemplateError);
}

TEST(Substitute, SlotsAreLiteral) {
    const auto t = cad::PromptTemplate::from_with_context("t", "{query}|{document}", ModelFamily::decoder_only);
    EXPECT_EQ(t.without_context, "{query}|None");
    // Braces inside substituted values are not re-expanded.
    EXPECT_EQ(cad::render(t, "{document}", "x").with_context, "{document}|x");
    EXPECT_THROW(cad::PromptTemplate::from_with_context("t", "{query} only", ModelFamily::decoder_only),
                 cad::TemplateError);
}

TEST(HyperparameterDefaults, PerDataset) {
    struct Want {
        const char* name;
        std::size_t min, max;
    };
    for (const auto& w : {Want{"dbpedia", 5, 30}, Want{"pubmedqa", 40, 100}, Want{"cnn_dailymail", 30, 70},
                          Want{"xsum", 20, 50}}) {
        const auto d = cad::benchmark_defaults(w.name);
        ASSERT_TRUE(d) << w.name;
        EXPECT_EQ(d->sampling.top_k, 50u);
        EXPECT_EQ(d->sampling.top_p, 0.9);
        EXPECT_EQ(d->num_beams, 1);
        EXPECT_EQ(d->sampling.repetition_penalty, 1.0);
        EXPECT_EQ(d->temperature, 1.0);
        EXPECT_EQ(d->sampling.min_new_tokens, w.min);
        EXPECT_EQ(d->sampling.max_new_tokens, w.max);
    }
    EXPECT_FALSE(cad::benchmark_defaults("imdb"));
}

}  // namespace
