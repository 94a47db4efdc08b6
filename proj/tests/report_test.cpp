#include <gtest/gtest.h>

#include "cad/report.hpp"
#include "cad/servers.hpp"

namespace {

cad::EvalCell cell(const std::string& ds, const std::string& model, std::optional<double> alpha, double r1) {
    cad::EvalCell c;
    c.dataset = ds;
    c.model = model;
    c.alpha = alpha;
    c.scores.rouge1 = r1;
    c.scores.rouge2 = r1 / 2;
    c.scores.rougeL = r1;
    c.scores.n_examples = 4;
    return c;
}

TEST(Report, HeaderIsFixed) {
    const std::vector<std::string> want{"Datasets", "Model",   "Decoding",    "ROUGE-1",
                                        "ROUGE-2",  "ROUGE-L", "BERTScore-P", "FactKB"};
    EXPECT_EQ(cad::cell_table_header(), want);
    EXPECT_EQ(cad::cells_csv({}).substr(0, cad::cells_csv({}).find('\n')),
              "Datasets,Model,Decoding,ROUGE-1,ROUGE-2,ROUGE-L,BERTScore-P,FactKB");
}

TEST(Report, ScoreFormatting) {
    EXPECT_EQ(cad::format_score(0.2764), "27.6");
    EXPECT_EQ(cad::format_score(1.0), "100.0");
    EXPECT_EQ(cad::format_score(0.0), "0.0");
    EXPECT_EQ(cad::format_score(std::nullopt), "—");
    EXPECT_EQ(cad::decoding_label(std::nullopt), "Vanilla");
    EXPECT_EQ(cad::decoding_label(0.0), "Vanilla");
    EXPECT_EQ(cad::decoding_label(0.5), "CAD (α=0.5)");
    EXPECT_EQ(cad::format_alpha(0.15), "0.15");
    EXPECT_EQ(cad::format_alpha(1.0), "1.0");
}

TEST(Report, MissingExternalMetricsRenderAsDash) {
    cad::EvalReport r{{cell("xsum", "m", 0.5, 0.276)}};
    const auto t = cad::parse_csv(cad::cells_csv(r));
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_EQ(t.rows[0], (std::vector<std::string>{"xsum", "m", "CAD (α=0.5)", "27.6", "13.8", "27.6", "—", "—"}));
    EXPECT_EQ(cad::parse_score_cell("—"), std::nullopt);
    EXPECT_NEAR(*cad::parse_score_cell("27.6"), 27.6, 1e-12);
}

TEST(Report, CsvRoundTripsQuotedFields) {
    const std::vector<std::vector<std::string>> rows{{"a,b", "say \"hi\"", "plain"}};
    const auto t = cad::parse_csv(cad::to_csv({"x", "y", "z"}, rows));
    EXPECT_EQ(t.header, (std::vector<std::string>{"x", "y", "z"}));
    EXPECT_EQ(t.rows, rows);
}

TEST(Report, AlphaTableAveragesModels) {
    cad::EvalReport r{{cell("xsum", "m1", 0.0, 0.2), cell("xsum", "m2", 0.0, 0.4), cell("xsum", "m1", 0.5, 0.3),
                       cell("xsum", "m2", 0.5, 0.5)}};
    const auto t = cad::parse_csv(cad::alpha_csv(r));
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.rows[0][1], "α=0.0");
    EXPECT_EQ(t.rows[0][2], "30.0");
    EXPECT_EQ(t.rows[1][1], "α=0.5");
    EXPECT_EQ(t.rows[1][2], "40.0");
}

TEST(ScorePairs, RougeOnlyAndExternal) {
    const std::vector<cad::ScoredPair> pairs{{"the cat", "the cat", "doc"}, {"a dog", "the cat", "doc"}};
    const auto rouge_only = cad::score_pairs(pairs, {});
    EXPECT_NEAR(*rouge_only.rouge1, 0.5, 1e-12);
    EXPECT_FALSE(rouge_only.bertscore_p);
    EXPECT_FALSE(rouge_only.factkb);

    cad::BackgroundServer mock([](httplib::Server& s) {
        cad::install_mock_scorer_routes(s, cad::MockScorerMode::constant, 0.5);
    });
    cad::ExternalScorers scorers;
    scorers.register_metric(cad::kMetricBertScoreP, mock.url());
    const auto with_ext = cad::score_pairs(pairs, {}, &scorers);
    EXPECT_EQ(with_ext.bertscore_p, 0.5);
    EXPECT_FALSE(with_ext.factkb);

    cad::ExternalScorers dead;
    dead.register_metric(cad::kMetricFactKb, "http://127.0.0.1:1");
    const auto missing = cad::score_pairs(pairs, {}, &dead);
    EXPECT_FALSE(missing.factkb);
    EXPECT_EQ(missing.n_external_missing, 2u);
}

TEST(ExternalScorer, ProtocolAndFailures) {
    cad::BackgroundServer constant([](httplib::Server& s) {
        cad::install_mock_scorer_routes(s, cad::MockScorerMode::constant, 0.5);
    });
    cad::BackgroundServer echo([](httplib::Server& s) { cad::install_mock_scorer_routes(s, cad::MockScorerMode::echo); });
    cad::ExternalScorers scorers;
    scorers.register_metric(cad::kMetricBertScoreP, constant.url());
    scorers.register_metric("echo", echo.url());

    const auto a = scorers.score({cad::kMetricBertScoreP, "x", "y", "d"});
    EXPECT_EQ(a.score, 0.5);
    EXPECT_EQ(a.provenance, "external");
    EXPECT_EQ(scorers.score({"echo", "same text", "same text", ""}).score, 1.0);
    EXPECT_THROW(scorers.score({cad::kMetricFactKb, "x", "y", "d"}), cad::UnsupportedCapability);

    cad::ExternalScorers dead;
    dead.register_metric(cad::kMetricFactKb, "http://127.0.0.1:1");
    const auto m = dead.score({cad::kMetricFactKb, "x", "y", "d"});
    EXPECT_TRUE(m.missing());
    EXPECT_FALSE(m.error.empty());
}

}  // namespace
