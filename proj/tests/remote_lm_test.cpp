#include <random>

#include <gtest/gtest.h>

#include "cad/decode.hpp"
#include "cad/remote_lm.hpp"
#include "cad/servers.hpp"
#include "support/fixtures.hpp"

namespace {

const cad::ModelConfig k7B{32, 4096, 4096, 16384, 32, 8};

cad::TableLM backing_model(bool with_config = true, std::optional<std::size_t> max_len = std::nullopt) {
    auto spec = cadtest::random_table_lm(31, 6).spec();
    if (with_config) spec.config = k7B;
    spec.max_input_length = max_len;
    return cad::TableLM(spec);
}

TEST(RemoteLM, MirrorsLocalModel) {
    const auto local = backing_model();
    cad::BackgroundServer srv([&](httplib::Server& s) { cad::install_logit_routes(s, local, {}); });
    const cad::RemoteLM remote(srv.url());
    EXPECT_EQ(remote.vocabulary().tokens(), local.vocabulary().tokens());
    EXPECT_EQ(remote.vocabulary().eos_id(), local.vocabulary().eos_id());
    EXPECT_EQ(remote.model_config(), k7B);
    EXPECT_TRUE(remote.has_remote_tokenizer());
    EXPECT_EQ(remote.tokenize("w1 w2 zebra"), local.tokenize("w1 w2 zebra"));

    std::mt19937_64 rng(5);
    for (int i = 0; i < 20; ++i) {
        cad::TokenSequence in(1 + rng() % 4);
        for (auto& t : in) t = static_cast<cad::TokenId>(rng() % local.vocabulary().size());
        EXPECT_EQ(remote.forward(in), local.forward(in));
    }
}

TEST(RemoteLM, DecodeMatchesLocalInBothModes) {
    const auto local = backing_model();
    cad::BackgroundServer srv([&](httplib::Server& s) { cad::install_logit_routes(s, local, {}); });
    const cad::RemoteLM remote(srv.url());
    cad::DecodeRequest req;
    req.id = "r";
    req.query = "w1";
    req.context = "w2 w3";
    req.prompt_template = cadtest::tail_template();
    req.alpha = 0.5;
    req.sampling.seed = 9;
    req.sampling.min_new_tokens = 3;
    req.sampling.max_new_tokens = 6;
    for (auto mode : {cad::ExecutionMode::two_pass, cad::ExecutionMode::packed_batch}) {
        req.mode = mode;
        const auto a = cad::decode(local, req), b = cad::decode(remote, req);
        EXPECT_EQ(a.generated_tokens, b.generated_tokens);
        EXPECT_EQ(b.mode, cad::to_string(mode));
        EXPECT_TRUE(b.warnings.empty());
    }
}

TEST(RemoteLM, MissingConfigIsUnsupported) {
    const auto local = backing_model(false);
    cad::LogitServerOptions opts;
    opts.expose_config = false;
    cad::BackgroundServer srv([&](httplib::Server& s) { cad::install_logit_routes(s, local, opts); });
    const cad::RemoteLM remote(srv.url());
    EXPECT_THROW(remote.model_config(), cad::UnsupportedCapability);
}

TEST(RemoteLM, NoTokenizeEndpointUsesVocabulary) {
    const auto local = backing_model();
    cad::LogitServerOptions opts;
    opts.expose_tokenize = false;
    cad::BackgroundServer srv([&](httplib::Server& s) { cad::install_logit_routes(s, local, opts); });
    const cad::RemoteLM remote(srv.url());
    EXPECT_FALSE(remote.has_remote_tokenizer());
    EXPECT_EQ(remote.tokenize("w1 w4"), local.tokenize("w1 w4"));
}

TEST(RemoteLM, UnreachableIsTransportError) {
    EXPECT_THROW(cad::RemoteLM("http://127.0.0.1:1"), cad::TransportError);
}

TEST(RemoteLM, PackedFallsBackWhenBatchingDisabled) {
    const auto local = backing_model();
    cad::LogitServerOptions opts;
    opts.enable_batching = false;
    cad::BackgroundServer srv([&](httplib::Server& s) { cad::install_logit_routes(s, local, opts); });
    const cad::RemoteLM remote(srv.url());
    cad::DecodeRequest req;
    req.query = "w1";
    req.context = "w2";
    req.prompt_template = cadtest::tail_template();
    req.alpha = 0.5;
    req.mode = cad::ExecutionMode::packed_batch;
    const auto rec = cad::decode(remote, req);
    EXPECT_TRUE(rec.complete);
    EXPECT_EQ(rec.mode, "two_pass");
    ASSERT_EQ(rec.warnings.size(), 1u);
    EXPECT_EQ(rec.forward_pass_count, 2 * rec.steps);
}

TEST(RemoteLM, TooLongInputMapsTo413) {
    const auto local = backing_model(true, 3);
    cad::BackgroundServer srv([&](httplib::Server& s) { cad::install_logit_routes(s, local, {}); });
    const cad::RemoteLM remote(srv.url());
    EXPECT_EQ(remote.max_input_length(), 3u);
    try {
        remote.forward(cad::TokenSequence{0, 1, 2, 3});
        FAIL() << "expected InputTooLong";
    } catch (const cad::InputTooLong& e) {
        EXPECT_EQ(e.limit(), 3u);
        EXPECT_EQ(e.length(), 4u);
    }
    EXPECT_THROW(remote.forward(cad::TokenSequence{999}), cad::InvalidInput);
}

TEST(RemoteLM, ServerDyingMidDecodeGivesIncompleteRecord) {
    const auto local = backing_model();
    auto srv = std::make_unique<cad::BackgroundServer>(
        [&](httplib::Server& s) { cad::install_logit_routes(s, local, {}); });
    const cad::RemoteLM remote(srv->url());
    srv.reset();
    cad::DecodeRequest req;
    req.query = "w1";
    req.context = "w2";
    req.prompt_template = cadtest::tail_template();
    const auto rec = cad::decode(remote, req);
    EXPECT_FALSE(rec.complete);
    EXPECT_EQ(rec.error.rfind("transport: ", 0), 0u) << rec.error;
}

}  // namespace
