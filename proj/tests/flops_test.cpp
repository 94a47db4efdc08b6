#include <random>

#include <gtest/gtest.h>

#include "cad/flops.hpp"

namespace {

using cad::ModelConfig;
using cad::flops::Approximation;
using cad::flops::Decoding;

const ModelConfig kUnit{1, 1, 1, 4, 1, 1};
const ModelConfig k7B{32, 4096, 4096, 16384, 32, 32000};

// Integer oracle for the parameter count.
unsigned long long oracle_n(unsigned long long n_layer, unsigned long long d_model, unsigned long long d_attn,
                            unsigned long long d_ff) {
    return 2ULL * d_model * n_layer * (2ULL * d_attn + d_ff);
}

TEST(NParams, UnitCase) { EXPECT_EQ(cad::flops::n_params(kUnit), 12.0); }

TEST(NParams, SevenBGeometry) {
    EXPECT_EQ(oracle_n(32, 4096, 4096, 16384), 6442450944ULL);
    EXPECT_EQ(cad::flops::n_params(k7B), 6442450944.0);
    EXPECT_EQ(cad::flops::n_params(k7B), 12.0 * 32 * 4096.0 * 4096.0);
}

TEST(NParams, StandardProportionsAgreeWithTwelveLD2) {
    for (std::uint64_t l : {1, 3, 24}) {
        for (std::uint64_t d : {1, 7, 512, 5120}) {
            const ModelConfig c{l, d, d, 4 * d, 1, 1};
            EXPECT_EQ(cad::flops::n_params(c), 12.0 * l * double(d) * double(d));
            EXPECT_EQ(cad::flops::n_params(c), double(oracle_n(l, d, d, 4 * d)));
        }
    }
}

TEST(NParams, RejectsInvalidConfig) {
    EXPECT_THROW(cad::flops::n_params(ModelConfig{0, 1, 1, 1, 1, 1}), cad::Error);
}

TEST(CForward, ApproxIsTwoN) {
    for (std::uint64_t n : {1, 10, 4096}) {
        EXPECT_EQ(cad::flops::c_forward(k7B, n, Approximation::two_n_approx), 2.0 * 6442450944.0);
    }
}

TEST(CForward, ExactMinusApproxIsAttentionTerm) {
    for (std::uint64_t n : {1, 17, 1024}) {
        const double diff = cad::flops::c_forward(k7B, n, Approximation::exact_with_attention) -
                            cad::flops::c_forward(k7B, n, Approximation::two_n_approx);
        EXPECT_EQ(diff, 2.0 * 32 * double(n) * 4096);
    }
}

TEST(CForward, SevenBAt1024) {
    const unsigned long long want = 2ULL * 6442450944ULL + 2ULL * 32 * 1024 * 4096;
    const double got = cad::flops::c_forward(k7B, 1024, Approximation::exact_with_attention);
    EXPECT_EQ(got, double(want));
    EXPECT_NEAR(got, 1.31534e10, 1e6);
}

TEST(CForward, RejectsEmptyInput) {
    EXPECT_THROW(cad::flops::c_forward(k7B, 0, Approximation::two_n_approx), cad::InvalidParameter);
}

TEST(StepUnits, FirstStepExample) {
    EXPECT_EQ(cad::flops::step_units(Decoding::vanilla, 10, 5, 0), 15u);
    EXPECT_EQ(cad::flops::step_units(Decoding::cad, 10, 5, 0), 20u);
    EXPECT_EQ(cad::flops::step_flops(kUnit, Decoding::cad, 10, 5, 0, Approximation::two_n_approx) /
                  cad::flops::step_flops(kUnit, Decoding::vanilla, 10, 5, 0, Approximation::two_n_approx),
              4.0 / 3.0);
}

TEST(StepUnits, NoContextRatioIsExactlyTwo) {
    std::mt19937_64 rng(1);
    for (int c = 0; c < 200; ++c) {
        const std::uint64_t t = rng() % 500, x = 1 + rng() % 500;
        EXPECT_EQ(cad::flops::step_units(Decoding::cad, 0, x, t), 2 * cad::flops::step_units(Decoding::vanilla, 0, x, t));
        for (auto mode : {Approximation::two_n_approx, Approximation::exact_with_attention}) {
            EXPECT_EQ(cad::flops::step_flops(k7B, Decoding::cad, 0, x, t, mode),
                      2.0 * cad::flops::step_flops(k7B, Decoding::vanilla, 0, x, t, mode));
        }
    }
}

TEST(StepUnits, RatioBoundsAndEquality) {
    std::mt19937_64 rng(2);
    for (int c = 0; c < 1000; ++c) {
        const std::uint64_t t = rng() % 50, x = rng() % 50, cc = rng() % 50;
        const auto v = cad::flops::step_units(Decoding::vanilla, cc, x, t);
        const auto d = cad::flops::step_units(Decoding::cad, cc, x, t);
        ASSERT_GE(d, v);
        ASSERT_EQ(d == v, x == 0 && t == 0);
        if (v > 0) {
            ASSERT_LE(d, 2 * v);
        }
    }
}

TEST(StepUnits, RatioApproachesTwo) {
    const double r = double(cad::flops::step_units(Decoding::cad, 100, 5, 10'000'000)) /
                     double(cad::flops::step_units(Decoding::vanilla, 100, 5, 10'000'000));
    EXPECT_NEAR(r, 2.0, 1e-4);
}

TEST(Totals, ClosedFormMatchesBruteForce) {
    std::mt19937_64 rng(3);
    for (int c = 0; c < 100; ++c) {
        const std::uint64_t y = 1 + rng() % 200, x = rng() % 300, cc = rng() % 300;
        for (auto d : {Decoding::vanilla, Decoding::cad}) {
            std::uint64_t brute = 0;
            for (std::uint64_t t = 0; t < y; ++t) brute += cad::flops::step_units(d, cc, x, t);
            ASSERT_EQ(cad::flops::total_units(d, cc, x, y), brute);
        }
        const std::uint64_t vanilla_closed = y * (y - 1) / 2 + y * (x + cc);
        ASSERT_EQ(cad::flops::total_units(Decoding::vanilla, cc, x, y), vanilla_closed);
        ASSERT_EQ(cad::flops::total_flops(kUnit, Decoding::vanilla, cc, x, y, Approximation::two_n_approx),
                  double(vanilla_closed) * 24.0);
    }
}

TEST(Totals, BreakdownSumsItsSteps) {
    const auto b = cad::flops::breakdown(k7B, 10, 5, 4, Approximation::exact_with_attention);
    ASSERT_EQ(b.step_flops_cad.size(), 4u);
    double v = 0, c = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        v += b.step_flops_vanilla[i];
        c += b.step_flops_cad[i];
        EXPECT_GE(b.step_flops_cad[i], b.step_flops_vanilla[i]);
    }
    EXPECT_EQ(b.total_flops_vanilla, v);
    EXPECT_EQ(b.total_flops_cad, c);
}

cad::GenerationRecord record(std::optional<double> alpha, std::size_t steps) {
    cad::GenerationRecord r;
    r.alpha = alpha;
    r.steps = steps;
    r.generated_token_count = steps;
    r.prompt_tokens_with_context = 15;
    r.prompt_tokens_without_context = 5;
    return r;
}

TEST(Annotate, UnitConfigSingleStep) {
    const auto v = cad::flops::annotate(record(std::nullopt, 1), kUnit, Approximation::two_n_approx);
    const auto c = cad::flops::annotate(record(0.5, 1), kUnit, Approximation::two_n_approx);
    EXPECT_EQ(*v.flops_estimate, 15.0 * 2 * 12);
    EXPECT_EQ(*c.flops_estimate, 20.0 * 2 * 12);
}

TEST(Annotate, Idempotent) {
    const auto once = cad::flops::annotate(record(0.5, 7), k7B);
    const auto twice = cad::flops::annotate(once, k7B);
    EXPECT_EQ(once.flops_estimate, twice.flops_estimate);
}

TEST(Annotate, MissingConfigIsUnsupported) {
    EXPECT_THROW(cad::flops::annotate(record(0.5, 1), std::nullopt), cad::UnsupportedCapability);
}

TEST(Approximation, Parse) {
    EXPECT_EQ(cad::flops::parse_approximation("exact"), Approximation::exact_with_attention);
    EXPECT_EQ(cad::flops::parse_approximation("two_n_approx"), Approximation::two_n_approx);
    EXPECT_THROW(cad::flops::parse_approximation("fast"), cad::InvalidParameter);
}

}  // namespace
