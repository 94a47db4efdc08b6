#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cad/cad.hpp"

namespace cadtest {

namespace fs = std::filesystem;

inline std::vector<double> random_logits(std::mt19937_64& rng, std::size_t n, double scale = 5.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

inline cad::ProbDist random_dist(std::mt19937_64& rng, std::size_t n) {
    std::gamma_distribution<double> g(0.7, 1.0);
    cad::ProbDist d(n);
    double s = 0.0;
    for (auto& x : d) {
        x = g(rng) + 1e-6;
        s += x;
    }
    for (auto& x : d) x /= s;
    return d;
}

// Words w0..w{n-1}, then "</s>" and "<unk>".
inline cad::Vocabulary word_vocab(std::size_t n_words) {
    std::vector<std::string> toks;
    for (std::size_t i = 0; i < n_words; ++i) toks.push_back("w" + std::to_string(i));
    toks.push_back("</s>");
    toks.push_back("<unk>");
    return cad::Vocabulary(toks, static_cast<cad::TokenId>(n_words), static_cast<cad::TokenId>(n_words + 1));
}

// Order-2 TableLM with random rules over every bigram and unigram.
inline cad::TableLM random_table_lm(std::uint64_t seed, std::size_t n_words = 6) {
    std::mt19937_64 rng(seed);
    cad::TableLMSpec spec;
    spec.vocab = word_vocab(n_words);
    spec.order = 2;
    const auto v = spec.vocab.size();
    spec.default_dist = random_dist(rng, v);
    for (cad::TokenId a = 0; a < v; ++a) {
        spec.rules.push_back({{a}, random_dist(rng, v)});
        for (cad::TokenId b = 0; b < v; ++b) {
            if (rng() % 2) spec.rules.push_back({{a, b}, random_dist(rng, v)});
        }
    }
    spec.name = "random" + std::to_string(seed);
    return cad::TableLM(std::move(spec));
}

// A template whose prompts end in the document (with context) or "None".
inline cad::PromptTemplate tail_template() {
    return cad::PromptTemplate::from_with_context("test/tail", "{query} {document}", cad::ModelFamily::decoder_only);
}

struct ScratchDir {
    fs::path path;
    explicit ScratchDir(const std::string& tag) {
        path = fs::temp_directory_path() /
               ("cad_" + tag + "_" + std::to_string(std::random_device{}()) + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    fs::path operator/(const std::string& s) const { return path / s; }
};

inline std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    out << s;
}

struct CliResult {
    int exit_code = -1;
    std::string output;
};

// Runs cadctl with the given argument string, capturing stdout and stderr.
inline CliResult run_cli(const std::string& args, const fs::path& scratch) {
    const auto log = scratch / ("cli_" + std::to_string(std::rand()) + ".log");
    const std::string cmd = std::string("\"") + CADCTL_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.output = slurp(log);
    return r;
}

inline std::string samples_dir() { return CAD_SAMPLES_DIR; }

}  // namespace cadtest
