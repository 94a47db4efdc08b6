// Decode one example from samples/dbpedia.jsonl with and without CAD.
//
//   ./build/cad_example samples/toy.json samples/dbpedia.jsonl

#include <iostream>

#include "cad/cad.hpp"

int main(int argc, char** argv) {
    if (argc != 3) {
        std::cerr << "usage: " << argv[0] << " <table-lm.json> <dataset.jsonl>\n";
        return 64;
    }
    try {
        const auto model = cad::load_table_lm(argv[1]);
        const auto data = cad::load_dataset(argv[2]);
        const auto tmpl = cad::builtin_template("dbpedia", cad::ModelFamily::decoder_only);
        const auto& ex = data.examples.front();

        for (std::optional<double> alpha : {std::optional<double>{}, std::optional<double>{0.5}}) {
            cad::DecodeRequest req;
            req.id = ex.id;
            req.query = ex.query;
            req.context = ex.document;
            req.prompt_template = tmpl;
            req.alpha = alpha;
            req.sampling.strategy = cad::SamplingStrategy::greedy;
            req.sampling.max_new_tokens = 4;
            const auto rec = cad::decode(model, req);
            std::cout << cad::decoding_label(alpha) << ": \"" << rec.generated_text << "\" (" << rec.forward_pass_count
                      << " forward passes)\n";
        }

        // The next-token distributions behind the first step.
        const auto prompts = cad::render(tmpl, ex);
        const auto ctx = model.forward(model.tokenize(prompts.with_context));
        const auto unc = model.forward(model.tokenize(prompts.without_context));
        for (double alpha : {0.0, 0.5, 1.0}) {
            const auto p = cad::cad_dist(ctx, unc, {alpha, 1.0});
            std::cout << "alpha=" << alpha << ":";
            for (std::size_t i = 0; i < p.size(); ++i) std::cout << " " << model.vocabulary().token_of(static_cast<cad::TokenId>(i)) << "=" << p[i];
            std::cout << "\n";
        }
    } catch (const cad::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
