#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cad/dataset.hpp"
#include "cad/decode.hpp"
#include "cad/error.hpp"
#include "cad/external_scorer.hpp"
#include "cad/flops.hpp"
#include "cad/model_uri.hpp"
#include "cad/report.hpp"
#include "cad/templates.hpp"

namespace cad {

inline constexpr const char* kArtifactVersion = "1.0.0";

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Per-example seed: depends on the run seed and the example id only, so
// every alpha of a sweep sees the same random stream for a given example.
inline std::uint64_t example_seed(std::uint64_t run_seed, const std::string& example_id) {
    return mix_seed(run_seed ^ mix_seed(fnv1a64(example_id)));
}

// ---------------------------------------------------------------------------
// Decoding configuration resolution.

struct SamplingOverrides {
    std::optional<SamplingStrategy> strategy;
    std::optional<std::size_t> top_k;
    std::optional<double> top_p;
    std::optional<double> repetition_penalty;
    std::optional<std::size_t> min_new_tokens;
    std::optional<std::size_t> max_new_tokens;
    std::optional<double> temperature;
};

inline SamplingOverrides parse_sampling_overrides(const nlohmann::json& j) {
    SamplingOverrides o;
    if (j.is_null()) return o;
    if (!j.is_object()) throw InvalidInput("sampling overrides must be an object");
    for (const auto& [key, value] : j.items()) {
        if (key == "strategy") o.strategy = parse_sampling_strategy(value.get<std::string>());
        else if (key == "top_k") o.top_k = value.get<std::size_t>();
        else if (key == "top_p") o.top_p = value.get<double>();
        else if (key == "repetition_penalty") o.repetition_penalty = value.get<double>();
        else if (key == "min_new_tokens") o.min_new_tokens = value.get<std::size_t>();
        else if (key == "max_new_tokens") o.max_new_tokens = value.get<std::size_t>();
        else if (key == "temperature") o.temperature = value.get<double>();
        else throw InvalidInput("unknown sampling override '" + key + "'");
    }
    return o;
}

struct ResolvedDecoding {
    SamplingConfig sampling;
    double temperature = 1.0;
    int num_beams = 1;
    std::string defaults_source;  // "benchmark:<dataset>" or "generic"
};

inline ResolvedDecoding resolve_decoding(const std::string& dataset, const SamplingOverrides& o) {
    ResolvedDecoding r;
    auto canonical = canonical_dataset_name(dataset);
    auto defaults = canonical ? *benchmark_defaults(*canonical) : generic_defaults();
    r.defaults_source = canonical ? "benchmark:" + *canonical : "generic";
    r.sampling = defaults.sampling;
    r.temperature = defaults.temperature;
    r.num_beams = defaults.num_beams;
    if (o.strategy) r.sampling.strategy = *o.strategy;
    if (o.top_k) r.sampling.top_k = *o.top_k;
    if (o.top_p) r.sampling.top_p = *o.top_p;
    if (o.repetition_penalty) r.sampling.repetition_penalty = *o.repetition_penalty;
    if (o.min_new_tokens) r.sampling.min_new_tokens = *o.min_new_tokens;
    if (o.max_new_tokens) r.sampling.max_new_tokens = *o.max_new_tokens;
    if (o.temperature) r.temperature = *o.temperature;
    r.sampling.validate();
    if (r.sampling.max_new_tokens < 1) throw InvalidParameter("max_new_tokens must be >= 1");
    if (!(r.temperature > 0.0)) throw InvalidParameter("temperature must be > 0");
    return r;
}

inline nlohmann::ordered_json to_json(const ResolvedDecoding& r) {
    nlohmann::ordered_json j;
    j["strategy"] = to_string(r.sampling.strategy);
    j["top_k"] = r.sampling.top_k;
    j["top_p"] = r.sampling.top_p;
    j["num_beams"] = r.num_beams;
    j["repetition_penalty"] = r.sampling.repetition_penalty;
    j["temperature"] = r.temperature;
    j["min_new_tokens"] = r.sampling.min_new_tokens;
    j["max_new_tokens"] = r.sampling.max_new_tokens;
    j["defaults_source"] = r.defaults_source;
    return j;
}

// ---------------------------------------------------------------------------
// Running one cell.

struct CellConfig {
    std::string dataset;
    std::string model_name;
    PromptTemplate prompt_template;
    std::optional<double> alpha;  // nullopt: vanilla
    ResolvedDecoding decoding;
    ExecutionMode mode = ExecutionMode::two_pass;
    std::uint64_t seed = 0;
    flops::Approximation flops_mode = flops::Approximation::exact_with_attention;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["dataset"] = dataset;
        j["model"] = model_name;
        j["template"] = prompt_template.id;
        j["template_with_context"] = prompt_template.with_context;
        j["template_without_context"] = prompt_template.without_context;
        j["alpha"] = alpha ? nlohmann::ordered_json(*alpha) : nlohmann::ordered_json(nullptr);
        j["decoding"] = cad::to_json(decoding);
        j["mode"] = alpha ? to_string(mode) : "vanilla";
        j["seed"] = seed;
        j["flops_mode"] = flops::to_string(flops_mode);
        return j;
    }

    std::string hash() const { return hex64(fnv1a64(to_json().dump())); }
};

// Decodes every example; results are in input order regardless of `jobs`.
// Per-example failures become incomplete records.
inline std::vector<GenerationRecord> decode_examples(const LanguageModel& model,
                                                     const std::vector<DatasetExample>& examples,
                                                     const CellConfig& cell, std::size_t jobs = 1) {
    std::optional<ModelConfig> geometry;
    try {
        geometry = model.model_config();
    } catch (const UnsupportedCapability&) {
    }

    std::vector<GenerationRecord> out(examples.size());
    auto run_one = [&](std::size_t i) {
        const auto& ex = examples[i];
        try {
            DecodeRequest req;
            req.id = ex.id;
            req.query = ex.query;
            req.prompt_template = cell.prompt_template;
            req.context = fit_document(model, cell.prompt_template, ex, cell.decoding.sampling.max_new_tokens);
            req.alpha = cell.alpha;
            req.temperature = cell.decoding.temperature;
            req.sampling = cell.decoding.sampling;
            req.sampling.seed = example_seed(cell.seed, ex.id);
            req.mode = cell.mode;
            auto rec = decode(model, req);
            if (geometry) rec = flops::annotate(std::move(rec), geometry, cell.flops_mode);
            out[i] = std::move(rec);
        } catch (const Error& e) {
            GenerationRecord rec;
            rec.id = ex.id;
            rec.alpha = cell.alpha;
            rec.mode = cell.alpha ? to_string(cell.mode) : "vanilla";
            rec.complete = false;
            rec.error = e.what();
            out[i] = std::move(rec);
        }
    };

    jobs = std::max<std::size_t>(1, std::min(jobs, examples.size()));
    if (jobs == 1) {
        for (std::size_t i = 0; i < examples.size(); ++i) run_one(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < examples.size(); i = next++) run_one(i);
        });
    }
    for (auto& t : workers) t.join();
    return out;
}

struct CellRun {
    EvalCell cell;
    std::vector<GenerationRecord> records;
};

inline CellRun run_cell(const LanguageModel& model, const std::vector<DatasetExample>& examples,
                        const CellConfig& config, std::size_t jobs, const rouge::RougeOptions& rouge_options,
                        const ExternalScorers* scorers) {
    CellRun run;
    run.records = decode_examples(model, examples, config, jobs);
    auto& cell = run.cell;
    cell.dataset = config.dataset;
    cell.model = config.model_name;
    cell.alpha = config.alpha;
    cell.template_id = config.prompt_template.id;
    cell.seed = config.seed;
    cell.config = config.to_json();
    cell.config_hash = config.hash();

    std::vector<ScoredPair> pairs;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& rec = run.records[i];
        if (!rec.complete) {
            cell.complete = false;
            if (cell.error.empty()) cell.error = rec.id + ": " + rec.error;
        }
        cell.total_forward_passes += rec.forward_pass_count;
        cell.total_tokens += rec.generated_token_count;
        cell.total_steps += rec.steps;
        pairs.push_back({rec.generated_text, examples[i].reference, examples[i].document});
    }
    cell.scores = score_pairs(pairs, rouge_options, scorers);
    if (cell.scores.n_external_missing) {
        cell.complete = false;
        if (cell.error.empty()) cell.error = "external scorer results missing";
    }
    return run;
}

// ---------------------------------------------------------------------------
// Sweep specification.

struct ModelEntry {
    std::string name;
    std::string uri;
    std::optional<ModelFamily> family;
};

struct DatasetEntry {
    std::string name;
    std::filesystem::path path;
    std::optional<std::string> template_id;
    std::optional<PromptTemplate> custom_template;
    SamplingOverrides overrides;
};

struct SweepSpec {
    std::vector<double> alphas{0.0, 0.15, 0.3, 0.5};
    std::vector<ModelEntry> models;
    std::vector<DatasetEntry> datasets;
    std::uint64_t seed = 0;
    ExecutionMode mode = ExecutionMode::two_pass;
    std::size_t jobs = 1;
    std::vector<std::string> external_scorers;  // scorer base URLs; each serves all external metrics
    bool rouge_stem = false;
    bool literal_template_table = false;
    bool strict = false;
    bool record_timing = false;
    flops::Approximation flops_mode = flops::Approximation::exact_with_attention;
    std::filesystem::path base_dir;

    void validate() const {
        if (alphas.empty()) throw InvalidInput("sweep: alphas must not be empty");
        for (double a : alphas) {
            if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidInput("sweep: every alpha must be finite and >= 0");
        }
        if (models.empty()) throw InvalidInput("sweep: at least one model is required");
        if (datasets.empty()) throw InvalidInput("sweep: at least one dataset is required");
    }
};

inline SweepSpec parse_sweep_spec(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    SweepSpec s;
    s.base_dir = base_dir;
    try {
        static const std::set<std::string> known{"alphas", "models", "datasets", "seed", "mode", "jobs",
                                                 "external_scorers", "rouge_stem", "literal_template_table",
                                                 "strict", "record_timing", "flops_mode"};
        for (const auto& [key, value] : j.items()) {
            if (!known.count(key)) throw InvalidInput("sweep: unknown field '" + key + "'");
        }
        if (j.contains("alphas")) s.alphas = j.at("alphas").get<std::vector<double>>();
        for (const auto& m : j.at("models")) {
            ModelEntry e;
            e.uri = m.at("uri").get<std::string>();
            e.name = m.value("name", e.uri);
            if (m.contains("family")) e.family = parse_model_family(m.at("family").get<std::string>());
            s.models.push_back(std::move(e));
        }
        for (const auto& d : j.at("datasets")) {
            DatasetEntry e;
            e.path = d.at("path").get<std::string>();
            if (e.path.is_relative() && !base_dir.empty()) e.path = base_dir / e.path;
            e.name = d.value("name", e.path.stem().string());
            if (d.contains("template")) {
                const auto& t = d.at("template");
                if (t.is_string()) {
                    e.template_id = t.get<std::string>();
                } else {
                    e.custom_template = PromptTemplate::from_with_context(
                        t.at("id").get<std::string>(), t.at("with_context").get<std::string>(),
                        parse_model_family(t.value("family", std::string("decoder_only"))));
                }
            }
            if (d.contains("sampling")) e.overrides = parse_sampling_overrides(d.at("sampling"));
            s.datasets.push_back(std::move(e));
        }
        s.seed = j.value("seed", std::uint64_t{0});
        s.mode = parse_execution_mode(j.value("mode", std::string("two_pass")));
        s.jobs = j.value("jobs", std::size_t{1});
        s.external_scorers = j.value("external_scorers", std::vector<std::string>{});
        s.rouge_stem = j.value("rouge_stem", false);
        s.literal_template_table = j.value("literal_template_table", false);
        s.strict = j.value("strict", false);
        s.record_timing = j.value("record_timing", false);
        s.flops_mode = flops::parse_approximation(j.value("flops_mode", std::string("exact_with_attention")));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("sweep: malformed spec: ") + e.what());
    }
    s.validate();
    return s;
}

inline PromptTemplate resolve_template(const DatasetEntry& d, std::optional<ModelFamily> family,
                                       const TemplateOptions& options) {
    if (d.custom_template) return *d.custom_template;
    if (d.template_id) return builtin_template(*d.template_id, options);
    return builtin_template(d.name, family.value_or(ModelFamily::decoder_only), options);
}

struct SweepResult {
    EvalReport report;
    std::vector<CellRun> runs;  // parallel to report.cells
};

// Cells are visited model-major, then dataset, then alpha. Alpha 0 cells run
// vanilla decoding. Failures stay inside the affected cells.
inline SweepResult run_sweep(const SweepSpec& spec) {
    spec.validate();
    ExternalScorers scorers;
    for (const auto& url : spec.external_scorers) {
        scorers.register_metric(kMetricBertScoreP, url);
        scorers.register_metric(kMetricFactKb, url);
    }
    const ExternalScorers* scorers_ptr = spec.external_scorers.empty() ? nullptr : &scorers;
    const rouge::RougeOptions rouge_options{spec.rouge_stem};
    const TemplateOptions template_options{spec.literal_template_table};

    std::vector<std::optional<LoadedDataset>> datasets;
    std::vector<std::string> dataset_errors;
    for (const auto& d : spec.datasets) {
        try {
            datasets.push_back(load_dataset(d.path, DatasetFormat::jsonl, spec.strict));
            dataset_errors.emplace_back();
        } catch (const Error& e) {
            datasets.emplace_back();
            dataset_errors.emplace_back(e.what());
        }
    }

    SweepResult result;
    auto failed_cell = [&](const ModelEntry& m, const DatasetEntry& d, double alpha, const std::string& err) {
        CellRun run;
        run.cell.dataset = d.name;
        run.cell.model = m.name;
        run.cell.alpha = alpha;
        run.cell.seed = spec.seed;
        run.cell.complete = false;
        run.cell.error = err;
        result.report.cells.push_back(run.cell);
        result.runs.push_back(std::move(run));
    };

    for (const auto& m : spec.models) {
        std::unique_ptr<LanguageModel> model;
        std::string model_error;
        try {
            model = open_model(m.uri, spec.base_dir);
        } catch (const Error& e) {
            model_error = e.what();
        }
        for (std::size_t di = 0; di < spec.datasets.size(); ++di) {
            const auto& d = spec.datasets[di];
            for (double alpha : spec.alphas) {
                if (!model) {
                    failed_cell(m, d, alpha, "model unavailable: " + model_error);
                    continue;
                }
                if (!datasets[di]) {
                    failed_cell(m, d, alpha, "dataset unavailable: " + dataset_errors[di]);
                    continue;
                }
                try {
                    CellConfig cfg;
                    cfg.dataset = d.name;
                    cfg.model_name = m.name;
                    cfg.prompt_template = resolve_template(d, m.family ? m.family : model->family(), template_options);
                    if (alpha > 0.0) cfg.alpha = alpha;
                    cfg.decoding = resolve_decoding(d.name, d.overrides);
                    cfg.mode = spec.mode;
                    cfg.seed = spec.seed;
                    cfg.flops_mode = spec.flops_mode;
                    auto run = run_cell(*model, datasets[di]->examples, cfg, spec.jobs, rouge_options, scorers_ptr);
                    run.cell.alpha = alpha;
                    result.report.cells.push_back(run.cell);
                    result.runs.push_back(std::move(run));
                } catch (const Error& e) {
                    failed_cell(m, d, alpha, e.what());
                }
            }
        }
    }
    return result;
}

inline std::string results_jsonl(const std::vector<GenerationRecord>& records, bool with_timing) {
    std::string s;
    for (const auto& r : records) s += to_json(r, with_timing).dump() + "\n";
    return s;
}

inline std::string cell_file_stem(const EvalCell& c) {
    std::string s = c.model + "__" + c.dataset + "__alpha" + format_alpha(c.alpha.value_or(0.0));
    for (char& ch : s) {
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '_' || ch == '-')) ch = '_';
    }
    return s;
}

// results/<cell>.jsonl per cell plus the report files.
inline void write_sweep_outputs(const SweepResult& result, const std::filesystem::path& dir, bool with_timing) {
    std::filesystem::create_directories(dir / "results");
    for (const auto& run : result.runs) {
        write_text_file(dir / "results" / (cell_file_stem(run.cell) + ".jsonl"),
                        results_jsonl(run.records, with_timing));
    }
    emit_report(result.report, dir);
}

inline nlohmann::ordered_json to_json(const SweepSpec& s) {
    nlohmann::ordered_json j;
    j["alphas"] = s.alphas;
    nlohmann::ordered_json models = nlohmann::ordered_json::array();
    for (const auto& m : s.models) {
        models.push_back({{"name", m.name},
                          {"uri", m.uri},
                          {"family", m.family ? nlohmann::ordered_json(to_string(*m.family))
                                              : nlohmann::ordered_json(nullptr)}});
    }
    j["models"] = models;
    nlohmann::ordered_json datasets = nlohmann::ordered_json::array();
    for (const auto& d : s.datasets) {
        nlohmann::ordered_json dj;
        dj["name"] = d.name;
        dj["path"] = d.path.string();
        if (d.custom_template) {
            dj["template"] = d.custom_template->id;
        } else if (d.template_id) {
            dj["template"] = *d.template_id;
        } else {
            dj["template"] = nullptr;
        }
        try {
            dj["decoding"] = to_json(resolve_decoding(d.name, d.overrides));
        } catch (const Error& e) {
            dj["decoding_error"] = e.what();
        }
        datasets.push_back(std::move(dj));
    }
    j["datasets"] = datasets;
    j["seed"] = s.seed;
    j["mode"] = to_string(s.mode);
    j["jobs"] = s.jobs;
    j["external_scorers"] = s.external_scorers;
    j["rouge_stem"] = s.rouge_stem;
    j["literal_template_table"] = s.literal_template_table;
    j["strict"] = s.strict;
    j["record_timing"] = s.record_timing;
    j["flops_mode"] = flops::to_string(s.flops_mode);
    return j;
}

}  // namespace cad
