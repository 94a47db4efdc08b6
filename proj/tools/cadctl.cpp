// cadctl: generation, evaluation, sweeps, FLOPs tables, speed benchmarks
// and a mock external scorer behind one binary.

#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "cad/cad.hpp"
#include "cad/servers.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 2;
constexpr int kExitUsage = 64;
constexpr int kExitInternal = 70;

// Input problems the user can fix map to the usage code.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::size_t default_jobs() {
    const auto n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

ojson manifest_base(const std::string& subcommand, const std::vector<std::string>& argv) {
    ojson m;
    m["artifact"] = "cadctl";
    m["version"] = cad::kArtifactVersion;
    m["subcommand"] = subcommand;
    m["argv"] = argv;
    return m;
}

void write_manifest(const fs::path& path, const ojson& manifest) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    cad::write_text_file(path, manifest.dump(2) + "\n");
}

cad::flops::Approximation parse_flops_mode(const std::string& s) { return cad::flops::parse_approximation(s); }

// ---------------------------------------------------------------------------
// Shared decoding flags.

struct DecodingFlags {
    std::optional<std::string> strategy;
    std::optional<std::size_t> top_k;
    std::optional<double> top_p;
    std::optional<double> temperature;
    std::optional<double> repetition_penalty;
    std::optional<std::size_t> min_new_tokens;
    std::optional<std::size_t> max_new_tokens;

    void add_to(CLI::App* app) {
        app->add_option("--strategy", strategy, "greedy or topk_topp (default topk_topp)");
        app->add_option("--top-k", top_k, "top-k cutoff");
        app->add_option("--top-p", top_p, "nucleus mass");
        app->add_option("--temperature", temperature, "softmax temperature (> 0)");
        app->add_option("--repetition-penalty", repetition_penalty, "repetition penalty (>= 1)");
        app->add_option("--min-new-tokens", min_new_tokens, "EOS is masked before this many tokens");
        app->add_option("--max-new-tokens", max_new_tokens, "generation length cap");
    }

    cad::SamplingOverrides overrides() const {
        cad::SamplingOverrides o;
        if (strategy) o.strategy = cad::parse_sampling_strategy(*strategy);
        o.top_k = top_k;
        o.top_p = top_p;
        o.temperature = temperature;
        o.repetition_penalty = repetition_penalty;
        o.min_new_tokens = min_new_tokens;
        o.max_new_tokens = max_new_tokens;
        return o;
    }
};

struct ModelFlags {
    std::string model;
    std::string dataset;
    std::optional<std::string> dataset_name;
    std::optional<std::string> template_id;
    std::optional<std::string> family;
    bool literal_table = false;
    bool strict = false;

    void add_to(CLI::App* app) {
        app->add_option("--model", model, "table:<path> or remote:<url>")->required();
        app->add_option("--dataset", dataset, "dataset JSONL")->required();
        app->add_option("--dataset-name", dataset_name,
                        "dataset name for defaults and templates (default: file stem)");
        app->add_option("--template", template_id, "template id, e.g. dbpedia/decoder_only");
        app->add_option("--family", family, "decoder_only or encoder_decoder (default: reported by model)");
        app->add_flag("--literal-template-table", literal_table,
                      "keep the document slot in the PubMedQA decoder-only context-free prompt");
        app->add_flag("--strict", strict, "fail on the first malformed dataset row");
    }

    std::string name() const { return dataset_name.value_or(fs::path(dataset).stem().string()); }
};

cad::PromptTemplate pick_template(const ModelFlags& f, const cad::LanguageModel& model) {
    const cad::TemplateOptions opts{f.literal_table};
    if (f.template_id) return cad::builtin_template(*f.template_id, opts);
    auto family = f.family ? cad::parse_model_family(*f.family) : model.family().value_or(cad::ModelFamily::decoder_only);
    return cad::builtin_template(f.name(), family, opts);
}

cad::LoadedDataset load_rows(const ModelFlags& f) {
    auto loaded = cad::load_dataset(f.dataset, cad::DatasetFormat::jsonl, f.strict);
    for (const auto& d : loaded.diagnostics) std::cerr << "warning: " << f.dataset << ": " << cad::to_string(d) << "\n";
    return loaded;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
    ModelFlags model;
    DecodingFlags decoding;
    std::optional<double> alpha;
    std::uint64_t seed = 0;
    std::string mode = "two_pass";
    std::string out;
    std::optional<std::string> manifest;
    std::size_t jobs = default_jobs();
    bool record_timing = false;
    std::string flops_mode = "exact_with_attention";
};

int run_generate(const GenerateArgs& a, const std::vector<std::string>& argv) {
    const auto decoding = cad::resolve_decoding(a.model.name(), a.decoding.overrides());
    if (a.alpha && !(*a.alpha >= 0.0)) throw cad::InvalidParameter("--alpha must be >= 0");
    const auto mode = cad::parse_execution_mode(a.mode);
    const auto fmode = parse_flops_mode(a.flops_mode);

    auto model = cad::open_model(a.model.model);
    cad::CellConfig cell;
    cell.dataset = a.model.name();
    cell.model_name = model->id();
    cell.prompt_template = pick_template(a.model, *model);
    if (a.alpha && *a.alpha > 0.0) cell.alpha = a.alpha;
    cell.decoding = decoding;
    cell.mode = mode;
    cell.seed = a.seed;
    cell.flops_mode = fmode;

    ojson m = manifest_base("generate", argv);
    m["model_uri"] = a.model.model;
    m["dataset_path"] = a.model.dataset;
    m["jobs"] = a.jobs;
    m["record_timing"] = a.record_timing;
    m["config"] = cell.to_json();
    m["config_hash"] = cell.hash();
    const fs::path out = a.out;
    write_manifest(a.manifest ? fs::path(*a.manifest) : out.parent_path() / "manifest.json", m);

    const auto loaded = load_rows(a.model);
    const auto records = cad::decode_examples(*model, loaded.examples, cell, a.jobs);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    cad::write_text_file(out, cad::results_jsonl(records, a.record_timing));

    std::size_t failed = 0;
    for (const auto& r : records) {
        if (!r.complete) {
            ++failed;
            std::cerr << "error: " << r.id << ": " << r.error << "\n";
        }
        for (const auto& w : r.warnings) std::cerr << "warning: " << r.id << ": " << w << "\n";
    }
    std::cout << "wrote " << records.size() << " records to " << out.string() << " (" << failed << " failed, "
              << loaded.diagnostics.size() << " rows skipped)\n";
    return failed || !loaded.diagnostics.empty() ? kExitPartial : kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
    std::string pred;
    std::string dataset;
    std::string metrics = "rouge";
    std::string out;
    std::optional<std::string> model_name;
    std::optional<std::string> dataset_name;
    bool stem = false;
};

int run_evaluate(const EvaluateArgs& a, const std::vector<std::string>& argv) {
    bool rouge = false;
    cad::ExternalScorers scorers;
    std::vector<std::string> external;
    {
        std::stringstream ss(a.metrics);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item == "rouge") {
                rouge = true;
            } else if (item.rfind("external:", 0) == 0 && item.size() > 9) {
                external.push_back(item.substr(9));
                scorers.register_metric(cad::kMetricBertScoreP, external.back());
                scorers.register_metric(cad::kMetricFactKb, external.back());
            } else {
                throw UsageError("unknown metric '" + item + "' (expected rouge or external:<url>)");
            }
        }
    }
    if (!rouge) throw UsageError("--metrics must include rouge");

    ojson m = manifest_base("evaluate", argv);
    m["pred"] = a.pred;
    m["dataset"] = a.dataset;
    m["metrics"] = a.metrics;
    m["rouge_stem"] = a.stem;
    write_manifest(fs::path(a.out) / "manifest.json", m);

    const auto data = cad::load_dataset(a.dataset, cad::DatasetFormat::jsonl, true);
    std::ifstream in(a.pred);
    if (!in) throw cad::IoError("cannot read '" + a.pred + "'");
    std::map<std::string, std::string> predictions;
    std::optional<double> alpha;
    bool all_complete = true;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("id") || !j.contains("output")) {
            throw cad::InvalidInput(a.pred + ":" + std::to_string(lineno) + ": expected a results record");
        }
        const auto id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
        if (!predictions.emplace(id, j["output"].get<std::string>()).second) {
            throw cad::InvalidInput(a.pred + ": duplicate id '" + id + "'");
        }
        if (j.contains("alpha") && j["alpha"].is_number() && !alpha) alpha = j["alpha"].get<double>();
        if (j.contains("complete") && j["complete"] == false) all_complete = false;
    }

    std::set<std::string> dataset_ids;
    for (const auto& ex : data.examples) dataset_ids.insert(ex.id);
    std::vector<std::string> orphans;
    for (const auto& [id, _] : predictions) {
        if (!dataset_ids.count(id)) orphans.push_back("prediction without dataset row: " + id);
    }
    for (const auto& id : dataset_ids) {
        if (!predictions.count(id)) orphans.push_back("dataset row without prediction: " + id);
    }
    if (!orphans.empty()) {
        std::string msg = "prediction ids do not match dataset ids:";
        for (const auto& o : orphans) msg += "\n  " + o;
        throw cad::InvalidInput(msg);
    }

    std::vector<cad::ScoredPair> pairs;
    for (const auto& ex : data.examples) pairs.push_back({predictions.at(ex.id), ex.reference, ex.document});

    cad::EvalCell cell;
    cell.dataset = a.dataset_name.value_or(fs::path(a.dataset).stem().string());
    cell.model = a.model_name.value_or(fs::path(a.pred).stem().string());
    cell.alpha = alpha;
    cell.scores = cad::score_pairs(pairs, cad::rouge::RougeOptions{a.stem}, external.empty() ? nullptr : &scorers);
    cell.complete = all_complete && cell.scores.n_external_missing == 0;
    if (cell.scores.n_external_missing) cell.error = "external scorer results missing";
    else if (!all_complete) cell.error = "some predictions are from incomplete records";

    cad::EvalReport report;
    report.cells.push_back(cell);
    cad::emit_report(report, a.out);
    std::cout << cad::cells_markdown(report);
    return cell.complete ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
    std::string spec;
    std::string out;
    std::optional<std::size_t> jobs;
    std::optional<std::uint64_t> seed;
    bool record_timing = false;
};

int run_sweep_cmd(const SweepArgs& a, const std::vector<std::string>& argv) {
    std::ifstream in(a.spec);
    if (!in) throw cad::IoError("cannot read '" + a.spec + "'");
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw cad::InvalidInput(a.spec + ": not valid JSON");
    auto spec = cad::parse_sweep_spec(j, fs::path(a.spec).parent_path());
    if (a.jobs) spec.jobs = *a.jobs;
    else if (!j.contains("jobs")) spec.jobs = default_jobs();
    if (a.seed) spec.seed = *a.seed;
    if (a.record_timing) spec.record_timing = true;

    ojson m = manifest_base("sweep", argv);
    m["spec_path"] = a.spec;
    m["spec"] = cad::to_json(spec);
    write_manifest(fs::path(a.out) / "manifest.json", m);

    const auto result = cad::run_sweep(spec);
    cad::write_sweep_outputs(result, a.out, spec.record_timing);
    std::cout << cad::alpha_markdown(result.report);
    std::size_t failed = 0;
    for (const auto& c : result.report.cells) {
        if (!c.complete) {
            ++failed;
            std::cerr << "cell " << c.model << "/" << c.dataset << "/alpha=" << cad::format_alpha(c.alpha.value_or(0))
                      << " incomplete: " << c.error << "\n";
        }
    }
    return failed ? kExitPartial : kExitOk;
}

// ---------------------------------------------------------------------------
// flops

struct FlopsArgs {
    std::uint64_t n_layer = 0, d_model = 0, d_attn = 0, d_ff = 0, n_heads = 1;
    std::uint64_t len_c = 0, len_x = 0, len_y = 1;
    std::string mode = "exact_with_attention";
    std::string out = ".";
};

std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int run_flops(const FlopsArgs& a, const std::vector<std::string>& argv) {
    cad::ModelConfig cfg;
    cfg.n_layer = a.n_layer;
    cfg.d_model = a.d_model;
    cfg.d_attn = a.d_attn;
    cfg.d_ff = a.d_ff;
    cfg.n_heads = a.n_heads;
    cfg.n_vocab = 1;
    cfg.validate();
    const auto mode = parse_flops_mode(a.mode);

    ojson m = manifest_base("flops", argv);
    m["config"] = {{"n_layer", a.n_layer}, {"d_model", a.d_model}, {"d_attn", a.d_attn}, {"d_ff", a.d_ff},
                   {"n_heads", a.n_heads}};
    m["len_c"] = a.len_c;
    m["len_x"] = a.len_x;
    m["len_y"] = a.len_y;
    m["mode"] = cad::flops::to_string(mode);
    write_manifest(fs::path(a.out) / "manifest.json", m);

    using cad::flops::Decoding;
    const auto b = cad::flops::breakdown(cfg, a.len_c, a.len_x, a.len_y, mode);
    const std::vector<std::string> header{"t", "units_vanilla", "units_cad", "ratio", "flops_vanilla", "flops_cad"};
    std::vector<std::vector<std::string>> rows;
    for (std::uint64_t t = 0; t < a.len_y; ++t) {
        const auto uv = cad::flops::step_units(Decoding::vanilla, a.len_c, a.len_x, t);
        const auto uc = cad::flops::step_units(Decoding::cad, a.len_c, a.len_x, t);
        rows.push_back({std::to_string(t), std::to_string(uv), std::to_string(uc),
                        std::to_string(uc) + "/" + std::to_string(uv), fmt_g(b.step_flops_vanilla[t]),
                        fmt_g(b.step_flops_cad[t])});
    }
    const auto tv = cad::flops::total_units(Decoding::vanilla, a.len_c, a.len_x, a.len_y);
    const auto tc = cad::flops::total_units(Decoding::cad, a.len_c, a.len_x, a.len_y);
    rows.push_back({"total", std::to_string(tv), std::to_string(tc), std::to_string(tc) + "/" + std::to_string(tv),
                    fmt_g(b.total_flops_vanilla), fmt_g(b.total_flops_cad)});

    const auto n = static_cast<std::uint64_t>(b.n_params_nonembed);
    const double cf = cad::flops::c_forward(cfg, a.len_x + a.len_c, mode);
    std::ostringstream md;
    md << "N (non-embedding parameters): " << n << "\n";
    md << "C_forward at n_input=" << (a.len_x + a.len_c) << " (" << cad::flops::to_string(mode) << "): " << fmt_g(cf)
       << "\n";
    md << "total ratio cad/vanilla: " << fmt_g(b.total_flops_cad / b.total_flops_vanilla) << "\n\n";
    md << cad::to_markdown(header, rows);

    fs::create_directories(a.out);
    cad::write_text_file(fs::path(a.out) / "flops.csv", cad::to_csv(header, rows));
    cad::write_text_file(fs::path(a.out) / "flops.md", md.str());
    std::cout << md.str();
    return kExitOk;
}

// ---------------------------------------------------------------------------
// bench-speed

struct BenchArgs {
    ModelFlags model;
    DecodingFlags decoding;
    std::string modes = "vanilla,cad";
    double alpha = 0.5;
    std::size_t repeats = 3;
    std::size_t warmup = 1;
    std::string mode = "two_pass";
    std::uint64_t seed = 0;
    std::string out = ".";
};

int run_bench(const BenchArgs& a, const std::vector<std::string>& argv) {
    if (a.repeats < 1) throw UsageError("--repeats must be >= 1");
    if (!(a.alpha > 0.0)) throw cad::InvalidParameter("--alpha must be > 0 for the cad mode");
    std::vector<std::string> modes;
    {
        std::stringstream ss(a.modes);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item != "vanilla" && item != "cad") throw UsageError("unknown bench mode '" + item + "'");
            modes.push_back(item);
        }
    }
    if (modes.empty()) throw UsageError("--modes is empty");
    const auto decoding = cad::resolve_decoding(a.model.name(), a.decoding.overrides());
    const auto exec = cad::parse_execution_mode(a.mode);
    auto model = cad::open_model(a.model.model);
    const auto tmpl = pick_template(a.model, *model);

    ojson m = manifest_base("bench-speed", argv);
    m["model_uri"] = a.model.model;
    m["dataset_path"] = a.model.dataset;
    m["template"] = tmpl.id;
    m["decoding"] = cad::to_json(decoding);
    m["modes"] = modes;
    m["alpha"] = a.alpha;
    m["execution_mode"] = cad::to_string(exec);
    m["repeats"] = a.repeats;
    m["warmup"] = a.warmup;
    m["seed"] = a.seed;
    write_manifest(fs::path(a.out) / "manifest.json", m);

    const auto loaded = load_rows(a.model);
    auto requests_for = [&](const std::string& mode) {
        std::vector<cad::DecodeRequest> reqs;
        for (const auto& ex : loaded.examples) {
            cad::DecodeRequest r;
            r.id = ex.id;
            r.query = ex.query;
            r.prompt_template = tmpl;
            r.context = cad::fit_document(*model, tmpl, ex, decoding.sampling.max_new_tokens);
            if (mode == "cad") r.alpha = a.alpha;
            r.temperature = decoding.temperature;
            r.sampling = decoding.sampling;
            r.sampling.seed = cad::example_seed(a.seed, ex.id);
            r.mode = exec;
            reqs.push_back(std::move(r));
        }
        return reqs;
    };
    std::map<std::string, std::vector<cad::DecodeRequest>> requests;
    for (const auto& md : modes) requests[md] = requests_for(md);

    for (std::size_t w = 0; w < a.warmup; ++w) {
        for (const auto& md : modes) cad::measure_speed(*model, requests[md]);
    }

    const std::string precision = "fp64 host arithmetic (" + model->id() + ")";
    const std::vector<std::string> header{"repeat", "mode", "s_per_token", "n_forward", "n_steps", "n_tokens",
                                          "forward_per_step", "batch_size", "precision"};
    std::vector<std::vector<std::string>> rows;
    std::map<std::string, double> spt_sum;
    std::map<std::string, cad::SpeedReport> last;
    bool complete = true;
    // Modes alternate inside each repeat so drift hits both alike.
    for (std::size_t r = 0; r < a.repeats; ++r) {
        for (const auto& md : modes) {
            const auto rep = cad::measure_speed(*model, requests[md]);
            complete = complete && rep.complete;
            spt_sum[md] += rep.aggregate_seconds_per_token;
            last[md] = rep;
            const double fps = rep.total_steps ? double(rep.total_forward_passes) / double(rep.total_steps) : 0.0;
            rows.push_back({std::to_string(r + 1), md, fmt_g(rep.aggregate_seconds_per_token),
                            std::to_string(rep.total_forward_passes), std::to_string(rep.total_steps),
                            std::to_string(rep.total_tokens), fmt_g(fps), "1", precision});
        }
    }
    for (const auto& md : modes) {
        const auto& rep = last[md];
        const double fps = rep.total_steps ? double(rep.total_forward_passes) / double(rep.total_steps) : 0.0;
        rows.push_back({"mean", md, fmt_g(spt_sum[md] / double(a.repeats)), std::to_string(rep.total_forward_passes),
                        std::to_string(rep.total_steps), std::to_string(rep.total_tokens), fmt_g(fps), "1",
                        precision});
    }

    std::ostringstream md;
    md << "warmup iterations excluded: " << a.warmup << "\n";
    if (spt_sum.count("vanilla") && spt_sum.count("cad") && spt_sum["vanilla"] > 0) {
        md << "ratio cad/vanilla s_per_token: " << fmt_g(spt_sum["cad"] / spt_sum["vanilla"]) << "\n";
        md << "ratio cad/vanilla forward passes: "
           << fmt_g(double(last["cad"].total_forward_passes) / double(last["vanilla"].total_forward_passes))
           << " (steps " << last["cad"].total_steps << " vs " << last["vanilla"].total_steps << ")\n";
    }
    md << "\n" << cad::to_markdown(header, rows);

    fs::create_directories(a.out);
    cad::write_text_file(fs::path(a.out) / "speed.csv", cad::to_csv(header, rows));
    cad::write_text_file(fs::path(a.out) / "speed.md", md.str());
    std::cout << md.str();
    return complete ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------------------
// serve-mock-scorer

struct ServeArgs {
    std::string host = "127.0.0.1";
    int port = 9000;
    std::string mode = "constant";
    double value = 0.5;
    std::string out = ".";
};

httplib::Server* g_server = nullptr;

int run_serve(const ServeArgs& a, const std::vector<std::string>& argv) {
    cad::MockScorerMode mode;
    if (a.mode == "constant") mode = cad::MockScorerMode::constant;
    else if (a.mode == "echo") mode = cad::MockScorerMode::echo;
    else throw UsageError("--mode must be constant or echo");
    if (!(a.value >= 0.0 && a.value <= 1.0)) throw UsageError("--value must lie in [0, 1]");

    ojson m = manifest_base("serve-mock-scorer", argv);
    m["host"] = a.host;
    m["port"] = a.port;
    m["mode"] = a.mode;
    m["value"] = a.value;
    write_manifest(fs::path(a.out) / "manifest.json", m);

    httplib::Server server;
    cad::install_mock_scorer_routes(server, mode, a.value);
    g_server = &server;
    std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
    std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
    std::cout << "mock scorer (" << a.mode << ") listening on http://" << a.host << ":" << a.port << std::endl;
    if (!server.listen(a.host, a.port)) throw cad::IoError("cannot listen on " + a.host + ":" + std::to_string(a.port));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv, argv + argc);
    CLI::App app{"context-aware decoding engine and benchmark harness", "cadctl"};
    app.require_subcommand(1);
    app.set_version_flag("--version", cad::kArtifactVersion);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "decode a dataset and write results JSONL");
    gen.model.add_to(g);
    gen.decoding.add_to(g);
    g->add_option("--alpha", gen.alpha, "PMI weight; omit or 0 for vanilla decoding");
    g->add_option("--seed", gen.seed, "run seed");
    g->add_option("--mode", gen.mode, "two_pass or packed_batch")->check(CLI::IsMember({"two_pass", "packed_batch"}));
    g->add_option("--out", gen.out, "results JSONL path")->required();
    g->add_option("--manifest", gen.manifest, "manifest path (default: manifest.json next to --out)");
    g->add_option("--jobs", gen.jobs, "worker threads")->check(CLI::PositiveNumber);
    g->add_flag("--record-timing", gen.record_timing, "write wall-clock fields (breaks byte reproducibility)");
    g->add_option("--flops-mode", gen.flops_mode, "exact_with_attention or two_n_approx");

    EvaluateArgs ev;
    auto* e = app.add_subcommand("evaluate", "score predictions against references");
    e->add_option("--pred", ev.pred, "results JSONL")->required();
    e->add_option("--dataset", ev.dataset, "dataset JSONL with references")->required();
    e->add_option("--metrics", ev.metrics, "rouge[,external:<url>]");
    e->add_option("--out", ev.out, "report directory")->required();
    e->add_option("--model-name", ev.model_name, "label for the Model column");
    e->add_option("--dataset-name", ev.dataset_name, "label for the Datasets column");
    e->add_flag("--stem", ev.stem, "apply Porter stemming before ROUGE");

    SweepArgs sw;
    auto* s = app.add_subcommand("sweep", "run a (model x dataset x alpha) sweep");
    s->add_option("--spec", sw.spec, "sweep spec JSON")->required();
    s->add_option("--out", sw.out, "output directory")->required();
    s->add_option("--jobs", sw.jobs, "worker threads (default: spec value, else logical cores)")
        ->check(CLI::PositiveNumber);
    s->add_option("--seed", sw.seed, "override the spec seed");
    s->add_flag("--record-timing", sw.record_timing, "write wall-clock fields");

    FlopsArgs fl;
    auto* f = app.add_subcommand("flops", "print the analytic cost table");
    f->add_option("--n-layer", fl.n_layer)->required()->check(CLI::PositiveNumber);
    f->add_option("--d-model", fl.d_model)->required()->check(CLI::PositiveNumber);
    f->add_option("--d-attn", fl.d_attn)->required()->check(CLI::PositiveNumber);
    f->add_option("--d-ff", fl.d_ff)->required()->check(CLI::PositiveNumber);
    f->add_option("--n-heads", fl.n_heads)->check(CLI::PositiveNumber);
    f->add_option("--len-c", fl.len_c, "context tokens")->check(CLI::NonNegativeNumber);
    f->add_option("--len-x", fl.len_x, "input tokens without context")->check(CLI::NonNegativeNumber);
    f->add_option("--len-y", fl.len_y, "generated tokens")->check(CLI::PositiveNumber);
    f->add_option("--mode", fl.mode, "exact_with_attention or two_n_approx");
    f->add_option("--out", fl.out, "directory for flops.csv, flops.md and manifest.json");

    BenchArgs be;
    auto* b = app.add_subcommand("bench-speed", "measure seconds per token for vanilla and CAD");
    be.model.add_to(b);
    be.decoding.add_to(b);
    b->add_option("--modes", be.modes, "comma list of vanilla, cad");
    b->add_option("--alpha", be.alpha, "alpha for the cad mode");
    b->add_option("--repeats", be.repeats, "timed repeats")->check(CLI::PositiveNumber);
    b->add_option("--warmup", be.warmup, "untimed warmup iterations");
    b->add_option("--mode", be.mode, "two_pass or packed_batch")->check(CLI::IsMember({"two_pass", "packed_batch"}));
    b->add_option("--seed", be.seed, "run seed");
    b->add_option("--out", be.out, "directory for speed.csv, speed.md and manifest.json");

    ServeArgs sv;
    auto* m = app.add_subcommand("serve-mock-scorer", "serve a stub external scorer on /v1/score");
    m->add_option("--host", sv.host);
    m->add_option("--port", sv.port)->check(CLI::Range(1, 65535));
    m->add_option("--mode", sv.mode, "constant or echo");
    m->add_option("--value", sv.value, "score returned in constant mode");
    m->add_option("--out", sv.out, "directory for manifest.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::CallForVersion& ex) {
        return app.exit(ex);
    } catch (const CLI::ParseError& ex) {
        app.exit(ex);
        return kExitUsage;
    }

    try {
        if (*g) return run_generate(gen, args);
        if (*e) return run_evaluate(ev, args);
        if (*s) return run_sweep_cmd(sw, args);
        if (*f) return run_flops(fl, args);
        if (*b) return run_bench(be, args);
        if (*m) return run_serve(sv, args);
    } catch (const UsageError& ex) {
        std::cerr << "usage error: " << ex.what() << "\n";
        return kExitUsage;
    } catch (const cad::InvalidInput& ex) {
        std::cerr << "invalid input: " << ex.what() << "\n";
        return kExitUsage;
    } catch (const cad::InvalidParameter& ex) {
        std::cerr << "invalid parameter: " << ex.what() << "\n";
        return kExitUsage;
    } catch (const cad::InputTooLong& ex) {
        std::cerr << "input too long: " << ex.what() << "\n";
        return kExitUsage;
    } catch (const cad::TemplateError& ex) {
        std::cerr << "template error: " << ex.what() << "\n";
        return kExitUsage;
    } catch (const cad::IoError& ex) {
        std::cerr << "i/o error: " << ex.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& ex) {
        std::cerr << "internal error: " << ex.what() << "\n";
        return kExitInternal;
    }
    return kExitInternal;
}
