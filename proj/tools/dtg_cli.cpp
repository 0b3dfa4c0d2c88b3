// dtg command line: runs, scoring, error statistics, judging and sweeps.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "dtg/candidate.hpp"
#include "dtg/error_audit.hpp"
#include "dtg/errors.hpp"
#include "dtg/judge.hpp"
#include "dtg/metrics.hpp"
#include "dtg/rng.hpp"
#include "dtg/runner.hpp"
#include "dtg/text.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kPartialFailure = 2;

std::vector<std::string> read_lines(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw dtg::ConfigError("cannot open " + p.string());
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        out.push_back(line);
    }
    return out;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void write_file(const fs::path& p, const std::string& content) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw dtg::ConfigError("cannot write " + p.string());
    out << content;
}

// ---- run

struct RunOpts {
    std::string config;
    std::string out;
    bool full = false;
    int max_examples = -1;
};

dtg::RunConfig load_config(const RunOpts& o) {
    dtg::RunConfig cfg = dtg::RunConfig::load(o.config);
    if (o.full) cfg.full_test_set = true;
    if (o.max_examples > 0) cfg.max_examples = static_cast<size_t>(o.max_examples);
    if (!o.out.empty()) cfg.output_dir = o.out;
    return cfg;
}

int cmd_run(const RunOpts& o) {
    dtg::Runner runner(load_config(o));
    dtg::RunResult result = runner.run();
    dtg::write_run(result, runner.config().output_dir);
    std::cout << dtg::emit_report(result, dtg::ReportFormat::Markdown);
    for (const auto& c : result.cells) {
        if (c.status != dtg::CellStatus::Ok)
            std::cerr << c.spec.id() << ": " << dtg::to_string(c.status) << " (" << c.reason << ")\n";
    }
    std::cerr << "wrote " << runner.config().output_dir.string() << "\n";
    return result.any_failed() ? kPartialFailure : kOk;
}

// ---- score

struct ScoreOpts {
    std::string hyp;
    std::vector<std::string> refs;
    std::string src;
    std::string dataset;
    std::string task = "translation";
    std::string metrics = "bleu,chrf,ter,rouge";
};

int cmd_score(const ScoreOpts& o) {
    std::vector<std::string> srcs, hyps;
    dtg::ReferenceSets refs;
    if (!o.dataset.empty()) {
        dtg::Dataset ds = dtg::load_dataset(o.dataset, dtg::TaskSpec::of(dtg::parse_task_kind(o.task)),
                                            dtg::Split::Test);
        auto by_id = dtg::load_hypotheses(o.hyp);
        for (const auto* ex : ds.with_split(dtg::Split::Test)) {
            auto it = by_id.find(ex->id);
            if (it == by_id.end()) throw dtg::DatasetError("no hypothesis for example " + ex->id);
            srcs.push_back(ex->source);
            hyps.push_back(it->second);
            refs.push_back(ex->references);
        }
    } else {
        if (o.refs.empty()) throw dtg::ConfigError("score needs --ref or --dataset");
        hyps = read_lines(o.hyp);
        refs.resize(hyps.size());
        for (const auto& rf : o.refs) {
            auto lines = read_lines(rf);
            if (lines.size() != hyps.size())
                throw dtg::MetricInputError(rf + " has " + std::to_string(lines.size()) +
                                            " lines, hypotheses have " + std::to_string(hyps.size()));
            for (size_t i = 0; i < lines.size(); ++i) refs[i].push_back(lines[i]);
        }
        if (!o.src.empty()) srcs = read_lines(o.src);
    }
    auto names = split_list(o.metrics);
    for (const auto& n : names) {
        if (n == "sari" && srcs.empty()) throw dtg::ConfigError("sari needs sources (--src or --dataset)");
    }
    if (srcs.empty()) srcs.assign(hyps.size(), "");
    dtg::MetricReport r = dtg::score_corpus(srcs, hyps, refs, names);
    std::cout << r.to_json().dump() << "\n";
    return kOk;
}

// ---- errstats

struct ErrOpts {
    std::string align_ref, align_hyp, entities, hyps, src_lengths;
    std::string matching = "casefold";
};

int cmd_errstats(const ErrOpts& o) {
    dtg::ErrorStatsReport report;
    if (!o.align_ref.empty() || !o.align_hyp.empty()) {
        if (o.align_ref.empty() || o.align_hyp.empty())
            throw dtg::ConfigError("--align-ref and --align-hyp go together");
        std::map<std::string, size_t> lengths;
        if (!o.src_lengths.empty()) {
            for (const auto& [id, text] : dtg::load_hypotheses(o.src_lengths))
                lengths[id] = dtg::text::split_whitespace(text).size();
        }
        auto records = dtg::join_alignments(dtg::load_alignment_file(o.align_ref),
                                            dtg::load_alignment_file(o.align_hyp), lengths);
        report.under = dtg::under_translation_rate(records);
    }
    if (!o.entities.empty()) {
        if (o.hyps.empty()) throw dtg::ConfigError("--entities needs --hyps");
        auto matching = dtg::parse_entity_matching(o.matching);
        report.entity =
            dtg::entity_error_rate(dtg::load_entities(o.entities), dtg::load_hypotheses(o.hyps), matching);
        report.matching = matching;
    }
    if (!report.under && !report.entity)
        throw dtg::ConfigError("errstats needs alignment files or an entity file");
    std::cout << report.to_json().dump() << "\n";
    return kOk;
}

// ---- judge

struct JudgeOpts {
    std::string hyps_a, hyps_b, src;
    size_t n = 500;
    std::uint64_t seed = 0;
    bool single_order = false;
    std::string provider = "mock";
    std::string script;
    std::string cache_dir;
    std::string model = "gpt-3.5-turbo";
    std::string src_lang;
    bool chat = true;
    size_t workers = 4;
    std::string out;
};

int cmd_judge(const JudgeOpts& o) {
    auto srcs = read_lines(o.src);
    auto a = read_lines(o.hyps_a);
    auto b = read_lines(o.hyps_b);
    if (a.size() != srcs.size() || b.size() != srcs.size())
        throw dtg::ConfigError("--src, --hyps-a and --hyps-b must have the same number of lines");

    std::shared_ptr<dtg::Provider> provider;
    if (o.provider == "mock") {
        std::map<std::string, std::string> script;
        if (!o.script.empty()) script = dtg::MockProvider::load_script(o.script);
        provider = std::make_shared<dtg::MockProvider>(std::move(script), dtg::MockFallback::Fail);
    } else if (o.provider == "openai") {
        auto hc = dtg::HttpProviderConfig::from_env();
        hc.chat = o.chat;
        if (hc.api_key.empty()) throw dtg::ConfigError("no credential in DTG_API_KEY or OPENAI_API_KEY");
        provider = std::make_shared<dtg::HttpProvider>(hc);
    } else {
        throw dtg::ConfigError("--provider must be mock or openai");
    }
    std::optional<fs::path> cache;
    if (!o.cache_dir.empty()) cache = o.cache_dir;
    dtg::Gateway gw(provider, cache);

    dtg::JudgeSettings settings;
    settings.request_template.model = o.model;
    settings.request_template.max_tokens = 16;
    settings.swap = !o.single_order;
    if (!o.src_lang.empty()) settings.src_lang = o.src_lang;

    auto indices = dtg::sample_indices(srcs.size(), o.n, o.seed);
    dtg::JudgeRun run = dtg::judge_corpus(srcs, a, b, indices, gw, settings, o.workers);

    json record = {{"tally", run.tally.to_json()},
                   {"n_requested", o.n},
                   {"seed", o.seed},
                   {"swap", settings.swap},
                   {"rng", dtg::kRngName},
                   {"provider_calls", gw.provider_calls()},
                   {"cache_hits", gw.cache_hits()}};
    if (!o.out.empty()) {
        std::string lines;
        for (const auto& item : run.items) {
            json raws = json::array();
            for (const auto& j : item.outcome.judgments) raws.push_back(j.raw);
            lines += json{{"index", item.index},
                          {"preference", dtg::to_string(item.outcome.preference)},
                          {"raw", raws}}
                         .dump() +
                     "\n";
        }
        write_file(o.out, lines);
    }
    std::cout << record.dump() << "\n";
    return kOk;
}

// ---- render-prompt

struct RenderOpts {
    RunOpts run;
    std::string mode;
    int shots = -1;
    size_t index = 0;
};

dtg::PromptMode mode_from_flag(const std::string& s, const dtg::RunConfig& cfg) {
    if (s.empty()) return cfg.modes.front();
    auto open = s.find('(');
    if (open != std::string::npos && s.back() == ')') {
        auto m = dtg::PromptMode::fixed_error_type(s.substr(open + 1, s.size() - open - 2));
        if (s.substr(0, open) != dtg::to_string(dtg::PromptVariant::DtgFixedErrorType))
            throw dtg::ConfigError("only dtg_fixed_error_type takes a label");
        return m;
    }
    dtg::PromptMode m;
    m.variant = dtg::parse_prompt_variant(s);
    if (m.variant == dtg::PromptVariant::DtgFixedErrorType)
        throw dtg::ConfigError("use dtg_fixed_error_type(<label>)");
    return m;
}

// Gateway that is never called; keeps render-prompt free of credentials.
std::shared_ptr<dtg::Gateway> idle_gateway() {
    auto p = std::make_shared<dtg::MockProvider>(std::map<std::string, std::string>{},
                                                 dtg::MockFallback::Fail);
    return std::make_shared<dtg::Gateway>(p, std::nullopt);
}

int cmd_render(const RenderOpts& o) {
    dtg::RunConfig cfg = load_config(o.run);
    dtg::Runner runner(cfg, idle_gateway());
    dtg::CellSpec cell{mode_from_flag(o.mode, cfg),
                       o.shots >= 0 ? static_cast<size_t>(o.shots) : cfg.shots.front(), cfg.candidate};
    dtg::RenderedPrompt p = runner.render_example(cell, o.index);
    std::cout << p.text << "\n";
    std::cerr << "mode " << p.mode.name() << ", " << p.shots << " shots, ~" << p.token_estimate
              << " tokens, budget " << cfg.token_budget << "\n";
    return kOk;
}

// ---- synth-candidate

struct SynthOpts {
    std::string policy;
    std::string dataset;
    std::string task = "translation";
    std::string base;
    std::string pool;
    double rate = 0.0;
    double target_sim = 0.0;
    double tol = 0.05;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_synth(const SynthOpts& o) {
    dtg::TaskSpec task = dtg::TaskSpec::of(dtg::parse_task_kind(o.task));
    dtg::Dataset ds = dtg::load_dataset(o.dataset, task, dtg::Split::Test);
    auto policy = dtg::parse_candidate_policy(o.policy);
    std::map<std::string, std::string> base;
    if (policy == dtg::CandidatePolicy::WordDrop || policy == dtg::CandidatePolicy::Provided) {
        if (o.base.empty()) throw dtg::ConfigError("--base is required for " + o.policy);
        base = dtg::load_hypotheses(o.base);
    }
    std::optional<dtg::Dataset> pool;
    std::vector<std::string> bucket_pool{""};
    if (policy == dtg::CandidatePolicy::Sampled)
        pool = o.pool.empty() ? ds : dtg::load_dataset(o.pool, task, dtg::Split::Test);
    if (policy == dtg::CandidatePolicy::SimilarityBucket) {
        if (o.pool.empty()) throw dtg::ConfigError("--pool (one text per line) is required");
        auto lines = read_lines(o.pool);
        bucket_pool.insert(bucket_pool.end(), lines.begin(), lines.end());
    }

    std::string lines;
    for (const auto* ex : ds.with_split(dtg::Split::Test)) {
        const auto seed = dtg::derive_seed(o.seed, ex->id);
        dtg::Candidate c;
        switch (policy) {
            case dtg::CandidatePolicy::Empty: c = dtg::empty_candidate(); break;
            case dtg::CandidatePolicy::Sampled: c = dtg::sample_irrelevant(*pool, ex->id, seed); break;
            case dtg::CandidatePolicy::WordDrop:
            case dtg::CandidatePolicy::Provided: {
                auto it = base.find(ex->id);
                if (it == base.end()) throw dtg::DatasetError("no base text for example " + ex->id);
                c = policy == dtg::CandidatePolicy::WordDrop ? dtg::word_drop(it->second, o.rate, seed, ex->id)
                                                             : dtg::provided_candidate(it->second);
                break;
            }
            case dtg::CandidatePolicy::SimilarityBucket:
                c = dtg::bucket_candidates(bucket_pool, ex->references.front(), o.target_sim, o.tol);
                break;
        }
        lines += dtg::manifest_line({ex->id, c}) + "\n";
    }
    if (o.out.empty())
        std::cout << lines;
    else
        write_file(o.out, lines);
    return kOk;
}

// ---- sweeps

std::vector<double> parse_doubles(const std::string& s) {
    std::vector<double> out;
    for (const auto& item : split_list(s)) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw dtg::ConfigError("not a number: " + item);
        }
    }
    return out;
}

int finish_sweep(dtg::Runner& runner, const dtg::SweepResult& sweep, const std::string& file) {
    fs::path dir = runner.config().output_dir;
    write_file(dir / file, sweep.to_json().dump(2) + "\n");
    for (const auto& w : sweep.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << sweep.to_json().dump() << "\n";
    bool failed = false;
    for (const auto& c : sweep.cells) failed = failed || c.status != dtg::CellStatus::Ok;
    if (sweep.rate_one_matches_empty && !*sweep.rate_one_matches_empty) {
        std::cerr << "rate 1.0 cell differs from the empty-candidate cell\n";
        failed = true;
    }
    return failed ? kPartialFailure : kOk;
}

int cmd_sweep_sim(const RunOpts& o, const std::string& targets) {
    dtg::Runner runner(load_config(o));
    return finish_sweep(runner, dtg::sweep_similarity(runner, parse_doubles(targets)),
                        "similarity_curve.json");
}

int cmd_sweep_drop(const RunOpts& o, const std::string& rates) {
    dtg::Runner runner(load_config(o));
    return finish_sweep(runner, dtg::sweep_word_drop(runner, parse_doubles(rates)),
                        "word_drop_curve.json");
}

// ---- validate

struct ValidateOpts {
    std::string config;
    std::string dataset;
    std::string task = "translation";
    std::string benchmark;
};

int cmd_validate(const ValidateOpts& o) {
    if (!o.config.empty()) {
        dtg::RunConfig cfg = dtg::RunConfig::load(o.config);
        cfg.validate();
        std::cout << "config ok, hash " << cfg.hash() << "\n";
        return kOk;
    }
    if (o.dataset.empty()) throw dtg::ConfigError("validate needs --config or --dataset");
    dtg::Dataset ds = dtg::load_dataset(o.dataset, dtg::TaskSpec::of(dtg::parse_task_kind(o.task)),
                                        dtg::Split::Test);
    std::optional<size_t> expected;
    if (!o.benchmark.empty()) {
        expected = dtg::benchmark_test_size(o.benchmark);
        if (!expected) throw dtg::ConfigError("unknown benchmark: " + o.benchmark);
    }
    auto report = dtg::validate_dataset(ds, expected);
    for (const auto& issue : report.issues) std::cout << issue << "\n";
    std::cout << ds.examples.size() << " records, " << report.issues.size() << " issues\n";
    return report.issues.empty() ? kOk : kConfigError;
}

void add_run_opts(CLI::App* app, RunOpts& o) {
    app->add_option("-c,--config", o.config, "run config (JSON)")->required()->check(CLI::ExistingFile);
    app->add_option("-o,--out", o.out, "output directory (overrides the config)");
    app->add_flag("--full-test-set", o.full, "use every test example instead of the sample cap");
    app->add_option("--max-examples", o.max_examples, "sample cap");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dtg: error-detect-then-refine prompting harness"};
    app.require_subcommand(1);

    RunOpts run_opts;
    auto* run = app.add_subcommand("run", "run the configured matrix of prompt modes and shots");
    add_run_opts(run, run_opts);

    ScoreOpts score_opts;
    auto* score = app.add_subcommand("score", "score hypotheses against references");
    score->add_option("--hyp", score_opts.hyp, "hypotheses, one per line (or id-keyed with --dataset)")
        ->required();
    score->add_option("--ref", score_opts.refs, "reference file; repeat for multiple references");
    score->add_option("--src", score_opts.src, "sources, one per line");
    score->add_option("--dataset", score_opts.dataset, "dataset file supplying sources and references");
    score->add_option("--task", score_opts.task, "task kind for --dataset");
    score->add_option("--metrics", score_opts.metrics, "comma list: bleu,bleu3,chrf,ter,rouge,sari");

    ErrOpts err_opts;
    auto* err = app.add_subcommand("errstats", "under-translation and entity error rates");
    err->add_option("--align-ref", err_opts.align_ref, "source-reference alignments");
    err->add_option("--align-hyp", err_opts.align_hyp, "source-hypothesis alignments");
    err->add_option("--src-lengths", err_opts.src_lengths, "id-keyed source texts for sentence lengths");
    err->add_option("--entities", err_opts.entities, "reference entity records (JSON lines)");
    err->add_option("--hyps", err_opts.hyps, "hypotheses (JSON lines, id<TAB>text, or plain lines)");
    err->add_option("--matching", err_opts.matching, "exact or casefold");

    JudgeOpts judge_opts;
    auto* judge = app.add_subcommand("judge", "pairwise judging and win rates");
    judge->add_option("--hyps-a", judge_opts.hyps_a, "system A outputs")->required();
    judge->add_option("--hyps-b", judge_opts.hyps_b, "system B outputs")->required();
    judge->add_option("--src", judge_opts.src, "sources")->required();
    judge->add_option("--n", judge_opts.n, "number of sampled items");
    judge->add_option("--seed", judge_opts.seed, "sampling seed");
    judge->add_flag("--single-order", judge_opts.single_order, "single order, no swap debiasing");
    judge->add_option("--provider", judge_opts.provider, "mock or openai");
    judge->add_option("--mock-script", judge_opts.script, "scripted responses for the mock provider");
    judge->add_option("--cache-dir", judge_opts.cache_dir, "response cache root");
    judge->add_option("--model", judge_opts.model, "model name");
    judge->add_option("--src-lang", judge_opts.src_lang, "source language name for the prompt");
    judge->add_option("--workers", judge_opts.workers, "concurrent requests");
    judge->add_option("--items-out", judge_opts.out, "per-item verdicts (JSON lines)");

    RenderOpts render_opts;
    auto* render = app.add_subcommand("render-prompt", "print the prompt for one test example");
    add_run_opts(render, render_opts.run);
    render->add_option("--mode", render_opts.mode, "prompt mode; defaults to the first configured");
    render->add_option("--shots", render_opts.shots, "demonstration count");
    render->add_option("--index", render_opts.index, "test example index");

    SynthOpts synth_opts;
    auto* synth = app.add_subcommand("synth-candidate", "write a candidate manifest for a dataset");
    synth->add_option("--policy", synth_opts.policy, "empty|sampled|word_drop|provided|similarity_bucket")
        ->required();
    synth->add_option("--dataset", synth_opts.dataset, "dataset file")->required();
    synth->add_option("--task", synth_opts.task, "task kind");
    synth->add_option("--base", synth_opts.base, "base outputs for word_drop/provided");
    synth->add_option("--pool", synth_opts.pool, "pool dataset (sampled) or text lines (similarity_bucket)");
    synth->add_option("--rate", synth_opts.rate, "word drop rate");
    synth->add_option("--target-sim", synth_opts.target_sim, "target similarity");
    synth->add_option("--tol", synth_opts.tol, "similarity tolerance");
    synth->add_option("--seed", synth_opts.seed, "run seed");
    synth->add_option("--out", synth_opts.out, "manifest path; stdout when absent");

    RunOpts sim_opts;
    std::string targets = "0.0,0.1,0.2,0.3,0.4";
    auto* sim = app.add_subcommand("sweep-sim", "performance against candidate similarity");
    add_run_opts(sim, sim_opts);
    sim->add_option("--targets", targets, "comma list of target similarities");

    RunOpts drop_opts;
    std::string rates = "0.0,0.2,0.4,0.6,0.8,1.0";
    auto* drop = app.add_subcommand("sweep-drop", "performance against word drop rate");
    add_run_opts(drop, drop_opts);
    drop->add_option("--rates", rates, "comma list of drop rates");

    ValidateOpts val_opts;
    auto* validate = app.add_subcommand("validate", "check a run config or a dataset file");
    validate->add_option("--config", val_opts.config, "run config");
    validate->add_option("--dataset", val_opts.dataset, "dataset file");
    validate->add_option("--task", val_opts.task, "task kind for --dataset");
    validate->add_option("--benchmark", val_opts.benchmark, "expected benchmark size, e.g. \"WMT ZH-EN\"");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        if (*run) return cmd_run(run_opts);
        if (*score) return cmd_score(score_opts);
        if (*err) return cmd_errstats(err_opts);
        if (*judge) return cmd_judge(judge_opts);
        if (*render) return cmd_render(render_opts);
        if (*synth) return cmd_synth(synth_opts);
        if (*sim) return cmd_sweep_sim(sim_opts, targets);
        if (*drop) return cmd_sweep_drop(drop_opts, rates);
        if (*validate) return cmd_validate(val_opts);
    } catch (const dtg::ProviderError& e) {
        std::cerr << "provider error: " << e.what() << "\n";
        return kPartialFailure;
    } catch (const dtg::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    }
    return kOk;
}
