/// @file runner.hpp
/// @brief Run configuration, the experiment matrix, reports and sweeps.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dtg/candidate.hpp"
#include "dtg/gateway.hpp"
#include "dtg/metrics.hpp"
#include "dtg/parser.hpp"
#include "dtg/prompt.hpp"
#include "dtg/task.hpp"

namespace dtg {

enum class CandidatePolicy { Empty, Sampled, WordDrop, Provided, SimilarityBucket };

std::string_view to_string(CandidatePolicy p);
CandidatePolicy parse_candidate_policy(std::string_view s);

struct CandidateSpec {
    CandidatePolicy policy = CandidatePolicy::Empty;
    /// Sampled: dataset to draw from (defaults to the test file).
    /// SimilarityBucket: extra pool texts (dataset references or plain lines).
    std::optional<std::filesystem::path> pool_path;
    /// WordDrop: base system outputs. Provided: the candidates themselves.
    std::optional<std::filesystem::path> texts_path;
    double rate = 0.0;
    double target_sim = 0.0;
    double tol = 0.05;
    /// SimilarityBucket: add seeded character corruptions of each reference
    /// (and the empty string) to the pool.
    bool synthesize_from_reference = true;

    std::string label() const;
    nlohmann::json to_json() const;
};

enum class BudgetPolicy { SkipCell, DropDemos };

enum class ReferenceScoring { Max, PerReferenceAverage };

struct ProviderSpec {
    std::string kind = "mock";  // "mock" or "openai"
    MockFallback fallback = MockFallback::EchoReference;
    std::optional<std::filesystem::path> script_path;
    std::optional<std::string> api_base;
    bool chat = false;
    double requests_per_minute = 0.0;
    RetryPolicy retry;
};

struct RunConfig {
    std::string name = "run";
    TaskSpec task;
    std::filesystem::path test_path;
    std::optional<std::filesystem::path> validation_path;
    std::vector<PromptMode> modes;
    std::vector<size_t> shots;
    CandidateSpec candidate;
    DemoStrategy demo_strategy = DemoStrategy::FirstK;
    std::uint64_t demo_seed = 0;
    ProviderSpec provider;
    LLMRequest generation;  // prompt unused
    size_t max_examples = 20;
    bool full_test_set = false;
    size_t token_budget = 4097;
    BudgetPolicy budget_policy = BudgetPolicy::SkipCell;
    ReferenceScoring reference_scoring = ReferenceScoring::Max;
    std::optional<std::filesystem::path> cache_dir;
    std::filesystem::path output_dir = "runs/out";
    std::optional<std::filesystem::path> templates_path;
    std::uint64_t run_seed = 0;
    size_t workers = 4;

    /// Relative paths resolve against base_dir. Throws ConfigError.
    static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
    static RunConfig load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
    /// Checks invariants and that referenced files exist. Throws ConfigError.
    void validate() const;
    /// SHA-256 of the canonical JSON form.
    std::string hash() const;
};

struct OutputRecord {
    std::string id;
    std::string hypothesis;
    std::string raw;
    ParseStatus status = ParseStatus::Clean;
    std::string error_type;
    size_t demos_used = 0;
};

struct ParseStats {
    size_t clean = 0;
    size_t fallback_after_colon = 0;
    size_t fallback_whole_text = 0;

    size_t total() const { return clean + fallback_after_colon + fallback_whole_text; }
    double clean_fraction() const;
    nlohmann::json to_json() const;
};

enum class CellStatus { Ok, Skipped, Failed };

std::string_view to_string(CellStatus s);

struct CellSpec {
    PromptMode mode;
    size_t shots = 0;
    CandidateSpec candidate;

    std::string id() const;
};

struct CellResult {
    CellSpec spec;
    CellStatus status = CellStatus::Ok;
    std::string reason;
    MetricReport metrics;
    ParseStats parse;
    /// Examples whose prompt lost demonstrations to the token budget.
    size_t examples_with_dropped_demos = 0;
    std::optional<double> mean_achieved_similarity;
    std::vector<OutputRecord> outputs;
    std::vector<CandidateManifestEntry> candidates;
    std::vector<std::string> cache_digests;

    nlohmann::json summary_json() const;
};

struct RunResult {
    std::string name;
    TaskSpec task;
    std::vector<CellResult> cells;
    nlohmann::json manifest;

    bool any_failed() const;
    /// Deterministic report (no timestamps or call counters).
    nlohmann::json report_json() const;
};

/// Everything a run needs besides the config: datasets and the gateway.
class Runner {
public:
    explicit Runner(RunConfig cfg);
    /// Uses a caller-supplied gateway (tests inject scripted providers).
    Runner(RunConfig cfg, std::shared_ptr<Gateway> gateway);

    RunResult run();
    CellResult run_cell(const CellSpec& cell);
    /// Prompt for the index-th test example of a cell, before any budget handling.
    RenderedPrompt render_example(const CellSpec& cell, size_t index);

    const RunConfig& config() const { return cfg_; }
    Gateway& gateway() { return *gateway_; }
    const Dataset& test_set() const { return test_; }

private:
    std::vector<const Example*> test_examples() const;
    Candidate candidate_for(const CandidateSpec& spec, const Example& ex, bool is_demo) const;
    void load_candidate_inputs(const CandidateSpec& spec);

    RunConfig cfg_;
    TemplateTable templates_;
    Dataset test_;
    Dataset validation_;
    std::shared_ptr<Gateway> gateway_;
    std::map<std::string, Dataset> pools_;
    std::map<std::string, std::vector<std::string>> bucket_pools_;
    std::map<std::string, std::map<std::string, std::string>> text_maps_;
};

std::shared_ptr<Gateway> make_gateway(const RunConfig& cfg);

/// Writes outputs, report.json, report.md, report.csv and manifest.json.
void write_run(const RunResult& result, const std::filesystem::path& dir);

enum class ReportFormat { Markdown, CSV };

/// Table in the column order used for the task family.
std::string emit_report(const RunResult& result, ReportFormat format);

struct CsvRow {
    std::string cell_id;
    std::string status;
    MetricReport metrics;
};

std::vector<CsvRow> parse_report_csv(std::string_view csv);

struct SimilarityPoint {
    double target = 0;
    std::optional<double> achieved;
    std::optional<double> bleu;
    CellStatus status = CellStatus::Ok;
    std::string reason;
};

struct WordDropPoint {
    double rate = 0;
    std::optional<double> bleu;
    std::optional<double> chrf;
    CellStatus status = CellStatus::Ok;
    std::string reason;
};

struct SweepResult {
    std::vector<SimilarityPoint> similarity;
    std::vector<WordDropPoint> word_drop;
    std::vector<CellResult> cells;
    std::vector<std::string> warnings;
    /// Set by the word-drop sweep when 1.0 is among the rates.
    std::optional<bool> rate_one_matches_empty;

    nlohmann::json to_json() const;
};

/// One DTG cell per target similarity, using shots = config.shots[0].
SweepResult sweep_similarity(Runner& runner, const std::vector<double>& targets);

/// One cell per distinct rate. Duplicate rates are dropped with a warning.
SweepResult sweep_word_drop(Runner& runner, const std::vector<double>& rates);

/// True when two cells produced identical outputs and metrics.
bool cells_identical(const CellResult& a, const CellResult& b);

}  // namespace dtg
