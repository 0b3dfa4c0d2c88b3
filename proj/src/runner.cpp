#include "dtg/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "dtg/errors.hpp"
#include "dtg/error_audit.hpp"
#include "dtg/parallel.hpp"
#include "dtg/rng.hpp"
#include "dtg/text.hpp"

namespace dtg {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kAllMetrics{"bleu", "bleu3", "chrf", "ter", "rouge", "sari"};

std::string fmt_exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt2(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string utc_timestamp() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

std::optional<fs::path> opt_path(const json& j, const char* key, const fs::path& base) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return resolve(base, j[key].get<std::string>());
}

json path_json(const std::optional<fs::path>& p) { return p ? json(p->string()) : json(nullptr); }

PromptMode mode_from_json(const json& j) {
    if (j.is_string()) {
        PromptMode m;
        m.variant = parse_prompt_variant(j.get<std::string>());
        if (m.variant == PromptVariant::DtgFixedErrorType)
            throw ConfigError("dtg_fixed_error_type needs an object with fixed_error_label");
        return m;
    }
    if (!j.is_object() || !j.contains("variant"))
        throw ConfigError("prompt mode must be a name or an object with \"variant\"");
    PromptMode m;
    m.variant = parse_prompt_variant(j["variant"].get<std::string>());
    if (j.contains("fixed_error_label")) m.fixed_error_label = j["fixed_error_label"].get<std::string>();
    if (j.contains("demo_error_label")) m.demo_error_label = j["demo_error_label"].get<std::string>();
    if (m.variant == PromptVariant::DtgFixedErrorType && !m.fixed_error_label)
        throw ConfigError("dtg_fixed_error_type requires fixed_error_label");
    return m;
}

json mode_to_json(const PromptMode& m) {
    json j = {{"variant", to_string(m.variant)}};
    if (m.fixed_error_label) j["fixed_error_label"] = *m.fixed_error_label;
    if (m.demo_error_label) j["demo_error_label"] = *m.demo_error_label;
    return j;
}

TaskSpec task_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind")) throw ConfigError("task needs a \"kind\"");
    TaskKind kind = parse_task_kind(j["kind"].get<std::string>());
    TaskSpec t = TaskSpec::of(kind);
    if (j.contains("task_noun")) t.task_noun = j["task_noun"].get<std::string>();
    if (j.contains("src_lang")) t.src_lang = j["src_lang"].get<std::string>();
    if (j.contains("tgt_lang")) t.tgt_lang = j["tgt_lang"].get<std::string>();
    if (j.contains("style_from")) t.style_from = j["style_from"].get<std::string>();
    if (j.contains("style_to")) t.style_to = j["style_to"].get<std::string>();
    t.validate();
    return t;
}

json task_to_json(const TaskSpec& t) {
    json j = {{"kind", to_string(t.kind)}, {"task_noun", t.task_noun}};
    if (t.src_lang) j["src_lang"] = *t.src_lang;
    if (t.tgt_lang) j["tgt_lang"] = *t.tgt_lang;
    if (t.style_from) j["style_from"] = *t.style_from;
    if (t.style_to) j["style_to"] = *t.style_to;
    return j;
}

std::string sanitize(std::string_view id) {
    std::string out;
    for (char c : id) {
        bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
        out += ok ? c : '_';
    }
    return out;
}

/// Replaces a seeded fraction of code points with '#'.
std::string corrupt(std::string_view ref, double fraction, std::uint64_t seed) {
    std::u32string u = text::decode_utf8(ref);
    size_t k = static_cast<size_t>(std::llround(fraction * static_cast<double>(u.size())));
    std::vector<size_t> idx(u.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(seed);
    for (size_t i = 0; i < k; ++i) {
        size_t j = i + static_cast<size_t>(rng.below(idx.size() - i));
        std::swap(idx[i], idx[j]);
        u[idx[i]] = U'#';
    }
    return text::encode_utf8(u);
}

std::string mode_label(const PromptMode& m) {
    switch (m.variant) {
        case PromptVariant::Standard: return "Standard";
        case PromptVariant::DTG: return "DTG";
        case PromptVariant::DtgNoErrorDetection: return "DTG w/o error detection";
        case PromptVariant::DtgWrongErrorType: return "DTG wrong error type";
        case PromptVariant::DtgFixedErrorType:
            return "DTG fixed error type (" + m.fixed_error_label.value_or("") + ")";
    }
    return "unknown";
}

struct Column {
    std::string header;
    std::optional<std::string> metric;  // nullopt: out-of-scope column
};

std::vector<Column> columns_for(TaskKind kind) {
    const std::optional<std::string> none;
    switch (kind) {
        case TaskKind::Translation:
            return {{"COMET-22", none}, {"TER", "ter"}, {"ChrF", "chrf"}, {"BLEU", "bleu"}};
        case TaskKind::Summarization:
        case TaskKind::DialogueSummarization:
            return {{"R1", "rouge1"}, {"R2", "rouge2"}, {"RL", "rougeL"}};
        case TaskKind::Simplification: return {{"BLEU", "bleu"}, {"SARI", "sari"}};
        case TaskKind::StyleTransfer: return {{"BLEU", "bleu"}, {"BLEURT", none}};
        case TaskKind::Paraphrase: return {{"BLEU", "bleu"}, {"RL", "rougeL"}};
        case TaskKind::CommonsenseGeneration:
            return {{"BLEU-3", "bleu3"}, {"BLEU", "bleu"}, {"R2", "rouge2"}, {"RL", "rougeL"}};
    }
    return {};
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::vector<std::string>> parse_csv(std::string_view s) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    for (size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < s.size() && s[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < s.size() && s[i + 1] == '\n') ++i;
            if (any || !field.empty()) {
                row.push_back(std::move(field));
                rows.push_back(std::move(row));
            }
            row.clear();
            field.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_text(const fs::path& p, const std::string& content) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << content;
}

}  // namespace

// ---------------------------------------------------------------- config

std::string_view to_string(CandidatePolicy p) {
    switch (p) {
        case CandidatePolicy::Empty: return "empty";
        case CandidatePolicy::Sampled: return "sampled";
        case CandidatePolicy::WordDrop: return "word_drop";
        case CandidatePolicy::Provided: return "provided";
        case CandidatePolicy::SimilarityBucket: return "similarity_bucket";
    }
    return "empty";
}

CandidatePolicy parse_candidate_policy(std::string_view s) {
    for (auto p : {CandidatePolicy::Empty, CandidatePolicy::Sampled, CandidatePolicy::WordDrop,
                   CandidatePolicy::Provided, CandidatePolicy::SimilarityBucket}) {
        if (to_string(p) == s) return p;
    }
    throw ConfigError("unknown candidate policy: " + std::string(s));
}

std::string CandidateSpec::label() const {
    switch (policy) {
        case CandidatePolicy::WordDrop: return "word_drop(" + fmt2(rate) + ")";
        case CandidatePolicy::SimilarityBucket: return "similarity(" + fmt2(target_sim) + ")";
        default: return std::string(to_string(policy));
    }
}

json CandidateSpec::to_json() const {
    json j = {{"policy", to_string(policy)}};
    j["pool_path"] = path_json(pool_path);
    j["texts_path"] = path_json(texts_path);
    j["rate"] = rate;
    j["target_sim"] = target_sim;
    j["tol"] = tol;
    j["synthesize_from_reference"] = synthesize_from_reference;
    return j;
}

RunConfig RunConfig::from_json(const json& j, const fs::path& base) {
    try {
        RunConfig c;
        if (!j.is_object()) throw ConfigError("run config must be a JSON object");
        c.name = j.value("name", std::string("run"));
        if (!j.contains("task")) throw ConfigError("run config needs \"task\"");
        c.task = task_from_json(j["task"]);
        if (!j.contains("test_path")) throw ConfigError("run config needs \"test_path\"");
        c.test_path = resolve(base, j["test_path"].get<std::string>());
        c.validation_path = opt_path(j, "validation_path", base);

        if (j.contains("modes")) {
            for (const auto& m : j["modes"]) c.modes.push_back(mode_from_json(m));
        } else {
            c.modes = {PromptMode::standard(), PromptMode::dtg()};
        }
        if (j.contains("shots")) {
            for (const auto& s : j["shots"]) {
                if (!s.is_number_integer() || s.get<long long>() < 0)
                    throw ConfigError("shots must be non-negative integers");
                c.shots.push_back(s.get<size_t>());
            }
        } else {
            c.shots = {1};
        }

        if (j.contains("candidate")) {
            const json& cj = j["candidate"];
            c.candidate.policy = parse_candidate_policy(cj.value("policy", std::string("empty")));
            c.candidate.pool_path = opt_path(cj, "pool_path", base);
            c.candidate.texts_path = opt_path(cj, "texts_path", base);
            c.candidate.rate = cj.value("rate", 0.0);
            c.candidate.target_sim = cj.value("target_sim", 0.0);
            c.candidate.tol = cj.value("tol", 0.05);
            c.candidate.synthesize_from_reference = cj.value("synthesize_from_reference", true);
        }
        if (j.contains("demo_selection")) {
            c.demo_strategy =
                parse_demo_strategy(j["demo_selection"].value("strategy", std::string("first_k")));
            c.demo_seed = j["demo_selection"].value("seed", std::uint64_t{0});
        }

        if (j.contains("provider")) {
            const json& pj = j["provider"];
            c.provider.kind = pj.value("kind", std::string("mock"));
            if (c.provider.kind != "mock" && c.provider.kind != "openai")
                throw ConfigError("provider kind must be \"mock\" or \"openai\"");
            c.provider.fallback =
                parse_mock_fallback(pj.value("fallback", std::string("echo_reference")));
            c.provider.script_path = opt_path(pj, "script_path", base);
            if (pj.contains("api_base") && !pj["api_base"].is_null()) c.provider.api_base = pj["api_base"].get<std::string>();
            c.provider.chat = pj.value("chat", false);
            c.provider.requests_per_minute = pj.value("requests_per_minute", 0.0);
            c.provider.retry.max_attempts = pj.value("max_attempts", 5);
            c.provider.retry.initial_backoff =
                std::chrono::milliseconds(pj.value("initial_backoff_ms", 500));
        }

        const bool long_output = c.task.kind == TaskKind::Summarization ||
                                 c.task.kind == TaskKind::DialogueSummarization;
        c.generation.model = "text-davinci-003";
        c.generation.max_tokens = long_output ? 1024 : 512;
        if (j.contains("generation")) {
            const json& gj = j["generation"];
            c.generation.model = gj.value("model", c.generation.model);
            c.generation.temperature = gj.value("temperature", 0.0);
            c.generation.top_p = gj.value("top_p", 1.0);
            c.generation.max_tokens = gj.value("max_tokens", c.generation.max_tokens);
            if (gj.contains("stop") && gj["stop"].is_array())
                c.generation.stop = gj["stop"].get<std::vector<std::string>>();
        }

        if (j.contains("limits")) {
            const json& lj = j["limits"];
            c.max_examples = lj.value("max_examples", c.max_examples);
            c.full_test_set = lj.value("full_test_set", false);
            c.token_budget = lj.value("token_budget", c.token_budget);
            std::string bp = lj.value("budget_policy", std::string("skip_cell"));
            if (bp == "skip_cell")
                c.budget_policy = BudgetPolicy::SkipCell;
            else if (bp == "drop_demos")
                c.budget_policy = BudgetPolicy::DropDemos;
            else
                throw ConfigError("budget_policy must be skip_cell or drop_demos");
        }
        std::string rs = j.value("reference_scoring", std::string("max"));
        if (rs == "max")
            c.reference_scoring = ReferenceScoring::Max;
        else if (rs == "per_reference_average")
            c.reference_scoring = ReferenceScoring::PerReferenceAverage;
        else
            throw ConfigError("reference_scoring must be max or per_reference_average");

        c.cache_dir = opt_path(j, "cache_dir", base);
        if (j.contains("output_dir")) c.output_dir = resolve(base, j["output_dir"].get<std::string>());
        c.templates_path = opt_path(j, "templates_path", base);
        c.run_seed = j.value("run_seed", std::uint64_t{0});
        c.workers = j.value("workers", size_t{4});
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("run config: ") + e.what());
    }
}

RunConfig RunConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open run config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("run config " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(j, path.parent_path());
}

json RunConfig::to_json() const {
    json modes_j = json::array();
    for (const auto& m : modes) modes_j.push_back(mode_to_json(m));
    json gen = {{"model", generation.model},
                {"temperature", generation.temperature},
                {"top_p", generation.top_p},
                {"max_tokens", generation.max_tokens}};
    gen["stop"] = generation.stop ? json(*generation.stop) : json(nullptr);
    json prov = {{"kind", provider.kind},
                 {"chat", provider.chat},
                 {"requests_per_minute", provider.requests_per_minute},
                 {"max_attempts", provider.retry.max_attempts}};
    prov["fallback"] = provider.fallback == MockFallback::EchoReference   ? "echo_reference"
                       : provider.fallback == MockFallback::EchoCandidate ? "echo_candidate"
                                                                          : "fail";
    prov["script_path"] = path_json(provider.script_path);
    prov["api_base"] = provider.api_base ? json(*provider.api_base) : json(nullptr);
    return {{"name", name},
            {"task", task_to_json(task)},
            {"test_path", test_path.string()},
            {"validation_path", path_json(validation_path)},
            {"modes", modes_j},
            {"shots", shots},
            {"candidate", candidate.to_json()},
            {"demo_selection",
             {{"strategy", demo_strategy == DemoStrategy::FirstK ? "first_k" : "seeded_random"},
              {"seed", demo_seed}}},
            {"provider", prov},
            {"generation", gen},
            {"limits",
             {{"max_examples", max_examples},
              {"full_test_set", full_test_set},
              {"token_budget", token_budget},
              {"budget_policy",
               budget_policy == BudgetPolicy::SkipCell ? "skip_cell" : "drop_demos"}}},
            {"reference_scoring",
             reference_scoring == ReferenceScoring::Max ? "max" : "per_reference_average"},
            {"cache_dir", path_json(cache_dir)},
            {"output_dir", output_dir.string()},
            {"templates_path", path_json(templates_path)},
            {"run_seed", run_seed},
            {"workers", workers}};
}

void RunConfig::validate() const {
    task.validate();
    if (modes.empty()) throw ConfigError("no prompt modes configured");
    if (shots.empty()) throw ConfigError("no shot counts configured");
    generation.validate();
    if (workers == 0) throw ConfigError("workers must be >= 1");
    if (max_examples == 0 && !full_test_set) throw ConfigError("max_examples must be >= 1");

    auto must_exist = [](const std::optional<fs::path>& p, const char* what) {
        if (p && !fs::exists(*p)) throw ConfigError(std::string(what) + " not found: " + p->string());
    };
    must_exist(test_path, "test file");
    must_exist(validation_path, "validation file");
    must_exist(candidate.pool_path, "candidate pool");
    must_exist(candidate.texts_path, "candidate texts");
    must_exist(provider.script_path, "mock script");
    must_exist(templates_path, "template table");

    if (candidate.policy == CandidatePolicy::WordDrop && !candidate.texts_path)
        throw ConfigError("word_drop candidates need texts_path (base system outputs)");
    if (candidate.policy == CandidatePolicy::Provided && !candidate.texts_path)
        throw ConfigError("provided candidates need texts_path");
    if (candidate.rate < 0 || candidate.rate > 1) throw ConfigError("word-drop rate must lie in [0, 1]");
    if (!(candidate.tol > 0)) throw ConfigError("similarity tolerance must be > 0");

    // The budget has to admit at least a zero-shot prompt with empty inputs.
    TemplateTable table = templates_path ? TemplateTable::load(*templates_path) : TemplateTable::builtin();
    Example blank{"", "", {"x"}, Split::Test};
    size_t overhead = 0;
    for (const auto& m : modes) {
        RenderedPrompt p = render(task, DemoSet{}, blank, {}, empty_candidate(), m, table);
        overhead = std::max(overhead, p.token_estimate);
    }
    if (token_budget < overhead)
        throw ConfigError("token budget " + std::to_string(token_budget) +
                          " is below the prompt overhead of " + std::to_string(overhead));
}

std::string RunConfig::hash() const { return sha256_hex(to_json().dump()); }

// ---------------------------------------------------------------- results

double ParseStats::clean_fraction() const {
    return total() == 0 ? 0.0 : static_cast<double>(clean) / static_cast<double>(total());
}

json ParseStats::to_json() const {
    return {{"clean", clean},
            {"fallback_after_colon", fallback_after_colon},
            {"fallback_whole_text", fallback_whole_text},
            {"clean_fraction", clean_fraction()}};
}

std::string_view to_string(CellStatus s) {
    switch (s) {
        case CellStatus::Ok: return "ok";
        case CellStatus::Skipped: return "skipped";
        case CellStatus::Failed: return "failed";
    }
    return "failed";
}

std::string CellSpec::id() const {
    return mode.name() + "|" + std::to_string(shots) + "-shot|" + candidate.label();
}

json CellResult::summary_json() const {
    json j = {{"cell_id", spec.id()},
              {"mode", mode_to_json(spec.mode)},
              {"shots", spec.shots},
              {"candidate", spec.candidate.label()},
              {"status", to_string(status)},
              {"reason", reason},
              {"n", outputs.size()},
              {"metrics", metrics.to_json()},
              {"parse", parse.to_json()},
              {"examples_with_dropped_demos", examples_with_dropped_demos}};
    j["mean_achieved_similarity"] =
        mean_achieved_similarity ? json(*mean_achieved_similarity) : json(nullptr);
    return j;
}

bool RunResult::any_failed() const {
    return std::any_of(cells.begin(), cells.end(),
                       [](const CellResult& c) { return c.status == CellStatus::Failed; });
}

json RunResult::report_json() const {
    json cells_j = json::array();
    for (const auto& c : cells) cells_j.push_back(c.summary_json());
    return {{"name", name}, {"task", task_to_json(task)}, {"cells", cells_j}};
}

// ---------------------------------------------------------------- runner

std::shared_ptr<Gateway> make_gateway(const RunConfig& cfg) {
    std::shared_ptr<Provider> provider;
    if (cfg.provider.kind == "mock") {
        std::map<std::string, std::string> script;
        if (cfg.provider.script_path) script = MockProvider::load_script(*cfg.provider.script_path);
        provider = std::make_shared<MockProvider>(std::move(script), cfg.provider.fallback);
    } else {
        HttpProviderConfig hc = HttpProviderConfig::from_env();
        if (cfg.provider.api_base) hc.api_base = *cfg.provider.api_base;
        hc.chat = cfg.provider.chat;
        if (hc.api_key.empty())
            throw ConfigError("openai provider needs a credential in DTG_API_KEY or OPENAI_API_KEY");
        provider = std::make_shared<HttpProvider>(hc);
    }
    return std::make_shared<Gateway>(provider, cfg.cache_dir, cfg.provider.retry,
                                     cfg.provider.requests_per_minute);
}

Runner::Runner(RunConfig cfg) : Runner(cfg, nullptr) {}

Runner::Runner(RunConfig cfg, std::shared_ptr<Gateway> gateway)
    : cfg_(std::move(cfg)),
      templates_(cfg_.templates_path ? TemplateTable::load(*cfg_.templates_path)
                                     : TemplateTable::builtin()) {
    cfg_.validate();
    Dataset file = load_dataset(cfg_.test_path, cfg_.task, Split::Test);
    test_.task = cfg_.task;
    test_.name = file.name;
    for (const auto* ex : file.with_split(Split::Test)) test_.examples.push_back(*ex);
    validation_.task = cfg_.task;
    if (cfg_.validation_path) {
        validation_ = load_dataset(*cfg_.validation_path, cfg_.task, Split::Validation);
    } else {
        validation_.name = file.name;
        for (const auto* ex : file.with_split(Split::Validation)) validation_.examples.push_back(*ex);
    }
    std::set<std::string> test_ids;
    for (const auto& ex : test_.examples) test_ids.insert(ex.id);
    for (const auto* ex : validation_.with_split(Split::Validation)) {
        if (test_ids.count(ex->id))
            throw ConfigError("demonstration pool example " + ex->id + " also appears in the test set");
    }
    gateway_ = gateway ? std::move(gateway) : make_gateway(cfg_);
    load_candidate_inputs(cfg_.candidate);
}

void Runner::load_candidate_inputs(const CandidateSpec& spec) {
    if (spec.policy == CandidatePolicy::Sampled) {
        fs::path p = spec.pool_path.value_or(cfg_.test_path);
        if (!pools_.count(p.string())) pools_[p.string()] = load_dataset(p, cfg_.task, Split::Test);
    }
    if ((spec.policy == CandidatePolicy::WordDrop || spec.policy == CandidatePolicy::Provided) &&
        spec.texts_path && !text_maps_.count(spec.texts_path->string())) {
        text_maps_[spec.texts_path->string()] = load_hypotheses(*spec.texts_path);
    }
    if (spec.policy == CandidatePolicy::SimilarityBucket && spec.pool_path &&
        !bucket_pools_.count(spec.pool_path->string())) {
        std::vector<std::string> texts;
        if (spec.pool_path->extension() == ".jsonl") {
            Dataset d = load_dataset(*spec.pool_path, cfg_.task, Split::Test);
            for (const auto& ex : d.examples)
                for (const auto& r : ex.references) texts.push_back(r);
        } else {
            std::ifstream in(*spec.pool_path);
            std::string line;
            while (std::getline(in, line)) texts.push_back(line);
        }
        bucket_pools_[spec.pool_path->string()] = std::move(texts);
    }
}

std::vector<const Example*> Runner::test_examples() const {
    std::vector<const Example*> out;
    for (const auto& ex : test_.examples) out.push_back(&ex);
    if (!cfg_.full_test_set && out.size() > cfg_.max_examples) out.resize(cfg_.max_examples);
    return out;
}

Candidate Runner::candidate_for(const CandidateSpec& spec, const Example& ex, bool is_demo) const {
    const std::string seed_id = (is_demo ? "demo:" : "") + ex.id;
    const std::uint64_t seed = derive_seed(cfg_.run_seed, seed_id);
    switch (spec.policy) {
        case CandidatePolicy::Empty: return empty_candidate();
        case CandidatePolicy::Sampled: {
            fs::path p = spec.pool_path.value_or(cfg_.test_path);
            Candidate c = sample_irrelevant(pools_.at(p.string()), ex.id, seed);
            if (auto* o = std::get_if<SampledOrigin>(&c.provenance)) o->pool_id = p.filename().string();
            return c;
        }
        case CandidatePolicy::WordDrop: {
            const auto& base = text_maps_.at(spec.texts_path->string());
            auto it = base.find(ex.id);
            if (it == base.end() && !is_demo)
                throw DatasetError("no base system output for example " + ex.id);
            return word_drop(it == base.end() ? std::string() : it->second, spec.rate, seed, ex.id);
        }
        case CandidatePolicy::Provided: {
            const auto& texts = text_maps_.at(spec.texts_path->string());
            auto it = texts.find(ex.id);
            if (it == texts.end() && !is_demo)
                throw DatasetError("no provided candidate for example " + ex.id);
            return provided_candidate(it == texts.end() ? std::string() : it->second);
        }
        case CandidatePolicy::SimilarityBucket: {
            std::vector<std::string> pool{""};
            const std::string& ref = ex.references.front();
            if (spec.synthesize_from_reference) {
                for (int k = 0; k <= 40; ++k)
                    pool.push_back(corrupt(ref, 1.0 - k / 40.0, derive_seed(seed, std::to_string(k))));
            }
            if (spec.pool_path) {
                const auto& extra = bucket_pools_.at(spec.pool_path->string());
                pool.insert(pool.end(), extra.begin(), extra.end());
            }
            return bucket_candidates(pool, ref, spec.target_sim, spec.tol);
        }
    }
    return empty_candidate();
}

CellResult Runner::run_cell(const CellSpec& cell) {
    CellResult res;
    res.spec = cell;
    const auto examples = test_examples();

    // Everything before the provider calls; failures here fail the cell.
    DemoSet demos;
    std::vector<Candidate> demo_cands;
    std::vector<Candidate> cands(examples.size());
    std::vector<RenderedPrompt> prompts(examples.size());
    std::vector<size_t> demos_used(examples.size(), 0);
    try {
        load_candidate_inputs(cell.candidate);
        demos = select_demonstrations(validation_, cell.shots, cfg_.demo_strategy, cfg_.demo_seed);
        for (const auto& d : demos.demos) demo_cands.push_back(candidate_for(cell.candidate, d, true));

        double sim_sum = 0;
        for (size_t i = 0; i < examples.size(); ++i) {
            cands[i] = candidate_for(cell.candidate, *examples[i], false);
            if (auto* b = std::get_if<SimilarityBucketOrigin>(&cands[i].provenance)) sim_sum += b->achieved_sim;
            res.candidates.push_back({examples[i]->id, cands[i]});

            DemoSet use = demos;
            std::vector<Candidate> use_cands = demo_cands;
            prompts[i] = render(cfg_.task, use, *examples[i], use_cands, cands[i], cell.mode, templates_);
            if (prompts[i].token_estimate > cfg_.token_budget) {
                if (cfg_.budget_policy == BudgetPolicy::SkipCell) {
                    res.status = CellStatus::Skipped;
                    res.reason = "token budget";
                    res.candidates.clear();
                    return res;
                }
                while (prompts[i].token_estimate > cfg_.token_budget && !use.demos.empty()) {
                    use.demos.erase(use.demos.begin());
                    use_cands.erase(use_cands.begin());
                    use.k = use.demos.size();
                    prompts[i] = render(cfg_.task, use, *examples[i], use_cands, cands[i], cell.mode, templates_);
                }
                if (prompts[i].token_estimate > cfg_.token_budget) {
                    res.status = CellStatus::Skipped;
                    res.reason = "token budget";
                    res.candidates.clear();
                    return res;
                }
                ++res.examples_with_dropped_demos;
            }
            demos_used[i] = prompts[i].shots;
        }
        if (cell.candidate.policy == CandidatePolicy::SimilarityBucket && !examples.empty())
            res.mean_achieved_similarity = sim_sum / static_cast<double>(examples.size());
    } catch (const Error& e) {
        res.status = CellStatus::Failed;
        res.reason = e.what();
        return res;
    } catch (const std::invalid_argument& e) {
        res.status = CellStatus::Failed;
        res.reason = e.what();
        return res;
    }

    res.outputs.resize(examples.size());
    res.cache_digests.resize(examples.size());
    try {
        parallel_for(examples.size(), cfg_.workers, [&](size_t i) {
            const Example& ex = *examples[i];
            LLMRequest req = cfg_.generation;
            req.prompt = prompts[i].text;
            RequestContext ctx;
            ctx.example_id = ex.id;
            ctx.reference_echo = ideal_completion(cfg_.task, cell.mode, ex.references.front(), templates_);
            ctx.candidate_echo = ideal_completion(cfg_.task, cell.mode, cands[i].text, templates_);
            res.cache_digests[i] = cache_key(req);
            LLMResponse resp = gateway_->complete(req, ctx);
            ParsedDTGOutput parsed = parse_completion(resp.text, cfg_.task, cell.mode);
            OutputRecord& out = res.outputs[i];
            out.id = ex.id;
            out.hypothesis = parsed.refined;
            out.raw = resp.text;
            out.status = parsed.status;
            out.error_type = parsed.error_type;
            out.demos_used = demos_used[i];
        });
    } catch (const ProviderError& e) {
        res.status = CellStatus::Failed;
        res.reason = std::string("provider: ") + e.what();
        res.outputs.clear();
        return res;
    }

    for (const auto& o : res.outputs) {
        switch (o.status) {
            case ParseStatus::Clean: ++res.parse.clean; break;
            case ParseStatus::FallbackAfterColon: ++res.parse.fallback_after_colon; break;
            case ParseStatus::FallbackWholeText: ++res.parse.fallback_whole_text; break;
        }
    }

    std::vector<std::string> srcs, hyps;
    ReferenceSets refs;
    for (size_t i = 0; i < examples.size(); ++i) {
        srcs.push_back(examples[i]->source);
        hyps.push_back(res.outputs[i].hypothesis);
        refs.push_back(examples[i]->references);
    }
    if (examples.empty()) {
        res.metrics.n = 0;
    } else if (cfg_.reference_scoring == ReferenceScoring::Max) {
        res.metrics = score_corpus(srcs, hyps, refs, kAllMetrics);
    } else {
        size_t max_refs = 0;
        for (const auto& r : refs) max_refs = std::max(max_refs, r.size());
        std::vector<MetricReport> per_ref;
        for (size_t k = 0; k < max_refs; ++k) {
            ReferenceSets single;
            for (const auto& r : refs) single.push_back({r[std::min(k, r.size() - 1)]});
            per_ref.push_back(score_corpus(srcs, hyps, single, kAllMetrics));
        }
        res.metrics = dialogsum_average(per_ref);
    }
    return res;
}

RenderedPrompt Runner::render_example(const CellSpec& cell, size_t index) {
    const auto examples = test_examples();
    if (index >= examples.size())
        throw ConfigError("example index " + std::to_string(index) + " out of range (" +
                          std::to_string(examples.size()) + " test examples)");
    load_candidate_inputs(cell.candidate);
    DemoSet demos = select_demonstrations(validation_, cell.shots, cfg_.demo_strategy, cfg_.demo_seed);
    std::vector<Candidate> demo_cands;
    for (const auto& d : demos.demos) demo_cands.push_back(candidate_for(cell.candidate, d, true));
    Candidate cand = candidate_for(cell.candidate, *examples[index], false);
    return render(cfg_.task, demos, *examples[index], demo_cands, cand, cell.mode, templates_);
}

RunResult Runner::run() {
    RunResult result;
    result.name = cfg_.name;
    result.task = cfg_.task;
    const std::string started = utc_timestamp();
    const auto calls_before = gateway_->provider_calls();
    const auto hits_before = gateway_->cache_hits();
    for (const auto& mode : cfg_.modes) {
        for (size_t shots : cfg_.shots) {
            result.cells.push_back(run_cell(CellSpec{mode, shots, cfg_.candidate}));
        }
    }

    json digests = json::object();
    for (const auto& c : result.cells) digests[c.spec.id()] = c.cache_digests;
    result.manifest = {
        {"config_hash", cfg_.hash()},
        {"config", cfg_.to_json()},
        {"rng", kRngName},
        {"seeds", {{"run_seed", cfg_.run_seed}, {"demo_seed", cfg_.demo_seed}}},
        {"cache_digests", digests},
        {"provider", gateway_->provider().name()},
        {"provider_calls", gateway_->provider_calls() - calls_before},
        {"cache_hits", gateway_->cache_hits() - hits_before},
        {"reproduction_variables",
         {{"max_tokens", cfg_.generation.max_tokens},
          {"stop", cfg_.generation.stop ? json(*cfg_.generation.stop) : json(nullptr)},
          {"temperature", cfg_.generation.temperature},
          {"top_p", cfg_.generation.top_p},
          {"token_budget", cfg_.token_budget},
          {"token_estimate", "ceil(bytes/3)+8"},
          {"block_separator", "blank line"},
          {"rouge", "F1, no stemming"},
          {"ter", "case-insensitive"},
          {"demo_selection", cfg_.demo_strategy == DemoStrategy::FirstK ? "first_k" : "seeded_random"}}},
        {"timestamps", {{"started", started}, {"finished", utc_timestamp()}}}};
    return result;
}

// ---------------------------------------------------------------- reports

std::string emit_report(const RunResult& result, ReportFormat format) {
    std::ostringstream out;
    if (format == ReportFormat::CSV) {
        out << "cell_id,mode,shots,candidate,status,reason,n";
        for (const auto& k : MetricReport::keys()) out << "," << k;
        out << ",clean_fraction\n";
        for (const auto& c : result.cells) {
            out << csv_field(c.spec.id()) << "," << csv_field(c.spec.mode.name()) << ","
                << c.spec.shots << "," << csv_field(c.spec.candidate.label()) << ","
                << to_string(c.status) << "," << csv_field(c.reason) << "," << c.outputs.size();
            for (const auto& k : MetricReport::keys()) {
                out << ",";
                if (auto v = c.metrics.get(k)) out << fmt_exact(*v);
            }
            out << ",";
            if (c.parse.total() > 0) out << fmt_exact(c.parse.clean_fraction());
            out << "\n";
        }
        return out.str();
    }

    std::string title(to_string(result.task.kind));
    if (result.task.src_lang && result.task.tgt_lang)
        title += " " + *result.task.src_lang + "-" + *result.task.tgt_lang;
    if (result.task.style_from && result.task.style_to)
        title += " " + *result.task.style_from + "->" + *result.task.style_to;
    out << "## " << title << "\n\n";
    auto cols = columns_for(result.task.kind);
    out << "| System |";
    for (const auto& col : cols) out << " " << col.header << " |";
    out << " Clean parse | Note |\n|---|";
    for (size_t i = 0; i < cols.size(); ++i) out << "---:|";
    out << "---:|---|\n";
    for (const auto& c : result.cells) {
        std::string label = mode_label(c.spec.mode) + " " + std::to_string(c.spec.shots) + "-shot";
        if (c.spec.candidate.policy != CandidatePolicy::Empty) label += ", " + c.spec.candidate.label();
        out << "| " << label << " |";
        for (const auto& col : cols) {
            if (!col.metric) {
                out << " n/a (out of scope) |";
            } else if (auto v = c.metrics.get(*col.metric); v && c.status == CellStatus::Ok) {
                out << " " << fmt2(*v) << " |";
            } else {
                out << " - |";
            }
        }
        if (c.status == CellStatus::Ok && c.parse.total() > 0)
            out << " " << fmt2(100.0 * c.parse.clean_fraction()) << "% |";
        else
            out << " - |";
        std::string note;
        if (c.status != CellStatus::Ok) note = std::string(to_string(c.status)) + ": " + c.reason;
        else if (c.examples_with_dropped_demos > 0)
            note = std::to_string(c.examples_with_dropped_demos) + " prompts lost demonstrations";
        for (char& ch : note)
            if (ch == '|' || ch == '\n') ch = ' ';
        out << " " << note << " |\n";
    }
    return out.str();
}

std::vector<CsvRow> parse_report_csv(std::string_view csv) {
    auto rows = parse_csv(csv);
    std::vector<CsvRow> out;
    if (rows.empty()) return out;
    const auto& header = rows.front();
    auto col = [&](const std::string& name) -> std::optional<size_t> {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) return std::nullopt;
        return static_cast<size_t>(it - header.begin());
    };
    auto id_col = col("cell_id"), status_col = col("status"), n_col = col("n");
    if (!id_col || !status_col) throw FormatError("report CSV lacks cell_id or status columns");
    for (size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != header.size())
            throw FormatError("report CSV row " + std::to_string(r + 1) + " has " +
                              std::to_string(row.size()) + " fields, expected " +
                              std::to_string(header.size()));
        CsvRow cr;
        cr.cell_id = row[*id_col];
        cr.status = row[*status_col];
        if (n_col && !row[*n_col].empty()) cr.metrics.n = std::stoull(row[*n_col]);
        for (const auto& k : MetricReport::keys()) {
            auto c = col(k);
            if (c && !row[*c].empty()) cr.metrics.set(k, std::stod(row[*c]));
        }
        out.push_back(std::move(cr));
    }
    return out;
}

void write_run(const RunResult& result, const fs::path& dir) {
    fs::create_directories(dir);
    write_text(dir / "report.json", result.report_json().dump(2) + "\n");
    write_text(dir / "report.md", emit_report(result, ReportFormat::Markdown));
    write_text(dir / "report.csv", emit_report(result, ReportFormat::CSV));
    write_text(dir / "manifest.json", result.manifest.dump(2) + "\n");
    for (const auto& c : result.cells) {
        fs::path cdir = dir / "cells" / sanitize(c.spec.id());
        std::string outputs, cands;
        for (const auto& o : c.outputs) {
            json j = {{"id", o.id},
                      {"hypothesis", o.hypothesis},
                      {"raw", o.raw},
                      {"status", to_string(o.status)},
                      {"error_type", o.error_type},
                      {"demos_used", o.demos_used}};
            outputs += j.dump() + "\n";
        }
        for (const auto& e : c.candidates) cands += manifest_line(e) + "\n";
        write_text(cdir / "outputs.jsonl", outputs);
        write_text(cdir / "candidates.jsonl", cands);
    }
}

// ---------------------------------------------------------------- sweeps

bool cells_identical(const CellResult& a, const CellResult& b) {
    if (a.status != b.status || a.outputs.size() != b.outputs.size()) return false;
    for (size_t i = 0; i < a.outputs.size(); ++i) {
        const auto &x = a.outputs[i], &y = b.outputs[i];
        if (x.id != y.id || x.hypothesis != y.hypothesis || x.raw != y.raw || x.status != y.status ||
            x.error_type != y.error_type)
            return false;
    }
    return a.metrics.to_json() == b.metrics.to_json();
}

json SweepResult::to_json() const {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json j = json::object();
    if (!similarity.empty()) {
        json pts = json::array();
        for (const auto& p : similarity)
            pts.push_back({{"target", p.target},
                           {"achieved", opt(p.achieved)},
                           {"bleu", opt(p.bleu)},
                           {"status", to_string(p.status)},
                           {"reason", p.reason}});
        j["similarity_curve"] = pts;
    }
    if (!word_drop.empty()) {
        json pts = json::array();
        for (const auto& p : word_drop)
            pts.push_back({{"rate", p.rate},
                           {"bleu", opt(p.bleu)},
                           {"chrf", opt(p.chrf)},
                           {"status", to_string(p.status)},
                           {"reason", p.reason}});
        j["word_drop_curve"] = pts;
    }
    j["warnings"] = warnings;
    if (rate_one_matches_empty) j["rate_one_matches_empty"] = *rate_one_matches_empty;
    return j;
}

namespace {

PromptMode sweep_mode(const RunConfig& cfg) {
    for (const auto& m : cfg.modes)
        if (m.variant != PromptVariant::Standard) return m;
    return PromptMode::dtg();
}

}  // namespace

SweepResult sweep_similarity(Runner& runner, const std::vector<double>& targets) {
    const RunConfig& cfg = runner.config();
    SweepResult out;
    for (double t : targets) {
        CandidateSpec spec = cfg.candidate;
        spec.policy = CandidatePolicy::SimilarityBucket;
        spec.target_sim = t;
        CellResult cell = runner.run_cell(CellSpec{sweep_mode(cfg), cfg.shots.front(), spec});
        SimilarityPoint p;
        p.target = t;
        p.achieved = cell.mean_achieved_similarity;
        p.bleu = cell.metrics.bleu;
        p.status = cell.status;
        p.reason = cell.reason;
        out.similarity.push_back(p);
        out.cells.push_back(std::move(cell));
    }
    return out;
}

SweepResult sweep_word_drop(Runner& runner, const std::vector<double>& rates) {
    const RunConfig& cfg = runner.config();
    SweepResult out;
    std::vector<double> unique;
    for (double r : rates) {
        if (std::find(unique.begin(), unique.end(), r) != unique.end()) {
            out.warnings.push_back("duplicate word-drop rate " + fmt2(r) + " ignored");
            continue;
        }
        unique.push_back(r);
    }
    const PromptMode mode = sweep_mode(cfg);
    std::optional<size_t> rate_one;
    for (double r : unique) {
        CandidateSpec spec = cfg.candidate;
        spec.policy = CandidatePolicy::WordDrop;
        spec.rate = r;
        CellResult cell = runner.run_cell(CellSpec{mode, cfg.shots.front(), spec});
        WordDropPoint p;
        p.rate = r;
        p.bleu = cell.metrics.bleu;
        p.chrf = cell.metrics.chrf;
        p.status = cell.status;
        p.reason = cell.reason;
        out.word_drop.push_back(p);
        if (r == 1.0) rate_one = out.cells.size();
        out.cells.push_back(std::move(cell));
    }
    if (rate_one) {
        CandidateSpec empty;
        empty.policy = CandidatePolicy::Empty;
        CellResult e = runner.run_cell(CellSpec{mode, cfg.shots.front(), empty});
        out.rate_one_matches_empty = cells_identical(out.cells[*rate_one], e);
    }
    return out;
}

}  // namespace dtg
