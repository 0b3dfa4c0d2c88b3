#include <mutex>

#include <gtest/gtest.h>
#include <json.hpp>

#include "dtg/errors.hpp"
#include "dtg/runner.hpp"
#include "test_util.hpp"

using namespace dtg;
using json = nlohmann::json;

namespace {

const std::filesystem::path kSamples = std::filesystem::path(DTG_DATA_DIR) / "samples";

const std::vector<std::pair<std::string, json>> kTasks = {
    {"zh_en", {{"kind", "translation"}, {"src_lang", "Chinese"}, {"tgt_lang", "English"}}},
    {"summarization", {{"kind", "summarization"}}},
    {"dialogue", {{"kind", "dialogue_summarization"}}},
    {"simplification", {{"kind", "simplification"}}},
    {"style", {{"kind", "style_transfer"}, {"style_from", "informal"}, {"style_to", "formal"}}},
    {"paraphrase", {{"kind", "paraphrase"}}},
    {"commongen", {{"kind", "commonsense_generation"}}},
};

json base_config(const std::string& sample, const json& task, const std::filesystem::path& out) {
    return {{"name", sample},
            {"task", task},
            {"test_path", (kSamples / (sample + ".jsonl")).string()},
            {"modes", {"standard", "dtg"}},
            {"shots", {1}},
            {"provider", {{"kind", "mock"}, {"fallback", "echo_reference"}}},
            {"limits", {{"max_examples", 25}}},
            {"run_seed", 7},
            {"output_dir", (out / sample).string()},
            {"workers", 4}};
}

RunConfig config(const json& j) { return RunConfig::from_json(j, kSamples); }

json zh_en(const std::filesystem::path& out) { return base_config("zh_en", kTasks[0].second, out); }

}  // namespace

TEST(RunConfig, DefaultsAndRoundTrip) {
    testutil::TempDir dir("cfg");
    RunConfig c = config(zh_en(dir.path()));
    EXPECT_EQ(c.token_budget, 4097u);
    EXPECT_EQ(c.generation.temperature, 0.0);
    EXPECT_EQ(c.generation.top_p, 1.0);
    EXPECT_EQ(c.generation.max_tokens, 512);
    EXPECT_EQ(c.max_examples, 25u);
    RunConfig again = RunConfig::from_json(c.to_json(), "/");
    EXPECT_EQ(again.hash(), c.hash());

    json s = base_config("summarization", kTasks[1].second, dir.path());
    EXPECT_EQ(config(s).generation.max_tokens, 1024);
}

TEST(RunConfig, ValidationErrors) {
    testutil::TempDir dir("cfgerr");
    json j = zh_en(dir.path());
    j["test_path"] = "nope.jsonl";
    EXPECT_THROW(config(j).validate(), ConfigError);

    j = zh_en(dir.path());
    j["shots"] = {-1};
    EXPECT_THROW(config(j), ConfigError);

    j = zh_en(dir.path());
    j["limits"]["token_budget"] = 10;
    EXPECT_THROW(config(j).validate(), ConfigError);

    j = zh_en(dir.path());
    j["modes"] = {"dtg_fixed_error_type"};
    EXPECT_THROW(config(j), ConfigError);

    j = zh_en(dir.path());
    j["candidate"] = {{"policy", "word_drop"}};
    EXPECT_THROW(config(j).validate(), ConfigError);
}

TEST(Runner, EchoClosureEveryTask) {
    testutil::TempDir dir("closure");
    for (const auto& [sample, task] : kTasks) {
        Runner runner(config(base_config(sample, task, dir.path())));
        RunResult r = runner.run();
        ASSERT_EQ(r.cells.size(), 2u);
        for (const auto& c : r.cells) {
            ASSERT_EQ(c.status, CellStatus::Ok) << sample << " " << c.reason;
            EXPECT_EQ(c.outputs.size(), 25u);
            EXPECT_EQ(*c.metrics.bleu, 100.0) << sample;
            EXPECT_EQ(*c.metrics.ter, 0.0) << sample;
            EXPECT_EQ(*c.metrics.rouge1, 100.0) << sample;
            EXPECT_EQ(*c.metrics.rougeL, 100.0) << sample;
            EXPECT_EQ(c.parse.clean_fraction(), 1.0) << sample;
        }
    }
}

TEST(Runner, TokenBudgetSkipsLongCells) {
    testutil::TempDir dir("budget");
    json j = base_config("summarization", kTasks[1].second, dir.path());
    j["shots"] = {1, 5};
    j["modes"] = {"dtg"};
    // A budget just large enough for every 1-shot prompt.
    size_t one_shot = 0;
    {
        Runner probe(config(j));
        CellSpec cell{PromptMode::dtg(), 1, probe.config().candidate};
        for (size_t i = 0; i < 25; ++i) one_shot = std::max(one_shot, probe.render_example(cell, i).token_estimate);
    }
    j["limits"]["token_budget"] = one_shot;
    Runner runner(config(j));
    RunResult r = runner.run();
    ASSERT_EQ(r.cells.size(), 2u);
    EXPECT_EQ(r.cells[0].status, CellStatus::Ok);
    EXPECT_EQ(r.cells[1].status, CellStatus::Skipped);
    EXPECT_EQ(r.cells[1].reason, "token budget");
    EXPECT_FALSE(r.any_failed());
    EXPECT_NE(emit_report(r, ReportFormat::Markdown).find("skipped: token budget"), std::string::npos);
}

TEST(Runner, DropDemosOldestFirst) {
    testutil::TempDir dir("drop");
    json j = base_config("summarization", kTasks[1].second, dir.path());
    j["shots"] = {5};
    j["modes"] = {"dtg"};
    size_t three_shot = 0;
    {
        Runner probe(config(j));
        CellSpec cell{PromptMode::dtg(), 3, probe.config().candidate};
        for (size_t i = 0; i < 25; ++i)
            three_shot = std::max(three_shot, probe.render_example(cell, i).token_estimate);
    }
    j["limits"]["token_budget"] = three_shot;
    j["limits"]["budget_policy"] = "drop_demos";
    Runner runner(config(j));
    CellSpec five{PromptMode::dtg(), 5, runner.config().candidate};
    CellResult c = runner.run_cell(five);
    ASSERT_EQ(c.status, CellStatus::Ok);
    EXPECT_EQ(c.examples_with_dropped_demos, 25u);
    for (const auto& o : c.outputs) EXPECT_LE(o.demos_used, 3u);


    // Capture the prompts actually sent.
    struct Capture : Provider {
        LLMResponse complete(const LLMRequest& req, const RequestContext&) override {
            std::lock_guard lk(mu);
            prompts.push_back(req.prompt);
            return LLMResponse{.text = "x"};
        }
        std::string name() const override { return "capture"; }
        std::mutex mu;
        std::vector<std::string> prompts;
    };
    auto cap = std::make_shared<Capture>();
    Runner captured(config(j), std::make_shared<Gateway>(cap, std::nullopt));
    captured.run_cell(five);
    ASSERT_EQ(cap->prompts.size(), 25u);
    Dataset all = load_dataset(kSamples / "summarization.jsonl", runner.config().task);
    DemoSet demos = select_demonstrations(all, 5, DemoStrategy::FirstK, 0);
    RenderedPrompt full = runner.render_example(five, 0);
    const std::string test_block = full.text.substr(full.text.rfind(demos.demos.back().references[0]) +
                                                    demos.demos.back().references[0].size());
    size_t checked = 0;
    for (const auto& p : cap->prompts) {
        if (p.find(runner.test_set().with_split(Split::Test)[0]->source) == std::string::npos) continue;
        ++checked;
        EXPECT_EQ(p.find(demos.demos.front().source), std::string::npos);
        EXPECT_NE(p.find(demos.demos.back().source), std::string::npos);
        EXPECT_TRUE(p.ends_with(test_block));
        EXPECT_LE(estimate_tokens(p), three_shot);
    }
    EXPECT_EQ(checked, 1u);
}

TEST(Runner, WarmCacheReplayIsByteIdentical) {
    testutil::TempDir dir("replay");
    json j = zh_en(dir.path());
    j["cache_dir"] = (dir.path() / "cache").string();
    auto once = [&](const std::string& out) {
        j["output_dir"] = (dir.path() / out).string();
        Runner runner(config(j));
        RunResult r = runner.run();
        write_run(r, runner.config().output_dir);
        return std::make_pair(r, runner.gateway().provider_calls());
    };
    auto [first, calls1] = once("a");
    auto [second, calls2] = once("b");
    EXPECT_EQ(calls1, 50u);
    EXPECT_EQ(calls2, 0u);
    for (const char* f : {"report.json", "report.md", "report.csv"})
        EXPECT_EQ(testutil::read_file(dir / ("a/" + std::string(f))), testutil::read_file(dir / ("b/" + std::string(f))))
            << f;
    json m = json::parse(testutil::read_file(dir / "a/manifest.json"));
    EXPECT_EQ(m["config_hash"].get<std::string>().size(), 64u);
    EXPECT_EQ(m["rng"], "mt19937_64");
    EXPECT_TRUE(m["timestamps"].contains("started"));
    EXPECT_EQ(m["cache_digests"].size(), 2u);
}

TEST(Runner, ProviderFailureFailsCellNotRun) {
    testutil::TempDir dir("fail");
    json j = zh_en(dir.path());
    j["provider"]["fallback"] = "fail";
    Runner runner(config(j));
    RunResult r = runner.run();
    ASSERT_EQ(r.cells.size(), 2u);
    for (const auto& c : r.cells) {
        EXPECT_EQ(c.status, CellStatus::Failed);
        EXPECT_NE(c.reason.find("unscripted"), std::string::npos) << c.reason;
    }
    EXPECT_TRUE(r.any_failed());
}

TEST(Runner, DemoCollisionWithTestRejected) {
    testutil::TempDir dir("collide");
    std::string line = R"({"id":"same","source":"a b","references":["a b"],"split":"test"})" "\n";
    testutil::write_file(dir / "t.jsonl", line + R"({"id":"same","source":"c d","references":["c d"],"split":"validation"})" "\n");
    json j = zh_en(dir.path());
    j["test_path"] = (dir / "t.jsonl").string();
    EXPECT_THROW(Runner{config(j)}, ConfigError);
}

TEST(Report, TranslationColumnOrder) {
    testutil::TempDir dir("cols");
    Runner runner(config(zh_en(dir.path())));
    RunResult r = runner.run();
    std::string md = emit_report(r, ReportFormat::Markdown);
    auto header = md.substr(md.find("| System"), md.find('\n', md.find("| System")) - md.find("| System"));
    EXPECT_EQ(header, "| System | COMET-22 | TER | ChrF | BLEU | Clean parse | Note |");
    EXPECT_NE(md.find("n/a (out of scope)"), std::string::npos);
}

TEST(Report, EmptyResultIsHeaderOnly) {
    RunResult r;
    r.task = TaskSpec::of(TaskKind::Paraphrase);
    std::string csv = emit_report(r, ReportFormat::CSV);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1);
    EXPECT_TRUE(parse_report_csv(csv).empty());
    std::string md = emit_report(r, ReportFormat::Markdown);
    EXPECT_NE(md.find("| System | BLEU | RL |"), std::string::npos);
}

TEST(Report, CsvRoundTripIsLossless) {
    testutil::TempDir dir("csv");
    json j = base_config("simplification", kTasks[3].second, dir.path());
    j["provider"]["fallback"] = "echo_candidate";
    j["candidate"] = {{"policy", "sampled"}};
    Runner runner(config(j));
    RunResult r = runner.run();
    auto rows = parse_report_csv(emit_report(r, ReportFormat::CSV));
    ASSERT_EQ(rows.size(), r.cells.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].cell_id, r.cells[i].spec.id());
        EXPECT_EQ(rows[i].metrics.to_json(), r.cells[i].metrics.to_json());
    }
}

TEST(Sweep, WordDropRateOneEqualsEmpty) {
    testutil::TempDir dir("wd");
    json j = zh_en(dir.path());
    j["modes"] = {"dtg"};
    j["provider"]["fallback"] = "echo_candidate";
    j["candidate"] = {{"policy", "word_drop"}, {"texts_path", (kSamples / "zh_en_base.jsonl").string()}};
    Runner runner(config(j));
    SweepResult s = sweep_word_drop(runner, {0.0, 1.0, 1.0});
    ASSERT_EQ(s.word_drop.size(), 2u);
    ASSERT_EQ(s.warnings.size(), 1u);
    ASSERT_TRUE(s.rate_one_matches_empty.has_value());
    EXPECT_TRUE(*s.rate_one_matches_empty);
    EXPECT_GT(*s.word_drop[0].bleu, *s.word_drop[1].bleu);
}

TEST(Sweep, SimilarityFivePointsAndZeroIsDefault) {
    testutil::TempDir dir("sim");
    json j = zh_en(dir.path());
    j["modes"] = {"dtg"};
    j["provider"]["fallback"] = "echo_candidate";
    Runner runner(config(j));
    SweepResult s = sweep_similarity(runner, {0.0, 0.1, 0.2, 0.3, 0.4});
    ASSERT_EQ(s.similarity.size(), 5u);
    for (size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(s.similarity[i].status, CellStatus::Ok) << s.similarity[i].reason;
        EXPECT_NEAR(*s.similarity[i].achieved, s.similarity[i].target, 0.05);
    }
    for (size_t i = 1; i < 5; ++i) EXPECT_GT(*s.similarity[i].bleu, *s.similarity[i - 1].bleu);
    CellSpec empty{PromptMode::dtg(), 1, CandidateSpec{}};
    EXPECT_TRUE(cells_identical(s.cells[0], runner.run_cell(empty)));
}
