#include <gtest/gtest.h>

#include "dtg/errors.hpp"
#include "dtg/task.hpp"
#include "test_util.hpp"

using namespace dtg;

namespace {

std::string record(const std::string& id, const std::string& split) {
    return R"({"id": ")" + id + R"(", "source": "src )" + id + R"(", "references": ["ref )" + id +
           R"("], "split": ")" + split + "\"}\n";
}

Dataset pool(size_t n_test, size_t n_valid) {
    std::string s;
    for (size_t i = 0; i < n_test; ++i) s += record("t" + std::to_string(i), "test");
    for (size_t i = 0; i < n_valid; ++i) s += record("v" + std::to_string(i), "validation");
    return parse_dataset(s, TaskSpec::of(TaskKind::Summarization), "mem");
}

}  // namespace

TEST(TaskSpec, TranslationNeedsDistinctLanguages) {
    EXPECT_NO_THROW(TaskSpec::translation("Chinese", "English").validate());
    EXPECT_THROW(TaskSpec::translation("English", "English").validate(), ConfigError);
    TaskSpec t = TaskSpec::of(TaskKind::Translation);
    t.tgt_lang.reset();
    EXPECT_THROW(t.validate(), ConfigError);
}

TEST(TaskSpec, StyleTransferNeedsDirection) {
    EXPECT_NO_THROW(TaskSpec::style_transfer("informal", "formal").validate());
    EXPECT_THROW(TaskSpec::style_transfer("formal", "formal").validate(), ConfigError);
}

TEST(TaskSpec, NounWithoutPlaceholders) {
    TaskSpec t = TaskSpec::of(TaskKind::Paraphrase);
    t.task_noun = "";
    EXPECT_THROW(t.validate(), ConfigError);
    t.task_noun = "{noun}";
    EXPECT_THROW(t.validate(), ConfigError);
}

TEST(TaskSpec, KindNamesRoundTrip) {
    for (TaskKind k : all_task_kinds()) EXPECT_EQ(parse_task_kind(to_string(k)), k);
    EXPECT_THROW(parse_task_kind("poetry"), ConfigError);
}

TEST(Dataset, ThreeLinesThreeExamples) {
    std::string s = record("a", "test") + record("b", "test") + record("c", "validation");
    Dataset ds = parse_dataset(s, TaskSpec::of(TaskKind::Paraphrase), "mem");
    ASSERT_EQ(ds.examples.size(), 3u);
    EXPECT_EQ(ds.examples[0].id, "a");
    EXPECT_EQ(ds.examples[2].split, Split::Validation);
}

TEST(Dataset, DefaultSplitIsTest) {
    Dataset ds = parse_dataset(R"({"id":"x","source":"s","references":["r"]})",
                               TaskSpec::of(TaskKind::Paraphrase), "mem");
    EXPECT_EQ(ds.examples.at(0).split, Split::Test);
}

TEST(Dataset, MissingReferencesNamesExample) {
    std::string s;
    for (int i = 1; i <= 6; ++i) s += record(std::to_string(i), "test");
    s += R"({"id": "7", "source": "s"})" "\n";
    try {
        parse_dataset(s, TaskSpec::of(TaskKind::Paraphrase), "f.jsonl");
        FAIL() << "expected DatasetError";
    } catch (const DatasetError& e) {
        EXPECT_NE(std::string(e.what()).find("example 7: references absent"), std::string::npos) << e.what();
    }
}

TEST(Dataset, MalformedLineNamesLineNumber) {
    std::string s = record("a", "test") + "{not json\n";
    try {
        parse_dataset(s, TaskSpec::of(TaskKind::Paraphrase), "f.jsonl");
        FAIL() << "expected DatasetError";
    } catch (const DatasetError& e) {
        EXPECT_NE(std::string(e.what()).find("f.jsonl:2"), std::string::npos) << e.what();
    }
}

TEST(Dataset, EmptyReferenceRejected) {
    EXPECT_THROW(parse_dataset(R"({"id":"x","source":"s","references":[""]})",
                               TaskSpec::of(TaskKind::Paraphrase), "mem"),
                 DatasetError);
    EXPECT_THROW(parse_dataset(R"({"id":"x","source":"s","references":[]})",
                               TaskSpec::of(TaskKind::Paraphrase), "mem"),
                 DatasetError);
}

TEST(Dataset, SerializeRoundTripIsLossless) {
    std::string s =
        R"({"id":"u","source":"今天\n\"q\" tab\t","references":["r1","r2 ü"],"split":"validation"})" "\n" +
        record("b", "test");
    Dataset a = parse_dataset(s, TaskSpec::of(TaskKind::Paraphrase), "mem");
    Dataset b = parse_dataset(serialize_dataset(a), TaskSpec::of(TaskKind::Paraphrase), "mem");
    ASSERT_EQ(a.examples.size(), b.examples.size());
    for (size_t i = 0; i < a.examples.size(); ++i) {
        EXPECT_EQ(a.examples[i].id, b.examples[i].id);
        EXPECT_EQ(a.examples[i].source, b.examples[i].source);
        EXPECT_EQ(a.examples[i].references, b.examples[i].references);
        EXPECT_EQ(a.examples[i].split, b.examples[i].split);
    }
    EXPECT_TRUE(validate_dataset(b).clean());
}

TEST(Dataset, ValidateFlagsDuplicatesAndCounts) {
    std::string s = record("a", "test") + record("a", "test");
    Dataset ds = parse_dataset(s, TaskSpec::of(TaskKind::Paraphrase), "mem");
    auto report = validate_dataset(ds, 100);
    ASSERT_EQ(report.issues.size(), 2u);
    EXPECT_EQ(report.issues[0], "duplicate id: a");
    EXPECT_NE(report.issues[1].find("count mismatch"), std::string::npos);
    EXPECT_TRUE(validate_dataset(ds, 2).issues.size() == 1);
}

TEST(Dataset, BenchmarkSizes) {
    EXPECT_EQ(benchmark_test_size("WMT ZH-EN"), 1875u);
    EXPECT_EQ(benchmark_test_size("DialogSum"), 500u);
    EXPECT_FALSE(benchmark_test_size("nope").has_value());
}

TEST(Dataset, LoadFromFile) {
    testutil::TempDir dir("task");
    testutil::write_file(dir / "set.jsonl", record("a", "test") + "\n" + record("b", "test"));
    Dataset ds = load_dataset(dir / "set.jsonl", TaskSpec::of(TaskKind::Paraphrase));
    EXPECT_EQ(ds.name, "set");
    EXPECT_EQ(ds.examples.size(), 2u);
    EXPECT_THROW(load_dataset(dir / "missing.jsonl", TaskSpec::of(TaskKind::Paraphrase)), DatasetError);
}

TEST(Demonstrations, FirstKInFileOrder) {
    Dataset ds = pool(3, 10);
    DemoSet d = select_demonstrations(ds, 5, DemoStrategy::FirstK, 0);
    ASSERT_EQ(d.k, 5u);
    ASSERT_EQ(d.demos.size(), 5u);
    for (size_t i = 0; i < 5; ++i) EXPECT_EQ(d.demos[i].id, "v" + std::to_string(i));
}

TEST(Demonstrations, SeededRandomDeterministic) {
    Dataset ds = pool(3, 10);
    DemoSet a = select_demonstrations(ds, 5, DemoStrategy::SeededRandom, 7);
    DemoSet b = select_demonstrations(ds, 5, DemoStrategy::SeededRandom, 7);
    ASSERT_EQ(a.demos.size(), 5u);
    for (size_t i = 0; i < 5; ++i) EXPECT_EQ(a.demos[i].id, b.demos[i].id);
}

TEST(Demonstrations, NeverFromTestSplit) {
    Dataset ds = pool(20, 8);
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        for (const auto& d : select_demonstrations(ds, 8, DemoStrategy::SeededRandom, seed).demos)
            EXPECT_EQ(d.split, Split::Validation);
    }
}

TEST(Demonstrations, TooManyRequested) {
    EXPECT_THROW(select_demonstrations(pool(1, 20), 50, DemoStrategy::FirstK, 0), DatasetError);
    EXPECT_EQ(select_demonstrations(pool(1, 0), 0, DemoStrategy::FirstK, 0).k, 0u);
}
