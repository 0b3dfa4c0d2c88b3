#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dtg/candidate.hpp"
#include "dtg/errors.hpp"
#include "dtg/rng.hpp"
#include "dtg/text.hpp"

using namespace dtg;

namespace {

// Full-matrix Wagner-Fischer over code points, kept separate from the library.
size_t dp_distance(const std::u32string& a, const std::u32string& b) {
    std::vector<std::vector<size_t>> d(a.size() + 1, std::vector<size_t>(b.size() + 1));
    for (size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (size_t i = 1; i <= a.size(); ++i)
        for (size_t j = 1; j <= b.size(); ++j)
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                                d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    return d[a.size()][b.size()];
}

Dataset two_pool() {
    return parse_dataset(R"({"id":"x","source":"sx","references":["rx"]})"
                         "\n"
                         R"({"id":"y","source":"sy","references":["ry"]})",
                         TaskSpec::of(TaskKind::Paraphrase), "pool");
}

}  // namespace

TEST(Candidate, Empty) {
    Candidate c = empty_candidate();
    EXPECT_EQ(c.text, "");
    EXPECT_TRUE(std::holds_alternative<EmptyOrigin>(c.provenance));
    EXPECT_EQ(c.policy(), "empty");
    EXPECT_EQ(similarity(c.text, "reference"), 0.0);
}

TEST(Candidate, SampleIrrelevantForcedChoice) {
    Candidate c = sample_irrelevant(two_pool(), "x", 123);
    EXPECT_EQ(c.text, "ry");
    auto o = std::get<SampledOrigin>(c.provenance);
    EXPECT_EQ(o.source_example_id, "y");
    EXPECT_EQ(o.seed, 123u);
}

TEST(Candidate, SampleIrrelevantDeterministic) {
    std::string s;
    for (int i = 0; i < 30; ++i)
        s += R"({"id":"e)" + std::to_string(i) + R"(","source":"s","references":["r)" + std::to_string(i) + "\"]}\n";
    Dataset pool = parse_dataset(s, TaskSpec::of(TaskKind::Paraphrase), "pool");
    EXPECT_EQ(sample_irrelevant(pool, "e3", 3).text, sample_irrelevant(pool, "e3", 3).text);
    for (std::uint64_t seed = 0; seed < 50; ++seed)
        EXPECT_NE(sample_irrelevant(pool, "e3", seed).text, "r3");
}

TEST(Candidate, SampleIrrelevantPoolTooSmall) {
    Dataset one = parse_dataset(R"({"id":"x","source":"s","references":["r"]})",
                                TaskSpec::of(TaskKind::Paraphrase), "pool");
    EXPECT_THROW(sample_irrelevant(one, "x", 0), DatasetError);
}

TEST(Candidate, WordDropExtremes) {
    EXPECT_EQ(word_drop("a  b\tc ", 0.0, 5).text, "a b c");
    EXPECT_EQ(word_drop("a b c", 1.0, 5).text, "");
    EXPECT_THROW(word_drop("a", 1.5, 0), std::invalid_argument);
}

TEST(Candidate, WordDropDeterministicAndRecorded) {
    Candidate a = word_drop("one two three four five six", 0.5, 42, "id7");
    Candidate b = word_drop("one two three four five six", 0.5, 42, "id7");
    EXPECT_EQ(a.text, b.text);
    auto o = std::get<WordDropOrigin>(a.provenance);
    EXPECT_EQ(o.base_id, "id7");
    EXPECT_EQ(o.rate, 0.5);
}

TEST(Candidate, WordDropBinomialBound) {
    std::string base;
    for (int i = 0; i < 1000; ++i) base += "w" + std::to_string(i) + " ";
    size_t kept = text::split_whitespace(word_drop(base, 0.3, 99).text).size();
    EXPECT_GE(kept, 660u);
    EXPECT_LE(kept, 740u);
}

TEST(Candidate, SimilarityExamples) {
    EXPECT_EQ(similarity("abc", "abc"), 1.0);
    EXPECT_EQ(similarity("abc", ""), 0.0);
    EXPECT_EQ(similarity("", ""), 1.0);
    EXPECT_DOUBLE_EQ(similarity("kitten", "sitting"), 1.0 - 3.0 / 7.0);
    EXPECT_DOUBLE_EQ(similarity("今天好", "今天"), 1.0 - 1.0 / 3.0);
}

TEST(Candidate, SimilarityMatchesDpOracle) {
    std::mt19937_64 gen(2024);
    const std::u32string alphabet = U"abcde 今天";
    for (int t = 0; t < 300; ++t) {
        std::u32string a, b;
        size_t la = gen() % 12, lb = gen() % 12;
        for (size_t i = 0; i < la; ++i) a += alphabet[gen() % alphabet.size()];
        for (size_t i = 0; i < lb; ++i) b += alphabet[gen() % alphabet.size()];
        size_t d = dp_distance(a, b);
        EXPECT_EQ(levenshtein(a, b), d);
        double expect = (a.empty() && b.empty()) ? 1.0 : 1.0 - double(d) / double(std::max(a.size(), b.size()));
        std::string sa = text::encode_utf8(a), sb = text::encode_utf8(b);
        EXPECT_EQ(similarity(sa, sb), expect);
        EXPECT_EQ(similarity(sa, sb), similarity(sb, sa));
    }
}

TEST(Candidate, BucketSelection) {
    std::vector<std::string> pool{"", "the reference", "something else"};
    Candidate c = bucket_candidates(pool, "the reference", 1.0, 0.05);
    EXPECT_EQ(c.text, "the reference");
    EXPECT_EQ(std::get<SimilarityBucketOrigin>(c.provenance).achieved_sim, 1.0);
    EXPECT_EQ(bucket_candidates({"", "the reference"}, "the reference", 0.0, 0.05).text, "");
}

TEST(Candidate, BucketCorruptedVariantsWithinTolerance) {
    const std::string ref = "the quick brown fox jumps over the lazy dog";
    std::u32string r = text::decode_utf8(ref);
    // k masked positions give similarity 1 - k/n exactly, so every bucket is populated.
    std::vector<std::string> pool;
    Rng rng(5);
    for (size_t k = 0; k <= r.size(); ++k) {
        std::u32string c = r;
        std::vector<size_t> pos(r.size());
        for (size_t i = 0; i < pos.size(); ++i) pos[i] = i;
        for (size_t i = 0; i < k; ++i) std::swap(pos[i], pos[i + rng.below(pos.size() - i)]);
        for (size_t i = 0; i < k; ++i) c[pos[i]] = U'#';
        pool.push_back(text::encode_utf8(c));
    }
    Candidate c = bucket_candidates(pool, ref, 0.2, 0.05);
    double achieved = std::get<SimilarityBucketOrigin>(c.provenance).achieved_sim;
    EXPECT_GE(achieved, 0.15);
    EXPECT_LE(achieved, 0.25);
    EXPECT_EQ(achieved, similarity(c.text, ref));
}

TEST(Candidate, BucketErrors) {
    EXPECT_THROW(bucket_candidates({}, "r", 0.5, 0.05), std::exception);
    EXPECT_THROW(bucket_candidates({"r"}, "r", 0.0, 0.05), std::exception);
    EXPECT_THROW(bucket_candidates({"r"}, "r", 1.0, 0.0), std::exception);
}

TEST(Candidate, ManifestRoundTrip) {
    std::vector<CandidateManifestEntry> entries{
        {"a", empty_candidate()},
        {"b", provided_candidate("given text")},
        {"c", sample_irrelevant(two_pool(), "x", 9)},
        {"d", word_drop("w1 w2 w3", 0.4, 11, "d")},
        {"e", bucket_candidates({"", "abc"}, "abd", 0.6, 0.1)},
    };
    for (const auto& e : entries) {
        auto back = parse_manifest_line(manifest_line(e));
        EXPECT_EQ(back.example_id, e.example_id);
        EXPECT_EQ(back.candidate.text, e.candidate.text);
        EXPECT_EQ(back.candidate.policy(), e.candidate.policy());
        EXPECT_EQ(manifest_line(back), manifest_line(e));
    }
}

TEST(Rng, DeriveSeedStable) {
    EXPECT_EQ(derive_seed(7, "abc"), derive_seed(7, "abc"));
    EXPECT_NE(derive_seed(7, "abc"), derive_seed(8, "abc"));
    EXPECT_NE(derive_seed(7, "abc"), derive_seed(7, "abd"));
    Rng r(1);
    for (int i = 0; i < 1000; ++i) EXPECT_LT(r.below(7), 7u);
}
