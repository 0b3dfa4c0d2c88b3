#include <fstream>
#include <random>

#include <gtest/gtest.h>
#include <json.hpp>

#include "dtg/errors.hpp"
#include "dtg/metrics.hpp"

using namespace dtg;
using json = nlohmann::json;

namespace {

json load_fixture(const std::string& name) {
    std::ifstream in(std::string(DTG_FIXTURE_DIR) + "/" + name);
    return json::parse(in);
}

struct Corpus {
    std::vector<std::string> srcs, hyps;
    ReferenceSets refs;
};

Corpus corpus(size_t nrefs, size_t begin = 0, size_t end = 1000) {
    json j = load_fixture("metric_corpus.json");
    Corpus c;
    const auto& segs = j["segments"];
    for (size_t i = begin; i < std::min(end, segs.size()); ++i) {
        c.srcs.push_back(segs[i]["src"]);
        c.hyps.push_back(segs[i]["hyp"]);
        auto all = segs[i]["refs"].get<std::vector<std::string>>();
        all.resize(nrefs);
        c.refs.push_back(all);
    }
    return c;
}

ReferenceSets single(const std::vector<std::string>& r) {
    ReferenceSets out;
    for (const auto& x : r) out.push_back({x});
    return out;
}

}  // namespace

TEST(Tokenize13a, MatchesCapturedSamples) {
    json oracle = load_fixture("sacrebleu_oracle.json");
    for (const auto& sample : oracle["tokenize_13a"]) {
        EXPECT_EQ(tokenize_13a(sample["text"].get<std::string>()),
                  sample["tokens"].get<std::vector<std::string>>())
            << sample["text"];
    }
}

TEST(Tokenize13a, EmptyAndIdempotent) {
    EXPECT_TRUE(tokenize_13a("").empty());
    for (const auto& s : {"Hello, world!", "He paid $1,000.50 for 3-4 items.", "a.b,c d-e 7-8"}) {
        auto once = tokenize_13a(s);
        std::string joined;
        for (const auto& t : once) joined += (joined.empty() ? "" : " ") + t;
        EXPECT_EQ(tokenize_13a(joined), once) << s;
    }
}

TEST(Bleu, CorpusMatchesOracle) {
    json oracle = load_fixture("sacrebleu_oracle.json");
    Corpus one = corpus(1), three = corpus(3);
    EXPECT_NEAR(bleu(one.hyps, one.refs), oracle["single_reference"]["bleu"].get<double>(), 0.01);
    EXPECT_NEAR(bleu(three.hyps, three.refs), oracle["multi_reference"]["bleu"].get<double>(),
                0.01);
}

TEST(Bleu, SmallCasesMatchOracle) {
    json oracle = load_fixture("sacrebleu_oracle.json");
    for (const auto& c : oracle["small_cases"]) {
        std::vector<std::string> h{c["hyp"]};
        ReferenceSets r{{c["ref"].get<std::string>()}};
        EXPECT_NEAR(bleu(h, r), c["bleu"].get<double>(), 0.01) << c["hyp"];
        EXPECT_NEAR(chrf(h, r), c["chrf"].get<double>(), 0.01) << c["hyp"];
        EXPECT_NEAR(ter(h, r), c["ter"].get<double>(), 0.01) << c["hyp"];
    }
}

TEST(Bleu, IdentityIsHundredAndEmptyIsZero) {
    std::vector<std::string> refs{"The quick brown fox jumps over the lazy dog.",
                                  "A second, somewhat longer sentence appears here."};
    EXPECT_DOUBLE_EQ(bleu(refs, single(refs)), 100.0);
    EXPECT_DOUBLE_EQ(bleu({"", ""}, single(refs)), 0.0);
}

TEST(Bleu, LengthMismatchThrows) {
    EXPECT_THROW(bleu({"a", "b"}, {{"a"}}), MetricInputError);
    EXPECT_THROW(bleu({"a"}, {{}}), MetricInputError);
}

TEST(Bleu, MaxOrderThreeDiffersFromFour) {
    std::vector<std::string> h{"a b c e f"};
    ReferenceSets r{{"a b c d f"}};
    EXPECT_GT(bleu(h, r, 3), bleu(h, r, 4));
}

TEST(Chrf, CorpusMatchesOracle) {
    json oracle = load_fixture("sacrebleu_oracle.json");
    Corpus one = corpus(1), three = corpus(3);
    EXPECT_NEAR(chrf(one.hyps, one.refs), oracle["single_reference"]["chrf"].get<double>(), 0.01);
    EXPECT_NEAR(chrf(three.hyps, three.refs), oracle["multi_reference"]["chrf"].get<double>(),
                0.01);
}

TEST(Chrf, IdentityAndDisjoint) {
    EXPECT_DOUBLE_EQ(chrf({"some text here"}, {{"some text here"}}), 100.0);
    EXPECT_DOUBLE_EQ(chrf({"abcd"}, {{"wxyz"}}), 0.0);
}

TEST(Ter, CorpusMatchesOracle) {
    json oracle = load_fixture("sacrebleu_oracle.json");
    Corpus one = corpus(1), three = corpus(3);
    EXPECT_NEAR(ter(one.hyps, one.refs), oracle["single_reference"]["ter"].get<double>(), 0.01);
    EXPECT_NEAR(ter(three.hyps, three.refs), oracle["multi_reference"]["ter"].get<double>(), 0.01);
}

TEST(Ter, HandEnumeratedCases) {
    EXPECT_DOUBLE_EQ(ter({"a b c d"}, {{"a b c d"}}), 0.0);
    EXPECT_DOUBLE_EQ(ter({"a b c e"}, {{"a b c d"}}), 25.0);
    EXPECT_DOUBLE_EQ(ter({"b a c d"}, {{"a b c d"}}), 25.0);
    EXPECT_DOUBLE_EQ(ter({"A B"}, {{"a b"}}), 0.0);
}

TEST(Ter, EmptyReferenceCountsHypothesisWords) {
    TerStats st = ter_segment("x y z", {""});
    EXPECT_DOUBLE_EQ(st.edits, 3.0);
    EXPECT_DOUBLE_EQ(st.ref_length, 0.0);
    EXPECT_DOUBLE_EQ(ter({"x y z"}, {{""}}), 100.0);
}

TEST(Rouge, FullCorpusMatchesOracle) {
    json oracle = load_fixture("overlap_oracle.json");
    for (auto [key, nrefs] : {std::pair{"full_single_reference", 1}, {"full_multi_reference", 3}}) {
        Corpus c = corpus(nrefs);
        RougeScores r = rouge(c.hyps, c.refs);
        EXPECT_NEAR(r.rouge1, oracle[key]["rouge1"].get<double>(), 0.1);
        EXPECT_NEAR(r.rouge2, oracle[key]["rouge2"].get<double>(), 0.1);
        EXPECT_NEAR(r.rougeL, oracle[key]["rougeL"].get<double>(), 0.1);
        EXPECT_NEAR(sari(c.srcs, c.hyps, c.refs), oracle[key]["sari"].get<double>(), 0.1);
    }
}

TEST(Rouge, TwentyFixturesMatchOracle) {
    json oracle = load_fixture("overlap_oracle.json");
    ASSERT_EQ(oracle["fixtures"].size(), 20u);
    for (const auto& f : oracle["fixtures"]) {
        Corpus c = corpus(f["num_refs"], f["begin"], f["end"]);
        RougeScores r = rouge(c.hyps, c.refs);
        EXPECT_NEAR(r.rouge1, f["rouge1"].get<double>(), 0.1);
        EXPECT_NEAR(r.rouge2, f["rouge2"].get<double>(), 0.1);
        EXPECT_NEAR(r.rougeL, f["rougeL"].get<double>(), 0.1);
        EXPECT_NEAR(sari(c.srcs, c.hyps, c.refs), f["sari"].get<double>(), 0.1);
    }
}

TEST(Rouge, HandComputedUnigram) {
    RougeScores r = rouge({"the cat"}, {{"the cat sat"}});
    EXPECT_NEAR(r.rouge1, 80.0, 1e-9);
}

TEST(Rouge, IdentityAndDisjoint) {
    RougeScores same = rouge({"Alpha beta gamma."}, {{"alpha beta gamma"}});
    EXPECT_DOUBLE_EQ(same.rouge1, 100.0);
    EXPECT_DOUBLE_EQ(same.rouge2, 100.0);
    EXPECT_DOUBLE_EQ(same.rougeL, 100.0);
    RougeScores none = rouge({"one two"}, {{"three four"}});
    EXPECT_DOUBLE_EQ(none.rouge1, 0.0);
    EXPECT_DOUBLE_EQ(none.rouge2, 0.0);
    EXPECT_DOUBLE_EQ(none.rougeL, 0.0);
}

TEST(Sari, SmallCasesMatchOracle) {
    json oracle = load_fixture("overlap_oracle.json");
    for (const auto& c : oracle["small_sari"]) {
        double got = sari({c["src"].get<std::string>()}, {c["hyp"].get<std::string>()},
                          {c["refs"].get<std::vector<std::string>>()});
        EXPECT_NEAR(got, c["sari"].get<double>(), 1e-9) << c["hyp"];
    }
}

TEST(Sari, TotalAgreementIsHundred) {
    EXPECT_DOUBLE_EQ(sari({"a b c d"}, {"a b c d"}, {{"a b c d", "a b c d"}}), 100.0);
}

TEST(Sari, OutputEqualsSourceWithDisjointRefsHasZeroAdd) {
    // keep and add both collapse to zero; only delete is vacuously perfect.
    double s = sari_sentence("a b c d", "a b c d", {"w x y z"});
    EXPECT_LT(s, 0.5);
}

TEST(Sari, LengthMismatchThrows) {
    EXPECT_THROW(sari({"a"}, {"a", "b"}, {{"a"}, {"b"}}), MetricInputError);
}

TEST(MetricProperties, CorpusOrderDoesNotMatter) {
    Corpus c = corpus(3);
    std::vector<size_t> perm(c.hyps.size());
    for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::mt19937 g(7);
    std::shuffle(perm.begin(), perm.end(), g);
    Corpus p;
    for (size_t i : perm) {
        p.srcs.push_back(c.srcs[i]);
        p.hyps.push_back(c.hyps[i]);
        p.refs.push_back(c.refs[i]);
    }
    EXPECT_NEAR(bleu(c.hyps, c.refs), bleu(p.hyps, p.refs), 1e-9);
    EXPECT_NEAR(chrf(c.hyps, c.refs), chrf(p.hyps, p.refs), 1e-9);
    EXPECT_NEAR(ter(c.hyps, c.refs), ter(p.hyps, p.refs), 1e-9);
    EXPECT_NEAR(rouge(c.hyps, c.refs).rougeL, rouge(p.hyps, p.refs).rougeL, 1e-9);
    EXPECT_NEAR(sari(c.srcs, c.hyps, c.refs), sari(p.srcs, p.hyps, p.refs), 1e-9);
}

TEST(MetricProperties, IdentityScoresBestValue) {
    Corpus c = corpus(1);
    std::vector<std::string> refs;
    for (const auto& r : c.refs) refs.push_back(r.front());
    EXPECT_NEAR(bleu(refs, c.refs), 100.0, 1e-9);
    EXPECT_NEAR(chrf(refs, c.refs), 100.0, 1e-9);
    EXPECT_NEAR(ter(refs, c.refs), 0.0, 1e-9);
    EXPECT_NEAR(rouge(refs, c.refs).rouge1, 100.0, 1e-9);
}

TEST(MetricProperties, UnrelatedSegmentDoesNotBreakScores) {
    Corpus c = corpus(1, 0, 10);
    double before = bleu(c.hyps, c.refs);
    c.hyps.push_back("zzz qqq");
    c.refs.push_back({"completely different words"});
    double after = bleu(c.hyps, c.refs);
    EXPECT_LT(after, before);
    EXPECT_GT(after, 0.0);
    EXPECT_NO_THROW(chrf(c.hyps, c.refs));
    EXPECT_NO_THROW(ter(c.hyps, c.refs));
}

TEST(DialogsumAverage, FieldwiseMean) {
    std::vector<MetricReport> rs(3);
    double r1[] = {30, 40, 50};
    for (int i = 0; i < 3; ++i) {
        rs[i].rouge1 = r1[i];
        rs[i].n = 5;
    }
    rs[0].bleu = 10;
    MetricReport avg = dialogsum_average(rs);
    EXPECT_DOUBLE_EQ(*avg.rouge1, 40.0);
    EXPECT_FALSE(avg.bleu.has_value());
    EXPECT_EQ(avg.n, 5u);

    MetricReport same = dialogsum_average({rs[1], rs[1], rs[1]});
    EXPECT_DOUBLE_EQ(*same.rouge1, 40.0);
    EXPECT_DOUBLE_EQ(*dialogsum_average({rs[2]}).rouge1, 50.0);
    EXPECT_THROW(dialogsum_average({}), MetricInputError);
    rs[2].n = 4;
    EXPECT_THROW(dialogsum_average(rs), MetricInputError);
}

TEST(MetricReport, JsonRoundTrip) {
    MetricReport r;
    r.bleu = 12.5;
    r.rougeL = 40.25;
    r.n = 7;
    MetricReport back = MetricReport::from_json(r.to_json());
    EXPECT_EQ(back.bleu, r.bleu);
    EXPECT_EQ(back.rougeL, r.rougeL);
    EXPECT_FALSE(back.chrf.has_value());
    EXPECT_EQ(back.n, 7u);
}
