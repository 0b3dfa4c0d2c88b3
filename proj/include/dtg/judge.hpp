/// @file judge.hpp
/// @brief Pairwise LLM-as-judge comparisons and win-rate tallies.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dtg/gateway.hpp"
#include "dtg/parser.hpp"

namespace dtg {

enum class Preference { A, B, Tie, Unparseable };

std::string_view to_string(Preference p);

struct PairOutcome {
    Preference preference = Preference::Unparseable;
    /// One judgment per rendered order: (A,B) first, then (B,A) when swapping.
    std::vector<PairwiseJudgment> judgments;
};

struct JudgeSettings {
    LLMRequest request_template;  // prompt is filled per pair
    /// Ask in both candidate orders and keep only agreeing verdicts.
    bool swap = true;
    std::optional<std::string> src_lang;
};

/// With swap, the two orders are mapped back to (A,B): agreement gives that
/// side, disagreement gives Tie, and an unparseable answer in either order
/// gives Unparseable. Provider errors propagate.
PairOutcome judge_pair(std::string_view src, std::string_view cand_a, std::string_view cand_b,
                       Gateway& gateway, const JudgeSettings& settings);

struct JudgmentTally {
    size_t wins_a = 0;
    size_t wins_b = 0;
    size_t ties = 0;
    size_t unparseable = 0;
    size_t n = 0;

    /// Undefined (nullopt) when n == 0.
    std::optional<double> rate_a() const;
    std::optional<double> rate_b() const;
    std::optional<double> rate_tie() const;

    nlohmann::json to_json() const;
};

JudgmentTally tally(const std::vector<Preference>& prefs);

/// n distinct indices from [0, total), chosen by a seeded partial shuffle and
/// returned in ascending order. All indices when n >= total.
std::vector<size_t> sample_indices(size_t total, size_t n, std::uint64_t seed);

struct JudgeItem {
    size_t index = 0;
    PairOutcome outcome;
};

struct JudgeRun {
    std::vector<JudgeItem> items;
    JudgmentTally tally;
};

/// Judges the sampled items concurrently. Pairs whose two candidates are both
/// empty are counted as ties without a provider call.
JudgeRun judge_corpus(const std::vector<std::string>& srcs, const std::vector<std::string>& hyps_a,
                      const std::vector<std::string>& hyps_b, const std::vector<size_t>& indices,
                      Gateway& gateway, const JudgeSettings& settings, size_t workers);

}  // namespace dtg
