/// @file parser.hpp
/// @brief Extraction of error labels, refined text and pairwise verdicts from completions.

#pragma once

#include <string>
#include <string_view>

#include "dtg/prompt.hpp"
#include "dtg/task.hpp"

namespace dtg {

enum class ParseStatus { Clean, FallbackAfterColon, FallbackWholeText };

std::string_view to_string(ParseStatus s);

struct ParsedDTGOutput {
    std::string error_type;
    std::string refined;
    ParseStatus status = ParseStatus::FallbackWholeText;
};

/// Parses a completion that continues a prompt ending at "Error type:".
/// A leading "Error type:" restated by the model is tolerated. Never throws.
ParsedDTGOutput parse_dtg(std::string_view completion, const TaskSpec& task);

/// Parses a completion for any prompt mode. Modes whose prompt already ends at
/// the refined-text cue take the trimmed completion as the output.
ParsedDTGOutput parse_completion(std::string_view completion, const TaskSpec& task,
                                 const PromptMode& mode);

enum class Verdict { C1, C2, Tie, Unparseable };

std::string_view to_string(Verdict v);

struct PairwiseJudgment {
    Verdict verdict = Verdict::Unparseable;
    std::string raw;
};

PairwiseJudgment parse_judgment(std::string_view completion);

}  // namespace dtg
