#include "dtg/parser.hpp"

#include <cctype>

#include "dtg/text.hpp"

namespace dtg {

namespace {

constexpr std::string_view kRefinedMarker = ", the refined";
constexpr std::string_view kIs = "is:";
// Longest plausible "<phrase>" in "the refined <phrase> is:"; keeps a stray
// "is:" deep inside the answer from being taken as the marker end.
constexpr size_t kMaxPhraseBytes = 80;

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string strip_error_prefix(std::string_view s) {
    std::string t = text::trim(s);
    constexpr std::string_view prefix = "Error type:";
    if (t.size() >= prefix.size()) {
        std::string head = text::to_lower(std::string_view(t).substr(0, prefix.size()));
        if (head == "error type:") t = text::trim(std::string_view(t).substr(prefix.size()));
    }
    return t;
}

}  // namespace

std::string_view to_string(ParseStatus s) {
    switch (s) {
        case ParseStatus::Clean: return "clean";
        case ParseStatus::FallbackAfterColon: return "fallback_after_colon";
        case ParseStatus::FallbackWholeText: return "fallback_whole_text";
    }
    return "unknown";
}

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::C1: return "C1";
        case Verdict::C2: return "C2";
        case Verdict::Tie: return "tie";
        case Verdict::Unparseable: return "unparseable";
    }
    return "unknown";
}

ParsedDTGOutput parse_dtg(std::string_view completion, const TaskSpec&) {
    ParsedDTGOutput out;
    const std::string body = strip_error_prefix(completion);

    size_t marker = body.find(kRefinedMarker);
    if (marker != std::string::npos) {
        size_t after_marker = marker + kRefinedMarker.size();
        size_t is_pos = body.find(kIs, after_marker);
        if (is_pos != std::string::npos && is_pos - after_marker <= kMaxPhraseBytes &&
            body.find('\n', after_marker) > is_pos) {
            out.error_type = text::trim(std::string_view(body).substr(0, marker));
            out.refined = text::trim(std::string_view(body).substr(is_pos + kIs.size()));
            out.status = ParseStatus::Clean;
            return out;
        }
    }

    // "<label>: rest" or "<label>, rest" on the first line.
    size_t line_end = body.find('\n');
    std::string_view first_line = std::string_view(body).substr(0, line_end);
    size_t sep = first_line.find_first_of(":,");
    if (sep != std::string_view::npos && sep > 0) {
        out.error_type = text::trim(first_line.substr(0, sep));
        out.refined = text::trim(std::string_view(body).substr(sep + 1));
        out.status = ParseStatus::FallbackAfterColon;
        if (!out.error_type.empty()) return out;
    }

    out.error_type.clear();
    out.refined = text::trim(completion);
    out.status = ParseStatus::FallbackWholeText;
    return out;
}

ParsedDTGOutput parse_completion(std::string_view completion, const TaskSpec& task,
                                 const PromptMode& mode) {
    if (mode.asks_for_error_type()) return parse_dtg(completion, task);
    ParsedDTGOutput out;
    out.refined = text::trim(completion);
    out.status = ParseStatus::Clean;
    if (mode.variant == PromptVariant::DtgFixedErrorType && mode.fixed_error_label)
        out.error_type = *mode.fixed_error_label;
    return out;
}

PairwiseJudgment parse_judgment(std::string_view completion) {
    PairwiseJudgment j;
    j.raw = std::string(completion);
    const std::string lower = text::to_lower(completion);

    auto has_token = [&](std::string_view tok) {
        size_t pos = 0;
        while ((pos = lower.find(tok, pos)) != std::string::npos) {
            bool left = pos == 0 || !is_word_char(lower[pos - 1]);
            size_t end = pos + tok.size();
            bool right = end >= lower.size() || !is_word_char(lower[end]);
            if (left && right) return true;
            pos = end;
        }
        return false;
    };

    bool c1 = has_token("c1");
    bool c2 = has_token("c2");
    if (c1 && !c2) {
        j.verdict = Verdict::C1;
    } else if (c2 && !c1) {
        j.verdict = Verdict::C2;
    } else if (!c1 && !c2 && (has_token("tie") || has_token("equal"))) {
        j.verdict = Verdict::Tie;
    } else {
        j.verdict = Verdict::Unparseable;
    }
    return j;
}

}  // namespace dtg
