/// @file prompt.hpp
/// @brief Rendering of standard, deliberate-then-generate, ablation and judge prompts.
///
/// Wording lives in a template table (data/templates.json, compiled in as the
/// default) so that adding a task only needs a new table entry. Lines inside a
/// block are joined with "\n" and blocks are separated by a blank line; the
/// prompt ends exactly at the cue the model continues from.

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dtg/candidate.hpp"
#include "dtg/task.hpp"

namespace dtg {

enum class PromptVariant {
    Standard,
    DTG,
    DtgNoErrorDetection,
    DtgWrongErrorType,
    DtgFixedErrorType,
};

struct PromptMode {
    PromptVariant variant = PromptVariant::DTG;
    /// Required iff variant == DtgFixedErrorType.
    std::optional<std::string> fixed_error_label;
    /// Overrides the label written into demonstration answers.
    std::optional<std::string> demo_error_label;

    static PromptMode standard() { return {PromptVariant::Standard, {}, {}}; }
    static PromptMode dtg() { return {PromptVariant::DTG, {}, {}}; }
    static PromptMode no_error_detection() { return {PromptVariant::DtgNoErrorDetection, {}, {}}; }
    static PromptMode wrong_error_type() { return {PromptVariant::DtgWrongErrorType, {}, {}}; }
    static PromptMode fixed_error_type(std::string label) {
        return {PromptVariant::DtgFixedErrorType, std::move(label), {}};
    }

    /// Stable identifier, e.g. "dtg" or "dtg_fixed_error_type(under translation)".
    std::string name() const;

    /// True for prompts whose test block ends at "Error type:".
    bool asks_for_error_type() const;

    /// Label used in demonstration answers for `task`.
    std::string demo_label(const TaskSpec& task) const;

    bool operator==(const PromptMode&) const = default;
};

std::string_view to_string(PromptVariant v);
PromptVariant parse_prompt_variant(std::string_view name);

struct RenderedPrompt {
    std::string text;
    PromptMode mode;
    size_t shots = 0;
    size_t token_estimate = 0;
    /// The exact string the prompt ends with.
    std::string trailing_cue;
};

/// Wording for one task family. Every pattern may use {src} {tgt} {noun}
/// {style_from} {style_to}; slot patterns additionally use {SRC}, {TGT} or {SYS}.
struct TaskTemplates {
    std::string standard_source;
    /// Must end with " {TGT}"; the part before it is the generation cue.
    std::string standard_answer;
    std::string dtg_source;
    /// Must end with "{SYS}".
    std::string dtg_candidate;
    std::string dtg_instruction;
    /// Phrase in "the refined <phrase> is:".
    std::string dtg_refined;
};

class TemplateTable {
public:
    /// The table shipped with the harness.
    static const TemplateTable& builtin();
    static TemplateTable parse(std::string_view json_text);
    static TemplateTable load(const std::filesystem::path& path);

    const TaskTemplates& for_task(TaskKind kind) const;
    const std::vector<std::string>& judge_lines() const { return judge_lines_; }
    const std::string& judge_default_src() const { return judge_default_src_; }

private:
    std::map<TaskKind, TaskTemplates> tasks_;
    std::vector<std::string> judge_lines_;
    std::string judge_default_src_;
};

/// Expands {name} placeholders in one pass; substituted values are not rescanned.
/// Throws TemplateError for a placeholder with no value.
std::string expand_template(std::string_view pattern,
                            const std::map<std::string, std::string, std::less<>>& values);

/// ceil(bytes / 3) + 8: a deliberate over-estimate of the model's token count.
size_t estimate_tokens(std::string_view text);

RenderedPrompt render_standard(const TaskSpec& task, const DemoSet& demos, const Example& input,
                               const TemplateTable& table = TemplateTable::builtin());

/// Every block uses `candidate`.
RenderedPrompt render_dtg(const TaskSpec& task, const DemoSet& demos, const Example& input,
                          const Candidate& candidate, const PromptMode& mode,
                          const TemplateTable& table = TemplateTable::builtin());

/// Demonstration i uses demo_candidates[i]; the test block uses `candidate`.
RenderedPrompt render_dtg(const TaskSpec& task, const DemoSet& demos, const Example& input,
                          std::span<const Candidate> demo_candidates, const Candidate& candidate,
                          const PromptMode& mode,
                          const TemplateTable& table = TemplateTable::builtin());

/// Dispatches on mode.variant.
RenderedPrompt render(const TaskSpec& task, const DemoSet& demos, const Example& input,
                      std::span<const Candidate> demo_candidates, const Candidate& candidate,
                      const PromptMode& mode, const TemplateTable& table = TemplateTable::builtin());

/// Zero-shot pairwise comparison prompt ending at "Output:".
RenderedPrompt render_judge(std::string_view src, std::string_view cand1, std::string_view cand2,
                            const std::optional<std::string>& src_lang = std::nullopt,
                            const TemplateTable& table = TemplateTable::builtin());

/// The answer line of a DTG demonstration, "Error type: <label>, the refined <...> is: <target>".
std::string dtg_answer_line(const TaskSpec& task, std::string_view label, std::string_view target,
                            const TemplateTable& table = TemplateTable::builtin());

/// What an ideal model would emit after the prompt for `mode` when its answer is
/// `target`. Used by the mock provider's echo fallbacks.
std::string ideal_completion(const TaskSpec& task, const PromptMode& mode, std::string_view target,
                             const TemplateTable& table = TemplateTable::builtin());

}  // namespace dtg
