#include "dtg/prompt.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dtg/errors.hpp"
#include "dtg/text.hpp"
#include "dtg_builtin_templates.hpp"

namespace dtg {

using json = nlohmann::json;
using Values = std::map<std::string, std::string, std::less<>>;

namespace {

constexpr std::string_view kErrorCue = "Error type:";

std::string join_lines(const std::vector<std::string>& lines) { return text::join(lines, "\n"); }

Values vocabulary(const TaskSpec& task) {
    Values v;
    v["noun"] = task.task_noun;
    if (task.src_lang) v["src"] = *task.src_lang;
    if (task.tgt_lang) v["tgt"] = *task.tgt_lang;
    if (task.style_from) v["style_from"] = *task.style_from;
    if (task.style_to) v["style_to"] = *task.style_to;
    return v;
}

std::string fill(std::string_view pattern, Values values, std::string_view slot = {},
                 std::string_view slot_value = {}) {
    if (!slot.empty()) values[std::string(slot)] = std::string(slot_value);
    return expand_template(pattern, values);
}

/// "the ... of the sentence is:" from "the ... of the sentence is: {TGT}".
std::string standard_cue(const TaskTemplates& t) {
    constexpr std::string_view suffix = " {TGT}";
    if (!text::ends_with(t.standard_answer, suffix))
        throw TemplateError("standard answer pattern must end with \" {TGT}\": " +
                            t.standard_answer);
    return t.standard_answer.substr(0, t.standard_answer.size() - suffix.size());
}

std::string refined_phrase(const TaskSpec& task, const TaskTemplates& t) {
    return expand_template(t.dtg_refined, vocabulary(task));
}

void check_dtg_mode(const PromptMode& mode) {
    if (mode.variant == PromptVariant::Standard)
        throw ConfigError("render_dtg called with the standard prompt mode");
    if (mode.variant == PromptVariant::DtgFixedErrorType &&
        (!mode.fixed_error_label || text::trim(*mode.fixed_error_label).empty()))
        throw ConfigError("dtg_fixed_error_type requires a non-empty fixed_error_label");
}

RenderedPrompt finish(std::vector<std::string> blocks, const PromptMode& mode, size_t shots,
                      std::string cue) {
    RenderedPrompt out;
    out.text = text::join(blocks, "\n\n");
    out.mode = mode;
    out.shots = shots;
    out.token_estimate = estimate_tokens(out.text);
    out.trailing_cue = std::move(cue);
    return out;
}

TaskTemplates parse_task_entry(const json& j, const std::string& name) {
    auto get = [&](const char* group, const char* key) -> std::string {
        if (!j.contains(group) || !j[group].contains(key) || !j[group][key].is_string())
            throw TemplateError("template table: task " + name + " lacks " + group + "." + key);
        return j[group][key].get<std::string>();
    };
    TaskTemplates t;
    t.standard_source = get("standard", "source");
    t.standard_answer = get("standard", "answer");
    t.dtg_source = get("dtg", "source");
    t.dtg_candidate = get("dtg", "candidate");
    t.dtg_instruction = get("dtg", "instruction");
    t.dtg_refined = get("dtg", "refined");
    if (!text::ends_with(t.standard_answer, " {TGT}"))
        throw TemplateError("template table: task " + name +
                            " standard.answer must end with \" {TGT}\"");
    if (!text::ends_with(t.dtg_candidate, "{SYS}"))
        throw TemplateError("template table: task " + name +
                            " dtg.candidate must end with \"{SYS}\"");
    return t;
}

}  // namespace

std::string_view to_string(PromptVariant v) {
    switch (v) {
        case PromptVariant::Standard: return "standard";
        case PromptVariant::DTG: return "dtg";
        case PromptVariant::DtgNoErrorDetection: return "dtg_no_error_detection";
        case PromptVariant::DtgWrongErrorType: return "dtg_wrong_error_type";
        case PromptVariant::DtgFixedErrorType: return "dtg_fixed_error_type";
    }
    return "unknown";
}

PromptVariant parse_prompt_variant(std::string_view name) {
    for (auto v : {PromptVariant::Standard, PromptVariant::DTG, PromptVariant::DtgNoErrorDetection,
                   PromptVariant::DtgWrongErrorType, PromptVariant::DtgFixedErrorType}) {
        if (to_string(v) == name) return v;
    }
    throw ConfigError("unknown prompt mode: " + std::string(name));
}

std::string PromptMode::name() const {
    std::string n(to_string(variant));
    if (variant == PromptVariant::DtgFixedErrorType && fixed_error_label)
        n += "(" + *fixed_error_label + ")";
    return n;
}

bool PromptMode::asks_for_error_type() const {
    return variant == PromptVariant::DTG || variant == PromptVariant::DtgWrongErrorType;
}

std::string PromptMode::demo_label(const TaskSpec& task) const {
    if (demo_error_label) return *demo_error_label;
    switch (variant) {
        case PromptVariant::DtgWrongErrorType: return "good/correct " + task.task_noun;
        case PromptVariant::DtgFixedErrorType:
            if (fixed_error_label) return *fixed_error_label;
            break;
        default: break;
    }
    return "incorrect " + task.task_noun;
}

const TemplateTable& TemplateTable::builtin() {
    static const TemplateTable table = parse(detail::kBuiltinTemplatesJson);
    return table;
}

TemplateTable TemplateTable::parse(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw TemplateError(std::string("template table is not valid JSON: ") + e.what());
    }
    TemplateTable table;
    for (TaskKind kind : all_task_kinds()) {
        std::string name(to_string(kind));
        if (!j.contains(name)) throw TemplateError("template table lacks task " + name);
        table.tasks_[kind] = parse_task_entry(j[name], name);
    }
    if (!j.contains("judge") || !j["judge"].contains("lines"))
        throw TemplateError("template table lacks judge.lines");
    table.judge_lines_ = j["judge"]["lines"].get<std::vector<std::string>>();
    table.judge_default_src_ = j["judge"].value("default_src", std::string("source"));
    return table;
}

TemplateTable TemplateTable::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TemplateError("cannot open template table " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

const TaskTemplates& TemplateTable::for_task(TaskKind kind) const {
    auto it = tasks_.find(kind);
    if (it == tasks_.end())
        throw TemplateError("no templates for task " + std::string(to_string(kind)));
    return it->second;
}

std::string expand_template(std::string_view pattern, const Values& values) {
    std::string out;
    out.reserve(pattern.size() + 64);
    size_t i = 0;
    while (i < pattern.size()) {
        char c = pattern[i];
        if (c == '{') {
            size_t close = pattern.find('}', i + 1);
            if (close != std::string_view::npos) {
                std::string_view name = pattern.substr(i + 1, close - i - 1);
                bool ident = !name.empty();
                for (char n : name) {
                    if (!(std::isalnum(static_cast<unsigned char>(n)) || n == '_')) ident = false;
                }
                if (ident) {
                    auto it = values.find(name);
                    if (it == values.end())
                        throw TemplateError("unresolved placeholder {" + std::string(name) +
                                            "} in template: " + std::string(pattern));
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out += c;
        ++i;
    }
    return out;
}

size_t estimate_tokens(std::string_view text) { return (text.size() + 2) / 3 + 8; }

RenderedPrompt render_standard(const TaskSpec& task, const DemoSet& demos, const Example& input,
                               const TemplateTable& table) {
    task.validate();
    const TaskTemplates& t = table.for_task(task.kind);
    Values vocab = vocabulary(task);
    std::vector<std::string> blocks;
    for (const Example& d : demos.demos) {
        if (d.references.empty())
            throw DatasetError("demonstration " + d.id + " has no reference");
        blocks.push_back(join_lines({fill(t.standard_source, vocab, "SRC", d.source),
                                     fill(t.standard_answer, vocab, "TGT", d.references.front())}));
    }
    std::string cue = expand_template(standard_cue(t), vocab);
    blocks.push_back(join_lines({fill(t.standard_source, vocab, "SRC", input.source), cue}));
    return finish(std::move(blocks), PromptMode::standard(), demos.demos.size(), cue);
}

std::string dtg_answer_line(const TaskSpec& task, std::string_view label, std::string_view target,
                            const TemplateTable& table) {
    const TaskTemplates& t = table.for_task(task.kind);
    std::string line = "Error type: ";
    line += label;
    line += ", the refined " + refined_phrase(task, t) + " is: ";
    line += target;
    return line;
}

RenderedPrompt render_dtg(const TaskSpec& task, const DemoSet& demos, const Example& input,
                          std::span<const Candidate> demo_candidates, const Candidate& candidate,
                          const PromptMode& mode, const TemplateTable& table) {
    task.validate();
    check_dtg_mode(mode);
    if (demo_candidates.size() != demos.demos.size())
        throw ConfigError("render_dtg: " + std::to_string(demo_candidates.size()) +
                          " demonstration candidates for " + std::to_string(demos.demos.size()) +
                          " demonstrations");
    const TaskTemplates& t = table.for_task(task.kind);
    Values vocab = vocabulary(task);
    const std::string refined = refined_phrase(task, t);
    const std::string instruction = expand_template(t.dtg_instruction, vocab);
    const bool no_detect = mode.variant == PromptVariant::DtgNoErrorDetection;
    const std::string label = mode.demo_label(task);

    auto head = [&](std::string_view src, std::string_view sys) {
        std::vector<std::string> lines{fill(t.dtg_source, vocab, "SRC", src),
                                       fill(t.dtg_candidate, vocab, "SYS", sys)};
        if (!no_detect) lines.push_back(instruction);
        return lines;
    };

    std::vector<std::string> blocks;
    for (size_t i = 0; i < demos.demos.size(); ++i) {
        const Example& d = demos.demos[i];
        if (d.references.empty())
            throw DatasetError("demonstration " + d.id + " has no reference");
        auto lines = head(d.source, demo_candidates[i].text);
        const std::string& tgt = d.references.front();
        if (no_detect)
            lines.push_back("The refined " + refined + " is: " + tgt);
        else
            lines.push_back(dtg_answer_line(task, label, tgt, table));
        blocks.push_back(join_lines(lines));
    }

    std::string cue;
    switch (mode.variant) {
        case PromptVariant::DtgNoErrorDetection: cue = "The refined " + refined + " is:"; break;
        case PromptVariant::DtgFixedErrorType:
            cue = "Error type: " + *mode.fixed_error_label + ", the refined " + refined + " is:";
            break;
        default: cue = std::string(kErrorCue); break;
    }
    auto lines = head(input.source, candidate.text);
    lines.push_back(cue);
    blocks.push_back(join_lines(lines));
    return finish(std::move(blocks), mode, demos.demos.size(), cue);
}

RenderedPrompt render_dtg(const TaskSpec& task, const DemoSet& demos, const Example& input,
                          const Candidate& candidate, const PromptMode& mode,
                          const TemplateTable& table) {
    std::vector<Candidate> shared(demos.demos.size(), candidate);
    return render_dtg(task, demos, input, shared, candidate, mode, table);
}

RenderedPrompt render(const TaskSpec& task, const DemoSet& demos, const Example& input,
                      std::span<const Candidate> demo_candidates, const Candidate& candidate,
                      const PromptMode& mode, const TemplateTable& table) {
    if (mode.variant == PromptVariant::Standard)
        return render_standard(task, demos, input, table);
    return render_dtg(task, demos, input, demo_candidates, candidate, mode, table);
}

RenderedPrompt render_judge(std::string_view src, std::string_view cand1, std::string_view cand2,
                            const std::optional<std::string>& src_lang,
                            const TemplateTable& table) {
    if (cand1.empty() && cand2.empty())
        throw ConfigError("render_judge: both candidates are empty");
    Values v;
    v["src"] = src_lang.value_or(table.judge_default_src());
    v["SRC"] = std::string(src);
    v["SYS1"] = std::string(cand1);
    v["SYS2"] = std::string(cand2);
    std::vector<std::string> lines;
    for (const auto& l : table.judge_lines()) lines.push_back(expand_template(l, v));
    std::string cue = lines.empty() ? std::string() : lines.back();
    RenderedPrompt out;
    out.text = join_lines(lines);
    out.shots = 0;
    out.token_estimate = estimate_tokens(out.text);
    out.trailing_cue = std::move(cue);
    return out;
}

std::string ideal_completion(const TaskSpec& task, const PromptMode& mode,
                             std::string_view target, const TemplateTable& table) {
    if (mode.asks_for_error_type())
        return dtg_answer_line(task, "incorrect " + task.task_noun, target, table);
    std::string out = " ";
    out += target;
    return out;
}

}  // namespace dtg
