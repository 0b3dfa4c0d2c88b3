/// @file task.hpp
/// @brief Task families, corpora and demonstration sets.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dtg {

enum class TaskKind {
    Translation,
    Summarization,
    DialogueSummarization,
    Simplification,
    StyleTransfer,
    Paraphrase,
    CommonsenseGeneration,
};

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view name);
const std::vector<TaskKind>& all_task_kinds();

/// One generation task family plus the vocabulary substituted into its templates.
struct TaskSpec {
    TaskKind kind = TaskKind::Translation;
    /// Word used in error labels, e.g. "translation" in "incorrect translation".
    std::string task_noun;
    std::optional<std::string> src_lang;
    std::optional<std::string> tgt_lang;
    std::optional<std::string> style_from;
    std::optional<std::string> style_to;

    /// Throws ConfigError when an invariant is broken.
    void validate() const;

    static TaskSpec translation(std::string src, std::string tgt);
    static TaskSpec style_transfer(std::string from, std::string to);
    /// Defaults for kinds that need no extra vocabulary.
    static TaskSpec of(TaskKind kind);
};

std::string default_task_noun(TaskKind kind);

enum class Split { Test, Validation };

std::string_view to_string(Split split);

struct Example {
    std::string id;
    std::string source;
    std::vector<std::string> references;
    Split split = Split::Test;
};

struct Dataset {
    TaskSpec task;
    std::vector<Example> examples;
    std::string name;

    std::vector<const Example*> with_split(Split split) const;
};

struct DemoSet {
    std::vector<Example> demos;
    size_t k = 0;
};

/// Reads one record per line: {"id", "source", "references": [...], "split"?}.
Dataset load_dataset(const std::filesystem::path& path, const TaskSpec& task,
                     Split default_split = Split::Test);

/// Parses the same format from memory. `origin` names the input in error messages.
Dataset parse_dataset(std::string_view content, const TaskSpec& task, std::string origin,
                      Split default_split = Split::Test);

/// Serializes back to the line format; load(serialize(ds)) reproduces ds.
std::string serialize_dataset(const Dataset& ds);

struct ValidationReport {
    std::vector<std::string> issues;
    bool clean() const { return issues.empty(); }
};

ValidationReport validate_dataset(const Dataset& ds, std::optional<size_t> expected_count = {});

/// Published test-set sizes for the benchmarks the harness targets, keyed by
/// names such as "WMT ZH-EN" or "Asset".
std::optional<size_t> benchmark_test_size(std::string_view benchmark);
const std::vector<std::pair<std::string, size_t>>& benchmark_test_sizes();

enum class DemoStrategy { FirstK, SeededRandom };

DemoStrategy parse_demo_strategy(std::string_view name);

/// Picks k validation examples. FirstK keeps file order; SeededRandom is a
/// seeded partial shuffle and returns the picks in file order.
DemoSet select_demonstrations(const Dataset& ds, size_t k, DemoStrategy strategy,
                              std::uint64_t seed);

}  // namespace dtg
