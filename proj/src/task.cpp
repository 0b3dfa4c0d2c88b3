#include "dtg/task.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "dtg/errors.hpp"
#include "dtg/rng.hpp"

namespace dtg {

using json = nlohmann::json;

namespace {

struct KindName {
    TaskKind kind;
    std::string_view name;
};

constexpr KindName kKindNames[] = {
    {TaskKind::Translation, "translation"},
    {TaskKind::Summarization, "summarization"},
    {TaskKind::DialogueSummarization, "dialogue_summarization"},
    {TaskKind::Simplification, "simplification"},
    {TaskKind::StyleTransfer, "style_transfer"},
    {TaskKind::Paraphrase, "paraphrase"},
    {TaskKind::CommonsenseGeneration, "commonsense_generation"},
};

bool has_placeholder(std::string_view s) {
    auto open = s.find('{');
    return open != std::string_view::npos && s.find('}', open) != std::string_view::npos;
}

}  // namespace

std::string_view to_string(TaskKind kind) {
    for (const auto& kn : kKindNames) {
        if (kn.kind == kind) return kn.name;
    }
    return "unknown";
}

TaskKind parse_task_kind(std::string_view name) {
    for (const auto& kn : kKindNames) {
        if (kn.name == name) return kn.kind;
    }
    throw ConfigError("unknown task kind: " + std::string(name));
}

const std::vector<TaskKind>& all_task_kinds() {
    static const std::vector<TaskKind> kinds = [] {
        std::vector<TaskKind> v;
        for (const auto& kn : kKindNames) v.push_back(kn.kind);
        return v;
    }();
    return kinds;
}

std::string default_task_noun(TaskKind kind) {
    switch (kind) {
        case TaskKind::Translation: return "translation";
        case TaskKind::Summarization:
        case TaskKind::DialogueSummarization: return "summarization";
        case TaskKind::Simplification: return "simplification";
        case TaskKind::StyleTransfer: return "transfer";
        case TaskKind::Paraphrase: return "paraphrase";
        case TaskKind::CommonsenseGeneration: return "generation";
    }
    return "generation";
}

void TaskSpec::validate() const {
    if (task_noun.empty()) throw ConfigError("task_noun must be non-empty");
    if (has_placeholder(task_noun)) {
        throw ConfigError("task_noun contains a template placeholder: " + task_noun);
    }
    if (kind == TaskKind::Translation) {
        if (!src_lang || !tgt_lang || src_lang->empty() || tgt_lang->empty()) {
            throw ConfigError("translation task requires src_lang and tgt_lang");
        }
        if (*src_lang == *tgt_lang) {
            throw ConfigError("translation src_lang and tgt_lang must differ");
        }
    }
    if (kind == TaskKind::StyleTransfer) {
        if (!style_from || !style_to || style_from->empty() || style_to->empty()) {
            throw ConfigError("style transfer task requires style_from and style_to");
        }
        if (*style_from == *style_to) {
            throw ConfigError("style transfer style_from and style_to must differ");
        }
    }
}

TaskSpec TaskSpec::translation(std::string src, std::string tgt) {
    TaskSpec t;
    t.kind = TaskKind::Translation;
    t.task_noun = default_task_noun(t.kind);
    t.src_lang = std::move(src);
    t.tgt_lang = std::move(tgt);
    return t;
}

TaskSpec TaskSpec::style_transfer(std::string from, std::string to) {
    TaskSpec t;
    t.kind = TaskKind::StyleTransfer;
    t.task_noun = default_task_noun(t.kind);
    t.style_from = std::move(from);
    t.style_to = std::move(to);
    return t;
}

TaskSpec TaskSpec::of(TaskKind kind) {
    switch (kind) {
        case TaskKind::Translation: return translation("Chinese", "English");
        case TaskKind::StyleTransfer: return style_transfer("informal", "formal");
        default: {
            TaskSpec t;
            t.kind = kind;
            t.task_noun = default_task_noun(kind);
            return t;
        }
    }
}

std::string_view to_string(Split split) {
    return split == Split::Test ? "test" : "validation";
}

std::vector<const Example*> Dataset::with_split(Split split) const {
    std::vector<const Example*> out;
    for (const auto& ex : examples) {
        if (ex.split == split) out.push_back(&ex);
    }
    return out;
}

Dataset parse_dataset(std::string_view content, const TaskSpec& task, std::string origin,
                      Split default_split) {
    Dataset ds;
    ds.task = task;
    ds.name = origin;
    size_t line_no = 0;
    size_t pos = 0;
    while (pos <= content.size()) {
        auto nl = content.find('\n', pos);
        auto line = content.substr(pos, nl == std::string_view::npos ? std::string_view::npos
                                                                      : nl - pos);
        pos = nl == std::string_view::npos ? content.size() + 1 : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

        const std::string where = origin + ":" + std::to_string(line_no) + ": ";
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DatasetError(where + "malformed record (" + e.what() + ")");
        }
        if (!rec.is_object()) throw DatasetError(where + "record is not an object");
        if (!rec.contains("id") || !(rec["id"].is_string() || rec["id"].is_number_integer())) {
            throw DatasetError(where + "id absent");
        }
        Example ex;
        ex.id = rec["id"].is_string() ? rec["id"].get<std::string>()
                                      : std::to_string(rec["id"].get<long long>());
        const std::string who = where + "example " + ex.id + ": ";
        if (!rec.contains("source") || !rec["source"].is_string()) {
            throw DatasetError(who + "source absent");
        }
        ex.source = rec["source"].get<std::string>();
        if (!rec.contains("references")) throw DatasetError(who + "references absent");
        if (!rec["references"].is_array()) throw DatasetError(who + "references is not a list");
        for (const auto& r : rec["references"]) {
            if (!r.is_string()) throw DatasetError(who + "reference is not text");
            if (r.get<std::string>().empty()) throw DatasetError(who + "empty reference");
            ex.references.push_back(r.get<std::string>());
        }
        if (ex.references.empty()) throw DatasetError(who + "references empty");
        ex.split = default_split;
        if (rec.contains("split")) {
            const auto s = rec["split"].get<std::string>();
            if (s == "test") {
                ex.split = Split::Test;
            } else if (s == "validation" || s == "valid" || s == "dev") {
                ex.split = Split::Validation;
            } else {
                throw DatasetError(who + "unknown split '" + s + "'");
            }
        }
        ds.examples.push_back(std::move(ex));
    }
    return ds;
}

Dataset load_dataset(const std::filesystem::path& path, const TaskSpec& task, Split default_split) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError("cannot open dataset file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    auto ds = parse_dataset(buf.str(), task, path.string(), default_split);
    ds.name = path.stem().string();
    return ds;
}

std::string serialize_dataset(const Dataset& ds) {
    std::string out;
    for (const auto& ex : ds.examples) {
        json rec;
        rec["id"] = ex.id;
        rec["source"] = ex.source;
        rec["references"] = ex.references;
        rec["split"] = std::string(to_string(ex.split));
        out += rec.dump();
        out += '\n';
    }
    return out;
}

ValidationReport validate_dataset(const Dataset& ds, std::optional<size_t> expected_count) {
    ValidationReport report;
    std::unordered_set<std::string> seen;
    std::unordered_set<std::string> flagged;
    for (const auto& ex : ds.examples) {
        if (!seen.insert(ex.id).second && flagged.insert(ex.id).second) {
            report.issues.push_back("duplicate id: " + ex.id);
        }
        if (ex.source.empty()) report.issues.push_back("empty source: " + ex.id);
        if (ex.references.empty()) report.issues.push_back("no references: " + ex.id);
        for (const auto& r : ex.references) {
            if (r.empty()) {
                report.issues.push_back("empty reference: " + ex.id);
                break;
            }
        }
    }
    if (expected_count) {
        const size_t n = ds.with_split(Split::Test).size();
        if (n != *expected_count) {
            report.issues.push_back("count mismatch: expected " + std::to_string(*expected_count) +
                                    " test examples, found " + std::to_string(n));
        }
    }
    return report;
}

const std::vector<std::pair<std::string, size_t>>& benchmark_test_sizes() {
    static const std::vector<std::pair<std::string, size_t>> sizes = {
        {"WMT DE-EN", 1984}, {"WMT CS-EN", 1448}, {"WMT JA-EN", 2008}, {"WMT ZH-EN", 1875},
        {"WMT RU-EN", 2016}, {"WMT UK-EN", 2018}, {"WMT IS-EN", 1000}, {"WMT HA-EN", 997},
        {"CommonGen", 993},  {"QQP", 2500},       {"CNN/DailyMail", 11490},
        {"GigaWord", 1951},  {"SamSum", 819},     {"DialogSum", 500},  {"EM", 1416},
        {"FR", 1332},        {"Amazon", 500},     {"Yelp", 500},       {"Asset", 359},
        {"Wiki-auto", 2000},
    };
    return sizes;
}

std::optional<size_t> benchmark_test_size(std::string_view benchmark) {
    for (const auto& [name, n] : benchmark_test_sizes()) {
        if (name == benchmark) return n;
    }
    return std::nullopt;
}

DemoStrategy parse_demo_strategy(std::string_view name) {
    if (name == "first_k") return DemoStrategy::FirstK;
    if (name == "seeded_random") return DemoStrategy::SeededRandom;
    throw ConfigError("unknown demonstration strategy: " + std::string(name));
}

DemoSet select_demonstrations(const Dataset& ds, size_t k, DemoStrategy strategy,
                              std::uint64_t seed) {
    const auto pool = ds.with_split(Split::Validation);
    if (k > pool.size()) {
        throw DatasetError("requested " + std::to_string(k) + " demonstrations but only " +
                           std::to_string(pool.size()) + " validation examples are available");
    }
    std::vector<size_t> picks(pool.size());
    std::iota(picks.begin(), picks.end(), 0);
    if (strategy == DemoStrategy::SeededRandom) {
        Rng rng(seed);
        for (size_t i = 0; i < k; ++i) {
            auto j = i + static_cast<size_t>(rng.below(pool.size() - i));
            std::swap(picks[i], picks[j]);
        }
        std::sort(picks.begin(), picks.begin() + static_cast<std::ptrdiff_t>(k));
    }
    DemoSet set;
    set.k = k;
    for (size_t i = 0; i < k; ++i) set.demos.push_back(*pool[picks[i]]);
    return set;
}

}  // namespace dtg
