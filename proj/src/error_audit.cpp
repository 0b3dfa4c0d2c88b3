#include "dtg/error_audit.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "dtg/errors.hpp"
#include "dtg/text.hpp"

namespace dtg {

using json = nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Splits into lines, dropping the empty piece after a final newline and any "\r".
std::vector<std::string_view> lines_of(std::string_view content) {
    std::vector<std::string_view> out;
    size_t start = 0;
    while (start < content.size()) {
        size_t end = content.find('\n', start);
        if (end == std::string_view::npos) end = content.size();
        std::string_view line = content.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        out.push_back(line);
        start = end + 1;
    }
    return out;
}

bool parse_index(std::string_view s, size_t& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

AlignmentPairs parse_pharaoh(std::string_view line, std::string_view where) {
    AlignmentPairs pairs;
    for (const auto& tok : text::split_whitespace(line)) {
        size_t dash = tok.find('-');
        size_t i = 0, j = 0;
        if (dash == std::string::npos || !parse_index(std::string_view(tok).substr(0, dash), i) ||
            !parse_index(std::string_view(tok).substr(dash + 1), j))
            throw FormatError(std::string(where) + ": malformed alignment pair \"" + tok + "\"");
        pairs.emplace(i, j);
    }
    return pairs;
}

std::vector<AlignmentLine> parse_alignment_file(std::string_view content,
                                                std::string_view origin) {
    std::vector<AlignmentLine> out;
    std::set<std::string> seen;
    auto lines = lines_of(content);
    for (size_t n = 0; n < lines.size(); ++n) {
        std::string where = std::string(origin) + ":" + std::to_string(n + 1);
        std::string_view line = lines[n];
        AlignmentLine rec;
        size_t tab = line.find('\t');
        if (tab == std::string_view::npos) {
            rec.example_id = std::to_string(n + 1);
            rec.pairs = parse_pharaoh(line, where);
        } else {
            rec.example_id = text::trim(line.substr(0, tab));
            rec.pairs = parse_pharaoh(line.substr(tab + 1), where);
        }
        if (!seen.insert(rec.example_id).second)
            throw FormatError(where + ": duplicate example id " + rec.example_id);
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<AlignmentLine> load_alignment_file(const std::filesystem::path& path) {
    return parse_alignment_file(read_file(path), path.string());
}

std::vector<AlignmentRecord> join_alignments(const std::vector<AlignmentLine>& src_ref,
                                             const std::vector<AlignmentLine>& src_hyp,
                                             const std::map<std::string, size_t>& src_lengths) {
    std::map<std::string, const AlignmentLine*> hyp_by_id;
    for (const auto& l : src_hyp) hyp_by_id[l.example_id] = &l;
    if (src_hyp.size() != src_ref.size())
        throw FormatError("alignment files disagree: " + std::to_string(src_ref.size()) +
                          " source-reference lines vs " + std::to_string(src_hyp.size()) +
                          " source-hypothesis lines");
    std::vector<AlignmentRecord> out;
    for (const auto& r : src_ref) {
        auto it = hyp_by_id.find(r.example_id);
        if (it == hyp_by_id.end())
            throw FormatError("example " + r.example_id + ": no source-hypothesis alignment");
        AlignmentRecord rec;
        rec.example_id = r.example_id;
        rec.src_ref_pairs = r.pairs;
        rec.src_hyp_pairs = it->second->pairs;
        auto len = src_lengths.find(r.example_id);
        if (len != src_lengths.end()) {
            rec.src_len = len->second;
        } else {
            size_t max_i = 0;
            for (const auto* set : {&rec.src_ref_pairs, &rec.src_hyp_pairs})
                for (const auto& [i, j] : *set) max_i = std::max(max_i, i + 1);
            rec.src_len = std::max<size_t>(max_i, 1);
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::string_view to_string(EntityKind k) {
    switch (k) {
        case EntityKind::Person: return "person";
        case EntityKind::Organization: return "organization";
        case EntityKind::Location: return "location";
    }
    return "unknown";
}

EntityKind parse_entity_kind(std::string_view name) {
    std::string n = text::to_lower(name);
    if (n == "person" || n == "per") return EntityKind::Person;
    if (n == "organization" || n == "organisation" || n == "org") return EntityKind::Organization;
    if (n == "location" || n == "loc") return EntityKind::Location;
    throw FormatError("unknown entity kind: " + std::string(name));
}

std::vector<EntityRecord> parse_entities(std::string_view content, std::string_view origin) {
    std::vector<EntityRecord> out;
    auto lines = lines_of(content);
    for (size_t n = 0; n < lines.size(); ++n) {
        std::string where = std::string(origin) + ":" + std::to_string(n + 1);
        if (text::trim(lines[n]).empty()) continue;
        json j;
        try {
            j = json::parse(lines[n]);
        } catch (const json::parse_error&) {
            throw FormatError(where + ": malformed entity record");
        }
        if (!j.is_object() || !j.contains("id") || !j.contains("entities") ||
            !j["entities"].is_array())
            throw FormatError(where + ": entity record needs \"id\" and \"entities\"");
        EntityRecord rec;
        rec.example_id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
        for (const auto& e : j["entities"]) {
            if (!e.is_object() || !e.contains("text") || !e["text"].is_string())
                throw FormatError(where + ": entity without text");
            Entity ent;
            ent.text = e["text"].get<std::string>();
            if (ent.text.empty()) throw FormatError(where + ": empty entity text");
            try {
                ent.kind = parse_entity_kind(e.value("kind", std::string("person")));
            } catch (const FormatError& err) {
                throw FormatError(where + ": " + err.what());
            }
            rec.entities.push_back(std::move(ent));
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<EntityRecord> load_entities(const std::filesystem::path& path) {
    return parse_entities(read_file(path), path.string());
}

std::map<std::string, std::string> load_hypotheses(const std::filesystem::path& path) {
    std::string content = read_file(path);
    std::map<std::string, std::string> out;
    auto lines = lines_of(content);
    for (size_t n = 0; n < lines.size(); ++n) {
        std::string_view line = lines[n];
        std::string where = path.string() + ":" + std::to_string(n + 1);
        if (!line.empty() && line.front() == '{') {
            json j;
            try {
                j = json::parse(line);
            } catch (const json::parse_error&) {
                throw FormatError(where + ": malformed hypothesis record");
            }
            if (!j.contains("id") || !j.contains("hypothesis"))
                throw FormatError(where + ": hypothesis record needs \"id\" and \"hypothesis\"");
            std::string id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
            out[id] = j["hypothesis"].get<std::string>();
            continue;
        }
        size_t tab = line.find('\t');
        if (tab == std::string_view::npos)
            out[std::to_string(n + 1)] = std::string(line);
        else
            out[std::string(line.substr(0, tab))] = std::string(line.substr(tab + 1));
    }
    return out;
}

double RateCounts::rate() const {
    return denominator == 0 ? 0.0
                            : static_cast<double>(errors) / static_cast<double>(denominator);
}

RateCounts under_translation_rate(const std::vector<AlignmentRecord>& records) {
    RateCounts c;
    for (const auto& r : records) {
        std::set<size_t> ref_cov, hyp_cov;
        for (const auto& [i, j] : r.src_ref_pairs) ref_cov.insert(i);
        for (const auto& [i, j] : r.src_hyp_pairs) hyp_cov.insert(i);
        for (const auto* cov : {&ref_cov, &hyp_cov}) {
            if (!cov->empty() && *cov->rbegin() >= r.src_len)
                throw FormatError("example " + r.example_id + ": source index " +
                                  std::to_string(*cov->rbegin()) + " out of range for " +
                                  std::to_string(r.src_len) + " source words");
        }
        for (size_t i : ref_cov) {
            ++c.denominator;
            if (!hyp_cov.count(i)) ++c.errors;
        }
    }
    return c;
}

EntityMatching parse_entity_matching(std::string_view name) {
    std::string n = text::to_lower(name);
    if (n == "exact") return EntityMatching::Exact;
    if (n == "casefold" || n == "case_fold") return EntityMatching::CaseFold;
    throw ConfigError("unknown entity matching mode: " + std::string(name));
}

RateCounts entity_error_rate(const std::vector<EntityRecord>& entities,
                             const std::map<std::string, std::string>& hyps,
                             EntityMatching matching) {
    RateCounts c;
    for (const auto& rec : entities) {
        auto it = hyps.find(rec.example_id);
        if (it == hyps.end())
            throw DatasetError("example " + rec.example_id + ": no hypothesis for entity record");
        const std::string hyp =
            matching == EntityMatching::CaseFold ? text::to_lower(it->second) : it->second;
        for (const auto& e : rec.entities) {
            ++c.denominator;
            const std::string needle =
                matching == EntityMatching::CaseFold ? text::to_lower(e.text) : e.text;
            if (hyp.find(needle) == std::string::npos) ++c.errors;
        }
    }
    return c;
}

json ErrorStatsReport::to_json() const {
    auto counts = [](const RateCounts& c) {
        json j = {{"errors", c.errors}, {"denominator", c.denominator}, {"rate", c.rate()}};
        if (c.empty_denominator()) j["empty_denominator"] = true;
        return j;
    };
    json j = json::object();
    if (under) {
        j["under_translation"] = counts(*under);
        j["under_translation"]["denominator_policy"] = "reference-aligned source words";
    }
    if (entity) {
        j["entity"] = counts(*entity);
        j["entity"]["matching"] = matching == EntityMatching::Exact ? "exact" : "casefold";
    }
    return j;
}

AlignmentPairs lexical_fallback_align(const std::vector<std::string>& src_tokens,
                                      const std::vector<std::string>& tgt_tokens,
                                      const std::map<std::string, std::string>* lexicon) {
    std::vector<std::string> tgt_folded;
    for (const auto& t : tgt_tokens) tgt_folded.push_back(text::to_lower(t));
    std::vector<bool> used(tgt_tokens.size(), false);
    AlignmentPairs pairs;
    for (size_t i = 0; i < src_tokens.size(); ++i) {
        std::string s = text::to_lower(src_tokens[i]);
        std::optional<std::string> translated;
        if (lexicon) {
            auto it = lexicon->find(s);
            if (it != lexicon->end()) translated = text::to_lower(it->second);
        }
        for (size_t j = 0; j < tgt_folded.size(); ++j) {
            if (used[j]) continue;
            if (tgt_folded[j] == s || (translated && tgt_folded[j] == *translated)) {
                used[j] = true;
                pairs.emplace(i, j);
                break;
            }
        }
    }
    return pairs;
}

}  // namespace dtg
