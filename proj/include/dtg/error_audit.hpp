/// @file error_audit.hpp
/// @brief Under-translation and entity-translation error statistics.
///
/// Word alignments and entity spans come from external tools; this module
/// parses their files and counts errors. Counts are summed as integers and
/// divided once, so rates are exact ratios of the reported counts.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace dtg {

using AlignmentPairs = std::set<std::pair<size_t, size_t>>;

struct AlignmentRecord {
    std::string example_id;
    AlignmentPairs src_ref_pairs;
    AlignmentPairs src_hyp_pairs;
    size_t src_len = 0;
};

/// One line of a Pharaoh-style alignment file.
struct AlignmentLine {
    std::string example_id;
    AlignmentPairs pairs;
};

/// Parses "0-0 1-2 3-1". `where` prefixes error messages (e.g. "file.txt:4").
AlignmentPairs parse_pharaoh(std::string_view line, std::string_view where);

/// Lines are "<id>\t<pairs>"; a line without a tab is all pairs and takes its
/// 1-based line number as id.
std::vector<AlignmentLine> parse_alignment_file(std::string_view content, std::string_view origin);
std::vector<AlignmentLine> load_alignment_file(const std::filesystem::path& path);

/// Pairs up src-ref and src-hyp lines by id, in src-ref order. src_len comes
/// from src_lengths when given, else from the largest source index seen.
std::vector<AlignmentRecord> join_alignments(
    const std::vector<AlignmentLine>& src_ref, const std::vector<AlignmentLine>& src_hyp,
    const std::map<std::string, size_t>& src_lengths = {});

enum class EntityKind { Person, Organization, Location };

std::string_view to_string(EntityKind k);
EntityKind parse_entity_kind(std::string_view name);

struct Entity {
    std::string text;
    EntityKind kind = EntityKind::Person;
};

struct EntityRecord {
    std::string example_id;
    std::vector<Entity> entities;
};

/// Line records {"id", "entities": [{"text", "kind"}]}.
std::vector<EntityRecord> parse_entities(std::string_view content, std::string_view origin);
std::vector<EntityRecord> load_entities(const std::filesystem::path& path);

/// id -> hypothesis. Accepts run outputs ({"id", "hypothesis"} lines) or
/// "<id>\t<text>" lines.
std::map<std::string, std::string> load_hypotheses(const std::filesystem::path& path);

struct RateCounts {
    std::uint64_t errors = 0;
    std::uint64_t denominator = 0;

    /// errors / denominator, or 0 when the denominator is empty.
    double rate() const;
    bool empty_denominator() const { return denominator == 0; }
};

/// A source word is an error when it is aligned in the reference but not in
/// the hypothesis. The denominator is the number of reference-aligned source
/// words. Throws FormatError on an index outside the source length.
RateCounts under_translation_rate(const std::vector<AlignmentRecord>& records);

enum class EntityMatching { Exact, CaseFold };

EntityMatching parse_entity_matching(std::string_view name);

/// An entity is an error when its text is not a substring of the hypothesis.
/// Throws DatasetError when a record has no hypothesis.
RateCounts entity_error_rate(const std::vector<EntityRecord>& entities,
                             const std::map<std::string, std::string>& hyps,
                             EntityMatching matching = EntityMatching::CaseFold);

struct ErrorStatsReport {
    std::optional<RateCounts> under;
    std::optional<RateCounts> entity;
    EntityMatching matching = EntityMatching::CaseFold;

    nlohmann::json to_json() const;
};

/// Aligns src token i to the leftmost unused target token equal to it after
/// case folding, or to its lexicon translation. Lexicon keys are case-folded.
AlignmentPairs lexical_fallback_align(const std::vector<std::string>& src_tokens,
                                      const std::vector<std::string>& tgt_tokens,
                                      const std::map<std::string, std::string>* lexicon = nullptr);

}  // namespace dtg
