/// @file candidate.hpp
/// @brief Synthesis of the "already generated" candidate text shown to the model.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dtg/task.hpp"

namespace dtg {

struct EmptyOrigin {};
struct ProvidedOrigin {};
struct SampledOrigin {
    std::uint64_t seed = 0;
    std::string pool_id;
    std::string source_example_id;
};
struct WordDropOrigin {
    std::string base_id;
    double rate = 0.0;
    std::uint64_t seed = 0;
};
struct SimilarityBucketOrigin {
    double target_sim = 0.0;
    double achieved_sim = 0.0;
};

using CandidateOrigin =
    std::variant<EmptyOrigin, ProvidedOrigin, SampledOrigin, WordDropOrigin, SimilarityBucketOrigin>;

struct Candidate {
    std::string text;
    CandidateOrigin provenance = EmptyOrigin{};

    /// "empty", "provided", "sampled", "word_drop" or "similarity_bucket".
    std::string_view policy() const;
};

Candidate empty_candidate();
Candidate provided_candidate(std::string text);

/// First reference of a seeded uniform pick among pool examples whose id differs
/// from exclude_id.
Candidate sample_irrelevant(const Dataset& pool, std::string_view exclude_id, std::uint64_t seed);

/// Drops each whitespace token independently with probability `rate`.
Candidate word_drop(std::string_view base, double rate, std::uint64_t seed,
                    std::string base_id = {});

/// Character-level Levenshtein distance over code points.
size_t levenshtein(std::u32string_view a, std::u32string_view b);

/// 1 - levenshtein / max length, over code points; 1.0 for two empty strings.
double similarity(std::string_view a, std::string_view b);

/// Pool element whose similarity to `reference` is closest to target_sim.
/// Ties go to the earliest element. Throws if the best lies outside target_sim +- tol.
Candidate bucket_candidates(const std::vector<std::string>& pool, std::string_view reference,
                            double target_sim, double tol);

/// One line of a candidate manifest: {"example_id", "policy", "seed", "text"}.
struct CandidateManifestEntry {
    std::string example_id;
    Candidate candidate;
};

std::string manifest_line(const CandidateManifestEntry& entry);
CandidateManifestEntry parse_manifest_line(std::string_view line);

}  // namespace dtg
