/// @file metrics.hpp
/// @brief Corpus-level BLEU, chrF, TER, Rouge and SARI.
///
/// BLEU, chrF and TER follow sacrebleu 2.3.1 defaults (13a tokenization, mixed
/// case, exponential smoothing; chrF char order 6, beta 2; case-insensitive
/// TER). Rouge follows rouge-score without stemming.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace dtg {

/// refs[i] holds every reference for segment i.
using ReferenceSets = std::vector<std::vector<std::string>>;

struct MetricReport {
    std::optional<double> bleu;
    std::optional<double> bleu3;
    std::optional<double> chrf;
    std::optional<double> ter;
    std::optional<double> rouge1;
    std::optional<double> rouge2;
    std::optional<double> rougeL;
    std::optional<double> sari;
    size_t n = 0;

    /// Looks a field up by its key ("bleu", "rougeL", ...).
    std::optional<double> get(std::string_view key) const;
    void set(std::string_view key, double value);
    static const std::vector<std::string>& keys();

    nlohmann::json to_json() const;
    static MetricReport from_json(const nlohmann::json& j);
};

std::vector<std::string> tokenize_13a(std::string_view text);

double bleu(const std::vector<std::string>& hyps, const ReferenceSets& refs, int max_order = 4);
double chrf(const std::vector<std::string>& hyps, const ReferenceSets& refs);
double ter(const std::vector<std::string>& hyps, const ReferenceSets& refs);

/// Edit count and reference length of one hypothesis against one reference,
/// after TER preprocessing.
struct TerStats {
    double edits = 0;
    double ref_length = 0;
};
TerStats ter_segment(std::string_view hyp, const std::vector<std::string>& refs);

struct RougeScores {
    double rouge1 = 0;
    double rouge2 = 0;
    double rougeL = 0;
};

std::vector<std::string> rouge_tokenize(std::string_view text);
RougeScores rouge(const std::vector<std::string>& hyps, const ReferenceSets& refs);

double sari_sentence(std::string_view src, std::string_view hyp,
                     const std::vector<std::string>& refs);
double sari(const std::vector<std::string>& srcs, const std::vector<std::string>& hyps,
            const ReferenceSets& refs);

/// Field-wise mean. A field is kept only when every report has it.
MetricReport dialogsum_average(const std::vector<MetricReport>& reports);

/// Computes the requested metrics ("bleu", "bleu3", "chrf", "ter", "rouge",
/// "sari") in one report. srcs may be empty unless "sari" is requested.
MetricReport score_corpus(const std::vector<std::string>& srcs,
                          const std::vector<std::string>& hyps, const ReferenceSets& refs,
                          const std::vector<std::string>& metrics);

}  // namespace dtg
