#include "dtg/candidate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "dtg/errors.hpp"
#include "dtg/rng.hpp"
#include "dtg/text.hpp"

namespace dtg {

using json = nlohmann::json;

std::string_view Candidate::policy() const {
    struct Visitor {
        std::string_view operator()(const EmptyOrigin&) const { return "empty"; }
        std::string_view operator()(const ProvidedOrigin&) const { return "provided"; }
        std::string_view operator()(const SampledOrigin&) const { return "sampled"; }
        std::string_view operator()(const WordDropOrigin&) const { return "word_drop"; }
        std::string_view operator()(const SimilarityBucketOrigin&) const {
            return "similarity_bucket";
        }
    };
    return std::visit(Visitor{}, provenance);
}

Candidate empty_candidate() { return Candidate{"", EmptyOrigin{}}; }

Candidate provided_candidate(std::string text) {
    return Candidate{std::move(text), ProvidedOrigin{}};
}

Candidate sample_irrelevant(const Dataset& pool, std::string_view exclude_id, std::uint64_t seed) {
    std::vector<const Example*> eligible;
    for (const auto& ex : pool.examples) {
        if (ex.id != exclude_id) eligible.push_back(&ex);
    }
    if (pool.examples.size() < 2 || eligible.empty()) {
        throw DatasetError("candidate pool '" + pool.name + "' needs at least two examples");
    }
    Rng rng(seed);
    const Example* pick = eligible[static_cast<size_t>(rng.below(eligible.size()))];
    return Candidate{pick->references.front(), SampledOrigin{seed, pool.name, pick->id}};
}

Candidate word_drop(std::string_view base, double rate, std::uint64_t seed, std::string base_id) {
    if (!(rate >= 0.0 && rate <= 1.0)) {
        throw std::invalid_argument("word drop rate must lie in [0, 1]");
    }
    Rng rng(seed);
    std::vector<std::string> kept;
    for (auto& tok : text::split_whitespace(base)) {
        // One draw per token regardless of outcome keeps replays aligned.
        if (rng.uniform01() >= rate) kept.push_back(std::move(tok));
    }
    return Candidate{text::join(kept, " "), WordDropOrigin{std::move(base_id), rate, seed}};
}

size_t levenshtein(std::u32string_view a, std::u32string_view b) {
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<size_t> row(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (size_t i = 1; i <= a.size(); ++i) {
        size_t diag = row[0];
        row[0] = i;
        for (size_t j = 1; j <= b.size(); ++j) {
            const size_t up = row[j];
            const size_t sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
            row[j] = std::min({sub, up + 1, row[j - 1] + 1});
            diag = up;
        }
    }
    return row[b.size()];
}

double similarity(std::string_view a, std::string_view b) {
    const auto ua = text::decode_utf8(a);
    const auto ub = text::decode_utf8(b);
    const size_t longest = std::max(ua.size(), ub.size());
    if (longest == 0) return 1.0;
    return 1.0 - static_cast<double>(levenshtein(ua, ub)) / static_cast<double>(longest);
}

Candidate bucket_candidates(const std::vector<std::string>& pool, std::string_view reference,
                            double target_sim, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("bucket tolerance must be positive");
    if (pool.empty()) throw DatasetError("similarity bucket: empty candidate pool");
    size_t best = 0;
    double best_sim = 0.0;
    double best_gap = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < pool.size(); ++i) {
        const double s = similarity(pool[i], reference);
        const double gap = std::fabs(s - target_sim);
        if (gap < best_gap) {
            best = i;
            best_sim = s;
            best_gap = gap;
        }
    }
    if (best_gap > tol) {
        throw DatasetError("similarity bucket: no candidate within " + std::to_string(tol) +
                           " of target " + std::to_string(target_sim) + " (closest " +
                           std::to_string(best_sim) + ")");
    }
    return Candidate{pool[best], SimilarityBucketOrigin{target_sim, best_sim}};
}

std::string manifest_line(const CandidateManifestEntry& entry) {
    json rec;
    rec["example_id"] = entry.example_id;
    rec["policy"] = std::string(entry.candidate.policy());
    const auto& p = entry.candidate.provenance;
    if (const auto* s = std::get_if<SampledOrigin>(&p)) {
        rec["seed"] = s->seed;
        rec["pool_id"] = s->pool_id;
        rec["source_example_id"] = s->source_example_id;
    } else if (const auto* w = std::get_if<WordDropOrigin>(&p)) {
        rec["seed"] = w->seed;
        rec["rate"] = w->rate;
        rec["base_id"] = w->base_id;
    } else if (const auto* b = std::get_if<SimilarityBucketOrigin>(&p)) {
        rec["seed"] = nullptr;
        rec["target_sim"] = b->target_sim;
        rec["achieved_sim"] = b->achieved_sim;
    } else {
        rec["seed"] = nullptr;
    }
    rec["text"] = entry.candidate.text;
    return rec.dump();
}

CandidateManifestEntry parse_manifest_line(std::string_view line) {
    const auto rec = json::parse(line);
    CandidateManifestEntry e;
    e.example_id = rec.at("example_id").get<std::string>();
    e.candidate.text = rec.at("text").get<std::string>();
    const auto policy = rec.at("policy").get<std::string>();
    if (policy == "empty") {
        e.candidate.provenance = EmptyOrigin{};
    } else if (policy == "provided") {
        e.candidate.provenance = ProvidedOrigin{};
    } else if (policy == "sampled") {
        e.candidate.provenance = SampledOrigin{rec.at("seed").get<std::uint64_t>(),
                                               rec.value("pool_id", ""),
                                               rec.value("source_example_id", "")};
    } else if (policy == "word_drop") {
        e.candidate.provenance = WordDropOrigin{rec.value("base_id", ""),
                                                rec.at("rate").get<double>(),
                                                rec.at("seed").get<std::uint64_t>()};
    } else if (policy == "similarity_bucket") {
        e.candidate.provenance = SimilarityBucketOrigin{rec.at("target_sim").get<double>(),
                                                        rec.at("achieved_sim").get<double>()};
    } else {
        throw FormatError("unknown candidate policy in manifest: " + policy);
    }
    return e;
}

}  // namespace dtg
