#include "dtg/judge.hpp"

#include <algorithm>

#include "dtg/errors.hpp"
#include "dtg/parallel.hpp"
#include "dtg/prompt.hpp"
#include "dtg/rng.hpp"

namespace dtg {

using json = nlohmann::json;

namespace {

PairwiseJudgment ask(std::string_view src, std::string_view c1, std::string_view c2,
                     Gateway& gateway, const JudgeSettings& s) {
    LLMRequest req = s.request_template;
    req.prompt = render_judge(src, c1, c2, s.src_lang).text;
    return parse_judgment(gateway.complete(req).text);
}

/// Verdict for the (first, second) order mapped onto sides, where `first_is_a`
/// says which side was shown as Candidate1.
Preference to_side(Verdict v, bool first_is_a) {
    switch (v) {
        case Verdict::C1: return first_is_a ? Preference::A : Preference::B;
        case Verdict::C2: return first_is_a ? Preference::B : Preference::A;
        case Verdict::Tie: return Preference::Tie;
        case Verdict::Unparseable: return Preference::Unparseable;
    }
    return Preference::Unparseable;
}

}  // namespace

std::string_view to_string(Preference p) {
    switch (p) {
        case Preference::A: return "A";
        case Preference::B: return "B";
        case Preference::Tie: return "tie";
        case Preference::Unparseable: return "unparseable";
    }
    return "unparseable";
}

PairOutcome judge_pair(std::string_view src, std::string_view cand_a, std::string_view cand_b,
                       Gateway& gateway, const JudgeSettings& settings) {
    PairOutcome out;
    out.judgments.push_back(ask(src, cand_a, cand_b, gateway, settings));
    Preference first = to_side(out.judgments[0].verdict, true);
    if (!settings.swap) {
        out.preference = first;
        return out;
    }
    out.judgments.push_back(ask(src, cand_b, cand_a, gateway, settings));
    Preference second = to_side(out.judgments[1].verdict, false);
    if (first == Preference::Unparseable || second == Preference::Unparseable)
        out.preference = Preference::Unparseable;
    else if (first == second)
        out.preference = first;
    else
        out.preference = Preference::Tie;
    return out;
}

std::optional<double> JudgmentTally::rate_a() const {
    if (n == 0) return std::nullopt;
    return static_cast<double>(wins_a) / static_cast<double>(n);
}

std::optional<double> JudgmentTally::rate_b() const {
    if (n == 0) return std::nullopt;
    return static_cast<double>(wins_b) / static_cast<double>(n);
}

std::optional<double> JudgmentTally::rate_tie() const {
    if (n == 0) return std::nullopt;
    return static_cast<double>(ties) / static_cast<double>(n);
}

json JudgmentTally::to_json() const {
    auto opt = [](std::optional<double> v) { return v ? json(*v) : json(nullptr); };
    return {{"wins_a", wins_a},         {"wins_b", wins_b},         {"ties", ties},
            {"unparseable", unparseable}, {"n", n},                 {"rate_a", opt(rate_a())},
            {"rate_b", opt(rate_b())},  {"rate_tie", opt(rate_tie())}};
}

JudgmentTally tally(const std::vector<Preference>& prefs) {
    JudgmentTally t;
    for (Preference p : prefs) {
        switch (p) {
            case Preference::A: ++t.wins_a; break;
            case Preference::B: ++t.wins_b; break;
            case Preference::Tie: ++t.ties; break;
            case Preference::Unparseable: ++t.unparseable; break;
        }
    }
    t.n = prefs.size();
    return t;
}

std::vector<size_t> sample_indices(size_t total, size_t n, std::uint64_t seed) {
    std::vector<size_t> idx(total);
    for (size_t i = 0; i < total; ++i) idx[i] = i;
    if (n >= total) return idx;
    Rng rng(seed);
    for (size_t i = 0; i < n; ++i) {
        size_t j = i + static_cast<size_t>(rng.below(total - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    return idx;
}

JudgeRun judge_corpus(const std::vector<std::string>& srcs, const std::vector<std::string>& hyps_a,
                      const std::vector<std::string>& hyps_b, const std::vector<size_t>& indices,
                      Gateway& gateway, const JudgeSettings& settings, size_t workers) {
    if (hyps_a.size() != hyps_b.size() || srcs.size() != hyps_a.size())
        throw DatasetError("judge: sources, system A and system B differ in length (" +
                           std::to_string(srcs.size()) + ", " + std::to_string(hyps_a.size()) +
                           ", " + std::to_string(hyps_b.size()) + ")");
    for (size_t i : indices) {
        if (i >= srcs.size()) throw DatasetError("judge: sample index out of range");
    }
    JudgeRun run;
    run.items.resize(indices.size());
    parallel_for(indices.size(), workers, [&](size_t k) {
        size_t i = indices[k];
        run.items[k].index = i;
        if (hyps_a[i].empty() && hyps_b[i].empty()) {
            run.items[k].outcome.preference = Preference::Tie;
            return;
        }
        run.items[k].outcome = judge_pair(srcs[i], hyps_a[i], hyps_b[i], gateway, settings);
    });
    std::vector<Preference> prefs;
    for (const auto& item : run.items) prefs.push_back(item.outcome.preference);
    run.tally = tally(prefs);
    return run;
}

}  // namespace dtg
