#include "dtg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include "dtg/errors.hpp"
#include "dtg/text.hpp"

namespace dtg {

using json = nlohmann::json;

namespace {

using Counts = std::unordered_map<std::string, long long>;

void check_shapes(size_t hyps, const ReferenceSets& refs, std::string_view metric) {
    if (hyps != refs.size())
        throw MetricInputError(std::string(metric) + ": " + std::to_string(hyps) +
                               " hypotheses but " + std::to_string(refs.size()) +
                               " reference sets");
    for (size_t i = 0; i < refs.size(); ++i) {
        if (refs[i].empty())
            throw MetricInputError(std::string(metric) + ": segment " + std::to_string(i) +
                                   " has no reference");
    }
}

std::string rstrip(std::string_view s) {
    std::u32string u = text::decode_utf8(s);
    size_t end = u.size();
    while (end > 0 && text::is_space(u[end - 1])) --end;
    // Only whitespace is removed, so the byte prefix is unchanged.
    size_t bytes = text::encode_utf8(std::u32string_view(u).substr(0, end)).size();
    return std::string(s.substr(0, std::min(bytes, s.size())));
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
    return s;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool is_13a_symbol(char c) {
    auto in = [c](char lo, char hi) { return c >= lo && c <= hi; };
    return in('{', '~') || in('[', '`') || in(' ', '&') || in('(', '+') || in(':', '@') || c == '/';
}

std::string ngram_key(const std::vector<std::string>& toks, size_t begin, size_t n) {
    std::string key = toks[begin];
    for (size_t k = 1; k < n; ++k) {
        key += ' ';
        key += toks[begin + k];
    }
    return key;
}

/// All n-grams of order 1..max_order in one map; keys never collide across
/// orders because they differ in the number of separators.
Counts word_ngrams(const std::vector<std::string>& toks, int max_order) {
    Counts c;
    for (int n = 1; n <= max_order; ++n) {
        for (size_t i = 0; i + n <= toks.size(); ++i) ++c[ngram_key(toks, i, n)];
    }
    return c;
}

Counts word_ngrams_of_order(const std::vector<std::string>& toks, size_t n) {
    Counts c;
    for (size_t i = 0; i + n <= toks.size(); ++i) ++c[ngram_key(toks, i, n)];
    return c;
}

double my_log(double x) { return x == 0.0 ? -9999999999.0 : std::log(x); }

// ---------------------------------------------------------------- TER

constexpr int kMaxShiftSize = 10;
constexpr int kMaxShiftDist = 50;
constexpr int kBeamWidth = 25;
constexpr int kMaxShiftCandidates = 1000;
constexpr long long kInf = 10000000000000000LL;

enum Op : char { kIns = 'i', kDel = 'd', kNop = ' ', kSub = 's', kUndef = 'x' };

struct Cell {
    long long cost = kInf;
    char op = kUndef;
};

using Words = std::vector<int>;

/// Beam-restricted word edit distance; returns the cost and the trace of ops
/// for rewriting hyp into ref.
std::pair<long long, std::string> beam_edit_distance(const Words& hyp, const Words& ref) {
    const size_t nh = hyp.size();
    const size_t nr = ref.size();
    std::vector<std::vector<Cell>> dist(nh + 1, std::vector<Cell>(nr + 1));
    for (size_t j = 0; j <= nr; ++j) dist[0][j] = {static_cast<long long>(j), kIns};

    const double ratio = nh > 0 ? static_cast<double>(nr) / static_cast<double>(nh) : 1.0;
    long long beam = kBeamWidth;
    if (kBeamWidth < ratio / 2) beam = static_cast<long long>(std::ceil(ratio / 2 + kBeamWidth));

    for (size_t i = 1; i <= nh; ++i) {
        long long diag = static_cast<long long>(std::floor(static_cast<double>(i) * ratio));
        long long min_j = std::max<long long>(0, diag - beam);
        long long max_j = std::min<long long>(static_cast<long long>(nr) + 1, diag + beam);
        if (i == nh) max_j = static_cast<long long>(nr) + 1;
        for (long long j = min_j; j < max_j; ++j) {
            Cell& cell = dist[i][j];
            if (j == 0) {
                cell = {dist[i - 1][0].cost + 1, kDel};
                continue;
            }
            bool same = hyp[i - 1] == ref[j - 1];
            const std::pair<long long, char> ops[3] = {
                {dist[i - 1][j - 1].cost + (same ? 0 : 1), same ? kNop : kSub},
                {dist[i - 1][j].cost + 1, kDel},
                {dist[i][j - 1].cost + 1, kIns},
            };
            for (const auto& [cost, op] : ops) {
                if (cell.cost > cost) cell = {cost, op};
            }
        }
    }

    std::string trace;
    size_t i = nh, j = nr;
    while (i > 0 || j > 0) {
        char op = dist[i][j].op;
        trace.push_back(op);
        if (op == kSub || op == kNop) {
            --i;
            --j;
        } else if (op == kIns) {
            --j;
        } else if (op == kDel) {
            --i;
        } else {
            throw std::logic_error("ter: beam search left an undefined cell on the trace");
        }
    }
    std::reverse(trace.begin(), trace.end());
    return {dist[nh][nr].cost, trace};
}

struct Alignment {
    std::vector<long long> align;  // reference position -> hypothesis position
    std::vector<int> ref_err;
    std::vector<int> hyp_err;
};

/// Alignment from the trace of rewriting ref into hyp (the flipped trace).
Alignment trace_to_alignment(const std::string& inv_trace, size_t nr) {
    Alignment a;
    a.align.assign(nr, -1);
    long long pos_hyp = -1, pos_ref = -1;
    for (char raw : inv_trace) {
        char op = raw == kIns ? static_cast<char>(kDel) : raw == kDel ? static_cast<char>(kIns) : raw;
        switch (op) {
            case kNop:
            case kSub:
                ++pos_hyp;
                ++pos_ref;
                a.align[pos_ref] = pos_hyp;
                a.hyp_err.push_back(op == kSub);
                a.ref_err.push_back(op == kSub);
                break;
            case kIns:
                ++pos_hyp;
                a.hyp_err.push_back(1);
                break;
            case kDel:
                ++pos_ref;
                a.align[pos_ref] = pos_hyp;
                a.ref_err.push_back(1);
                break;
            default: throw std::logic_error("ter: unknown edit operation");
        }
    }
    return a;
}

Words perform_shift(const Words& w, size_t start, size_t length, size_t target) {
    Words out;
    out.reserve(w.size());
    auto append = [&](size_t lo, size_t hi) {
        lo = std::min(lo, w.size());
        hi = std::min(hi, w.size());
        if (lo < hi) out.insert(out.end(), w.begin() + lo, w.begin() + hi);
    };
    if (target < start) {
        append(0, target);
        append(start, start + length);
        append(target, start);
        append(start + length, w.size());
    } else if (target > start + length) {
        append(0, start);
        append(start + length, target);
        append(start, start + length);
        append(target, w.size());
    } else {
        append(0, start);
        append(start + length, length + target);
        append(start, start + length);
        append(length + target, w.size());
    }
    return out;
}

int sum_range(const std::vector<int>& v, size_t begin, size_t length) {
    int s = 0;
    for (size_t k = begin; k < std::min(v.size(), begin + length); ++k) s += v[k];
    return s;
}

struct ShiftResult {
    long long gain = 0;
    Words words;
};

ShiftResult best_shift(const Words& h, const Words& r, int& checked) {
    auto [pre_score, trace] = beam_edit_distance(h, r);
    Alignment al = trace_to_alignment(trace, r.size());

    bool have_best = false;
    long long best_gain = 0, best_len = 0, best_neg_start = 0, best_neg_idx = 0;
    Words best_words;

    const long long nh = static_cast<long long>(h.size());
    const long long nr = static_cast<long long>(r.size());
    for (long long sh = 0; sh < nh; ++sh) {
        for (long long sr = 0; sr < nr; ++sr) {
            if (std::llabs(sr - sh) > kMaxShiftDist) continue;
            long long length = 0;
            while (h[sh + length] == r[sr + length] && length < kMaxShiftSize) {
                ++length;

                if (sum_range(al.hyp_err, sh, length) != 0 &&
                    sum_range(al.ref_err, sr, length) != 0 &&
                    !(sh <= al.align[sr] && al.align[sr] < sh + length)) {
                    long long prev_idx = -1;
                    for (long long offset = -1; offset < length; ++offset) {
                        long long idx;
                        if (sr + offset == -1) {
                            idx = 0;
                        } else if (sr + offset < nr) {
                            idx = al.align[sr + offset] + 1;
                        } else {
                            break;
                        }
                        if (idx == prev_idx) continue;
                        prev_idx = idx;

                        Words shifted = perform_shift(h, sh, length, idx);
                        long long gain = pre_score - beam_edit_distance(shifted, r).first;
                        ++checked;
                        auto cand = std::make_tuple(gain, length, -sh, -idx);
                        auto best = std::make_tuple(best_gain, best_len, best_neg_start,
                                                    best_neg_idx);
                        if (!have_best || cand > best) {
                            have_best = true;
                            best_gain = gain;
                            best_len = length;
                            best_neg_start = -sh;
                            best_neg_idx = -idx;
                            best_words = std::move(shifted);
                        }
                    }
                    if (checked >= kMaxShiftCandidates) goto done;
                }

                if (nh == sh + length || nr == sr + length) break;
            }
        }
    }
done:
    if (!have_best) return {0, h};
    return {best_gain, std::move(best_words)};
}

std::pair<long long, long long> translation_edit_rate(const Words& hyp, const Words& ref) {
    if (ref.empty()) return {static_cast<long long>(hyp.size()), 0};
    Words input = hyp;
    long long shifts = 0;
    int checked = 0;
    while (true) {
        ShiftResult s = best_shift(input, ref, checked);
        if (checked >= kMaxShiftCandidates) break;
        if (s.gain <= 0) break;
        ++shifts;
        input = std::move(s.words);
    }
    return {shifts + beam_edit_distance(input, ref).first, static_cast<long long>(ref.size())};
}

std::vector<std::string> ter_tokens(std::string_view s) {
    return text::split_whitespace(text::to_lower(rstrip(s)));
}

// ---------------------------------------------------------------- chrF

constexpr int kCharOrder = 6;
constexpr double kBeta = 2.0;

std::vector<Counts> char_ngrams(std::string_view line) {
    std::u32string u;
    for (const auto& w : text::split_whitespace(text::decode_utf8(line))) u += w;
    std::vector<Counts> out(kCharOrder);
    for (int n = 1; n <= kCharOrder; ++n) {
        for (size_t i = 0; i + n <= u.size(); ++i)
            ++out[n - 1][text::encode_utf8(std::u32string_view(u).substr(i, n))];
    }
    return out;
}

double chrf_from_stats(const std::vector<double>& st) {
    const double factor = kBeta * kBeta;
    double avg_prec = 0, avg_rec = 0;
    int eff = 0;
    for (int i = 0; i < kCharOrder; ++i) {
        double n_hyp = st[3 * i], n_ref = st[3 * i + 1], n_match = st[3 * i + 2];
        if (n_hyp > 0 && n_ref > 0) {
            avg_prec += n_match / n_hyp;
            avg_rec += n_match / n_ref;
            ++eff;
        }
    }
    if (eff == 0) return 0.0;
    avg_prec /= eff;
    avg_rec /= eff;
    if (avg_prec + avg_rec == 0) return 0.0;
    return 100.0 * (1 + factor) * avg_prec * avg_rec / (factor * avg_prec + avg_rec);
}

// ---------------------------------------------------------------- Rouge

double f1(double p, double r) { return p + r == 0 ? 0.0 : 2 * p * r / (p + r); }

double rouge_n_f(const std::vector<std::string>& h, const std::vector<std::string>& r, size_t n) {
    Counts hc = word_ngrams_of_order(h, n);
    Counts rc = word_ngrams_of_order(r, n);
    long long hn = 0, rn = 0, m = 0;
    for (const auto& [g, c] : hc) {
        hn += c;
        auto it = rc.find(g);
        if (it != rc.end()) m += std::min(c, it->second);
    }
    for (const auto& [g, c] : rc) rn += c;
    if (hn == 0 || rn == 0) return 0.0;
    return f1(static_cast<double>(m) / hn, static_cast<double>(m) / rn);
}

size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (size_t i = 1; i <= a.size(); ++i) {
        for (size_t j = 1; j <= b.size(); ++j)
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double rouge_l_f(const std::vector<std::string>& h, const std::vector<std::string>& r) {
    if (h.empty() || r.empty()) return 0.0;
    double m = static_cast<double>(lcs_length(h, r));
    return f1(m / h.size(), m / r.size());
}

// ---------------------------------------------------------------- SARI

double ratio(double num, double den, bool vacuous) {
    if (den == 0) return vacuous ? 1.0 : 0.0;
    return num / den;
}

struct SariParts {
    double keep = 0, del = 0, add = 0;
};

long long get(const Counts& c, const std::string& k) {
    auto it = c.find(k);
    return it == c.end() ? 0 : it->second;
}

SariParts sari_ngram(const std::vector<std::string>& s, const std::vector<std::string>& c,
                     const std::vector<std::vector<std::string>>& rs, size_t n) {
    const long long nr = static_cast<long long>(rs.size());
    // Ordered maps keep the floating-point summation order fixed.
    std::map<std::string, long long> S, C, R;
    for (const auto& [g, k] : word_ngrams_of_order(s, n)) S[g] = k * nr;
    for (const auto& [g, k] : word_ngrams_of_order(c, n)) C[g] = k * nr;
    for (const auto& r : rs)
        for (const auto& [g, k] : word_ngrams_of_order(r, n)) R[g] += k;
    auto at = [](const std::map<std::string, long long>& m, const std::string& k) -> long long {
        auto it = m.find(k);
        return it == m.end() ? 0 : it->second;
    };

    SariParts out;

    // keep
    double keep_prec_sum = 0;
    long long keep_sys_n = 0, keep_good_total = 0, keep_all_total = 0;
    for (const auto& [g, sv] : S) {
        long long cv = at(C, g), rv = at(R, g);
        if (cv > 0) {
            long long sys = std::min(sv, cv);
            long long good = std::min(sys, rv);
            keep_prec_sum += static_cast<double>(good) / sys;
            keep_good_total += good;
            ++keep_sys_n;
        }
        keep_all_total += std::min(sv, rv);
    }
    double p = ratio(keep_prec_sum, keep_sys_n, keep_all_total == 0);
    double r = ratio(keep_good_total, keep_all_total, true);
    out.keep = f1(p, r);

    // delete, precision only
    double del_prec_sum = 0;
    long long del_sys_n = 0;
    bool del_all_empty = true;
    for (const auto& [g, sv] : S) {
        long long cv = at(C, g), rv = at(R, g);
        long long sys = sv - cv;
        if (sys > 0) {
            long long good = std::max<long long>(0, sys - rv);
            del_prec_sum += static_cast<double>(good) / sys;
            ++del_sys_n;
        }
        if (sv - rv > 0) del_all_empty = false;
    }
    out.del = ratio(del_prec_sum, del_sys_n, del_all_empty);

    // add, set based
    long long add_sys = 0, add_good = 0, add_all = 0;
    for (const auto& [g, cv] : C) {
        if (S.count(g)) continue;
        ++add_sys;
        if (R.count(g)) ++add_good;
    }
    for (const auto& [g, rv] : R)
        if (!S.count(g)) ++add_all;
    p = ratio(add_good, add_sys, add_all == 0);
    r = ratio(add_good, add_all, true);
    out.add = f1(p, r);
    return out;
}

}  // namespace

// ---------------------------------------------------------------- public

std::vector<std::string> tokenize_13a(std::string_view input) {
    std::string line = rstrip(input);
    line = replace_all(std::move(line), "<skipped>", "");
    line = replace_all(std::move(line), "-\n", "");
    line = replace_all(std::move(line), "\n", " ");
    if (line.find('&') != std::string::npos) {
        line = replace_all(std::move(line), "&quot;", "\"");
        line = replace_all(std::move(line), "&amp;", "&");
        line = replace_all(std::move(line), "&lt;", "<");
        line = replace_all(std::move(line), "&gt;", ">");
    }
    std::string s = " " + line + " ";

    // Each pass mirrors a left-to-right, non-overlapping regex substitution.
    std::string t;
    t.reserve(s.size() * 2);
    for (char c : s) {
        if (is_13a_symbol(c)) {
            t += ' ';
            t += c;
            t += ' ';
        } else {
            t += c;
        }
    }

    // ([^0-9])([.,]) -> "\1 \2 "
    s.clear();
    for (size_t i = 0; i < t.size();) {
        if (i + 1 < t.size() && !is_digit(t[i]) && (t[i + 1] == '.' || t[i + 1] == ',')) {
            s += t[i];
            s += ' ';
            s += t[i + 1];
            s += ' ';
            i += 2;
        } else {
            s += t[i++];
        }
    }

    // ([.,])([^0-9]) -> " \1 \2"
    t.clear();
    for (size_t i = 0; i < s.size();) {
        if (i + 1 < s.size() && (s[i] == '.' || s[i] == ',') && !is_digit(s[i + 1])) {
            t += ' ';
            t += s[i];
            t += ' ';
            t += s[i + 1];
            i += 2;
        } else {
            t += s[i++];
        }
    }

    // ([0-9])(-) -> "\1 \2 "
    s.clear();
    for (size_t i = 0; i < t.size();) {
        if (i + 1 < t.size() && is_digit(t[i]) && t[i + 1] == '-') {
            s += t[i];
            s += " - ";
            i += 2;
        } else {
            s += t[i++];
        }
    }
    return text::split_whitespace(s);
}

double bleu(const std::vector<std::string>& hyps, const ReferenceSets& refs, int max_order) {
    check_shapes(hyps.size(), refs, "bleu");
    if (max_order < 1) throw MetricInputError("bleu: max_order must be positive");
    std::vector<long long> correct(max_order, 0), total(max_order, 0);
    long long sys_len = 0, ref_len = 0;

    for (size_t s = 0; s < hyps.size(); ++s) {
        Counts ref_counts;
        std::vector<long long> ref_lens;
        for (const auto& r : refs[s]) {
            auto toks = tokenize_13a(r);
            ref_lens.push_back(static_cast<long long>(toks.size()));
            for (const auto& [g, c] : word_ngrams(toks, max_order)) {
                auto& slot = ref_counts[g];
                slot = std::max(slot, c);
            }
        }
        auto htoks = tokenize_13a(hyps[s]);
        long long hlen = static_cast<long long>(htoks.size());
        long long closest_diff = -1, closest = -1;
        for (long long rl : ref_lens) {
            long long diff = std::llabs(hlen - rl);
            if (closest_diff == -1 || diff < closest_diff) {
                closest_diff = diff;
                closest = rl;
            } else if (diff == closest_diff && rl < closest) {
                closest = rl;
            }
        }
        sys_len += hlen;
        ref_len += closest;
        for (const auto& [g, c] : word_ngrams(htoks, max_order)) {
            int order = static_cast<int>(std::count(g.begin(), g.end(), ' '));
            total[order] += c;
            auto it = ref_counts.find(g);
            if (it != ref_counts.end()) correct[order] += std::min(c, it->second);
        }
    }

    double bp = 1.0;
    if (sys_len < ref_len)
        bp = sys_len > 0 ? std::exp(1.0 - static_cast<double>(ref_len) / sys_len) : 0.0;
    if (std::all_of(correct.begin(), correct.end(), [](long long c) { return c == 0; }))
        return 0.0;

    // Precisions as fractions; the 100 factor is applied once at the end so a
    // perfect match yields exactly 100.
    std::vector<double> prec(max_order, 0.0);
    double smooth = 1.0;
    for (int n = 0; n < max_order; ++n) {
        if (total[n] == 0) break;
        if (correct[n] == 0) {
            smooth *= 2;
            prec[n] = 1.0 / (smooth * total[n]);
        } else {
            prec[n] = static_cast<double>(correct[n]) / total[n];
        }
    }
    double log_sum = 0;
    for (double p : prec) log_sum += my_log(p);
    return bp * std::exp(log_sum / max_order) * 100.0;
}

double chrf(const std::vector<std::string>& hyps, const ReferenceSets& refs) {
    check_shapes(hyps.size(), refs, "chrf");
    std::vector<double> corpus(3 * kCharOrder, 0.0);
    for (size_t s = 0; s < hyps.size(); ++s) {
        auto h = char_ngrams(hyps[s]);
        std::vector<double> best;
        double best_f = -1.0;
        for (const auto& ref : refs[s]) {
            auto r = char_ngrams(ref);
            std::vector<double> st;
            for (int n = 0; n < kCharOrder; ++n) {
                long long hyp_count = 0, match = 0, ref_count = 0;
                for (const auto& [g, c] : h[n]) {
                    hyp_count += c;
                    match += std::min(c, get(r[n], g));
                }
                for (const auto& [g, c] : r[n]) ref_count += c;
                st.push_back(r[n].empty() ? 0.0 : static_cast<double>(hyp_count));
                st.push_back(static_cast<double>(ref_count));
                st.push_back(static_cast<double>(match));
            }
            double f = chrf_from_stats(st);
            if (f > best_f) {
                best_f = f;
                best = std::move(st);
            }
        }
        for (size_t k = 0; k < corpus.size(); ++k) corpus[k] += best[k];
    }
    return chrf_from_stats(corpus);
}

TerStats ter_segment(std::string_view hyp, const std::vector<std::string>& refs) {
    std::unordered_map<std::string, int> vocab;
    auto intern = [&](const std::vector<std::string>& toks) {
        Words w;
        for (const auto& t : toks) w.push_back(vocab.emplace(t, static_cast<int>(vocab.size())).first->second);
        return w;
    };
    Words h = intern(ter_tokens(hyp));
    long long best = std::numeric_limits<long long>::max();
    double ref_total = 0;
    for (const auto& r : refs) {
        auto [edits, len] = translation_edit_rate(h, intern(ter_tokens(r)));
        ref_total += static_cast<double>(len);
        best = std::min(best, edits);
    }
    TerStats st;
    st.edits = static_cast<double>(best);
    st.ref_length = refs.empty() ? 0.0 : ref_total / static_cast<double>(refs.size());
    return st;
}

double ter(const std::vector<std::string>& hyps, const ReferenceSets& refs) {
    check_shapes(hyps.size(), refs, "ter");
    double edits = 0, len = 0;
    for (size_t s = 0; s < hyps.size(); ++s) {
        TerStats st = ter_segment(hyps[s], refs[s]);
        edits += st.edits;
        len += st.ref_length;
    }
    return 100.0 * (len > 0 ? edits / len : 1.0);
}

std::vector<std::string> rouge_tokenize(std::string_view in) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : in) {
        char c = (ch >= 'A' && ch <= 'Z') ? static_cast<char>(ch - 'A' + 'a') : ch;
        if ((c >= 'a' && c <= 'z') || is_digit(c)) {
            cur += c;
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

RougeScores rouge(const std::vector<std::string>& hyps, const ReferenceSets& refs) {
    check_shapes(hyps.size(), refs, "rouge");
    RougeScores sum;
    for (size_t s = 0; s < hyps.size(); ++s) {
        auto h = rouge_tokenize(hyps[s]);
        double r1 = 0, r2 = 0, rl = 0;
        for (const auto& ref : refs[s]) {
            auto r = rouge_tokenize(ref);
            r1 = std::max(r1, rouge_n_f(h, r, 1));
            r2 = std::max(r2, rouge_n_f(h, r, 2));
            rl = std::max(rl, rouge_l_f(h, r));
        }
        sum.rouge1 += r1;
        sum.rouge2 += r2;
        sum.rougeL += rl;
    }
    double n = hyps.empty() ? 1.0 : static_cast<double>(hyps.size());
    return {100.0 * sum.rouge1 / n, 100.0 * sum.rouge2 / n, 100.0 * sum.rougeL / n};
}

double sari_sentence(std::string_view src, std::string_view hyp,
                     const std::vector<std::string>& refs) {
    auto s = text::split_whitespace(src);
    auto c = text::split_whitespace(hyp);
    std::vector<std::vector<std::string>> rs;
    for (const auto& r : refs) rs.push_back(text::split_whitespace(r));
    double keep = 0, del = 0, add = 0;
    for (size_t n = 1; n <= 4; ++n) {
        SariParts p = sari_ngram(s, c, rs, n);
        keep += p.keep;
        del += p.del;
        add += p.add;
    }
    return (keep / 4 + del / 4 + add / 4) / 3;
}

double sari(const std::vector<std::string>& srcs, const std::vector<std::string>& hyps,
            const ReferenceSets& refs) {
    check_shapes(hyps.size(), refs, "sari");
    if (srcs.size() != hyps.size())
        throw MetricInputError("sari: " + std::to_string(srcs.size()) + " sources but " +
                               std::to_string(hyps.size()) + " hypotheses");
    if (hyps.empty()) return 0.0;
    double sum = 0;
    for (size_t i = 0; i < hyps.size(); ++i) sum += sari_sentence(srcs[i], hyps[i], refs[i]);
    return 100.0 * sum / static_cast<double>(hyps.size());
}

const std::vector<std::string>& MetricReport::keys() {
    static const std::vector<std::string> k{"bleu",   "bleu3",  "chrf",   "ter",
                                            "rouge1", "rouge2", "rougeL", "sari"};
    return k;
}

namespace {
template <typename R>
auto field(R& r, std::string_view key) -> decltype(&r.bleu) {
    if (key == "bleu") return &r.bleu;
    if (key == "bleu3") return &r.bleu3;
    if (key == "chrf") return &r.chrf;
    if (key == "ter") return &r.ter;
    if (key == "rouge1") return &r.rouge1;
    if (key == "rouge2") return &r.rouge2;
    if (key == "rougeL") return &r.rougeL;
    if (key == "sari") return &r.sari;
    throw MetricInputError("unknown metric: " + std::string(key));
}
}  // namespace

std::optional<double> MetricReport::get(std::string_view key) const { return *field(*this, key); }

void MetricReport::set(std::string_view key, double value) { *field(*this, key) = value; }

json MetricReport::to_json() const {
    json j = json::object();
    for (const auto& k : keys()) {
        if (auto v = get(k)) j[k] = *v;
    }
    j["n"] = n;
    return j;
}

MetricReport MetricReport::from_json(const json& j) {
    MetricReport r;
    for (const auto& k : keys()) {
        if (j.contains(k) && j[k].is_number()) r.set(k, j[k].get<double>());
    }
    r.n = j.value("n", size_t{0});
    return r;
}

MetricReport dialogsum_average(const std::vector<MetricReport>& reports) {
    if (reports.empty()) throw MetricInputError("dialogsum_average: no reports");
    MetricReport out;
    out.n = reports.front().n;
    for (const auto& r : reports) {
        if (r.n != out.n)
            throw MetricInputError("dialogsum_average: reports cover different segment counts");
    }
    for (const auto& k : MetricReport::keys()) {
        double sum = 0;
        bool all = true;
        for (const auto& r : reports) {
            auto v = r.get(k);
            if (!v) {
                all = false;
                break;
            }
            sum += *v;
        }
        if (all) out.set(k, sum / static_cast<double>(reports.size()));
    }
    return out;
}

MetricReport score_corpus(const std::vector<std::string>& srcs,
                          const std::vector<std::string>& hyps, const ReferenceSets& refs,
                          const std::vector<std::string>& metrics) {
    MetricReport r;
    r.n = hyps.size();
    for (const auto& m : metrics) {
        if (m == "bleu") {
            r.bleu = bleu(hyps, refs, 4);
        } else if (m == "bleu3") {
            r.bleu3 = bleu(hyps, refs, 3);
        } else if (m == "chrf") {
            r.chrf = chrf(hyps, refs);
        } else if (m == "ter") {
            r.ter = ter(hyps, refs);
        } else if (m == "rouge" || m == "rouge1" || m == "rouge2" || m == "rougeL") {
            if (!r.rouge1) {
                RougeScores rs = rouge(hyps, refs);
                r.rouge1 = rs.rouge1;
                r.rouge2 = rs.rouge2;
                r.rougeL = rs.rougeL;
            }
        } else if (m == "sari") {
            r.sari = sari(srcs, hyps, refs);
        } else {
            throw MetricInputError("unknown metric: " + m);
        }
    }
    return r;
}

}  // namespace dtg
