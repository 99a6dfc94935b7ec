#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "camr/common.hpp"
#include "camr/graph.hpp"

namespace camr {

// ---------------------------------------------------------------------------
// Number normalization: Chinese / mixed numeral expressions -> Arabic string.

namespace detail {

inline std::optional<int> numeral_digit(char32_t cp) {
    if (cp >= U'0' && cp <= U'9') return static_cast<int>(cp - U'0');
    if (cp >= 0xFF10 && cp <= 0xFF19) return static_cast<int>(cp - 0xFF10);  // full-width
    switch (cp) {
        case U'零': case 0x3007: return 0;
        case U'一': return 1;
        case U'二': case U'两': return 2;
        case U'三': return 3;
        case U'四': return 4;
        case U'五': return 5;
        case U'六': return 6;
        case U'七': return 7;
        case U'八': return 8;
        case U'九': return 9;
        default: return std::nullopt;
    }
}

inline std::optional<long long> numeral_magnitude(char32_t cp) {
    switch (cp) {
        case U'十': return 10;
        case U'百': return 100;
        case U'千': return 1000;
        case U'万': return 10000;
        case U'亿': return 100000000;
        default: return std::nullopt;
    }
}

}  // namespace detail

// Converts a numeral word to its Arabic-numeral concept string. Handles the ordinal
// prefix 第, magnitude characters 十/百/千/万/亿, Chinese and Arabic digit
// characters (including full-width), and digit strings with thousands
// separators. Non-numeral words yield nullopt.
inline std::optional<std::string> normalize_number(const std::string& word) {
    std::vector<char32_t> cps;
    try {
        cps = utf8::decode(word);
    } catch (const DataError&) {
        return std::nullopt;
    }
    if (cps.empty()) return std::nullopt;
    if (cps[0] == U'第') cps.erase(cps.begin());
    if (cps.empty()) return std::nullopt;

    // digit run with separators: strip separators, keep a single decimal point
    {
        bool all_plain = true, digit_seen = false;
        int dots = 0;
        std::string out;
        for (char32_t cp : cps) {
            if (cp >= U'0' && cp <= U'9') {
                out += static_cast<char>(cp);
                digit_seen = true;
            } else if (cp >= 0xFF10 && cp <= 0xFF19) {
                out += static_cast<char>('0' + (cp - 0xFF10));
                digit_seen = true;
            } else if (cp == U',' || cp == U'，') {
                continue;
            } else if (cp == U'.') {
                out += '.';
                ++dots;
            } else {
                all_plain = false;
                break;
            }
        }
        if (all_plain && digit_seen && dots <= 1) return out;
    }

    // Chinese numeral body; every character must be a digit or magnitude
    bool digit_seen = false;
    for (char32_t cp : cps) {
        if (detail::numeral_digit(cp)) digit_seen = true;
        else if (!detail::numeral_magnitude(cp)) return std::nullopt;
    }
    if (!digit_seen && cps[0] != U'十') return std::nullopt;

    long long total = 0, section = 0, num = 0;
    for (char32_t cp : cps) {
        if (auto d = detail::numeral_digit(cp)) {
            num = num * 10 + *d;
        } else {
            long long m = *detail::numeral_magnitude(cp);
            if (m == 10000) {
                section = (section + num) * 10000;
                total += section;
                section = 0;
                num = 0;
            } else if (m == 100000000) {
                total = (total + section + num) * 100000000;
                section = 0;
                num = 0;
            } else {
                section += (num == 0 ? 1 : num) * m;
                num = 0;
            }
        }
    }
    return std::to_string(total + section + num);
}

// ---------------------------------------------------------------------------
// Dictionaries for the normalization cascade.

struct FreqEntry {
    std::string label;
    long count = 0;

    bool operator==(const FreqEntry&) const = default;
};

// word -> modal gold concept; word -> special concept; plus an error index
// keyed by per-character phonological and calligraphical codes.
struct NormalizationDictionaries {
    std::map<std::string, FreqEntry> freq_map;
    std::map<std::string, std::string> special_map;
    std::map<std::string, std::string> phon_codes;   // character -> code
    std::map<std::string, std::string> calli_codes;  // character -> code
    std::set<std::string> extra_lexicon;             // correction targets without concepts
    int error_threshold = 1;

    bool error_index_populated() const { return !phon_codes.empty() || !calli_codes.empty(); }

    std::vector<std::string> lexicon() const {
        std::set<std::string> words;
        for (auto& [w, e] : freq_map) words.insert(w);
        for (auto& [w, c] : special_map) words.insert(w);
        for (auto& w : extra_lexicon) words.insert(w);
        return {words.begin(), words.end()};
    }
};

// Modal concept per word over all Normalization alignments in the corpus.
// Ties break to the lexicographically smallest concept label.
inline NormalizationDictionaries build_dictionaries(const std::vector<AmrGraph>& corpus) {
    if (corpus.empty()) throw DataError("build_dictionaries: empty corpus");
    std::map<std::string, std::map<std::string, long>> counts;
    for (const AmrGraph& g : corpus) {
        for (const ConceptNode& c : g.concepts) {
            const auto* n = std::get_if<NormalizationAlign>(&c.alignment);
            if (!n) continue;
            std::string word = n->surface_form;
            if (word.empty())
                if (const Token* t = g.sentence.token_at(n->word)) word = t->surface;
            if (!word.empty()) counts[word][c.label]++;
        }
    }
    NormalizationDictionaries d;
    for (auto& [word, by_concept] : counts) {
        // by_concept is ordered, so the first maximum is the lexicographically smallest label
        FreqEntry best;
        for (auto& [label, n] : by_concept)
            if (n > best.count) best = {label, n};
        d.freq_map[word] = best;
    }
    return d;
}

namespace detail {

inline int edit_distance(const std::vector<char32_t>& a, const std::vector<char32_t>& b) {
    const size_t n = a.size(), m = b.size();
    std::vector<int> prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = static_cast<int>(i);
        for (size_t j = 1; j <= m; ++j) {
            int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

// Word code = per-character codes joined by '|'; characters without a code
// entry stand for themselves.
inline std::string word_code(const std::string& word, const std::map<std::string, std::string>& codes) {
    std::vector<std::string> parts;
    size_t i = 0;
    while (i < word.size()) {
        size_t start = i;
        if (!utf8::decode_at(word, i)) ++i;
        std::string ch = word.substr(start, i - start);
        auto it = codes.find(ch);
        parts.push_back(it == codes.end() ? ch : it->second);
    }
    return str::join(parts, "|");
}

}  // namespace detail

namespace detail {
inline std::optional<std::string> lookup_basic(const std::string& word, const NormalizationDictionaries& d) {
    if (auto it = d.special_map.find(word); it != d.special_map.end()) return it->second;
    if (auto n = normalize_number(word)) return n;
    if (auto it = d.freq_map.find(word); it != d.freq_map.end()) return it->second.label;
    return std::nullopt;
}
}  // namespace detail

// Nearest lexicon entry under the combined code distance (min over the
// phonological and calligraphical edit distances), within the threshold.
// Returns the mapped label of that entry; a bare lexicon entry stands for itself.
inline std::optional<std::string> correct_error(const std::string& word,
                                                const NormalizationDictionaries& d) {
    if (!d.error_index_populated()) return std::nullopt;
    const auto qp = utf8::decode(detail::word_code(word, d.phon_codes));
    const auto qc = utf8::decode(detail::word_code(word, d.calli_codes));
    int best_dist = d.error_threshold + 1;
    std::string best_entry;
    for (const std::string& entry : d.lexicon()) {
        const int dp = detail::edit_distance(qp, utf8::decode(detail::word_code(entry, d.phon_codes)));
        const int dc = detail::edit_distance(qc, utf8::decode(detail::word_code(entry, d.calli_codes)));
        const int dist = std::min(dp, dc);
        if (dist < best_dist) {
            best_dist = dist;
            best_entry = entry;
        }
    }
    if (best_entry.empty()) return std::nullopt;
    if (auto basic = detail::lookup_basic(best_entry, d)) return basic;
    return best_entry;
}

enum class NormSource { Special, Number, Frequency, ErrorCorrected, Unchanged };

struct NormResult {
    std::string label;
    NormSource source = NormSource::Unchanged;

    bool resolved() const { return source != NormSource::Unchanged; }
};

// Cascade: special map, else number normalization, else modal frequency,
// else error correction, else the word itself.
inline NormResult normalize_word(const std::string& word, const NormalizationDictionaries& d) {
    if (auto it = d.special_map.find(word); it != d.special_map.end())
        return {it->second, NormSource::Special};
    if (auto n = normalize_number(word)) return {*n, NormSource::Number};
    if (auto it = d.freq_map.find(word); it != d.freq_map.end())
        return {it->second.label, NormSource::Frequency};
    if (auto c = correct_error(word, d)) return {*c, NormSource::ErrorCorrected};
    return {word, NormSource::Unchanged};
}

// ---------------------------------------------------------------------------
// Dictionary files. All TSV, UTF-8.

namespace tsvio {

inline std::vector<std::vector<std::string>> read_tsv(const std::string& path, size_t min_cols) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = str::trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto cols = str::split(t, '\t');
        if (cols.size() < min_cols)
            throw DataError(path + ":" + std::to_string(lineno) + ": expected at least " +
                            std::to_string(min_cols) + " tab-separated columns");
        rows.push_back(std::move(cols));
    }
    return rows;
}

}  // namespace tsvio

inline void load_special_map(NormalizationDictionaries& d, const std::string& path) {
    for (auto& row : tsvio::read_tsv(path, 2)) d.special_map[row[0]] = row[1];
}

inline void load_freq_map(NormalizationDictionaries& d, const std::string& path) {
    for (auto& row : tsvio::read_tsv(path, 3)) {
        long n = 0;
        try {
            n = std::stol(row[2]);
        } catch (...) {
            throw DataError(path + ": bad count '" + row[2] + "'");
        }
        if (n < 1) throw DataError(path + ": counts must be >= 1");
        d.freq_map[row[0]] = {row[1], n};
    }
}

inline void load_codes(std::map<std::string, std::string>& codes, const std::string& path) {
    for (auto& row : tsvio::read_tsv(path, 2)) codes[row[0]] = row[1];
}

inline void load_error_lexicon(NormalizationDictionaries& d, const std::string& path) {
    for (auto& row : tsvio::read_tsv(path, 1)) d.extra_lexicon.insert(row[0]);
}

inline void write_freq_map(const NormalizationDictionaries& d, std::ostream& os) {
    for (auto& [word, e] : d.freq_map) os << word << '\t' << e.label << '\t' << e.count << '\n';
}

}  // namespace camr
