#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "camr/common.hpp"

namespace camr {

// One word of the input sentence. Indices are 1-based and rendered "x1", "x2", ...
// Functional words carry no concept of their own; they are eligible as
// relation-alignment markers.
struct Token {
    int index = 0;
    std::string surface;
    bool is_functional = false;

    bool operator==(const Token&) const = default;
};

struct Sentence {
    std::string id;
    std::vector<Token> tokens;

    const Token* token_at(int index) const {
        if (index < 1 || index > static_cast<int>(tokens.size())) return nullptr;
        return &tokens[static_cast<size_t>(index - 1)];
    }

    std::vector<int> functional_indices() const {
        std::vector<int> out;
        for (const Token& t : tokens)
            if (t.is_functional) out.push_back(t.index);
        return out;
    }

    bool operator==(const Sentence&) const = default;
};

// ---------------------------------------------------------------------------
// Concept-to-word alignment. Six variants; exactly one per concept.

struct DirectAlign {
    int word = 0;
    bool operator==(const DirectAlign&) const = default;
};

// Concept is a transformed form of the word (sense suffix, Arabic numeral,
// special token, spelling correction). surface_form keeps the raw word.
struct NormalizationAlign {
    int word = 0;
    std::string surface_form;
    bool operator==(const NormalizationAlign&) const = default;
};

struct ContinuousMultiwordAlign {
    std::vector<int> words;  // strictly consecutive, length >= 2
    bool operator==(const ContinuousMultiwordAlign&) const = default;
};

struct DiscontinuousMultiwordAlign {
    std::vector<int> words;  // strictly increasing with at least one gap
    bool operator==(const DiscontinuousMultiwordAlign&) const = default;
};

struct SplitAlign {
    int word = 0;
    int part = 1;  // ordinal of this concept among the word's concepts
    bool operator==(const SplitAlign&) const = default;
};

struct NullAlign {
    std::optional<int> trigger_word;  // annotation; filled by the tag encoder
    bool operator==(const NullAlign&) const = default;
};

using Alignment = std::variant<DirectAlign, NormalizationAlign, ContinuousMultiwordAlign,
                               DiscontinuousMultiwordAlign, SplitAlign, NullAlign>;

enum class AlignKind { Direct, Normalization, ContinuousMultiword, DiscontinuousMultiword, Split, NullAligned };

inline AlignKind kind_of(const Alignment& a) {
    return static_cast<AlignKind>(a.index());
}

inline const char* kind_name(AlignKind k) {
    switch (k) {
        case AlignKind::Direct: return "direct";
        case AlignKind::Normalization: return "norm";
        case AlignKind::ContinuousMultiword: return "cont";
        case AlignKind::DiscontinuousMultiword: return "disc";
        case AlignKind::Split: return "split";
        case AlignKind::NullAligned: return "null";
    }
    return "?";
}

inline bool is_null_aligned(const Alignment& a) {
    return std::holds_alternative<NullAlign>(a);
}

// Word indices covered by an alignment, ascending. Empty for NullAligned.
inline std::vector<int> aligned_words(const Alignment& a) {
    struct V {
        std::vector<int> operator()(const DirectAlign& d) const { return {d.word}; }
        std::vector<int> operator()(const NormalizationAlign& n) const { return {n.word}; }
        std::vector<int> operator()(const ContinuousMultiwordAlign& c) const { return c.words; }
        std::vector<int> operator()(const DiscontinuousMultiwordAlign& d) const { return d.words; }
        std::vector<int> operator()(const SplitAlign& s) const { return {s.word}; }
        std::vector<int> operator()(const NullAlign&) const { return {}; }
    };
    return std::visit(V{}, a);
}

// Suffix for split parts: 1 -> "a", 2 -> "b", ..., 27 -> "aa".
inline std::string split_part_suffix(int part) {
    std::string s;
    int n = part;
    while (n > 0) {
        --n;
        s.insert(s.begin(), static_cast<char>('a' + n % 26));
        n /= 26;
    }
    return s;
}

// Deterministic variable name for an aligned concept: "x" + word indices
// joined by "_"; split parts append "_a", "_b", ... by part ordinal.
// NullAligned concepts are named by the caller ("z1", "z2", ... in
// first-mention order).
inline std::string variable_for(const Alignment& a) {
    if (is_null_aligned(a)) throw DataError("variable_for: NullAligned concepts take fresh z-names");
    if (const auto* s = std::get_if<SplitAlign>(&a))
        return "x" + std::to_string(s->word) + "_" + split_part_suffix(s->part);
    std::vector<int> words = aligned_words(a);
    std::vector<std::string> parts;
    parts.reserve(words.size());
    for (int w : words) parts.push_back(std::to_string(w));
    return "x" + str::join(parts, "_");
}

// ---------------------------------------------------------------------------

// Constants (Arabic numerals, "-") are modeled as concept nodes flagged
// is_constant; the scorer turns edges into them into attribute triples.
struct ConceptNode {
    std::string var;
    std::string label;
    Alignment alignment = NullAlign{};
    bool is_constant = false;

    bool operator==(const ConceptNode&) const = default;
};

inline bool is_constant_label(const std::string& label) {
    if (label == "-") return true;
    if (label.empty()) return false;
    bool digit_seen = false;
    for (char c : label) {
        if (c >= '0' && c <= '9') {
            digit_seen = true;
        } else if (c != '.') {
            return false;
        }
    }
    return digit_seen;
}

struct RelationEdge {
    std::string src;
    std::string dst;
    std::string rel;
    std::optional<int> rel_alignment;  // token index of a functional word

    bool operator==(const RelationEdge&) const = default;
};

inline bool edge_order_less(const RelationEdge& a, const RelationEdge& b) {
    if (a.src != b.src) return a.src < b.src;
    if (a.rel != b.rel) return a.rel < b.rel;
    return a.dst < b.dst;
}

// Directed acyclic semantic graph over one sentence, with every alignment
// record attached. Edges are kept sorted by (src, rel, dst).
struct AmrGraph {
    Sentence sentence;
    std::vector<ConceptNode> concepts;
    std::vector<RelationEdge> edges;
    std::string root;

    const ConceptNode* find_concept(const std::string& var) const {
        for (const ConceptNode& c : concepts)
            if (c.var == var) return &c;
        return nullptr;
    }

    void sort_edges() { std::sort(edges.begin(), edges.end(), edge_order_less); }

    bool operator==(const AmrGraph&) const = default;
};

// ---------------------------------------------------------------------------
// Validation. Violations are data, not failures.

struct Violation {
    std::string rule;   // short identifier of the broken rule
    std::string where;  // offending node/edge
    std::string detail;

    bool operator==(const Violation&) const = default;
};

namespace detail {

inline void check_alignment_shape(const ConceptNode& c, const Sentence& s,
                                  std::vector<Violation>& out) {
    const std::vector<int> words = aligned_words(c.alignment);
    for (int w : words) {
        if (!s.token_at(w))
            out.push_back({"alignment-out-of-range", c.var,
                           "word index " + std::to_string(w) + " outside sentence"});
    }
    switch (kind_of(c.alignment)) {
        case AlignKind::ContinuousMultiword: {
            if (words.size() < 2)
                out.push_back({"continuous-too-short", c.var, "needs at least 2 words"});
            for (size_t i = 1; i < words.size(); ++i)
                if (words[i] != words[i - 1] + 1) {
                    out.push_back({"continuous-not-consecutive", c.var,
                                   "indices must be strictly consecutive"});
                    break;
                }
            break;
        }
        case AlignKind::DiscontinuousMultiword: {
            if (words.size() < 2)
                out.push_back({"discontinuous-too-short", c.var, "needs at least 2 words"});
            bool increasing = true, gap = false;
            for (size_t i = 1; i < words.size(); ++i) {
                if (words[i] <= words[i - 1]) increasing = false;
                if (words[i] > words[i - 1] + 1) gap = true;
            }
            if (!increasing)
                out.push_back({"discontinuous-not-increasing", c.var,
                               "indices must be strictly increasing"});
            else if (!gap)
                out.push_back({"discontinuous-no-gap", c.var, "needs at least one gap"});
            break;
        }
        case AlignKind::Split: {
            if (std::get<SplitAlign>(c.alignment).part < 1)
                out.push_back({"split-part-invalid", c.var, "part ordinal must be >= 1"});
            break;
        }
        default:
            break;
    }
}

// DFS cycle detection over the concept adjacency.
inline bool has_cycle(const AmrGraph& g) {
    std::map<std::string, std::vector<std::string>> adj;
    for (const RelationEdge& e : g.edges) adj[e.src].push_back(e.dst);
    std::map<std::string, int> color;  // 0 white, 1 gray, 2 black
    std::vector<std::pair<std::string, size_t>> stack;
    for (const ConceptNode& c : g.concepts) {
        if (color[c.var] != 0) continue;
        stack.push_back({c.var, 0});
        color[c.var] = 1;
        while (!stack.empty()) {
            auto& [var, next] = stack.back();
            auto& nbrs = adj[var];
            if (next < nbrs.size()) {
                const std::string& to = nbrs[next++];
                int& col = color[to];
                if (col == 1) return true;
                if (col == 0) {
                    col = 1;
                    stack.push_back({to, 0});
                }
            } else {
                color[var] = 2;
                stack.pop_back();
            }
        }
    }
    return false;
}

}  // namespace detail

// Checks every structural invariant of the graph. Returns an empty list iff
// the graph is well-formed. `relation_inventory`, when given, additionally
// restricts edge labels.
inline std::vector<Violation> validate_graph(const AmrGraph& g,
                                             const std::set<std::string>* relation_inventory = nullptr) {
    std::vector<Violation> out;

    // sentence shape
    for (size_t i = 0; i < g.sentence.tokens.size(); ++i) {
        const Token& t = g.sentence.tokens[i];
        if (t.index != static_cast<int>(i) + 1)
            out.push_back({"token-index", "x" + std::to_string(i + 1),
                           "token indices must be exactly 1..n in order"});
        if (t.surface.empty())
            out.push_back({"token-empty-surface", "x" + std::to_string(t.index), "surface must be non-empty"});
    }

    // concept vars unique; labels non-empty; alignment shapes; var derivation
    std::set<std::string> vars;
    int null_seq = 0;
    for (const ConceptNode& c : g.concepts) {
        if (!vars.insert(c.var).second)
            out.push_back({"var-duplicate", c.var, "variable name reused"});
        if (c.label.empty()) out.push_back({"label-empty", c.var, "concept label must be non-empty"});
        detail::check_alignment_shape(c, g.sentence, out);
        if (is_null_aligned(c.alignment)) {
            ++null_seq;
            const std::string want = "z" + std::to_string(null_seq);
            if (c.var != want)
                out.push_back({"null-var-naming", c.var,
                               "null-aligned concepts are named z1, z2, ... in first-mention order (expected " +
                                   want + ")"});
        } else if (c.var != variable_for(c.alignment)) {
            out.push_back({"var-derivation", c.var,
                           "aligned concept variable must be " + variable_for(c.alignment)});
        }
    }

    // word exclusivity: a word index may appear in at most one concept's
    // alignment, except split parts of the same word
    std::map<int, std::vector<const ConceptNode*>> by_word;
    for (const ConceptNode& c : g.concepts)
        for (int w : aligned_words(c.alignment)) by_word[w].push_back(&c);
    for (auto& [w, cs] : by_word) {
        if (cs.size() < 2) continue;
        bool all_split = std::all_of(cs.begin(), cs.end(), [](const ConceptNode* c) {
            return kind_of(c->alignment) == AlignKind::Split;
        });
        if (!all_split)
            out.push_back({"word-shared", "x" + std::to_string(w),
                           "word aligned to " + std::to_string(cs.size()) + " concepts"});
    }

    // functional words never carry concepts
    for (const ConceptNode& c : g.concepts)
        for (int w : aligned_words(c.alignment))
            if (const Token* t = g.sentence.token_at(w); t && t->is_functional)
                out.push_back({"functional-aligned", c.var,
                               "functional word x" + std::to_string(w) + " aligned to a concept"});

    // edges
    std::set<std::pair<std::string, std::string>> seen_pairs;
    for (const RelationEdge& e : g.edges) {
        const std::string where = e.src + " " + e.rel + " " + e.dst;
        const ConceptNode* src = g.find_concept(e.src);
        const ConceptNode* dst = g.find_concept(e.dst);
        if (!src) out.push_back({"dangling-source", where, "edge source names no concept"});
        if (!dst) out.push_back({"dangling-destination", where, "edge destination names no concept"});
        if (src && src->is_constant)
            out.push_back({"constant-as-source", where, "constants may only be edge destinations"});
        if (relation_inventory && !relation_inventory->count(e.rel))
            out.push_back({"relation-unknown", where, "relation label not in inventory"});
        if (e.rel_alignment) {
            const Token* t = g.sentence.token_at(*e.rel_alignment);
            if (!t)
                out.push_back({"rel-alignment-out-of-range", where,
                               "token x" + std::to_string(*e.rel_alignment) + " outside sentence"});
            else if (!t->is_functional)
                out.push_back({"rel-alignment-not-functional", where,
                               "token x" + std::to_string(*e.rel_alignment) + " not flagged functional"});
        }
        if (!seen_pairs.insert({e.src + "\t" + e.rel, e.dst}).second)
            out.push_back({"edge-duplicate", where, "parallel edge with identical label"});
    }

    // root and reachability
    if (g.concepts.empty()) {
        out.push_back({"empty-graph", "", "graph has no concepts"});
        return out;
    }
    if (!g.find_concept(g.root)) {
        out.push_back({"root-missing", g.root, "root names no concept"});
    } else {
        std::set<std::string> reached{g.root};
        std::vector<std::string> frontier{g.root};
        std::map<std::string, std::vector<std::string>> adj;
        for (const RelationEdge& e : g.edges) adj[e.src].push_back(e.dst);
        while (!frontier.empty()) {
            std::string v = frontier.back();
            frontier.pop_back();
            for (const std::string& to : adj[v])
                if (reached.insert(to).second) frontier.push_back(to);
        }
        for (const ConceptNode& c : g.concepts)
            if (!reached.count(c.var))
                out.push_back({"unreachable", c.var, "not reachable from root"});
    }

    if (detail::has_cycle(g)) out.push_back({"cycle", "", "graph must be acyclic"});

    return out;
}

// ---------------------------------------------------------------------------
// Corpus-level alignment statistics.

struct AlignmentStats {
    long total_concepts = 0;
    long total_tokens = 0;
    long words_covered = 0;  // distinct word indices appearing in any alignment
    std::map<AlignKind, long> counts;

    double fraction(AlignKind k) const {
        auto it = counts.find(k);
        if (it == counts.end() || total_concepts == 0) return 0.0;
        return static_cast<double>(it->second) / static_cast<double>(total_concepts);
    }
    long aligned_concepts() const {
        long n = 0;
        for (auto& [k, v] : counts)
            if (k != AlignKind::NullAligned) n += v;
        return n;
    }
    double aligned_fraction() const {
        return total_concepts == 0 ? 0.0
                                   : static_cast<double>(aligned_concepts()) / static_cast<double>(total_concepts);
    }
    // share of a variant among aligned concepts, the base used in the pie
    double fraction_of_aligned(AlignKind k) const {
        long a = aligned_concepts();
        if (a == 0 || k == AlignKind::NullAligned) return 0.0;
        auto it = counts.find(k);
        return it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(a);
    }
    double word_coverage() const {
        return total_tokens == 0 ? 0.0
                                 : static_cast<double>(words_covered) / static_cast<double>(total_tokens);
    }
};

inline AlignmentStats alignment_stats(const std::vector<AmrGraph>& corpus) {
    if (corpus.empty()) throw DataError("alignment_stats: empty corpus");
    AlignmentStats st;
    for (const AmrGraph& g : corpus) {
        st.total_tokens += static_cast<long>(g.sentence.tokens.size());
        std::set<int> covered;
        for (const ConceptNode& c : g.concepts) {
            ++st.total_concepts;
            ++st.counts[kind_of(c.alignment)];
            for (int w : aligned_words(c.alignment)) covered.insert(w);
        }
        st.words_covered += static_cast<long>(covered.size());
    }
    return st;
}

}  // namespace camr
