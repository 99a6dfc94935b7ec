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
#include "camr/normalize.hpp"

namespace camr {

class CodecError : public DataError {
public:
    explicit CodecError(const std::string& msg) : DataError(msg) {}
};

// 8-class BIO scheme over input words. B-Single covers both direct and
// normalization alignment; B-Virtual marks functional words for the relation
// stage.
enum class SurfaceTag : int {
    O = 0,
    BSingle = 1,
    BContMW = 2,
    IContMW = 3,
    BDiscMW = 4,
    IDiscMW = 5,
    BSplit = 6,
    BVirtual = 7,
};
inline constexpr int kSurfaceTagCount = 8;

inline const char* surface_tag_name(SurfaceTag t) {
    switch (t) {
        case SurfaceTag::O: return "O";
        case SurfaceTag::BSingle: return "B-Single";
        case SurfaceTag::BContMW: return "B-ContMW";
        case SurfaceTag::IContMW: return "I-ContMW";
        case SurfaceTag::BDiscMW: return "B-DiscMW";
        case SurfaceTag::IDiscMW: return "I-DiscMW";
        case SurfaceTag::BSplit: return "B-Split";
        case SurfaceTag::BVirtual: return "B-Virtual";
    }
    return "?";
}

enum class NormTag : int { Verbatim = 0, NeedsNorm = 1 };
inline constexpr int kNormTagCount = 2;

// Per-token labels for the three tagging tasks. The null-concept sequence
// stores concept labels directly; an empty string means "None".
struct TagSequences {
    std::vector<SurfaceTag> surface;
    std::vector<NormTag> norm;
    std::vector<std::string> nullc;

    bool operator==(const TagSequences&) const = default;
};

// ---------------------------------------------------------------------------
// Inventories and lexicons.

// Null-aligned concept labels; class 0 is "None".
struct NullConceptInventory {
    std::vector<std::string> labels;

    int classes() const { return static_cast<int>(labels.size()) + 1; }
    int id_of(const std::string& label) const {
        auto it = std::find(labels.begin(), labels.end(), label);
        if (it == labels.end()) return -1;
        return static_cast<int>(it - labels.begin()) + 1;
    }
    std::string label_of(int id) const {
        if (id <= 0 || id > static_cast<int>(labels.size())) return "";
        return labels[static_cast<size_t>(id - 1)];
    }
};

inline NullConceptInventory null_inventory_from_corpus(const std::vector<AmrGraph>& corpus) {
    std::set<std::string> seen;
    for (const AmrGraph& g : corpus)
        for (const ConceptNode& c : g.concepts)
            if (is_null_aligned(c.alignment)) seen.insert(c.label);
    return {{seen.begin(), seen.end()}};
}

inline NullConceptInventory load_null_inventory(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    NullConceptInventory inv;
    std::string line;
    while (std::getline(in, line)) {
        std::string t = str::trim(line);
        if (!t.empty()) inv.labels.push_back(t);
    }
    return inv;
}

// word surface -> ordered concept labels, each list of length >= 2
struct SplitLexicon {
    std::map<std::string, std::vector<std::string>> entries;

    const std::vector<std::string>* find(const std::string& word) const {
        auto it = entries.find(word);
        return it == entries.end() ? nullptr : &it->second;
    }
};

inline SplitLexicon load_split_lexicon(const std::string& path) {
    SplitLexicon lex;
    for (auto& row : tsvio::read_tsv(path, 2)) {
        auto parts = str::split(row[1], ',');
        if (parts.size() < 2) throw DataError(path + ": split entry for '" + row[0] + "' needs >= 2 concepts");
        lex.entries[row[0]] = parts;
    }
    return lex;
}

inline void write_split_lexicon(const SplitLexicon& lex, std::ostream& os) {
    for (auto& [word, parts] : lex.entries) os << word << '\t' << str::join(parts, ",") << '\n';
}

// ---------------------------------------------------------------------------
// Trigger resolution for null-aligned concepts.

namespace detail {

// Anchor word of a concept: the last word of its alignment; null-aligned
// concepts resolve through the concepts they point to. Aligned targets take
// precedence; only when every target is null-aligned does the search trace
// back further.
inline std::optional<int> resolve_anchor(const AmrGraph& g, const std::string& var,
                                         std::set<std::string>& visited) {
    const ConceptNode* c = g.find_concept(var);
    if (!c) return std::nullopt;
    if (!is_null_aligned(c->alignment)) {
        const auto words = aligned_words(c->alignment);
        if (words.empty()) return std::nullopt;
        return *std::max_element(words.begin(), words.end());
    }
    if (!visited.insert(var).second) return std::nullopt;

    std::vector<const ConceptNode*> aligned_targets, null_targets;
    for (const RelationEdge& e : g.edges) {
        if (e.src != var) continue;
        const ConceptNode* dst = g.find_concept(e.dst);
        if (!dst) continue;
        (is_null_aligned(dst->alignment) ? null_targets : aligned_targets).push_back(dst);
    }
    std::optional<int> best;
    if (!aligned_targets.empty()) {
        for (const ConceptNode* t : aligned_targets) {
            const auto words = aligned_words(t->alignment);
            if (words.empty()) continue;
            int w = *std::max_element(words.begin(), words.end());
            if (!best || w > *best) best = w;
        }
        return best;
    }
    for (const ConceptNode* t : null_targets) {
        auto w = resolve_anchor(g, t->var, visited);
        if (w && (!best || *w > *best)) best = w;
    }
    return best;
}

}  // namespace detail

// Trigger word of a null-aligned concept: the last aligned word among the
// concepts it has a direct relation to, tracing back through null-aligned
// targets when necessary.
inline std::optional<int> resolve_trigger(const AmrGraph& g, const std::string& var) {
    std::set<std::string> visited;
    return detail::resolve_anchor(g, var, visited);
}

// Returns a copy of the graph with every null-aligned concept's trigger_word
// annotation filled in. Unresolvable triggers are an error.
inline AmrGraph annotate_triggers(const AmrGraph& g) {
    AmrGraph out = g;
    for (ConceptNode& c : out.concepts) {
        if (auto* n = std::get_if<NullAlign>(&c.alignment)) {
            auto w = resolve_trigger(g, c.var);
            if (!w) throw CodecError("no resolvable trigger for " + c.var + " (" + c.label + ")");
            n->trigger_word = w;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gold graph -> tag sequences.

inline TagSequences encode_tags(const AmrGraph& g) {
    const size_t n = g.sentence.tokens.size();
    TagSequences t;
    t.surface.assign(n, SurfaceTag::O);
    t.norm.assign(n, NormTag::Verbatim);
    t.nullc.assign(n, "");

    auto at = [&](int word) -> size_t {
        if (word < 1 || word > static_cast<int>(n))
            throw CodecError("alignment word x" + std::to_string(word) + " outside sentence");
        return static_cast<size_t>(word - 1);
    };

    for (const ConceptNode& c : g.concepts) {
        switch (kind_of(c.alignment)) {
            case AlignKind::Direct:
                t.surface[at(std::get<DirectAlign>(c.alignment).word)] = SurfaceTag::BSingle;
                break;
            case AlignKind::Normalization: {
                const auto& a = std::get<NormalizationAlign>(c.alignment);
                t.surface[at(a.word)] = SurfaceTag::BSingle;
                t.norm[at(a.word)] = NormTag::NeedsNorm;
                break;
            }
            case AlignKind::ContinuousMultiword: {
                const auto& words = std::get<ContinuousMultiwordAlign>(c.alignment).words;
                for (size_t i = 0; i < words.size(); ++i)
                    t.surface[at(words[i])] = i == 0 ? SurfaceTag::BContMW : SurfaceTag::IContMW;
                break;
            }
            case AlignKind::DiscontinuousMultiword: {
                const auto& words = std::get<DiscontinuousMultiwordAlign>(c.alignment).words;
                for (size_t i = 0; i < words.size(); ++i)
                    t.surface[at(words[i])] = i == 0 ? SurfaceTag::BDiscMW : SurfaceTag::IDiscMW;
                break;
            }
            case AlignKind::Split:
                t.surface[at(std::get<SplitAlign>(c.alignment).word)] = SurfaceTag::BSplit;
                break;
            case AlignKind::NullAligned:
                break;  // handled below, after aligned anchors exist
        }
    }

    for (const Token& tok : g.sentence.tokens)
        if (tok.is_functional) t.surface[at(tok.index)] = SurfaceTag::BVirtual;

    for (const ConceptNode& c : g.concepts) {
        if (!is_null_aligned(c.alignment)) continue;
        auto w = resolve_trigger(g, c.var);
        if (!w) throw CodecError("no resolvable trigger for " + c.var + " (" + c.label + ")");
        size_t i = at(*w);
        if (!t.nullc[i].empty())
            throw CodecError("trigger collision at x" + std::to_string(*w) + ": " + t.nullc[i] +
                             " vs " + c.label);
        t.nullc[i] = c.label;
    }
    return t;
}

// ---------------------------------------------------------------------------
// BIO repair: model outputs may violate well-formedness. An I-ContMW that
// does not directly continue a continuous span becomes B-ContMW; an I-DiscMW
// with no open discontinuous group becomes B-DiscMW.

struct BioRepair {
    std::vector<SurfaceTag> tags;
    std::vector<int> changed;  // 1-based positions that were promoted
};

inline BioRepair bio_repair(const std::vector<SurfaceTag>& in) {
    BioRepair r;
    r.tags = in;
    bool disc_open = false;
    for (size_t i = 0; i < r.tags.size(); ++i) {
        SurfaceTag& tag = r.tags[i];
        if (tag == SurfaceTag::IContMW) {
            const bool ok = i > 0 && (r.tags[i - 1] == SurfaceTag::BContMW ||
                                      r.tags[i - 1] == SurfaceTag::IContMW);
            if (!ok) {
                tag = SurfaceTag::BContMW;
                r.changed.push_back(static_cast<int>(i) + 1);
            }
        } else if (tag == SurfaceTag::IDiscMW) {
            if (!disc_open) {
                tag = SurfaceTag::BDiscMW;
                r.changed.push_back(static_cast<int>(i) + 1);
            }
        }
        if (tag == SurfaceTag::BDiscMW) disc_open = true;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Predicted tags -> concepts (stage-1 decoding).

struct DecodedConcepts {
    std::vector<ConceptNode> concepts;
    std::vector<int> functional_words;   // token indices tagged B-Virtual
    std::vector<std::string> diagnostics;
    int bio_repairs = 0;
};

inline DecodedConcepts decode_surface(const Sentence& s, const std::vector<SurfaceTag>& surface_in,
                                      const std::vector<NormTag>& norm, const SplitLexicon& lex,
                                      const NormalizationDictionaries& dicts) {
    const size_t n = s.tokens.size();
    if (surface_in.size() != n || norm.size() != n)
        throw CodecError("tag sequences must match token count");

    DecodedConcepts out;
    const BioRepair repaired = bio_repair(surface_in);
    const std::vector<SurfaceTag>& tags = repaired.tags;
    out.bio_repairs = static_cast<int>(repaired.changed.size());
    for (int pos : repaired.changed)
        out.diagnostics.push_back("bio-repair at x" + std::to_string(pos));

    // discontinuous groups: each B opens a group, each I joins the latest one
    std::vector<std::vector<int>> disc_groups;
    std::vector<std::vector<int>> group_at_b(n);
    for (size_t i = 0; i < n; ++i) {
        if (tags[i] == SurfaceTag::BDiscMW) {
            disc_groups.push_back({static_cast<int>(i) + 1});
        } else if (tags[i] == SurfaceTag::IDiscMW) {
            disc_groups.back().push_back(static_cast<int>(i) + 1);
        }
    }
    std::map<int, std::vector<int>> disc_by_start;
    for (auto& grp : disc_groups) disc_by_start[grp.front()] = grp;

    auto concat_surfaces = [&](const std::vector<int>& words) {
        std::string label;
        for (int w : words) label += s.tokens[static_cast<size_t>(w - 1)].surface;
        return label;
    };
    auto push_concept = [&](const std::string& label, Alignment a) {
        ConceptNode c{variable_for(a), label, std::move(a), is_constant_label(label)};
        out.concepts.push_back(std::move(c));
    };

    size_t i = 0;
    while (i < n) {
        const int word = static_cast<int>(i) + 1;
        const std::string& sf = s.tokens[i].surface;
        switch (tags[i]) {
            case SurfaceTag::O:
                ++i;
                break;
            case SurfaceTag::BVirtual:
                out.functional_words.push_back(word);
                ++i;
                break;
            case SurfaceTag::BSingle: {
                if (norm[i] == NormTag::NeedsNorm) {
                    NormResult r = normalize_word(sf, dicts);
                    if (!r.resolved())
                        out.diagnostics.push_back("norm-unresolved at x" + std::to_string(word) +
                                                  " (" + sf + ")");
                    push_concept(r.label, NormalizationAlign{word, sf});
                } else {
                    push_concept(sf, DirectAlign{word});
                }
                ++i;
                break;
            }
            case SurfaceTag::BContMW: {
                std::vector<int> words{word};
                size_t j = i + 1;
                while (j < n && tags[j] == SurfaceTag::IContMW) {
                    words.push_back(static_cast<int>(j) + 1);
                    ++j;
                }
                if (words.size() == 1) {
                    out.diagnostics.push_back("cont-degraded at x" + std::to_string(word));
                    push_concept(sf, DirectAlign{word});
                } else {
                    push_concept(concat_surfaces(words), ContinuousMultiwordAlign{words});
                }
                i = j;
                break;
            }
            case SurfaceTag::BDiscMW: {
                const std::vector<int>& words = disc_by_start.at(word);
                if (words.size() == 1) {
                    out.diagnostics.push_back("disc-degraded at x" + std::to_string(word));
                    push_concept(sf, DirectAlign{word});
                } else {
                    bool gap = false;
                    for (size_t k = 1; k < words.size(); ++k)
                        if (words[k] > words[k - 1] + 1) gap = true;
                    if (gap) {
                        push_concept(concat_surfaces(words), DiscontinuousMultiwordAlign{words});
                    } else {
                        out.diagnostics.push_back("disc-consecutive at x" + std::to_string(word));
                        push_concept(concat_surfaces(words), ContinuousMultiwordAlign{words});
                    }
                }
                ++i;
                break;
            }
            case SurfaceTag::IDiscMW:
                ++i;  // consumed by its group
                break;
            case SurfaceTag::IContMW:
                ++i;  // unreachable after repair; defensive skip
                break;
            case SurfaceTag::BSplit: {
                const std::vector<std::string>* parts = lex.find(sf);
                if (!parts) throw CodecError("split word '" + sf + "' absent from lexicon");
                for (size_t p = 0; p < parts->size(); ++p)
                    push_concept((*parts)[p], SplitAlign{word, static_cast<int>(p) + 1});
                ++i;
                break;
            }
        }
    }
    return out;
}

// Each non-"None" tag yields one null-aligned concept anchored at that token;
// emission follows token order, variables are fresh z-names.
inline std::vector<ConceptNode> decode_null_concepts(const Sentence& s,
                                                     const std::vector<std::string>& nullc,
                                                     const std::vector<ConceptNode>& aligned) {
    if (nullc.size() != s.tokens.size())
        throw CodecError("null-concept tag sequence must match token count");
    std::set<std::string> taken;
    for (const ConceptNode& c : aligned) taken.insert(c.var);
    std::vector<ConceptNode> out;
    int next = 1;
    for (size_t i = 0; i < nullc.size(); ++i) {
        if (nullc[i].empty()) continue;
        std::string var = "z" + std::to_string(next++);
        while (taken.count(var)) var = "z" + std::to_string(next++);
        out.push_back({var, nullc[i], NullAlign{static_cast<int>(i) + 1}, false});
    }
    return out;
}

}  // namespace camr
