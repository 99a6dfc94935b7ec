#pragma once

// Corpus text format ("CAMR-T"), one block per sentence:
//
//   #id <string>
//   #snt <tokens, space separated>
//   #func <functional word indices>
//   instance <var> <label> [| align=1,2 kind=cont form=... part=... trigger=... const=1]
//   attribute <src> <rel> <value> | align=... kind=... [form=...] [ralign=...]
//   relation <src> <rel> <dst> [| ralign=...]
//   root <var>
//   <blank line>
//
// Output is UTF-8 with LF endings and is byte-deterministic: instance and
// attribute lines follow concept order, relation lines follow the sorted
// edge order, and every graph is validated before writing.

#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "camr/common.hpp"
#include "camr/graph.hpp"

namespace camr {

struct CorpusEntry {
    Sentence sentence;
    std::optional<AmrGraph> graph;

    bool operator==(const CorpusEntry&) const = default;
};

struct CorpusDocument {
    std::vector<CorpusEntry> entries;

    std::vector<AmrGraph> graphs() const {
        std::vector<AmrGraph> out;
        for (const auto& e : entries)
            if (e.graph) out.push_back(*e.graph);
        return out;
    }

    bool operator==(const CorpusDocument&) const = default;
};

inline CorpusEntry make_entry(AmrGraph g) { return {g.sentence, std::move(g)}; }

// ---------------------------------------------------------------------------
// Serialization.

namespace detail {

inline void check_field(const std::string& v, const char* what) {
    if (v.empty()) throw DataError(std::string(what) + " must be non-empty");
    for (char c : v)
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '|')
            throw DataError(std::string(what) + " '" + v + "' contains forbidden characters");
}

inline std::string align_list(const std::vector<int>& words) {
    std::vector<std::string> parts;
    parts.reserve(words.size());
    for (int w : words) parts.push_back(std::to_string(w));
    return str::join(parts, ",");
}

inline std::string alignment_annos(const Alignment& a) {
    std::ostringstream os;
    switch (kind_of(a)) {
        case AlignKind::Direct:
            os << "align=" << std::get<DirectAlign>(a).word << " kind=direct";
            break;
        case AlignKind::Normalization: {
            const auto& x = std::get<NormalizationAlign>(a);
            os << "align=" << x.word << " kind=norm";
            if (!x.surface_form.empty()) os << " form=" << x.surface_form;
            break;
        }
        case AlignKind::ContinuousMultiword:
            os << "align=" << align_list(std::get<ContinuousMultiwordAlign>(a).words) << " kind=cont";
            break;
        case AlignKind::DiscontinuousMultiword:
            os << "align=" << align_list(std::get<DiscontinuousMultiwordAlign>(a).words) << " kind=disc";
            break;
        case AlignKind::Split: {
            const auto& x = std::get<SplitAlign>(a);
            os << "align=" << x.word << " kind=split part=" << x.part;
            break;
        }
        case AlignKind::NullAligned: {
            const auto& x = std::get<NullAlign>(a);
            if (x.trigger_word) os << "trigger=" << *x.trigger_word;
            break;
        }
    }
    return os.str();
}

}  // namespace detail

inline std::string serialize_corpus(const CorpusDocument& doc) {
    std::ostringstream os;
    std::set<std::string> ids;
    for (const CorpusEntry& entry : doc.entries) {
        const Sentence& s = entry.sentence;
        if (s.id.empty() || s.id.find('\n') != std::string::npos || s.id.find('\r') != std::string::npos)
            throw DataError("sentence id must be a non-empty single line");
        if (!ids.insert(s.id).second) throw DataError("duplicate sentence id '" + s.id + "'");
        if (entry.graph) {
            if (entry.graph->sentence != s)
                throw DataError("entry sentence differs from its graph's sentence (id '" + s.id + "')");
            auto violations = validate_graph(*entry.graph);
            if (!violations.empty())
                throw DataError("invalid graph '" + s.id + "': " + violations[0].rule + " at " +
                                violations[0].where);
        }

        os << "#id " << s.id << "\n";
        os << "#snt";
        for (const Token& t : s.tokens) {
            detail::check_field(t.surface, "token surface");
            os << " " << t.surface;
        }
        os << "\n";
        os << "#func";
        for (int w : s.functional_indices()) os << " " << w;
        os << "\n";

        if (entry.graph) {
            const AmrGraph& g = *entry.graph;
            for (const ConceptNode& c : g.concepts) {
                detail::check_field(c.var, "variable");
                detail::check_field(c.label, "label");
                if (c.is_constant) {
                    // constants reached by edges are written as attribute lines
                    bool has_incoming = false;
                    for (const RelationEdge& e : g.edges) {
                        if (e.dst != c.var) continue;
                        has_incoming = true;
                        detail::check_field(e.rel, "relation");
                        os << "attribute " << e.src << " " << e.rel << " " << c.label << " | "
                           << detail::alignment_annos(c.alignment);
                        if (e.rel_alignment) os << " ralign=" << *e.rel_alignment;
                        os << "\n";
                    }
                    if (has_incoming) continue;
                }
                os << "instance " << c.var << " " << c.label;
                std::string annos = detail::alignment_annos(c.alignment);
                if (c.is_constant) annos += annos.empty() ? "const=1" : " const=1";
                if (!annos.empty()) os << " | " << annos;
                os << "\n";
            }
            for (const RelationEdge& e : g.edges) {
                const ConceptNode* dst = g.find_concept(e.dst);
                if (dst && dst->is_constant) continue;  // already an attribute line
                detail::check_field(e.rel, "relation");
                os << "relation " << e.src << " " << e.rel << " " << e.dst;
                if (e.rel_alignment) os << " | ralign=" << *e.rel_alignment;
                os << "\n";
            }
            os << "root " << g.root << "\n";
        }
        os << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Parsing.

namespace detail {

struct AnnoMap {
    std::map<std::string, std::string> kv;
    int line;

    std::optional<std::string> take(const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string v = it->second;
        kv.erase(it);
        return v;
    }
    void finish() const {
        if (!kv.empty())
            throw ParseError("unknown annotation key '" + kv.begin()->first + "'", line);
    }
};

inline AnnoMap parse_annos(const std::string& text, int line) {
    AnnoMap out{{}, line};
    for (const std::string& part : str::split_ws(text)) {
        auto eq = part.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ParseError("malformed annotation '" + part + "' (expected key=value)", line);
        out.kv[part.substr(0, eq)] = part.substr(eq + 1);
    }
    return out;
}

inline int parse_index(const std::string& v, int line) {
    try {
        size_t pos = 0;
        int n = std::stoi(v, &pos);
        if (pos != v.size() || n < 1) throw std::invalid_argument("");
        return n;
    } catch (...) {
        throw ParseError("bad word index '" + v + "'", line);
    }
}

inline std::vector<int> parse_index_list(const std::string& v, int line) {
    std::vector<int> out;
    for (const std::string& part : str::split(v, ','))
        out.push_back(parse_index(part, line));
    return out;
}

inline Alignment alignment_from_annos(AnnoMap& annos, int line) {
    auto align = annos.take("align");
    auto kind = annos.take("kind");
    if (!align) {
        if (kind) throw ParseError("kind given without align", line);
        NullAlign out;
        if (auto trig = annos.take("trigger")) out.trigger_word = parse_index(*trig, line);
        return out;
    }
    if (!kind) throw ParseError("align given without kind", line);
    std::vector<int> words = parse_index_list(*align, line);
    if (*kind == "direct") {
        if (words.size() != 1) throw ParseError("kind=direct takes one word index", line);
        return DirectAlign{words[0]};
    }
    if (*kind == "norm") {
        if (words.size() != 1) throw ParseError("kind=norm takes one word index", line);
        std::string form;
        if (auto f = annos.take("form")) form = *f;
        return NormalizationAlign{words[0], form};
    }
    if (*kind == "cont") return ContinuousMultiwordAlign{words};
    if (*kind == "disc") return DiscontinuousMultiwordAlign{words};
    if (*kind == "split") {
        if (words.size() != 1) throw ParseError("kind=split takes one word index", line);
        auto part = annos.take("part");
        if (!part) throw ParseError("kind=split requires part=", line);
        return SplitAlign{words[0], parse_index(*part, line)};
    }
    throw ParseError("unknown alignment kind '" + *kind + "'", line);
}

}  // namespace detail

inline CorpusDocument parse_corpus(std::string_view text) {
    // whole-stream UTF-8 validation with a precise position
    {
        size_t i = 0;
        int line = 1;
        while (i < text.size()) {
            size_t before = i;
            auto cp = utf8::decode_at(text, i);
            if (!cp) {
                int col = 1;
                size_t ls = text.rfind('\n', before == 0 ? 0 : before - 1);
                col = static_cast<int>(before - (ls == std::string_view::npos ? 0 : ls + 1)) + 1;
                throw ParseError("invalid UTF-8 byte", line, col);
            }
            if (*cp == U'\n') ++line;
        }
    }

    CorpusDocument doc;
    std::set<std::string> seen_ids;

    struct PendingEdge {
        RelationEdge edge;
        int line;
    };

    std::vector<std::string> lines;
    {
        std::string cur;
        for (char c : text) {
            if (c == '\n') {
                lines.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (!cur.empty()) lines.push_back(cur);
    }

    size_t li = 0;
    const auto n_lines = lines.size();
    while (li < n_lines) {
        // skip blank lines between blocks
        while (li < n_lines && str::trim(lines[li]).empty()) ++li;
        if (li >= n_lines) break;

        const int block_line = static_cast<int>(li) + 1;
        Sentence sentence;
        bool have_id = false, have_snt = false;
        std::vector<ConceptNode> concepts;
        std::vector<PendingEdge> edges;
        std::optional<std::string> root;
        bool any_triple = false;

        for (; li < n_lines; ++li) {
            const int lineno = static_cast<int>(li) + 1;
            std::string line = str::trim(lines[li]);
            if (line.empty()) {
                ++li;
                break;
            }

            if (line[0] == '#') {
                if (any_triple) throw ParseError("header after triple lines", lineno);
                const std::string keyword = str::split_ws(line)[0];
                if (keyword == "#id") {
                    if (have_id) throw ParseError("duplicate #id header", lineno);
                    sentence.id = str::trim(line.substr(3));
                    if (sentence.id.empty()) throw ParseError("empty sentence id", lineno);
                    if (!seen_ids.insert(sentence.id).second)
                        throw ParseError("duplicate sentence id '" + sentence.id + "'", lineno);
                    have_id = true;
                } else if (keyword == "#snt") {
                    if (!have_id) throw ParseError("#snt before #id", lineno);
                    if (have_snt) throw ParseError("duplicate #snt header", lineno);
                    int idx = 0;
                    for (const std::string& w : str::split_ws(line.substr(4)))
                        sentence.tokens.push_back({++idx, w, false});
                    have_snt = true;
                } else if (keyword == "#func") {
                    if (!have_snt) throw ParseError("#func before #snt", lineno);
                    for (const std::string& w : str::split_ws(line.substr(5))) {
                        int idx = detail::parse_index(w, lineno);
                        if (!sentence.token_at(idx))
                            throw ParseError("functional index " + w + " outside sentence", lineno);
                        sentence.tokens[static_cast<size_t>(idx - 1)].is_functional = true;
                    }
                } else {
                    throw ParseError("malformed header '" + keyword + "'", lineno);
                }
                continue;
            }

            if (!have_id || !have_snt)
                throw ParseError("triple line before #id/#snt headers", lineno);
            any_triple = true;

            std::string main = line, anno_text;
            if (auto bar = line.find(" | "); bar != std::string::npos) {
                main = line.substr(0, bar);
                anno_text = line.substr(bar + 3);
            }
            const std::vector<std::string> f = str::split_ws(main);
            detail::AnnoMap annos = detail::parse_annos(anno_text, lineno);

            if (f[0] == "instance") {
                if (f.size() != 3) throw ParseError("instance takes <var> <label>", lineno);
                Alignment a = detail::alignment_from_annos(annos, lineno);
                bool constant = false;
                if (auto c = annos.take("const")) constant = (*c == "1");
                annos.finish();
                concepts.push_back({f[1], f[2], a, constant});
            } else if (f[0] == "attribute") {
                if (f.size() != 4) throw ParseError("attribute takes <src> <rel> <value>", lineno);
                Alignment a = detail::alignment_from_annos(annos, lineno);
                if (is_null_aligned(a))
                    throw ParseError("attribute line requires align=", lineno);
                std::optional<int> ralign;
                if (auto r = annos.take("ralign")) ralign = detail::parse_index(*r, lineno);
                annos.finish();
                const std::string var = variable_for(a);
                const ConceptNode* existing = nullptr;
                for (const auto& c : concepts)
                    if (c.var == var) existing = &c;
                if (existing) {
                    if (existing->label != f[3] || !(existing->alignment == a) || !existing->is_constant)
                        throw ParseError("conflicting declaration for constant " + var, lineno);
                } else {
                    concepts.push_back({var, f[3], a, true});
                }
                edges.push_back({{f[1], var, f[2], ralign}, lineno});
            } else if (f[0] == "relation") {
                if (f.size() != 4) throw ParseError("relation takes <src> <rel> <dst>", lineno);
                std::optional<int> ralign;
                if (auto r = annos.take("ralign")) ralign = detail::parse_index(*r, lineno);
                annos.finish();
                edges.push_back({{f[1], f[3], f[2], ralign}, lineno});
            } else if (f[0] == "root") {
                if (f.size() != 2) throw ParseError("root takes <var>", lineno);
                annos.finish();
                if (root) throw ParseError("multi-root annotation rejected", lineno);
                root = f[1];
            } else {
                throw ParseError("unknown triple kind '" + f[0] + "'", lineno);
            }
        }

        if (!have_id || !have_snt) throw ParseError("block missing #id/#snt headers", block_line);

        CorpusEntry entry;
        entry.sentence = sentence;
        if (any_triple) {
            AmrGraph g;
            g.sentence = sentence;
            g.concepts = std::move(concepts);
            if (!root) throw ParseError("graph block missing root line", block_line);
            g.root = *root;
            for (const PendingEdge& pe : edges) {
                if (!g.find_concept(pe.edge.src))
                    throw ParseError("dangling variable reference '" + pe.edge.src + "'", pe.line);
                if (!g.find_concept(pe.edge.dst))
                    throw ParseError("dangling variable reference '" + pe.edge.dst + "'", pe.line);
                g.edges.push_back(pe.edge);
            }
            g.sort_edges();
            auto violations = validate_graph(g);
            if (!violations.empty())
                throw ParseError("invalid graph: " + violations[0].rule + " at " + violations[0].where +
                                     " (" + violations[0].detail + ")",
                                 block_line);
            entry.graph = std::move(g);
        }
        doc.entries.push_back(std::move(entry));
    }
    return doc;
}

inline CorpusDocument parse_corpus(std::istream& in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string s = ss.str();
    return parse_corpus(std::string_view(s));
}

}  // namespace camr
