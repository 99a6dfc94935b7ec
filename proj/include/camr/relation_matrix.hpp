#pragma once

#include <algorithm>
#include <climits>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "camr/common.hpp"
#include "camr/graph.hpp"
#include "camr/tags.hpp"

namespace camr {

// Relation labels, class 0 is "O" (no relation).
struct RelationInventory {
    std::vector<std::string> labels;

    int classes() const { return static_cast<int>(labels.size()) + 1; }
    int id_of(const std::string& rel) const {
        auto it = std::find(labels.begin(), labels.end(), rel);
        if (it == labels.end()) return -1;
        return static_cast<int>(it - labels.begin()) + 1;
    }
    std::string label_of(int id) const {
        if (id <= 0 || id > static_cast<int>(labels.size())) return "O";
        return labels[static_cast<size_t>(id - 1)];
    }
    std::set<std::string> as_set() const { return {labels.begin(), labels.end()}; }
};

inline RelationInventory relation_inventory_from_corpus(const std::vector<AmrGraph>& corpus) {
    std::set<std::string> rels;
    for (const AmrGraph& g : corpus)
        for (const RelationEdge& e : g.edges) rels.insert(e.rel);
    return {{rels.begin(), rels.end()}};
}

inline RelationInventory load_relation_inventory(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    RelationInventory inv;
    std::string line;
    while (std::getline(in, line)) {
        std::string t = str::trim(line);
        if (!t.empty()) inv.labels.push_back(t);
    }
    return inv;
}

// ---------------------------------------------------------------------------

// Square label matrix over graph concepts plus functional words. The first
// index is the start node of a relation, the second the end node; the TSV
// dump transposes so that columns show start nodes.
struct RelationMatrix {
    std::vector<std::string> concept_vars;  // concept order of the source graph
    std::vector<int> functional_words;      // ascending token indices
    std::vector<std::string> labels;        // row-major [src * items + dst], "O" = none

    int items() const {
        return static_cast<int>(concept_vars.size() + functional_words.size());
    }
    int concept_count() const { return static_cast<int>(concept_vars.size()); }

    std::string item_name(int i) const {
        if (i < concept_count()) return concept_vars[static_cast<size_t>(i)];
        return "x" + std::to_string(functional_words[static_cast<size_t>(i - concept_count())]);
    }

    const std::string& at(int src, int dst) const {
        return labels[static_cast<size_t>(src) * static_cast<size_t>(items()) +
                      static_cast<size_t>(dst)];
    }
    std::string& at(int src, int dst) {
        return labels[static_cast<size_t>(src) * static_cast<size_t>(items()) +
                      static_cast<size_t>(dst)];
    }

    bool operator==(const RelationMatrix&) const = default;
};

inline RelationMatrix encode_matrix(const AmrGraph& g) {
    RelationMatrix m;
    for (const ConceptNode& c : g.concepts) m.concept_vars.push_back(c.var);
    m.functional_words = g.sentence.functional_indices();
    m.labels.assign(static_cast<size_t>(m.items()) * static_cast<size_t>(m.items()), "O");

    std::map<std::string, int> concept_index;
    for (int i = 0; i < m.concept_count(); ++i) concept_index[m.concept_vars[static_cast<size_t>(i)]] = i;
    std::map<int, int> functional_index;
    for (size_t k = 0; k < m.functional_words.size(); ++k)
        functional_index[m.functional_words[k]] = m.concept_count() + static_cast<int>(k);

    auto put = [&](int src, int dst, const std::string& rel) {
        std::string& cell = m.at(src, dst);
        if (cell != "O" && cell != rel)
            throw CodecError("matrix cell conflict at (" + m.item_name(src) + ", " +
                             m.item_name(dst) + "): " + cell + " vs " + rel);
        cell = rel;
    };

    for (const RelationEdge& e : g.edges) {
        auto si = concept_index.find(e.src);
        auto di = concept_index.find(e.dst);
        if (si == concept_index.end() || di == concept_index.end())
            throw CodecError("edge references unknown concept " + e.src + " -> " + e.dst);
        put(si->second, di->second, e.rel);
        if (e.rel_alignment) {
            auto fi = functional_index.find(*e.rel_alignment);
            if (fi == functional_index.end())
                throw CodecError("relation alignment word x" + std::to_string(*e.rel_alignment) +
                                 " is not a functional word of the sentence");
            put(si->second, fi->second, e.rel);
        }
    }
    return m;
}

// ---------------------------------------------------------------------------

struct MatrixDecode {
    std::vector<RelationEdge> edges;
    std::vector<std::string> diagnostics;
};

namespace detail {

// Position anchor of a concept, used for nearest-functional-word and
// tie-breaking decisions.
inline int concept_anchor(const ConceptNode& c, bool last_word) {
    if (const auto* n = std::get_if<NullAlign>(&c.alignment))
        return n->trigger_word ? *n->trigger_word : INT_MAX / 2;
    const auto words = aligned_words(c.alignment);
    if (words.empty()) return INT_MAX / 2;
    return last_word ? words.back() : words.front();
}

inline int span_distance(const ConceptNode& c, int word) {
    int best = INT_MAX / 2;
    const auto words = aligned_words(c.alignment);
    for (int w : words) best = std::min(best, std::abs(w - word));
    if (words.empty()) {
        if (const auto* n = std::get_if<NullAlign>(&c.alignment); n && n->trigger_word)
            best = std::abs(*n->trigger_word - word);
    }
    return best;
}

}  // namespace detail

// Concept-to-concept cells become edges; functional-word cells resolve to
// rel_alignments of matching edges. Decoding is total: malformed cells are
// dropped with a diagnostic.
inline MatrixDecode decode_matrix(const RelationMatrix& m, const std::vector<ConceptNode>& concepts,
                                  const std::vector<int>& functional) {
    if (static_cast<int>(concepts.size()) != m.concept_count() ||
        functional != m.functional_words)
        throw CodecError("matrix participants do not match the supplied concepts");

    MatrixDecode out;
    const int nc = m.concept_count();
    const int ni = m.items();

    // (src concept, rel) -> functional words whose cell carries that relation
    std::map<std::pair<int, std::string>, std::vector<int>> align_cells;

    for (int src = 0; src < ni; ++src) {
        for (int dst = 0; dst < ni; ++dst) {
            const std::string& rel = m.at(src, dst);
            if (rel == "O") continue;
            if (src == dst) {
                out.diagnostics.push_back("dropped self-relation at " + m.item_name(src));
                continue;
            }
            if (src >= nc) {
                out.diagnostics.push_back("dropped cell with functional start " + m.item_name(src));
                continue;
            }
            if (concepts[static_cast<size_t>(src)].is_constant) {
                out.diagnostics.push_back("dropped cell with constant start " + m.item_name(src));
                continue;
            }
            if (dst >= nc) {
                align_cells[{src, rel}].push_back(m.functional_words[static_cast<size_t>(dst - nc)]);
                continue;
            }
            out.edges.push_back({concepts[static_cast<size_t>(src)].var,
                                 concepts[static_cast<size_t>(dst)].var, rel, std::nullopt});
        }
    }

    // attach alignments: within a (src, rel) group the functional words are
    // ranked nearest-first to the start concept's span and paired with the
    // group's edges in destination order
    for (auto& [key, words] : align_cells) {
        const auto& [src_idx, rel] = key;
        const ConceptNode& src = concepts[static_cast<size_t>(src_idx)];
        std::sort(words.begin(), words.end(), [&](int a, int b) {
            const int da = detail::span_distance(src, a), db = detail::span_distance(src, b);
            if (da != db) return da < db;
            return a < b;
        });
        std::vector<RelationEdge*> group;
        for (RelationEdge& e : out.edges)
            if (e.src == src.var && e.rel == rel) group.push_back(&e);
        for (size_t k = 0; k < words.size(); ++k) {
            if (k < group.size()) {
                group[k]->rel_alignment = words[k];
            } else {
                out.diagnostics.push_back("dropped alignment x" + std::to_string(words[k]) +
                                          " for (" + src.var + ", " + rel + "): no matching edge");
            }
        }
    }

    std::sort(out.edges.begin(), out.edges.end(), edge_order_less);
    return out;
}

// ---------------------------------------------------------------------------
// Graph assembly from decoded edges: cycle breaking, root selection, and
// optional attachment of stranded components.

struct AssembleOptions {
    // score per (src var, dst var) of the chosen label; cycles prefer to drop
    // the lowest-scoring edge when available
    const std::map<std::pair<std::string, std::string>, double>* edge_scores = nullptr;
    std::optional<std::string> attach_orphans_rel = "mod";
};

struct AssembledGraph {
    AmrGraph graph;
    std::vector<std::string> diagnostics;
    int cycles_broken = 0;
    int orphans_attached = 0;
    int orphans_dropped = 0;
};

namespace detail {

inline std::optional<std::vector<size_t>> find_cycle(const std::vector<ConceptNode>& concepts,
                                                     const std::vector<RelationEdge>& edges) {
    std::map<std::string, std::vector<size_t>> out_edges;
    for (size_t i = 0; i < edges.size(); ++i) out_edges[edges[i].src].push_back(i);

    std::map<std::string, int> color;
    std::vector<size_t> path;  // edge indices along the DFS stack

    struct Frame {
        std::string var;
        size_t next = 0;
    };
    for (const ConceptNode& c : concepts) {
        if (color[c.var] != 0) continue;
        std::vector<Frame> stack{{c.var}};
        color[c.var] = 1;
        while (!stack.empty()) {
            Frame& f = stack.back();
            auto& outs = out_edges[f.var];
            if (f.next < outs.size()) {
                const size_t ei = outs[f.next++];
                const std::string& to = edges[ei].dst;
                if (color[to] == 1) {
                    // back edge: collect the cycle from the path
                    std::vector<size_t> cycle{ei};
                    for (auto it = path.rbegin(); it != path.rend(); ++it) {
                        cycle.push_back(*it);
                        if (edges[*it].src == to) break;
                    }
                    return cycle;
                }
                if (color[to] == 0) {
                    color[to] = 1;
                    path.push_back(ei);
                    stack.push_back({to});
                }
            } else {
                color[f.var] = 2;
                stack.pop_back();
                if (!path.empty()) path.pop_back();
            }
        }
    }
    return std::nullopt;
}

}  // namespace detail

inline AssembledGraph assemble_graph(const Sentence& sentence, std::vector<ConceptNode> concepts,
                                     std::vector<RelationEdge> edges, const AssembleOptions& opt = {}) {
    AssembledGraph out;
    if (concepts.empty()) throw CodecError("cannot assemble a graph without concepts");

    std::map<std::string, const ConceptNode*> by_var;
    for (const ConceptNode& c : concepts) by_var[c.var] = &c;
    auto anchor = [&](const std::string& var) {
        auto it = by_var.find(var);
        return it == by_var.end() ? INT_MAX / 2 : detail::concept_anchor(*it->second, false);
    };

    // break cycles
    while (auto cycle = detail::find_cycle(concepts, edges)) {
        size_t victim = (*cycle)[0];
        auto worse = [&](size_t a, size_t b) {  // true if a is a better victim than b
            if (opt.edge_scores) {
                auto sa = opt.edge_scores->find({edges[a].src, edges[a].dst});
                auto sb = opt.edge_scores->find({edges[b].src, edges[b].dst});
                const double va = sa == opt.edge_scores->end() ? 0.0 : sa->second;
                const double vb = sb == opt.edge_scores->end() ? 0.0 : sb->second;
                if (va != vb) return va < vb;
            }
            const int da = anchor(edges[a].dst), db = anchor(edges[b].dst);
            if (da != db) return da > db;
            const auto ka = edges[a].src + "\t" + edges[a].rel + "\t" + edges[a].dst;
            const auto kb = edges[b].src + "\t" + edges[b].rel + "\t" + edges[b].dst;
            return ka < kb;
        };
        for (size_t ei : *cycle)
            if (worse(ei, victim)) victim = ei;
        out.diagnostics.push_back("broke cycle by dropping " + edges[victim].src + " -" +
                                  edges[victim].rel + "-> " + edges[victim].dst);
        edges.erase(edges.begin() + static_cast<long>(victim));
        out.cycles_broken++;
    }

    // root: zero in-degree, maximal out-degree, earliest alignment position
    std::map<std::string, int> indeg, outdeg;
    for (const RelationEdge& e : edges) {
        indeg[e.dst]++;
        outdeg[e.src]++;
    }
    std::string root;
    bool root_constant = true;
    for (const ConceptNode& c : concepts) {
        if (indeg[c.var] != 0) continue;
        if (root.empty()) {
            root = c.var;
            root_constant = c.is_constant;
            continue;
        }
        if (!c.is_constant && root_constant) {
            root = c.var;
            root_constant = false;
            continue;
        }
        if (c.is_constant && !root_constant) continue;
        const int od_new = outdeg[c.var], od_old = outdeg[root];
        if (od_new > od_old ||
            (od_new == od_old && anchor(c.var) < anchor(root))) {
            root = c.var;
            root_constant = c.is_constant;
        }
    }
    if (root.empty()) root = concepts.front().var;  // unreachable for DAGs, kept for safety

    // stranded components: attach their heads below the root or drop them
    while (true) {
        std::set<std::string> reached{root};
        std::vector<std::string> frontier{root};
        std::map<std::string, std::vector<std::string>> adj;
        for (const RelationEdge& e : edges) adj[e.src].push_back(e.dst);
        while (!frontier.empty()) {
            std::string v = frontier.back();
            frontier.pop_back();
            for (const std::string& to : adj[v])
                if (reached.insert(to).second) frontier.push_back(to);
        }
        std::vector<const ConceptNode*> stranded;
        for (const ConceptNode& c : concepts)
            if (!reached.count(c.var)) stranded.push_back(&c);
        if (stranded.empty()) break;

        if (!opt.attach_orphans_rel) {
            std::set<std::string> drop;
            for (const ConceptNode* c : stranded) drop.insert(c->var);
            out.orphans_dropped += static_cast<int>(stranded.size());
            out.diagnostics.push_back("dropped " + std::to_string(stranded.size()) +
                                      " concepts unreachable from root");
            std::erase_if(concepts, [&](const ConceptNode& c) { return drop.count(c.var) > 0; });
            std::erase_if(edges, [&](const RelationEdge& e) {
                return drop.count(e.src) || drop.count(e.dst);
            });
            break;
        }

        // head of a stranded component: zero in-degree within the stranded
        // set, preferring non-constants, then earliest anchor
        const ConceptNode* head = nullptr;
        for (const ConceptNode* c : stranded) {
            if (indeg[c->var] != 0) continue;
            if (c->is_constant) continue;
            if (!head || anchor(c->var) < anchor(head->var) ||
                (anchor(c->var) == anchor(head->var) && c->var < head->var))
                head = c;
        }
        if (!head) {
            for (const ConceptNode* c : stranded)
                if (!head || anchor(c->var) < anchor(head->var)) head = c;
        }
        edges.push_back({root, head->var, *opt.attach_orphans_rel, std::nullopt});
        indeg[head->var]++;
        out.orphans_attached++;
        out.diagnostics.push_back("attached stranded " + head->var + " below root");
    }

    AmrGraph g;
    g.sentence = sentence;
    g.concepts = std::move(concepts);
    g.edges = std::move(edges);
    g.sort_edges();
    g.root = root;
    out.graph = std::move(g);
    return out;
}

// Debug dump matching the label-matrix figure layout: columns are start
// nodes, rows are end nodes.
inline std::string dump_matrix_tsv(const RelationMatrix& m) {
    std::ostringstream os;
    for (int j = 0; j < m.items(); ++j) os << '\t' << m.item_name(j);
    os << '\n';
    for (int i = 0; i < m.items(); ++i) {
        os << m.item_name(i);
        for (int j = 0; j < m.items(); ++j) os << '\t' << m.at(j, i);
        os << '\n';
    }
    return os.str();
}

}  // namespace camr
