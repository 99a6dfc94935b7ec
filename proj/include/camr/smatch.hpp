#pragma once

// Alignment-aware Smatch. Triples carry their alignment payloads: instance
// triples must match on the exact word-index set, relation triples on both
// the label and the functional-word alignment. A present relation alignment
// counts as an extra scoring unit on its side, so unpredicted alignments
// lower recall; a wrong alignment forfeits the whole relation triple.

#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "camr/common.hpp"
#include "camr/graph.hpp"

namespace camr {

struct InstanceTriple {
    std::string var;
    std::string label;
    std::vector<int> align;  // sorted word indices; empty for null-aligned

    bool operator==(const InstanceTriple&) const = default;
};

struct AttributeTriple {
    std::string var;
    std::string name;
    std::string value;

    bool operator==(const AttributeTriple&) const = default;
};

struct RelationTriple {
    std::string src;
    std::string rel;
    std::string dst;
    std::optional<int> rel_align;

    bool operator==(const RelationTriple&) const = default;
};

struct TripleBag {
    std::vector<InstanceTriple> instances;
    std::vector<AttributeTriple> attributes;
    std::vector<RelationTriple> relations;

    std::vector<std::string> variables() const {
        std::vector<std::string> out;
        for (const auto& t : instances)
            if (std::find(out.begin(), out.end(), t.var) == out.end()) out.push_back(t.var);
        return out;
    }
    bool empty() const { return instances.empty() && attributes.empty() && relations.empty(); }
};

// One instance triple per non-constant concept; edges into constants and the
// root designation become attribute triples; everything else is a relation
// triple carrying its alignment payload.
inline TripleBag extract_triples(const AmrGraph& g) {
    TripleBag bag;
    std::map<std::string, const ConceptNode*> by_var;
    for (const ConceptNode& c : g.concepts) by_var[c.var] = &c;

    for (const ConceptNode& c : g.concepts) {
        if (c.is_constant) continue;
        std::vector<int> words = aligned_words(c.alignment);
        std::sort(words.begin(), words.end());
        bag.instances.push_back({c.var, c.label, std::move(words)});
    }
    if (const ConceptNode* root = g.find_concept(g.root))
        bag.attributes.push_back({root->var, "top", root->label});
    for (const RelationEdge& e : g.edges) {
        auto it = by_var.find(e.dst);
        if (it != by_var.end() && it->second->is_constant) {
            bag.attributes.push_back({e.src, e.rel, it->second->label});
        } else {
            bag.relations.push_back({e.src, e.rel, e.dst, e.rel_alignment});
        }
    }
    return bag;
}

// ---------------------------------------------------------------------------

enum class AlignMode { Exact, Ignore };  // Ignore recovers classic Smatch

struct CategoryCounts {
    long matched = 0;
    long pred_total = 0;
    long gold_total = 0;

    double precision() const {
        if (pred_total == 0) return gold_total == 0 ? 1.0 : 0.0;
        return static_cast<double>(matched) / static_cast<double>(pred_total);
    }
    double recall() const {
        if (gold_total == 0) return pred_total == 0 ? 1.0 : 0.0;
        return static_cast<double>(matched) / static_cast<double>(gold_total);
    }
    double f1() const {
        const double p = precision(), r = recall();
        if (p + r == 0.0) return 0.0;
        return 2.0 * p * r / (p + r);
    }
    CategoryCounts& operator+=(const CategoryCounts& o) {
        matched += o.matched;
        pred_total += o.pred_total;
        gold_total += o.gold_total;
        return *this;
    }
};

struct FineGrained {
    CategoryCounts instance;
    CategoryCounts attribute;
    CategoryCounts relation;
};

struct MatchResult {
    CategoryCounts overall;
    FineGrained fine;
    std::map<std::string, std::string> mapping;  // pred var -> gold var
};

namespace detail {

inline std::string align_key(const std::vector<int>& words) {
    std::string k;
    for (int w : words) k += std::to_string(w) + ",";
    return k;
}

struct MatchProblem {
    std::vector<std::string> pred_vars, gold_vars;
    std::map<std::string, int> pred_index, gold_index;

    // pred triples pre-resolved to var indices (-1 for non-variables)
    struct PInstance {
        int var;
        std::string key;  // label + payload
    };
    struct PAttribute {
        int var;
        std::string key;  // name + value
    };
    struct PRelation {
        int src, dst;
        std::string rel;
        int ralign;  // -1 = none
        int units;
    };
    std::vector<PInstance> p_instances;
    std::vector<PAttribute> p_attributes;
    std::vector<PRelation> p_relations;

    // gold lookups keyed in gold-variable space
    std::map<std::pair<int, std::string>, long> g_instances;
    std::map<std::pair<int, std::string>, long> g_attributes;
    // (src, rel, dst) group -> ralign -> count
    std::map<std::string, std::map<int, long>> g_relations;

    long pred_units = 0, gold_units = 0;
    FineGrained totals;  // only the *_total fields are meaningful here
    AlignMode mode = AlignMode::Exact;

    static std::string group_key(int s, const std::string& rel, int d) {
        return std::to_string(s) + "|" + rel + "|" + std::to_string(d);
    }
};

inline MatchProblem build_problem(const TripleBag& pred, const TripleBag& gold, AlignMode mode) {
    MatchProblem p;
    p.mode = mode;
    p.pred_vars = pred.variables();
    p.gold_vars = gold.variables();
    for (size_t i = 0; i < p.pred_vars.size(); ++i) p.pred_index[p.pred_vars[i]] = static_cast<int>(i);
    for (size_t i = 0; i < p.gold_vars.size(); ++i) p.gold_index[p.gold_vars[i]] = static_cast<int>(i);

    auto pred_var = [&](const std::string& v) {
        auto it = p.pred_index.find(v);
        return it == p.pred_index.end() ? -1 : it->second;
    };
    auto gold_var = [&](const std::string& v) {
        auto it = p.gold_index.find(v);
        return it == p.gold_index.end() ? -1 : it->second;
    };
    const bool exact = mode == AlignMode::Exact;

    for (const auto& t : pred.instances)
        p.p_instances.push_back({pred_var(t.var), t.label + "\t" + (exact ? align_key(t.align) : "")});
    for (const auto& t : pred.attributes)
        p.p_attributes.push_back({pred_var(t.var), t.name + "\t" + t.value});
    for (const auto& t : pred.relations) {
        const int ra = exact && t.rel_align ? *t.rel_align : -1;
        p.p_relations.push_back({pred_var(t.src), pred_var(t.dst), t.rel, ra, ra >= 0 ? 2 : 1});
    }

    for (const auto& t : gold.instances)
        p.g_instances[{gold_var(t.var), t.label + "\t" + (exact ? align_key(t.align) : "")}]++;
    for (const auto& t : gold.attributes)
        p.g_attributes[{gold_var(t.var), t.name + "\t" + t.value}]++;
    for (const auto& t : gold.relations) {
        const int ra = exact && t.rel_align ? *t.rel_align : -1;
        p.g_relations[MatchProblem::group_key(gold_var(t.src), t.rel, gold_var(t.dst))][ra]++;
    }

    p.totals.instance.pred_total = static_cast<long>(pred.instances.size());
    p.totals.instance.gold_total = static_cast<long>(gold.instances.size());
    p.totals.attribute.pred_total = static_cast<long>(pred.attributes.size());
    p.totals.attribute.gold_total = static_cast<long>(gold.attributes.size());
    for (const auto& t : pred.relations)
        p.totals.relation.pred_total += exact && t.rel_align ? 2 : 1;
    for (const auto& t : gold.relations)
        p.totals.relation.gold_total += exact && t.rel_align ? 2 : 1;
    p.pred_units = p.totals.instance.pred_total + p.totals.attribute.pred_total +
                   p.totals.relation.pred_total;
    p.gold_units = p.totals.instance.gold_total + p.totals.attribute.gold_total +
                   p.totals.relation.gold_total;
    return p;
}

struct MatchedUnits {
    long instance = 0, attribute = 0, relation = 0;
    long total() const { return instance + attribute + relation; }
};

// Matched units under a fixed mapping (pred var index -> gold var index or -1).
inline MatchedUnits count_matched(const MatchProblem& p, const std::vector<int>& mapping) {
    MatchedUnits out;
    auto mapped = [&](int v) { return v >= 0 && v < static_cast<int>(mapping.size()) ? mapping[static_cast<size_t>(v)] : -1; };

    {
        std::map<std::pair<int, std::string>, long> pool = p.g_instances;
        for (const auto& t : p.p_instances) {
            const int gv = mapped(t.var);
            if (gv < 0) continue;
            auto it = pool.find({gv, t.key});
            if (it != pool.end() && it->second > 0) {
                --it->second;
                ++out.instance;
            }
        }
    }
    {
        std::map<std::pair<int, std::string>, long> pool = p.g_attributes;
        for (const auto& t : p.p_attributes) {
            const int gv = mapped(t.var);
            if (gv < 0) continue;
            auto it = pool.find({gv, t.key});
            if (it != pool.end() && it->second > 0) {
                --it->second;
                ++out.attribute;
            }
        }
    }
    {
        // group predicted relations by their mapped (src, rel, dst) key
        std::map<std::string, std::map<int, long>> groups;
        for (const auto& t : p.p_relations) {
            const int gs = mapped(t.src), gd = mapped(t.dst);
            if (gs < 0 || gd < 0) continue;
            groups[MatchProblem::group_key(gs, t.rel, gd)][t.ralign]++;
        }
        for (auto& [key, pred_by_ra] : groups) {
            auto git = p.g_relations.find(key);
            if (git == p.g_relations.end()) continue;
            std::map<int, long> gold_by_ra = git->second;
            // identical alignments pair first, worth their full two units
            for (auto& [ra, cnt] : pred_by_ra) {
                if (ra < 0) continue;
                auto it = gold_by_ra.find(ra);
                const long both = it == gold_by_ra.end() ? 0 : std::min(cnt, it->second);
                if (both > 0) {
                    out.relation += both * 2;
                    cnt -= both;
                    it->second -= both;
                }
            }
            // leftovers: an alignment-free triple earns its base unit against
            // any counterpart, a mismatched alignment pair earns nothing.
            // Maximize base-unit pairs given that aligned leftovers can only
            // pair with alignment-free ones.
            long pred_none = 0, pred_some = 0, gold_none = 0, gold_some = 0;
            for (auto& [ra, cnt] : pred_by_ra) (ra < 0 ? pred_none : pred_some) += cnt;
            for (auto& [ra, cnt] : gold_by_ra) (ra < 0 ? gold_none : gold_some) += cnt;
            const long cross = std::min(pred_some, gold_none);
            out.relation += cross + std::min(pred_none, gold_none + gold_some - cross);
        }
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------

struct MatchOptions {
    int restarts = 16;
    uint64_t seed = 0;
    AlignMode mode = AlignMode::Exact;
};

namespace detail {

inline long climb(const MatchProblem& p, std::vector<int>& mapping) {
    const int np = static_cast<int>(p.pred_vars.size());
    const int ng = static_cast<int>(p.gold_vars.size());
    long best = count_matched(p, mapping).total();
    bool improved = true;
    while (improved) {
        improved = false;
        long best_gain = 0;
        std::vector<int> best_mapping;

        std::vector<bool> used(static_cast<size_t>(ng), false);
        for (int v : mapping)
            if (v >= 0) used[static_cast<size_t>(v)] = true;

        // single reassignments (including unmapping)
        for (int i = 0; i < np; ++i) {
            const int old = mapping[static_cast<size_t>(i)];
            for (int t = -1; t < ng; ++t) {
                if (t == old) continue;
                if (t >= 0 && used[static_cast<size_t>(t)]) continue;
                mapping[static_cast<size_t>(i)] = t;
                const long gain = count_matched(p, mapping).total() - best;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_mapping = mapping;
                }
                mapping[static_cast<size_t>(i)] = old;
            }
        }
        // swaps
        for (int i = 0; i < np; ++i) {
            for (int j = i + 1; j < np; ++j) {
                std::swap(mapping[static_cast<size_t>(i)], mapping[static_cast<size_t>(j)]);
                const long gain = count_matched(p, mapping).total() - best;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_mapping = mapping;
                }
                std::swap(mapping[static_cast<size_t>(i)], mapping[static_cast<size_t>(j)]);
            }
        }
        if (best_gain > 0) {
            mapping = best_mapping;
            best += best_gain;
            improved = true;
        }
    }
    return best;
}

inline std::vector<int> smart_init(const MatchProblem& p, const TripleBag& pred,
                                   const TripleBag& gold, std::mt19937_64* rng) {
    const int np = static_cast<int>(p.pred_vars.size());
    const int ng = static_cast<int>(p.gold_vars.size());
    std::map<std::string, std::string> pred_label, gold_label;
    for (const auto& t : pred.instances) pred_label.emplace(t.var, t.label);
    for (const auto& t : gold.instances) gold_label.emplace(t.var, t.label);

    std::vector<int> mapping(static_cast<size_t>(np), -1);
    std::vector<bool> used(static_cast<size_t>(ng), false);
    std::vector<int> order(static_cast<size_t>(np));
    for (int i = 0; i < np; ++i) order[static_cast<size_t>(i)] = i;
    if (rng) std::shuffle(order.begin(), order.end(), *rng);

    for (int i : order) {
        const std::string& label = pred_label[p.pred_vars[static_cast<size_t>(i)]];
        std::vector<int> same_label, free_any;
        for (int gidx = 0; gidx < ng; ++gidx) {
            if (used[static_cast<size_t>(gidx)]) continue;
            free_any.push_back(gidx);
            if (gold_label[p.gold_vars[static_cast<size_t>(gidx)]] == label) same_label.push_back(gidx);
        }
        int choice = -1;
        if (!same_label.empty()) {
            choice = rng ? same_label[(*rng)() % same_label.size()] : same_label.front();
        } else if (!free_any.empty()) {
            choice = rng ? free_any[(*rng)() % free_any.size()] : free_any.front();
        }
        if (choice >= 0) {
            mapping[static_cast<size_t>(i)] = choice;
            used[static_cast<size_t>(choice)] = true;
        }
    }
    return mapping;
}

}  // namespace detail

// Hill-climbing search for the variable mapping maximizing matched units.
// Deterministic under a fixed seed.
inline MatchResult match_score(const TripleBag& pred, const TripleBag& gold,
                               const MatchOptions& opt = {}) {
    if (opt.restarts < 1) throw ConfigError("match_score needs restarts >= 1");
    detail::MatchProblem p = detail::build_problem(pred, gold, opt.mode);

    std::vector<int> best_mapping(p.pred_vars.size(), -1);
    long best = -1;
    std::mt19937_64 rng(opt.seed);
    for (int r = 0; r < opt.restarts; ++r) {
        std::vector<int> mapping =
            r == 0 ? detail::smart_init(p, pred, gold, nullptr) : detail::smart_init(p, pred, gold, &rng);
        const long score = detail::climb(p, mapping);
        if (score > best) {
            best = score;
            best_mapping = mapping;
        }
        if (best == std::min(p.pred_units, p.gold_units)) break;  // cannot improve
    }

    MatchResult out;
    const detail::MatchedUnits units = detail::count_matched(p, best_mapping);
    out.overall = {units.total(), p.pred_units, p.gold_units};
    out.fine.instance = {units.instance, p.totals.instance.pred_total, p.totals.instance.gold_total};
    out.fine.attribute = {units.attribute, p.totals.attribute.pred_total, p.totals.attribute.gold_total};
    out.fine.relation = {units.relation, p.totals.relation.pred_total, p.totals.relation.gold_total};
    for (size_t i = 0; i < best_mapping.size(); ++i)
        if (best_mapping[i] >= 0)
            out.mapping[p.pred_vars[i]] = p.gold_vars[static_cast<size_t>(best_mapping[i])];
    return out;
}

// Category scores under an existing mapping (normally the best overall one).
inline FineGrained fine_grained(const TripleBag& pred, const TripleBag& gold,
                                const std::map<std::string, std::string>& mapping,
                                AlignMode mode = AlignMode::Exact) {
    detail::MatchProblem p = detail::build_problem(pred, gold, mode);
    std::vector<int> m(p.pred_vars.size(), -1);
    for (size_t i = 0; i < p.pred_vars.size(); ++i) {
        auto it = mapping.find(p.pred_vars[i]);
        if (it == mapping.end()) continue;
        auto git = p.gold_index.find(it->second);
        if (git != p.gold_index.end()) m[i] = git->second;
    }
    const detail::MatchedUnits units = detail::count_matched(p, m);
    FineGrained out = p.totals;
    out.instance.matched = units.instance;
    out.attribute.matched = units.attribute;
    out.relation.matched = units.relation;
    return out;
}

// Exhaustive optimum over all partial injective mappings; the oracle for the
// hill climber. Bounded to 8 variables per side.
inline MatchResult brute_force_score(const TripleBag& pred, const TripleBag& gold,
                                     AlignMode mode = AlignMode::Exact) {
    detail::MatchProblem p = detail::build_problem(pred, gold, mode);
    const int np = static_cast<int>(p.pred_vars.size());
    const int ng = static_cast<int>(p.gold_vars.size());
    if (np > 8 || ng > 8) throw DataError("brute_force_score is limited to 8 variables per side");

    std::vector<int> mapping(static_cast<size_t>(np), -1), best_mapping = mapping;
    std::vector<bool> used(static_cast<size_t>(ng), false);
    long best = -1;

    auto recurse = [&](auto&& self, int i) -> void {
        if (i == np) {
            const long score = detail::count_matched(p, mapping).total();
            if (score > best) {
                best = score;
                best_mapping = mapping;
            }
            return;
        }
        for (int g = 0; g < ng; ++g) {
            if (used[static_cast<size_t>(g)]) continue;
            used[static_cast<size_t>(g)] = true;
            mapping[static_cast<size_t>(i)] = g;
            self(self, i + 1);
            used[static_cast<size_t>(g)] = false;
        }
        mapping[static_cast<size_t>(i)] = -1;
        self(self, i + 1);
    };
    recurse(recurse, 0);

    MatchResult out;
    const detail::MatchedUnits units = detail::count_matched(p, best_mapping);
    out.overall = {units.total(), p.pred_units, p.gold_units};
    out.fine.instance = {units.instance, p.totals.instance.pred_total, p.totals.instance.gold_total};
    out.fine.attribute = {units.attribute, p.totals.attribute.pred_total, p.totals.attribute.gold_total};
    out.fine.relation = {units.relation, p.totals.relation.pred_total, p.totals.relation.gold_total};
    for (size_t i = 0; i < best_mapping.size(); ++i)
        if (best_mapping[i] >= 0)
            out.mapping[p.pred_vars[i]] = p.gold_vars[static_cast<size_t>(best_mapping[i])];
    return out;
}

}  // namespace camr
