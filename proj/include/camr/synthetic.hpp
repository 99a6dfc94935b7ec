#pragma once

// Seeded synthetic corpus generator. Sentences are sampled from templates
// that exercise all six alignment variants, functional words with relation
// alignments, constants, and null-aligned concepts with triggers, so the
// oracle round-trip and scorer suites can run without any licensed corpus.

#include <cassert>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "camr/common.hpp"
#include "camr/corpus_io.hpp"
#include "camr/graph.hpp"
#include "camr/normalize.hpp"
#include "camr/tags.hpp"

namespace camr {

struct SyntheticOptions {
    int sentences = 100;
    uint64_t seed = 42;
};

struct SyntheticManifest {
    long sentences = 0;
    long tokens = 0;
    long concepts = 0;
    long edges = 0;
    long functional_words = 0;
    long rel_alignments = 0;
    long constants = 0;
    std::map<AlignKind, long> alignment_counts;
    std::set<std::string> relations_used;
    std::set<std::string> null_labels_used;
};

struct SyntheticCorpus {
    CorpusDocument document;
    SyntheticManifest manifest;
    SplitLexicon split_lexicon;
    std::map<std::string, std::string> special_map;
    std::map<std::string, std::string> phon_codes;
    std::map<std::string, std::string> calli_codes;
    std::vector<std::string> relation_inventory;
};

namespace detail {

struct GenVocab {
    std::vector<std::string> nouns{"奇观", "学生", "城市", "经济", "科技", "报告",
                                   "计划", "朋友", "老师", "历史", "文化", "艺术"};
    std::vector<std::pair<std::string, std::string>> predicates{
        {"称为", "称为-01"}, {"合作", "合作-01"}, {"发展", "发展-02"}, {"研究", "研究-01"},
        {"建设", "建设-01"}, {"学习", "学习-01"}, {"曝光", "曝光-01"}, {"访问", "访问-02"},
        {"讨论", "讨论-01"}, {"支持", "支持-01"}};
    std::vector<std::vector<std::string>> entities{
        {"钱塘江", "大潮"}, {"人工", "智能"}, {"北京", "大学"}, {"长江", "三角洲", "地区"}, {"世界", "遗产"}};
    std::vector<std::pair<std::string, std::vector<std::string>>> splits{
        {"想去", {"想-01", "去-01"}}, {"买卖", {"买-01", "卖-01"}}, {"来回", {"来-01", "回-01"}}};
    std::vector<std::pair<std::string, std::string>> disc_patterns{{"在", "上"}, {"从", "起"}};
    std::vector<std::string> null_labels{"Event", "Fact", "Thing", "Group", "Reason"};
    std::vector<std::string> functionals{"被", "的", "和", "对"};
    std::vector<std::string> fillers{"了", "吗", "呢", "真", "就"};
    std::vector<std::pair<std::string, long long>> numerals{
        {"一万", 10000}, {"第一", 1},  {"三百", 300},       {"十二", 12},    {"两千", 2000},
        {"五十六", 56},  {"第三", 3},  {"二十五", 25},      {"九百零八", 908}, {"一亿", 100000000}};
    std::vector<std::string> child_rels{"arg0", "arg1", "arg2", "arg3", "mod", "time", "manner"};
};

// One concept under construction: words get assigned token indices later.
struct GenConcept {
    AlignKind kind;
    std::vector<std::string> words;  // surface forms to emit
    std::vector<std::string> labels; // one label, except split: one per part
    bool constant = false;
    std::vector<int> indices;        // filled during layout
};

}  // namespace detail

inline SyntheticCorpus generate_synthetic(const SyntheticOptions& opt) {
    if (opt.sentences < 1) throw ConfigError("synthetic corpus needs at least one sentence");
    detail::GenVocab vocab;
    SyntheticCorpus out;

    for (auto& [word, parts] : vocab.splits) out.split_lexicon.entries[word] = parts;
    out.special_map = {{"不", "-"}, {"否", "-"}, {"在", "be-located-at-91"}};
    out.phon_codes = {{"暴", "bao"}, {"曝", "bao"},  {"光", "guang"}, {"惊", "jing"},
                      {"荒", "huang"}, {"慌", "huang"}, {"精", "jing"}, {"英", "ying"}};
    out.calli_codes = {{"暴", "jtai"}, {"曝", "ojtai"}, {"光", "iqb"}, {"精", "omdj"}, {"英", "amdk"}};
    out.relation_inventory = {"arg0", "arg1", "arg2", "arg3", "loc",     "manner", "mod",
                              "op1",  "poss", "polarity", "quant", "time"};

    std::mt19937_64 rng(opt.seed);
    auto chance = [&](int percent) { return static_cast<int>(rng() % 100) < percent; };
    auto pick = [&](const auto& v) -> const auto& { return v[rng() % v.size()]; };

    for (int si = 0; si < opt.sentences; ++si) {
        using detail::GenConcept;
        std::vector<GenConcept> cs;

        // root: mostly a sense-normalized predicate; first sentences walk the
        // whole predicate table so dictionaries built from any prefix cover it
        const bool predicate_root =
            si < static_cast<int>(vocab.predicates.size()) || chance(80);
        if (predicate_root) {
            const auto& [w, sense] =
                vocab.predicates[si < static_cast<int>(vocab.predicates.size())
                                     ? static_cast<size_t>(si)
                                     : rng() % vocab.predicates.size()];
            cs.push_back({AlignKind::Normalization, {w}, {sense}});
        } else {
            cs.push_back({AlignKind::Direct, {pick(vocab.nouns)}, {pick(vocab.nouns)}});
            cs.back().labels = cs.back().words;
        }
        const size_t root_ci = 0;

        const bool single_concept = chance(5);
        std::set<std::string> used_words{cs[0].words[0]};
        auto fresh_noun = [&]() {
            for (int tries = 0; tries < 20; ++tries) {
                const std::string& n = pick(vocab.nouns);
                if (used_words.insert(n).second) return n;
            }
            return vocab.nouns[0];
        };

        std::vector<size_t> subject_like;  // aligned children usable as null targets
        size_t entity_ci = SIZE_MAX, disc_ci = SIZE_MAX, disc_inner_ci = SIZE_MAX;
        size_t split_a_ci = SIZE_MAX, numeral_ci = SIZE_MAX, minus_ci = SIZE_MAX;
        std::vector<size_t> noun_children;

        if (!single_concept) {
            if (chance(55)) {
                const auto& parts = pick(vocab.entities);
                entity_ci = cs.size();
                std::string label;
                for (const auto& p : parts) label += p;
                cs.push_back({AlignKind::ContinuousMultiword, parts, {label}});
                subject_like.push_back(entity_ci);
            }
            int extra_nouns = (chance(70) ? 1 : 0) + (chance(30) ? 1 : 0);
            for (int k = 0; k < extra_nouns; ++k) {
                std::string n = fresh_noun();
                noun_children.push_back(cs.size());
                subject_like.push_back(cs.size());
                cs.push_back({AlignKind::Direct, {n}, {n}});
            }
            if (chance(35)) {
                const auto& [open, close] = pick(vocab.disc_patterns);
                disc_ci = cs.size();
                cs.push_back({AlignKind::DiscontinuousMultiword, {open, close}, {open + close}});
                std::string inner = fresh_noun();
                disc_inner_ci = cs.size();
                cs.push_back({AlignKind::Direct, {inner}, {inner}});
            }
            if (chance(40)) {
                const auto& [w, parts] = pick(vocab.splits);
                split_a_ci = cs.size();
                cs.push_back({AlignKind::Split, {w}, parts});
            }
            if (chance(40)) {
                const auto& [w, value] = pick(vocab.numerals);
                numeral_ci = cs.size();
                GenConcept c{AlignKind::Normalization, {w}, {std::to_string(value)}};
                c.constant = true;
                cs.push_back(c);
            }
            if (chance(30)) {
                minus_ci = cs.size();
                GenConcept c{AlignKind::Normalization, {"不"}, {"-"}};
                c.constant = true;
                cs.push_back(c);
            }
        }

        // token layout; continuous words stay adjacent, the discontinuous
        // pattern wraps its inner noun
        std::vector<std::string> tokens;
        std::vector<int> functional_positions;
        auto emit = [&](GenConcept& c) {
            for (const std::string& w : c.words) {
                tokens.push_back(w);
                c.indices.push_back(static_cast<int>(tokens.size()));
            }
        };
        auto emit_filler = [&]() { tokens.push_back(pick(vocab.fillers)); };
        auto emit_functional = [&]() {
            tokens.push_back(pick(vocab.functionals));
            functional_positions.push_back(static_cast<int>(tokens.size()));
        };

        if (chance(30)) emit_filler();
        if (entity_ci != SIZE_MAX) emit(cs[entity_ci]);
        if (!noun_children.empty()) emit(cs[noun_children[0]]);
        const bool want_functional = !single_concept && chance(60);
        if (want_functional) emit_functional();
        if (minus_ci != SIZE_MAX) emit(cs[minus_ci]);
        emit(cs[root_ci]);
        if (disc_ci != SIZE_MAX) {
            GenConcept& d = cs[disc_ci];
            tokens.push_back(d.words[0]);
            d.indices.push_back(static_cast<int>(tokens.size()));
            emit(cs[disc_inner_ci]);
            if (chance(25)) emit_filler();
            tokens.push_back(d.words[1]);
            d.indices.push_back(static_cast<int>(tokens.size()));
        }
        for (size_t k = 1; k < noun_children.size(); ++k) emit(cs[noun_children[k]]);
        if (numeral_ci != SIZE_MAX) emit(cs[numeral_ci]);
        if (split_a_ci != SIZE_MAX) emit(cs[split_a_ci]);
        if (chance(60) && !single_concept) emit_functional();
        if (chance(30)) emit_filler();

        // concepts with variables
        Sentence sentence;
        sentence.id = "syn-" + std::to_string(si + 1);
        for (size_t i = 0; i < tokens.size(); ++i)
            sentence.tokens.push_back({static_cast<int>(i) + 1, tokens[i], false});
        for (int fp : functional_positions)
            sentence.tokens[static_cast<size_t>(fp - 1)].is_functional = true;

        AmrGraph g;
        g.sentence = sentence;
        std::vector<std::vector<std::string>> vars_of(cs.size());
        for (GenConcept& c : cs) {
            switch (c.kind) {
                case AlignKind::Direct:
                    vars_of[&c - cs.data()].push_back(variable_for(DirectAlign{c.indices[0]}));
                    g.concepts.push_back({vars_of[&c - cs.data()][0], c.labels[0],
                                          DirectAlign{c.indices[0]}, c.constant});
                    break;
                case AlignKind::Normalization: {
                    Alignment a = NormalizationAlign{c.indices[0], c.words[0]};
                    vars_of[&c - cs.data()].push_back(variable_for(a));
                    g.concepts.push_back({vars_of[&c - cs.data()][0], c.labels[0], a, c.constant});
                    break;
                }
                case AlignKind::ContinuousMultiword: {
                    Alignment a = ContinuousMultiwordAlign{c.indices};
                    vars_of[&c - cs.data()].push_back(variable_for(a));
                    g.concepts.push_back({vars_of[&c - cs.data()][0], c.labels[0], a, false});
                    break;
                }
                case AlignKind::DiscontinuousMultiword: {
                    Alignment a = DiscontinuousMultiwordAlign{c.indices};
                    vars_of[&c - cs.data()].push_back(variable_for(a));
                    g.concepts.push_back({vars_of[&c - cs.data()][0], c.labels[0], a, false});
                    break;
                }
                case AlignKind::Split: {
                    for (size_t p = 0; p < c.labels.size(); ++p) {
                        Alignment a = SplitAlign{c.indices[0], static_cast<int>(p) + 1};
                        vars_of[&c - cs.data()].push_back(variable_for(a));
                        g.concepts.push_back({vars_of[&c - cs.data()][p], c.labels[p], a, false});
                    }
                    break;
                }
                case AlignKind::NullAligned:
                    break;
            }
        }
        const std::string root_var = vars_of[root_ci][0];
        g.root = root_var;

        // edges: children hang off the root with distinct relations
        std::vector<std::string> rel_pool = vocab.child_rels;
        auto next_rel = [&]() {
            if (rel_pool.empty()) return std::string("mod");
            size_t i = rng() % rel_pool.size();
            std::string r = rel_pool[i];
            rel_pool.erase(rel_pool.begin() + static_cast<long>(i));
            return r;
        };
        auto add_edge = [&](const std::string& src, const std::string& dst, const std::string& rel) {
            g.edges.push_back({src, dst, rel, std::nullopt});
        };

        if (entity_ci != SIZE_MAX) add_edge(root_var, vars_of[entity_ci][0], next_rel());
        for (size_t nc : noun_children) add_edge(root_var, vars_of[nc][0], next_rel());
        if (disc_ci != SIZE_MAX) {
            add_edge(root_var, vars_of[disc_ci][0], "loc");
            add_edge(vars_of[disc_ci][0], vars_of[disc_inner_ci][0], "op1");
        }
        if (split_a_ci != SIZE_MAX) {
            add_edge(root_var, vars_of[split_a_ci][0], next_rel());
            add_edge(vars_of[split_a_ci][0], vars_of[split_a_ci][1], "arg1");
        }
        if (numeral_ci != SIZE_MAX) {
            const std::string& holder =
                noun_children.empty() ? root_var : vars_of[noun_children[0]][0];
            add_edge(holder, vars_of[numeral_ci][0], "quant");
        }
        if (minus_ci != SIZE_MAX) add_edge(root_var, vars_of[minus_ci][0], "polarity");

        // null-aligned concept pointing at one aligned child
        if (!single_concept && !subject_like.empty() && chance(50)) {
            const size_t target = subject_like[rng() % subject_like.size()];
            g.concepts.push_back({"z1", pick(vocab.null_labels), NullAlign{}, false});
            add_edge(root_var, "z1", next_rel());
            add_edge("z1", vars_of[target][0], "poss");
        }

        // occasional reentrancy between aligned children (earlier -> later)
        if (subject_like.size() >= 2 && chance(25)) {
            const std::string& a = vars_of[subject_like[0]][0];
            const std::string& b = vars_of[subject_like[1]][0];
            bool exists = false;
            for (const auto& e : g.edges)
                if (e.src == a && (e.dst == b || e.rel == "mod")) exists = true;
            if (!exists) add_edge(a, b, "mod");
        }

        // relation alignments: each functional word marks at most one edge,
        // each edge carries at most one marker
        {
            std::vector<size_t> eligible;
            for (size_t ei = 0; ei < g.edges.size(); ++ei) {
                const ConceptNode* dst = g.find_concept(g.edges[ei].dst);
                if (dst && !dst->is_constant) eligible.push_back(ei);
            }
            for (int fp : functional_positions) {
                if (eligible.empty()) break;
                if (!chance(75)) continue;
                size_t k = rng() % eligible.size();
                g.edges[eligible[k]].rel_alignment = fp;
                eligible.erase(eligible.begin() + static_cast<long>(k));
            }
        }

        g.sort_edges();
        g = annotate_triggers(g);

        // canonical concept order: aligned by first word then part, nulls by trigger
        std::stable_sort(g.concepts.begin(), g.concepts.end(),
                         [](const ConceptNode& a, const ConceptNode& b) {
                             const bool na = is_null_aligned(a.alignment), nb = is_null_aligned(b.alignment);
                             if (na != nb) return nb;
                             if (na && nb)
                                 return std::get<NullAlign>(a.alignment).trigger_word <
                                        std::get<NullAlign>(b.alignment).trigger_word;
                             const auto wa = aligned_words(a.alignment), wb = aligned_words(b.alignment);
                             if (wa.front() != wb.front()) return wa.front() < wb.front();
                             const auto* sa = std::get_if<SplitAlign>(&a.alignment);
                             const auto* sb = std::get_if<SplitAlign>(&b.alignment);
                             return sa && sb && sa->part < sb->part;
                         });

        out.manifest.sentences++;
        out.manifest.tokens += static_cast<long>(g.sentence.tokens.size());
        out.manifest.concepts += static_cast<long>(g.concepts.size());
        out.manifest.edges += static_cast<long>(g.edges.size());
        out.manifest.functional_words += static_cast<long>(functional_positions.size());
        out.manifest.constants +=
            static_cast<long>(std::count_if(g.concepts.begin(), g.concepts.end(),
                                            [](const ConceptNode& c) { return c.is_constant; }));
        for (const ConceptNode& c : g.concepts) {
            out.manifest.alignment_counts[kind_of(c.alignment)]++;
            if (is_null_aligned(c.alignment)) out.manifest.null_labels_used.insert(c.label);
        }
        for (const RelationEdge& e : g.edges) {
            out.manifest.relations_used.insert(e.rel);
            if (e.rel_alignment) out.manifest.rel_alignments++;
        }

        out.document.entries.push_back(make_entry(std::move(g)));
    }
    return out;
}

}  // namespace camr
