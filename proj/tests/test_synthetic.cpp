#include <catch2/catch_amalgamated.hpp>

#include "camr/corpus_io.hpp"
#include "camr/synthetic.hpp"

using namespace camr;

TEST_CASE("generated corpora are valid and cover every alignment variant") {
    auto syn = generate_synthetic({.sentences = 150, .seed = 4});
    std::set<std::string> inv(syn.relation_inventory.begin(), syn.relation_inventory.end());

    long concepts = 0, edges = 0, tokens = 0;
    for (const auto& entry : syn.document.entries) {
        REQUIRE(entry.graph.has_value());
        auto vs = validate_graph(*entry.graph, &inv);
        for (const auto& v : vs) UNSCOPED_INFO(entry.sentence.id << ": " << v.rule << " " << v.where);
        REQUIRE(vs.empty());
        concepts += static_cast<long>(entry.graph->concepts.size());
        edges += static_cast<long>(entry.graph->edges.size());
        tokens += static_cast<long>(entry.sentence.tokens.size());
    }
    CHECK(concepts == syn.manifest.concepts);
    CHECK(edges == syn.manifest.edges);
    CHECK(tokens == syn.manifest.tokens);
    CHECK(syn.manifest.sentences == 150);

    auto st = alignment_stats(syn.document.graphs());
    for (int k = 0; k < 6; ++k) {
        AlignKind kind = static_cast<AlignKind>(k);
        CAPTURE(k);
        CHECK(syn.manifest.alignment_counts.at(kind) > 0);
        CHECK(st.counts.at(kind) == syn.manifest.alignment_counts.at(kind));
    }
    CHECK(st.total_concepts == syn.manifest.concepts);

    double frac_sum = 0;
    for (auto& [k, n] : st.counts) frac_sum += st.fraction(k);
    CHECK(frac_sum == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("generation is deterministic under a fixed seed") {
    auto a = generate_synthetic({.sentences = 40, .seed = 77});
    auto b = generate_synthetic({.sentences = 40, .seed = 77});
    CHECK(serialize_corpus(a.document) == serialize_corpus(b.document));
    auto c = generate_synthetic({.sentences = 40, .seed = 78});
    CHECK(serialize_corpus(a.document) != serialize_corpus(c.document));
}

TEST_CASE("numeral words in the corpus agree with number normalization") {
    auto syn = generate_synthetic({.sentences = 120, .seed = 5});
    int checked = 0;
    for (const auto& entry : syn.document.entries) {
        for (const auto& c : entry.graph->concepts) {
            if (!c.is_constant || c.label == "-") continue;
            const auto* n = std::get_if<NormalizationAlign>(&c.alignment);
            REQUIRE(n != nullptr);
            CHECK(normalize_number(n->surface_form) == c.label);
            ++checked;
        }
    }
    CHECK(checked > 0);
}

TEST_CASE("oracle tag round-trip reproduces the whole synthetic corpus") {
    auto syn = generate_synthetic({.sentences = 200, .seed = 6});
    auto graphs = syn.document.graphs();
    NormalizationDictionaries dicts = build_dictionaries(graphs);
    dicts.special_map = syn.special_map;

    for (const auto& g : graphs) {
        CAPTURE(g.sentence.id);
        TagSequences t = encode_tags(g);
        REQUIRE(t.surface.size() == g.sentence.tokens.size());

        auto stage1 = decode_surface(g.sentence, t.surface, t.norm, syn.split_lexicon, dicts);
        auto nulls = decode_null_concepts(g.sentence, t.nullc, stage1.concepts);
        std::vector<ConceptNode> decoded = stage1.concepts;
        decoded.insert(decoded.end(), nulls.begin(), nulls.end());

        REQUIRE(decoded == g.concepts);
        REQUIRE(stage1.functional_words == g.sentence.functional_indices());
        CHECK(stage1.bio_repairs == 0);
    }
}
