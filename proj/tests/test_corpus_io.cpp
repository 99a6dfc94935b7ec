#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "camr/corpus_io.hpp"
#include "camr/synthetic.hpp"
#include "fixtures.hpp"

using namespace camr;

TEST_CASE("empty stream parses to an empty document") {
    CHECK(parse_corpus(std::string_view("")).entries.empty());
    CHECK(parse_corpus(std::string_view("\n\n\n")).entries.empty());
    CHECK(serialize_corpus(CorpusDocument{}) == "");
}

TEST_CASE("qiantang example survives a serialize/parse cycle") {
    CorpusDocument doc;
    doc.entries.push_back(make_entry(fixtures::qiantang_graph()));
    const std::string text = serialize_corpus(doc);
    CorpusDocument back = parse_corpus(std::string_view(text));
    REQUIRE(back.entries.size() == 1);
    CHECK(back == doc);
    CHECK(serialize_corpus(back) == text);
}

TEST_CASE("single-concept graph serializes to one instance and one root line") {
    CorpusDocument doc;
    doc.entries.push_back(make_entry(fixtures::single_concept_graph()));
    const std::string text = serialize_corpus(doc);
    CHECK(text.find("instance x1 奇观 | align=1 kind=direct\n") != std::string::npos);
    CHECK(text.find("root x1\n") != std::string::npos);
    int instances = 0, roots = 0;
    for (const auto& line : str::split(text, '\n')) {
        if (str::starts_with(line, "instance")) ++instances;
        if (str::starts_with(line, "root")) ++roots;
    }
    CHECK(instances == 1);
    CHECK(roots == 1);
}

TEST_CASE("serialization is deterministic") {
    auto syn = generate_synthetic({.sentences = 25, .seed = 9});
    CHECK(serialize_corpus(syn.document) == serialize_corpus(syn.document));
}

TEST_CASE("constants appear as attribute lines") {
    AmrGraph g;
    g.sentence.id = "const-1";
    g.sentence.tokens = {{1, "学生", false}, {2, "一万", false}};
    g.concepts = {
        {"x1", "学生", DirectAlign{1}, false},
        {"x2", "10000", NormalizationAlign{2, "一万"}, true},
    };
    g.edges = {{"x1", "x2", "quant", std::nullopt}};
    g.root = "x1";

    CorpusDocument doc;
    doc.entries.push_back(make_entry(g));
    const std::string text = serialize_corpus(doc);
    CHECK(text.find("attribute x1 quant 10000 | align=2 kind=norm form=一万\n") != std::string::npos);
    CHECK(text.find("relation") == std::string::npos);
    CHECK(parse_corpus(std::string_view(text)) == doc);

    SECTION("edge-less constants fall back to flagged instance lines") {
        AmrGraph lone;
        lone.sentence.id = "const-2";
        lone.sentence.tokens = {{1, "一万", false}};
        lone.concepts = {{"x1", "10000", NormalizationAlign{1, "一万"}, true}};
        lone.root = "x1";
        CorpusDocument d2;
        d2.entries.push_back(make_entry(lone));
        const std::string t2 = serialize_corpus(d2);
        CHECK(t2.find("instance x1 10000 | align=1 kind=norm form=一万 const=1\n") != std::string::npos);
        CHECK(parse_corpus(std::string_view(t2)) == d2);
    }
}

TEST_CASE("sentence-only blocks round-trip") {
    CorpusDocument doc;
    Sentence s{"plain-1", {{1, "今天", false}, {2, "真", false}, {3, "好", false}}};
    doc.entries.push_back({s, std::nullopt});
    doc.entries.push_back(make_entry(fixtures::single_concept_graph()));
    const std::string text = serialize_corpus(doc);
    CHECK(parse_corpus(std::string_view(text)) == doc);
}

TEST_CASE("parse errors carry positions") {
    SECTION("dangling variable reference") {
        const std::string text =
            "#id a\n#snt 天\ninstance x1 天 | align=1 kind=direct\nrelation x1 mod z9\nroot x1\n";
        try {
            parse_corpus(std::string_view(text));
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 4);
            CHECK(std::string(e.what()).find("z9") != std::string::npos);
        }
    }
    SECTION("duplicate sentence id") {
        const std::string text = "#id a\n#snt 天\n\n#id a\n#snt 地\n";
        try {
            parse_corpus(std::string_view(text));
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 4);
        }
    }
    SECTION("unknown triple kind") {
        const std::string text = "#id a\n#snt 天\nfrobnicate x1 天\nroot x1\n";
        CHECK_THROWS_AS(parse_corpus(std::string_view(text)), ParseError);
    }
    SECTION("malformed header") {
        CHECK_THROWS_AS(parse_corpus(std::string_view("#identifier a\n#snt 天\n")), ParseError);
    }
    SECTION("multi-root annotations are rejected") {
        const std::string text =
            "#id a\n#snt 天 地\ninstance x1 天 | align=1 kind=direct\ninstance x2 地 | align=2 "
            "kind=direct\nroot x1\nroot x2\n";
        CHECK_THROWS_AS(parse_corpus(std::string_view(text)), ParseError);
    }
    SECTION("invalid UTF-8") {
        std::string text = "#id a\n#snt \xFF\xFE\n";
        CHECK_THROWS_AS(parse_corpus(std::string_view(text)), ParseError);
    }
    SECTION("graph violating invariants is rejected at parse time") {
        // x2 claims word 1 as well
        const std::string text =
            "#id a\n#snt 天\ninstance x1 天 | align=1 kind=direct\ninstance x2 地 | align=1 "
            "kind=direct\nroot x1\n";
        CHECK_THROWS_AS(parse_corpus(std::string_view(text)), ParseError);
    }
}

TEST_CASE("round-trip identity on 1000 generated graphs") {
    auto syn = generate_synthetic({.sentences = 1000, .seed = 20260810});
    REQUIRE(syn.document.entries.size() == 1000);
    const std::string text = serialize_corpus(syn.document);
    CorpusDocument back = parse_corpus(std::string_view(text));
    REQUIRE(back.entries.size() == syn.document.entries.size());
    for (size_t i = 0; i < back.entries.size(); ++i) {
        CAPTURE(i, syn.document.entries[i].sentence.id);
        REQUIRE(back.entries[i] == syn.document.entries[i]);
    }
    CHECK(serialize_corpus(back) == text);
}

TEST_CASE("parser survives arbitrary bytes") {
    std::mt19937_64 rng(99);
    auto syn = generate_synthetic({.sentences = 5, .seed = 3});
    const std::string base = serialize_corpus(syn.document);

    for (int iter = 0; iter < 400; ++iter) {
        std::string text;
        if (iter % 2 == 0) {
            const size_t n = rng() % 200;
            for (size_t i = 0; i < n; ++i) text += static_cast<char>(rng() % 256);
        } else {
            text = base;
            const size_t edits = 1 + rng() % 8;
            for (size_t e = 0; e < edits && !text.empty(); ++e) {
                size_t pos = rng() % text.size();
                switch (rng() % 3) {
                    case 0: text[pos] = static_cast<char>(rng() % 256); break;
                    case 1: text.erase(pos, 1); break;
                    case 2: text.insert(pos, 1, static_cast<char>(rng() % 128)); break;
                }
            }
        }
        try {
            auto doc = parse_corpus(std::string_view(text));
            (void)doc;
        } catch (const ParseError&) {
            // positioned failure is the contract
        }
    }
    SUCCEED("no crashes or foreign exceptions");
}
