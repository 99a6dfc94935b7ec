#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "camr/smatch.hpp"
#include "camr/synthetic.hpp"
#include "fixtures.hpp"

using namespace camr;

TEST_CASE("extract_triples shapes") {
    SECTION("single concept gives one instance and the root attribute") {
        TripleBag bag = extract_triples(fixtures::single_concept_graph());
        REQUIRE(bag.instances.size() == 1);
        CHECK(bag.instances[0] == InstanceTriple{"x1", "奇观", {1}});
        REQUIRE(bag.attributes.size() == 1);
        CHECK(bag.attributes[0] == AttributeTriple{"x1", "top", "奇观"});
        CHECK(bag.relations.empty());
    }
    SECTION("qiantang example") {
        TripleBag bag = extract_triples(fixtures::qiantang_graph());
        CHECK(bag.instances.size() == 4);
        REQUIRE(bag.attributes.size() == 1);
        CHECK(bag.attributes[0].name == "top");
        REQUIRE(bag.relations.size() == 4);
        int with_payload = 0;
        for (const auto& r : bag.relations)
            if (r.rel_align) {
                ++with_payload;
                CHECK(r.rel == "arg1");
                CHECK(*r.rel_align == 3);
            }
        CHECK(with_payload == 1);
        // the null-aligned instance has an empty payload
        for (const auto& t : bag.instances)
            if (t.var == "z1") CHECK(t.align.empty());
    }
    SECTION("constants become attribute triples") {
        AmrGraph g;
        g.sentence.tokens = {{1, "学生", false}, {2, "一万", false}};
        g.concepts = {{"x1", "学生", DirectAlign{1}, false},
                      {"x2", "10000", NormalizationAlign{2, "一万"}, true}};
        g.edges = {{"x1", "x2", "quant", std::nullopt}};
        g.root = "x1";
        TripleBag bag = extract_triples(g);
        CHECK(bag.instances.size() == 1);
        CHECK(bag.relations.empty());
        REQUIRE(bag.attributes.size() == 2);
        CHECK(bag.attributes[1] == AttributeTriple{"x1", "quant", "10000"});
    }
}

TEST_CASE("self-score is exactly one") {
    auto syn = generate_synthetic({.sentences = 30, .seed = 21});
    for (const auto& entry : syn.document.entries) {
        TripleBag bag = extract_triples(*entry.graph);
        MatchResult r = match_score(bag, bag, {.restarts = 16, .seed = 1});
        CAPTURE(entry.sentence.id);
        REQUIRE(r.overall.precision() == 1.0);
        REQUIRE(r.overall.recall() == 1.0);
        REQUIRE(r.overall.f1() == 1.0);
    }
}

TEST_CASE("scores are invariant under variable renaming") {
    TripleBag gold = extract_triples(fixtures::qiantang_graph());
    TripleBag pred = gold;
    std::map<std::string, std::string> rename{
        {"x1_2", "a"}, {"x4", "b"}, {"x6", "c"}, {"z1", "d"}};
    auto rn = [&](std::string& v) {
        if (auto it = rename.find(v); it != rename.end()) v = it->second;
    };
    for (auto& t : pred.instances) rn(t.var);
    for (auto& t : pred.attributes) rn(t.var);
    for (auto& t : pred.relations) {
        rn(t.src);
        rn(t.dst);
    }
    MatchResult r = match_score(pred, gold, {.restarts = 16, .seed = 3});
    CHECK(r.overall.f1() == 1.0);
    CHECK(r.mapping.at("a") == "x1_2");
    CHECK(r.mapping.at("d") == "z1");
}

TEST_CASE("missing relation lowers recall by exactly one unit") {
    TripleBag gold = extract_triples(fixtures::qiantang_graph());
    TripleBag pred = gold;
    // drop an alignment-free relation (x4 arg0 x6): one unit
    std::erase_if(pred.relations, [](const RelationTriple& t) { return t.rel == "arg0"; });

    MatchResult r = match_score(pred, gold, {.restarts = 16, .seed = 5});
    // gold relation units: 3 plain + 1 aligned = 3*1 + 2 = 5
    CHECK(r.fine.relation.gold_total == 5);
    CHECK(r.fine.relation.pred_total == 4);
    CHECK(r.fine.relation.matched == 4);
    CHECK(r.fine.relation.precision() == 1.0);
    CHECK(r.fine.relation.recall() == Catch::Approx(4.0 / 5.0));
    CHECK(r.fine.instance.f1() == 1.0);
    CHECK(r.fine.attribute.f1() == 1.0);
}

TEST_CASE("unpredicted relation alignments hurt recall more than precision") {
    TripleBag gold = extract_triples(fixtures::qiantang_graph());
    TripleBag pred = gold;
    for (auto& t : pred.relations) t.rel_align.reset();

    MatchResult r = match_score(pred, gold, {.restarts = 16, .seed = 7});
    FineGrained f = fine_grained(pred, gold, r.mapping);
    CHECK(f.instance.f1() == 1.0);
    CHECK(f.attribute.f1() == 1.0);
    CHECK(f.relation.precision() == 1.0);          // every base unit matches
    CHECK(f.relation.recall() == Catch::Approx(4.0 / 5.0));
    CHECK(f.relation.recall() < f.relation.precision());
}

TEST_CASE("a wrong relation alignment forfeits the whole triple") {
    TripleBag gold;
    gold.instances = {{"a", "甲", {1}}, {"b", "乙", {2}}};
    gold.relations = {{"a", "arg1", "b", 3}};
    TripleBag pred = gold;
    pred.relations[0].rel_align = 4;

    MatchResult r = match_score(pred, gold, {.restarts = 8, .seed = 1});
    CHECK(r.fine.relation.matched == 0);
    CHECK(r.fine.instance.matched == 2);

    SECTION("alignment payloads can be ignored to recover classic smatch") {
        MatchResult loose = match_score(pred, gold, {.restarts = 8, .seed = 1, .mode = AlignMode::Ignore});
        CHECK(loose.overall.f1() == 1.0);
    }
}

TEST_CASE("instance payloads must match exactly") {
    TripleBag gold;
    gold.instances = {{"a", "甲", {1, 2}}};
    gold.attributes = {{"a", "top", "甲"}};
    TripleBag pred = gold;
    pred.instances[0].align = {1};

    MatchResult r = match_score(pred, gold, {.restarts = 8, .seed = 1});
    CHECK(r.fine.instance.matched == 0);
    CHECK(r.fine.attribute.matched == 1);
    CHECK(match_score(pred, gold, {.restarts = 8, .seed = 1, .mode = AlignMode::Ignore})
              .fine.instance.matched == 1);
}

TEST_CASE("degenerate bags") {
    TripleBag empty;
    MatchResult r = match_score(empty, empty, {.restarts = 4, .seed = 0});
    CHECK(r.overall.precision() == 1.0);
    CHECK(r.overall.recall() == 1.0);
    CHECK(r.overall.f1() == 1.0);

    TripleBag one;
    one.instances = {{"a", "甲", {}}};
    CHECK(match_score(one, empty, {.restarts = 4, .seed = 0}).overall.f1() == 0.0);
    CHECK(match_score(empty, one, {.restarts = 4, .seed = 0}).overall.f1() == 0.0);

    SECTION("disjoint labels match nothing") {
        TripleBag a, b;
        a.instances = {{"p", "甲", {}}};
        b.instances = {{"q", "乙", {}}};
        CHECK(match_score(a, b, {.restarts = 4, .seed = 0}).overall.matched == 0);
    }
}

// ---------------------------------------------------------------------------

namespace {

TripleBag random_bag(std::mt19937_64& rng, int max_vars) {
    static const std::vector<std::string> labels{"甲", "乙", "丙"};
    static const std::vector<std::string> rels{"arg0", "arg1", "mod"};
    TripleBag bag;
    const int n = 1 + static_cast<int>(rng() % static_cast<uint64_t>(max_vars));
    for (int i = 0; i < n; ++i) {
        std::vector<int> payload;
        for (int w = 1; w <= 3; ++w)
            if (rng() % 3 == 0) payload.push_back(w);
        bag.instances.push_back({"v" + std::to_string(i), labels[rng() % labels.size()], payload});
    }
    const int n_attr = static_cast<int>(rng() % 3);
    for (int i = 0; i < n_attr; ++i)
        bag.attributes.push_back({"v" + std::to_string(rng() % static_cast<uint64_t>(n)),
                                  rng() % 2 ? "top" : "quant", rng() % 2 ? "1" : "-"});
    const int n_rel = static_cast<int>(rng() % static_cast<uint64_t>(n + 2));
    for (int i = 0; i < n_rel; ++i) {
        std::string src = "v" + std::to_string(rng() % static_cast<uint64_t>(n));
        std::string dst = "v" + std::to_string(rng() % static_cast<uint64_t>(n));
        if (src == dst) continue;
        std::optional<int> ra;
        if (rng() % 3 == 0) ra = 1 + static_cast<int>(rng() % 4);
        bag.relations.push_back({src, rels[rng() % rels.size()], dst, ra});
    }
    return bag;
}

TripleBag mutate(TripleBag bag, std::mt19937_64& rng) {
    // random var renaming plus a few structural edits
    std::map<std::string, std::string> rename;
    int k = 0;
    for (const auto& v : bag.variables()) rename[v] = "m" + std::to_string(k++);
    for (auto& t : bag.instances) t.var = rename[t.var];
    for (auto& t : bag.attributes) t.var = rename[t.var];
    for (auto& t : bag.relations) {
        t.src = rename[t.src];
        t.dst = rename[t.dst];
    }
    if (!bag.relations.empty() && rng() % 2)
        bag.relations.erase(bag.relations.begin() + static_cast<long>(rng() % bag.relations.size()));
    if (!bag.instances.empty() && rng() % 3 == 0)
        bag.instances[rng() % bag.instances.size()].label = "丁";
    if (!bag.relations.empty() && rng() % 3 == 0)
        bag.relations[rng() % bag.relations.size()].rel_align.reset();
    return bag;
}

}  // namespace

TEST_CASE("hill climbing matches the exhaustive optimum") {
    std::mt19937_64 rng(20260810);
    int agree = 0;
    const int trials = 500;
    for (int t = 0; t < trials; ++t) {
        TripleBag gold = random_bag(rng, 6);
        TripleBag pred = t % 2 == 0 ? mutate(gold, rng) : random_bag(rng, 6);

        MatchResult hc = match_score(pred, gold, {.restarts = 16, .seed = rng()});
        MatchResult bf = brute_force_score(pred, gold);
        REQUIRE(hc.overall.matched <= bf.overall.matched);  // never above the optimum
        if (hc.overall.matched == bf.overall.matched) ++agree;
    }
    INFO("agreement " << agree << "/" << trials);
    CHECK(agree >= 495);  // >= 99%
}

TEST_CASE("optimum is symmetric up to swapping precision and recall") {
    std::mt19937_64 rng(31);
    for (int t = 0; t < 120; ++t) {
        TripleBag a = random_bag(rng, 5);
        TripleBag b = random_bag(rng, 5);
        MatchResult ab = brute_force_score(a, b);
        MatchResult ba = brute_force_score(b, a);
        REQUIRE(ab.overall.matched == ba.overall.matched);
        REQUIRE(ab.overall.precision() == ba.overall.recall());
        REQUIRE(ab.overall.recall() == ba.overall.precision());
        REQUIRE(ab.overall.f1() == Catch::Approx(ba.overall.f1()));
    }
}

TEST_CASE("adding an unmatched triple never increases precision") {
    std::mt19937_64 rng(37);
    for (int t = 0; t < 120; ++t) {
        TripleBag gold = random_bag(rng, 4);
        TripleBag pred = mutate(gold, rng);
        const double before = brute_force_score(pred, gold).overall.precision();
        pred.instances.push_back({"extra", "不存在", {9}});
        const double after = brute_force_score(pred, gold).overall.precision();
        REQUIRE(after <= before + 1e-12);
    }
}

TEST_CASE("match_score is deterministic under a fixed seed") {
    std::mt19937_64 rng(41);
    TripleBag gold = random_bag(rng, 6);
    TripleBag pred = random_bag(rng, 6);
    MatchResult a = match_score(pred, gold, {.restarts = 16, .seed = 123});
    MatchResult b = match_score(pred, gold, {.restarts = 16, .seed = 123});
    CHECK(a.overall.matched == b.overall.matched);
    CHECK(a.mapping == b.mapping);
}

TEST_CASE("fine grained rows are all one for identical graphs") {
    TripleBag bag = extract_triples(fixtures::qiantang_graph());
    MatchResult r = match_score(bag, bag, {.restarts = 8, .seed = 2});
    FineGrained f = fine_grained(bag, bag, r.mapping);
    for (const CategoryCounts* c : {&f.instance, &f.attribute, &f.relation}) {
        CHECK(c->precision() == 1.0);
        CHECK(c->recall() == 1.0);
    }
}
