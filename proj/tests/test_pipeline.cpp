#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "camr/pipeline.hpp"

using namespace camr;

namespace {

bool valid_after_drop(AmrGraph g, size_t edge_index) {
    g.edges.erase(g.edges.begin() + static_cast<long>(edge_index));
    return validate_graph(g).empty();
}

Resources synthetic_resources(const SyntheticCorpus& syn, const PipelineConfig& cfg) {
    Resources res;
    res.dicts = build_dictionaries(syn.document.graphs());
    res.dicts.special_map = syn.special_map;
    res.dicts.phon_codes = syn.phon_codes;
    res.dicts.calli_codes = syn.calli_codes;
    res.split_lexicon = syn.split_lexicon;
    res.null_inventory = null_inventory_from_corpus(syn.document.graphs());
    res.relation_inventory = {syn.relation_inventory};
    res.provider = make_provider(cfg);
    return res;
}

}  // namespace

TEST_CASE("config defaults follow the published hyper-parameters") {
    PipelineConfig cfg;
    CHECK(cfg.surface.batch_size == 10);
    CHECK(cfg.surface.learning_rate == 2e-5);
    CHECK(cfg.normalization.batch_size == 40);
    CHECK(cfg.normalization.learning_rate == 3e-5);
    CHECK(cfg.null_concept.batch_size == 30);
    CHECK(cfg.null_concept.learning_rate == 3e-5);
    CHECK(cfg.relation.batch_size == 50);
    CHECK(cfg.relation.learning_rate == 7e-5);
    for (const TrainConfig* tc : {&cfg.surface, &cfg.normalization, &cfg.null_concept, &cfg.relation}) {
        CHECK(tc->epochs == 100);
        CHECK(tc->warmup_fraction == 0.01);
    }
}

TEST_CASE("config json round-trip") {
    PipelineConfig cfg;
    cfg.seed = 7;
    cfg.paths.train = "a.camr";
    cfg.embedding.dim = 24;
    cfg.relation.learning_rate = 1e-3;
    cfg.scorer.mode = AlignMode::Ignore;
    const json j = config_to_json(cfg);
    PipelineConfig back = config_from_json(j);
    CHECK(config_to_json(back) == j);
    CHECK(back.scorer.mode == AlignMode::Ignore);

    CHECK_THROWS_AS(config_from_json(json{{"seed", 3}}), ConfigError);  // missing version
}

TEST_CASE("corpus statistics match the generator manifest") {
    auto syn = generate_synthetic({.sentences = 80, .seed = 14});
    StatsReport r = cmd_stats(syn.document);
    CHECK(r.sentences == syn.manifest.sentences);
    CHECK(r.tokens == syn.manifest.tokens);
    CHECK(r.concepts == syn.manifest.concepts);
    CHECK(r.edges == syn.manifest.edges);
    CHECK(r.rel_alignments == syn.manifest.rel_alignments);
    CHECK(r.null_inventory_size == static_cast<long>(syn.manifest.null_labels_used.size()));
    CHECK(r.relation_inventory_size == static_cast<long>(syn.manifest.relations_used.size()));
    REQUIRE(r.alignment.has_value());
    for (auto& [kind, n] : syn.manifest.alignment_counts) CHECK(r.alignment->counts.at(kind) == n);

    SECTION("empty corpus reports zeros") {
        StatsReport empty = cmd_stats(CorpusDocument{});
        CHECK(empty.sentences == 0);
        CHECK(empty.tokens == 0);
        CHECK_FALSE(empty.alignment.has_value());
        CHECK(stats_tsv(empty).find("sentences\t0") != std::string::npos);
    }
}

TEST_CASE("teacher forcing datasets come from gold graphs") {
    auto syn = generate_synthetic({.sentences = 40, .seed = 15});
    PipelineConfig cfg;
    Resources res = synthetic_resources(syn, cfg);
    PreparedData data = prepare_datasets(syn.document.graphs(), res);

    CHECK(data.skipped.empty());
    REQUIRE(data.surface.examples.size() == 40);
    REQUIRE(data.relation.examples.size() == 40);
    CHECK(data.surface.classes == 8);
    CHECK(data.norm.classes == 2);
    CHECK(data.nullc.classes == res.null_inventory.classes());
    CHECK(data.relation.classes == res.relation_inventory.classes());

    // the relation grid must be the gold matrix, not a prediction
    const AmrGraph& g0 = *syn.document.entries[0].graph;
    RelationMatrix m0 = encode_matrix(g0);
    const auto& ex0 = data.relation.examples[0];
    REQUIRE(static_cast<int>(ex0.units.size()) == m0.items());
    for (int i = 0; i < m0.items(); ++i)
        for (int j = 0; j < m0.items(); ++j) {
            const int id = ex0.gold[static_cast<size_t>(i * m0.items() + j)];
            CHECK(res.relation_inventory.label_of(id) == m0.at(i, j));
        }
}

TEST_CASE("full oracle injection reproduces gold graphs") {
    auto syn = generate_synthetic({.sentences = 60, .seed = 16});
    PipelineConfig cfg;
    Resources res = synthetic_resources(syn, cfg);

    OracleRoundTrip rt = cmd_oracle_roundtrip(syn.document, res, cfg);
    CHECK(rt.sentences == 60);
    CHECK(rt.concept_exact == 60);
    CHECK(rt.score.overall.precision() == 1.0);
    CHECK(rt.score.overall.recall() == 1.0);
    CHECK(rt.score.overall.f1() == 1.0);
}

TEST_CASE("prediction edge cases") {
    auto syn = generate_synthetic({.sentences = 10, .seed = 17});
    PipelineConfig cfg;
    Resources res = synthetic_resources(syn, cfg);
    TrainedHeads untrained;  // placeholder shapes, wrong dims would throw
    untrained.surface = LinearTagHead::zeros(res.provider->dim(), kSurfaceTagCount);
    untrained.norm = LinearTagHead::zeros(res.provider->dim(), kNormTagCount);
    untrained.nullc = LinearTagHead::zeros(res.provider->dim(), res.null_inventory.classes());
    untrained.relation = BiaffineHead::zeros(res.provider->dim(), res.relation_inventory.classes(),
                                             cfg.embedding.rnn_hidden);

    SECTION("empty sentence list gives empty output") {
        PredictOutcome p = cmd_predict({}, res, untrained, cfg);
        CHECK(p.predictions.entries.empty());
        CHECK(p.diagnostics.empty());
    }
    SECTION("all-O predictions fall back to a single-concept graph") {
        // zero heads predict class 0 (= O) everywhere
        Sentence s = syn.document.entries[0].sentence;
        PredictOutcome p = cmd_predict({s}, res, untrained, cfg);
        REQUIRE(p.predictions.entries.size() == 1);
        const AmrGraph& g = *p.predictions.entries[0].graph;
        CHECK(g.concepts.size() == 1);
        CHECK(g.concepts[0].label == cfg.predict.fallback_concept);
        CHECK(validate_graph(g).empty());
        CHECK(p.diagnostics[0]["fallback"] == true);
    }
    SECTION("every emitted graph passes validation") {
        std::vector<Sentence> sentences;
        for (const auto& e : syn.document.entries) sentences.push_back(e.sentence);
        PredictOutcome p = cmd_predict(sentences, res, untrained, cfg);
        for (const auto& e : p.predictions.entries) {
            REQUIRE(e.graph.has_value());
            CHECK(validate_graph(*e.graph).empty());
        }
    }
}

TEST_CASE("scoring a corpus against itself and against an edited copy") {
    auto syn = generate_synthetic({.sentences = 25, .seed = 18});
    MatchOptions opt{16, 5, AlignMode::Exact};

    ScoreReport self = cmd_score(syn.document, syn.document, opt);
    CHECK(self.overall.f1() == 1.0);
    CHECK(self.instance.f1() == 1.0);
    CHECK(self.attribute.f1() == 1.0);
    CHECK(self.relation.f1() == 1.0);

    SECTION("removing one relation lowers relation recall by one over the total") {
        CorpusDocument pred = syn.document;
        long gold_units = self.relation.gold_total;
        // find a sentence with an alignment-free relation edge and drop it
        bool dropped = false;
        for (auto& entry : pred.entries) {
            if (dropped || !entry.graph) continue;
            AmrGraph g = *entry.graph;
            for (size_t i = 0; i < g.edges.size(); ++i) {
                const ConceptNode* dst = g.find_concept(g.edges[i].dst);
                if (!g.edges[i].rel_alignment && dst && !dst->is_constant &&
                    valid_after_drop(g, i)) {
                    g.edges.erase(g.edges.begin() + static_cast<long>(i));
                    entry.graph = g;
                    dropped = true;
                    break;
                }
            }
        }
        REQUIRE(dropped);
        ScoreReport edited = cmd_score(pred, syn.document, opt);
        CHECK(edited.relation.matched == gold_units - 1);
        CHECK(edited.relation.recall() ==
              Catch::Approx(static_cast<double>(gold_units - 1) / static_cast<double>(gold_units)));
    }
    SECTION("id mismatch is an error") {
        CorpusDocument pred = syn.document;
        pred.entries[0].sentence.id = "nope";
        pred.entries[0].graph->sentence.id = "nope";
        CHECK_THROWS_AS(cmd_score(pred, syn.document, opt), DataError);
    }
}

TEST_CASE("training on a toy corpus improves the dev pipeline score") {
    auto train_syn = generate_synthetic({.sentences = 20, .seed = 19});
    auto dev_syn = generate_synthetic({.sentences = 12, .seed = 20});

    PipelineConfig cfg;
    cfg.seed = 5;
    cfg.embedding.dim = 24;
    cfg.embedding.rnn_hidden = 8;
    for (TrainConfig* tc : {&cfg.surface, &cfg.normalization, &cfg.null_concept, &cfg.relation}) {
        tc->epochs = 30;
        tc->batch_size = 4;
        tc->learning_rate = 0.25;
        tc->warmup_fraction = 0.0;
    }
    cfg.relation.learning_rate = 0.1;
    cfg.scorer.restarts = 8;

    Resources res = synthetic_resources(train_syn, cfg);
    TrainOutcome out = cmd_train(cfg, train_syn.document, dev_syn.document, res);

    REQUIRE(out.report["curve"].size() == 30);
    const double first = out.report["curve"][0]["dev_align_smatch_f1"].get<double>();
    const double best = out.report["best_dev_align_smatch_f1"].get<double>();
    INFO("epoch1 " << first << " best " << best);
    CHECK(best > first);
    CHECK(out.best_epoch >= 0);
}

TEST_CASE("zero training epochs still emit a working pipeline") {
    auto syn = generate_synthetic({.sentences = 8, .seed = 22});
    PipelineConfig cfg;
    for (TrainConfig* tc : {&cfg.surface, &cfg.normalization, &cfg.null_concept, &cfg.relation})
        tc->epochs = 0;
    Resources res = synthetic_resources(syn, cfg);
    TrainOutcome out = cmd_train(cfg, syn.document, CorpusDocument{}, res);
    CHECK(out.report["curve"].empty());

    std::vector<Sentence> sentences{syn.document.entries[0].sentence};
    PredictOutcome p = cmd_predict(sentences, res, out.final_heads, cfg);
    REQUIRE(p.predictions.entries.size() == 1);
    CHECK(validate_graph(*p.predictions.entries[0].graph).empty());
}

TEST_CASE("training reruns are byte-identical") {
    namespace fs = std::filesystem;
    auto syn = generate_synthetic({.sentences = 10, .seed = 23});
    PipelineConfig cfg;
    cfg.seed = 9;
    cfg.embedding.dim = 16;
    cfg.embedding.rnn_hidden = 4;
    for (TrainConfig* tc : {&cfg.surface, &cfg.normalization, &cfg.null_concept, &cfg.relation}) {
        tc->epochs = 3;
        tc->batch_size = 4;
        tc->learning_rate = 0.05;
    }
    Resources res = synthetic_resources(syn, cfg);

    const fs::path dir = fs::temp_directory_path() / "camr_pipeline_test";
    fs::create_directories(dir);
    auto run = [&](const std::string& name) {
        TrainOutcome out = cmd_train(cfg, syn.document, syn.document, res);
        save_heads((dir / name).string(), out.final_heads, cfg.seed, "{}");
        std::ostringstream all;
        for (const char* f : {"surface.ckpt", "normalization.ckpt", "null_concept.ckpt", "relation.ckpt"}) {
            std::ifstream in(dir / name / f, std::ios::binary);
            all << in.rdbuf();
        }
        return all.str();
    };
    CHECK(run("a") == run("b"));
}

TEST_CASE("gen-synthetic writes a loadable resource bundle") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "camr_gen_test";
    fs::remove_all(dir);
    cmd_gen_synthetic({.sentences = 15, .seed = 31}, dir.string());

    for (const char* f : {"corpus.camr", "split_lexicon.tsv", "special_map.tsv",
                          "codes_phonological.tsv", "codes_calligraphic.tsv", "relations.txt",
                          "null_concepts.txt", "manifest.json"})
        CHECK(fs::exists(dir / f));

    std::ifstream in(dir / "corpus.camr", std::ios::binary);
    CorpusDocument doc = parse_corpus(in);
    CHECK(doc.entries.size() == 15);

    std::ifstream min(dir / "manifest.json");
    json manifest;
    min >> manifest;
    CHECK(manifest["sentences"] == 15);
    StatsReport st = cmd_stats(doc);
    CHECK(st.tokens == manifest["tokens"].get<long>());
}
