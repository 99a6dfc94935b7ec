#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "camr/common.hpp"
#include "camr/corpus_io.hpp"
#include "camr/embeddings.hpp"
#include "camr/graph.hpp"
#include "camr/heads.hpp"
#include "camr/normalize.hpp"
#include "camr/relation_matrix.hpp"
#include "camr/smatch.hpp"
#include "camr/synthetic.hpp"
#include "camr/tags.hpp"
#include "camr/train.hpp"

namespace camr {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration. One versioned JSON file; CLI flags override individual keys.

struct PipelineConfig {
    uint64_t seed = 42;

    struct Paths {
        std::string train, dev;
        std::string out_dir = "out";
        std::string relations, null_concepts, split_lexicon;
        std::string special_map, freq_map, phon_codes, calli_codes, error_lexicon;
        std::string embeddings;
    } paths;

    struct Embedding {
        std::string provider = "hash";  // hash | table
        int dim = 32;
        int provider_rnn_hidden = 0;  // >0 wraps the provider in a fixed recurrent encoder
        int rnn_hidden = 16;          // trainable context in the relation head
    } embedding;

    TrainConfig surface;        // batch 10, lr 2e-5
    TrainConfig normalization;  // batch 40, lr 3e-5
    TrainConfig null_concept;   // batch 30, lr 3e-5
    TrainConfig relation;       // batch 50, lr 7e-5

    std::string class_weighting = "none";  // none | inverse_freq

    struct Scorer {
        int restarts = 16;
        uint64_t seed = 1;
        AlignMode mode = AlignMode::Exact;
    } scorer;

    struct Predict {
        std::string orphan_attach_rel = "mod";
        std::string fallback_concept = "thing";
    } predict;

    PipelineConfig() {
        surface.batch_size = 10;
        surface.learning_rate = 2e-5;
        normalization.batch_size = 40;
        normalization.learning_rate = 3e-5;
        null_concept.batch_size = 30;
        null_concept.learning_rate = 3e-5;
        relation.batch_size = 50;
        relation.learning_rate = 7e-5;
    }
};

namespace detail {

inline void read_train_config(const json& j, TrainConfig& cfg) {
    if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int>();
    if (j.contains("learning_rate")) cfg.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("epochs")) cfg.epochs = j["epochs"].get<int>();
    if (j.contains("warmup_fraction")) cfg.warmup_fraction = j["warmup_fraction"].get<double>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
    if (j.contains("optimizer")) {
        const std::string o = j["optimizer"].get<std::string>();
        if (o == "sgd") cfg.optimizer = Optimizer::Sgd;
        else if (o == "adam") cfg.optimizer = Optimizer::Adam;
        else throw ConfigError("unknown optimizer '" + o + "'");
    }
}

inline json train_config_json(const TrainConfig& cfg) {
    return json{{"batch_size", cfg.batch_size},
                {"learning_rate", cfg.learning_rate},
                {"epochs", cfg.epochs},
                {"warmup_fraction", cfg.warmup_fraction},
                {"seed", cfg.seed},
                {"optimizer", cfg.optimizer == Optimizer::Sgd ? "sgd" : "adam"}};
}

}  // namespace detail

inline PipelineConfig config_from_json(const json& j) {
    if (!j.contains("version") || j["version"].get<int>() != 1)
        throw ConfigError("config must declare \"version\": 1");
    PipelineConfig cfg;
    if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
    if (j.contains("paths")) {
        const json& p = j["paths"];
        auto take = [&](const char* key, std::string& into) {
            if (p.contains(key)) into = p[key].get<std::string>();
        };
        take("train", cfg.paths.train);
        take("dev", cfg.paths.dev);
        take("out_dir", cfg.paths.out_dir);
        take("relations", cfg.paths.relations);
        take("null_concepts", cfg.paths.null_concepts);
        take("split_lexicon", cfg.paths.split_lexicon);
        take("special_map", cfg.paths.special_map);
        take("freq_map", cfg.paths.freq_map);
        take("phon_codes", cfg.paths.phon_codes);
        take("calli_codes", cfg.paths.calli_codes);
        take("error_lexicon", cfg.paths.error_lexicon);
        take("embeddings", cfg.paths.embeddings);
    }
    if (j.contains("embedding")) {
        const json& e = j["embedding"];
        if (e.contains("provider")) cfg.embedding.provider = e["provider"].get<std::string>();
        if (e.contains("dim")) cfg.embedding.dim = e["dim"].get<int>();
        if (e.contains("provider_rnn_hidden"))
            cfg.embedding.provider_rnn_hidden = e["provider_rnn_hidden"].get<int>();
        if (e.contains("rnn_hidden")) cfg.embedding.rnn_hidden = e["rnn_hidden"].get<int>();
    }
    if (j.contains("heads")) {
        const json& h = j["heads"];
        if (h.contains("surface")) detail::read_train_config(h["surface"], cfg.surface);
        if (h.contains("normalization")) detail::read_train_config(h["normalization"], cfg.normalization);
        if (h.contains("null_concept")) detail::read_train_config(h["null_concept"], cfg.null_concept);
        if (h.contains("relation")) detail::read_train_config(h["relation"], cfg.relation);
    }
    if (j.contains("loss") && j["loss"].contains("class_weighting")) {
        cfg.class_weighting = j["loss"]["class_weighting"].get<std::string>();
        if (cfg.class_weighting != "none" && cfg.class_weighting != "inverse_freq")
            throw ConfigError("class_weighting must be none or inverse_freq");
    }
    if (j.contains("scorer")) {
        const json& s = j["scorer"];
        if (s.contains("restarts")) cfg.scorer.restarts = s["restarts"].get<int>();
        if (s.contains("seed")) cfg.scorer.seed = s["seed"].get<uint64_t>();
        if (s.contains("alignment_mode")) {
            const std::string m = s["alignment_mode"].get<std::string>();
            if (m == "exact") cfg.scorer.mode = AlignMode::Exact;
            else if (m == "ignore") cfg.scorer.mode = AlignMode::Ignore;
            else throw ConfigError("alignment_mode must be exact or ignore");
        }
    }
    if (j.contains("predict")) {
        const json& p = j["predict"];
        if (p.contains("orphan_attach_rel"))
            cfg.predict.orphan_attach_rel = p["orphan_attach_rel"].get<std::string>();
        if (p.contains("fallback_concept"))
            cfg.predict.fallback_concept = p["fallback_concept"].get<std::string>();
    }
    return cfg;
}

inline json config_to_json(const PipelineConfig& cfg) {
    return json{
        {"version", 1},
        {"seed", cfg.seed},
        {"paths",
         {{"train", cfg.paths.train},
          {"dev", cfg.paths.dev},
          {"out_dir", cfg.paths.out_dir},
          {"relations", cfg.paths.relations},
          {"null_concepts", cfg.paths.null_concepts},
          {"split_lexicon", cfg.paths.split_lexicon},
          {"special_map", cfg.paths.special_map},
          {"freq_map", cfg.paths.freq_map},
          {"phon_codes", cfg.paths.phon_codes},
          {"calli_codes", cfg.paths.calli_codes},
          {"error_lexicon", cfg.paths.error_lexicon},
          {"embeddings", cfg.paths.embeddings}}},
        {"embedding",
         {{"provider", cfg.embedding.provider},
          {"dim", cfg.embedding.dim},
          {"provider_rnn_hidden", cfg.embedding.provider_rnn_hidden},
          {"rnn_hidden", cfg.embedding.rnn_hidden}}},
        {"heads",
         {{"surface", detail::train_config_json(cfg.surface)},
          {"normalization", detail::train_config_json(cfg.normalization)},
          {"null_concept", detail::train_config_json(cfg.null_concept)},
          {"relation", detail::train_config_json(cfg.relation)}}},
        {"loss", {{"class_weighting", cfg.class_weighting}}},
        {"scorer",
         {{"restarts", cfg.scorer.restarts},
          {"seed", cfg.scorer.seed},
          {"alignment_mode", cfg.scorer.mode == AlignMode::Exact ? "exact" : "ignore"}}},
        {"predict",
         {{"orphan_attach_rel", cfg.predict.orphan_attach_rel},
          {"fallback_concept", cfg.predict.fallback_concept}}}};
}

inline PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Shared resources: dictionaries, lexicons, inventories, provider.

struct Resources {
    NormalizationDictionaries dicts;
    SplitLexicon split_lexicon;
    NullConceptInventory null_inventory;
    RelationInventory relation_inventory;
    std::shared_ptr<const EmbeddingProvider> provider;
};

inline std::shared_ptr<const EmbeddingProvider> make_provider(const PipelineConfig& cfg) {
    std::shared_ptr<const EmbeddingProvider> base;
    if (cfg.embedding.provider == "hash") {
        base = std::make_shared<HashedEmbedding>(cfg.embedding.dim, cfg.seed);
    } else if (cfg.embedding.provider == "table") {
        if (cfg.paths.embeddings.empty())
            throw ConfigError("embedding.provider=table requires paths.embeddings");
        base = std::make_shared<TableEmbedding>(TableEmbedding::from_file(cfg.paths.embeddings, cfg.seed));
    } else {
        throw ConfigError("unknown embedding provider '" + cfg.embedding.provider + "'");
    }
    if (cfg.embedding.provider_rnn_hidden > 0)
        base = std::make_shared<BiRnnProvider>(base, cfg.embedding.provider_rnn_hidden, cfg.seed ^ 0x5eed);
    return base;
}

// Builds anything not supplied as a file from the training corpus itself.
inline Resources load_resources(const PipelineConfig& cfg, const std::vector<AmrGraph>& train_graphs) {
    Resources r;
    if (!cfg.paths.freq_map.empty()) {
        load_freq_map(r.dicts, cfg.paths.freq_map);
    } else if (!train_graphs.empty()) {
        r.dicts = build_dictionaries(train_graphs);
    }
    if (!cfg.paths.special_map.empty()) load_special_map(r.dicts, cfg.paths.special_map);
    if (!cfg.paths.phon_codes.empty()) load_codes(r.dicts.phon_codes, cfg.paths.phon_codes);
    if (!cfg.paths.calli_codes.empty()) load_codes(r.dicts.calli_codes, cfg.paths.calli_codes);
    if (!cfg.paths.error_lexicon.empty()) load_error_lexicon(r.dicts, cfg.paths.error_lexicon);
    if (!cfg.paths.split_lexicon.empty()) r.split_lexicon = load_split_lexicon(cfg.paths.split_lexicon);
    r.null_inventory = !cfg.paths.null_concepts.empty() ? load_null_inventory(cfg.paths.null_concepts)
                                                        : null_inventory_from_corpus(train_graphs);
    r.relation_inventory = !cfg.paths.relations.empty() ? load_relation_inventory(cfg.paths.relations)
                                                        : relation_inventory_from_corpus(train_graphs);
    r.provider = make_provider(cfg);
    return r;
}

// ---------------------------------------------------------------------------
// Corpus statistics.

struct StatsReport {
    long sentences = 0;
    long tokens = 0;
    long graphs = 0;
    long concepts = 0;
    long edges = 0;
    long rel_alignments = 0;
    long distinct_concept_labels = 0;
    long null_inventory_size = 0;
    long relation_inventory_size = 0;
    long distinct_rel_align_words = 0;
    std::optional<AlignmentStats> alignment;
};

inline StatsReport cmd_stats(const CorpusDocument& doc) {
    StatsReport r;
    std::set<std::string> labels, null_labels, rels, align_words;
    for (const CorpusEntry& e : doc.entries) {
        ++r.sentences;
        r.tokens += static_cast<long>(e.sentence.tokens.size());
        if (!e.graph) continue;
        ++r.graphs;
        for (const ConceptNode& c : e.graph->concepts) {
            ++r.concepts;
            labels.insert(c.label);
            if (is_null_aligned(c.alignment)) null_labels.insert(c.label);
        }
        for (const RelationEdge& edge : e.graph->edges) {
            ++r.edges;
            rels.insert(edge.rel);
            if (edge.rel_alignment) {
                ++r.rel_alignments;
                if (const Token* t = e.graph->sentence.token_at(*edge.rel_alignment))
                    align_words.insert(t->surface);
            }
        }
    }
    r.distinct_concept_labels = static_cast<long>(labels.size());
    r.null_inventory_size = static_cast<long>(null_labels.size());
    r.relation_inventory_size = static_cast<long>(rels.size());
    r.distinct_rel_align_words = static_cast<long>(align_words.size());
    auto graphs = doc.graphs();
    if (!graphs.empty()) r.alignment = alignment_stats(graphs);
    return r;
}

inline std::string stats_tsv(const StatsReport& r) {
    std::ostringstream os;
    os << "sentences\t" << r.sentences << "\n";
    os << "tokens\t" << r.tokens << "\n";
    os << "graphs\t" << r.graphs << "\n";
    os << "concepts\t" << r.concepts << "\n";
    os << "edges\t" << r.edges << "\n";
    os << "relation_alignments\t" << r.rel_alignments << "\n";
    os << "distinct_concepts\t" << r.distinct_concept_labels << "\n";
    os << "null_aligned_inventory\t" << r.null_inventory_size << "\n";
    os << "relation_inventory\t" << r.relation_inventory_size << "\n";
    os << "relation_alignment_words\t" << r.distinct_rel_align_words << "\n";
    if (r.alignment) {
        const AlignmentStats& a = *r.alignment;
        os << "word_coverage\t" << a.word_coverage() << "\n";
        os << "aligned_concept_fraction\t" << a.aligned_fraction() << "\n";
        for (int k = 0; k < 6; ++k) {
            const AlignKind kind = static_cast<AlignKind>(k);
            auto it = a.counts.find(kind);
            const long n = it == a.counts.end() ? 0 : it->second;
            os << "alignment_" << kind_name(kind) << "\t" << n << "\t" << a.fraction(kind) << "\n";
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Teacher-forcing datasets.

struct PreparedData {
    TagDataset surface, norm, nullc;
    RelationDataset relation;
    std::vector<std::string> skipped;  // sentence ids that failed to encode
};

inline PreparedData prepare_datasets(const std::vector<AmrGraph>& graphs, const Resources& res) {
    PreparedData d;
    d.surface.classes = kSurfaceTagCount;
    d.norm.classes = kNormTagCount;
    d.nullc.classes = res.null_inventory.classes();
    d.relation.classes = res.relation_inventory.classes();

    for (const AmrGraph& g : graphs) {
        TagSequences tags;
        RelationMatrix m;
        try {
            tags = encode_tags(g);
            m = encode_matrix(g);
        } catch (const CodecError& e) {
            d.skipped.push_back(g.sentence.id + ": " + e.what());
            continue;
        }

        std::vector<std::string> words;
        for (const Token& t : g.sentence.tokens) words.push_back(t.surface);
        std::vector<int> surface_gold, norm_gold, null_gold;
        bool ok = true;
        for (size_t i = 0; i < words.size(); ++i) {
            surface_gold.push_back(static_cast<int>(tags.surface[i]));
            norm_gold.push_back(static_cast<int>(tags.norm[i]));
            if (tags.nullc[i].empty()) {
                null_gold.push_back(0);
            } else {
                const int id = res.null_inventory.id_of(tags.nullc[i]);
                if (id < 0) {
                    d.skipped.push_back(g.sentence.id + ": null concept '" + tags.nullc[i] +
                                        "' not in inventory");
                    ok = false;
                    break;
                }
                null_gold.push_back(id);
            }
        }
        if (!ok) continue;

        // relation items: concept labels then functional-word surfaces
        std::vector<std::string> items;
        for (const std::string& var : m.concept_vars) items.push_back(g.find_concept(var)->label);
        for (int w : m.functional_words)
            items.push_back(g.sentence.token_at(w)->surface);
        std::vector<int> cells;
        cells.reserve(static_cast<size_t>(m.items()) * static_cast<size_t>(m.items()));
        for (int i = 0; i < m.items() && ok; ++i) {
            for (int j = 0; j < m.items(); ++j) {
                const std::string& rel = m.at(i, j);
                const int id = rel == "O" ? 0 : res.relation_inventory.id_of(rel);
                if (id < 0) {
                    d.skipped.push_back(g.sentence.id + ": relation '" + rel + "' not in inventory");
                    ok = false;
                    break;
                }
                cells.push_back(id);
            }
        }
        if (!ok) continue;

        d.surface.examples.push_back({words, surface_gold});
        d.norm.examples.push_back({words, norm_gold});
        d.nullc.examples.push_back({words, null_gold});
        d.relation.examples.push_back({items, cells});
    }
    return d;
}

inline std::vector<double> inverse_freq_weights(const std::vector<int>& counts) {
    const long total = [&] {
        long t = 0;
        for (int c : counts) t += c;
        return t;
    }();
    std::vector<double> w(counts.size(), 1.0);
    if (total == 0) return w;
    for (size_t i = 0; i < counts.size(); ++i) {
        const double freq = counts[i] > 0 ? static_cast<double>(counts[i]) : 0.5;
        w[i] = static_cast<double>(total) / (static_cast<double>(counts.size()) * freq);
    }
    return w;
}

// ---------------------------------------------------------------------------
// Prediction.

enum class OracleMode { None, Concepts, Full };

struct TrainedHeads {
    LinearTagHead surface = LinearTagHead::zeros(1, kSurfaceTagCount);
    LinearTagHead norm = LinearTagHead::zeros(1, kNormTagCount);
    LinearTagHead nullc = LinearTagHead::zeros(1, 1);
    BiaffineHead relation = BiaffineHead::zeros(1, 1);
};

struct SentencePrediction {
    AmrGraph graph;
    json diagnostics;
};

namespace detail {

inline AmrGraph fallback_graph(const Sentence& s, const std::string& label) {
    AmrGraph g;
    g.sentence = s;
    for (Token& t : g.sentence.tokens) t.is_functional = false;
    g.concepts = {{"z1", label.empty() ? "thing" : label, NullAlign{}, false}};
    g.root = "z1";
    return g;
}

}  // namespace detail

// One sentence through both stages. Never throws for per-sentence problems;
// unusable predictions degrade to a fallback graph with a diagnostic.
inline SentencePrediction predict_sentence(const Sentence& input, const Resources& res,
                                           const TrainedHeads& heads, const PipelineConfig& cfg,
                                           OracleMode oracle = OracleMode::None,
                                           const AmrGraph* gold = nullptr) {
    SentencePrediction out;
    json& diag = out.diagnostics;
    diag["id"] = input.id;
    diag["fallback"] = false;

    Sentence sentence = input;
    for (Token& t : sentence.tokens) t.is_functional = false;

    try {
        // ---- stage 1: tags
        TagSequences tags;
        if (oracle != OracleMode::None) {
            if (!gold) throw DataError("oracle mode requires gold graphs");
            tags = encode_tags(*gold);
        } else {
            tags.surface.resize(sentence.tokens.size());
            tags.norm.resize(sentence.tokens.size());
            tags.nullc.resize(sentence.tokens.size());
            std::vector<std::string> words;
            for (const Token& t : sentence.tokens) words.push_back(t.surface);
            const auto embedded = res.provider->embed(words);
            for (size_t i = 0; i < embedded.size(); ++i) {
                Eigen::Index cls;
                tag_forward(heads.surface, embedded[i]).maxCoeff(&cls);
                tags.surface[i] = static_cast<SurfaceTag>(cls);
                tag_forward(heads.norm, embedded[i]).maxCoeff(&cls);
                tags.norm[i] = static_cast<NormTag>(cls);
                tag_forward(heads.nullc, embedded[i]).maxCoeff(&cls);
                tags.nullc[i] = res.null_inventory.label_of(static_cast<int>(cls));
            }
        }

        // words predicted B-Split but missing from the lexicon would make
        // decoding fail; downgrade them to single-word concepts instead
        json split_oov = json::array();
        for (size_t i = 0; i < tags.surface.size(); ++i) {
            if (tags.surface[i] == SurfaceTag::BSplit &&
                !res.split_lexicon.find(sentence.tokens[i].surface)) {
                tags.surface[i] = SurfaceTag::BSingle;
                split_oov.push_back(sentence.tokens[i].surface);
            }
        }
        diag["split_oov_downgraded"] = split_oov;

        DecodedConcepts stage1 = decode_surface(sentence, tags.surface, tags.norm,
                                                res.split_lexicon, res.dicts);
        std::vector<ConceptNode> nulls = decode_null_concepts(sentence, tags.nullc, stage1.concepts);
        std::vector<ConceptNode> concepts = stage1.concepts;
        concepts.insert(concepts.end(), nulls.begin(), nulls.end());
        diag["bio_repairs"] = stage1.bio_repairs;
        diag["stage1_diagnostics"] = stage1.diagnostics;

        for (int w : stage1.functional_words)
            sentence.tokens[static_cast<size_t>(w - 1)].is_functional = true;

        if (concepts.empty()) {
            out.graph = detail::fallback_graph(input, cfg.predict.fallback_concept);
            diag["fallback"] = true;
            diag["fallback_reason"] = "no concepts decoded";
            return out;
        }

        // ---- stage 2: relations
        std::vector<RelationEdge> edges;
        std::vector<std::string> decode_diags;
        std::map<std::pair<std::string, std::string>, double> edge_scores;
        int cycles = 0, attached = 0, dropped = 0;

        if (oracle == OracleMode::Full) {
            RelationMatrix gold_matrix = encode_matrix(*gold);
            std::vector<std::string> decoded_vars;
            for (const ConceptNode& c : concepts) decoded_vars.push_back(c.var);
            if (gold_matrix.concept_vars == decoded_vars &&
                gold_matrix.functional_words == sentence.functional_indices()) {
                MatrixDecode d = decode_matrix(gold_matrix, concepts, sentence.functional_indices());
                edges = std::move(d.edges);
                decode_diags = std::move(d.diagnostics);
            } else {
                decode_diags.push_back("oracle participants differ from decoded concepts");
            }
        } else {
            RelationMatrix m;
            for (const ConceptNode& c : concepts) m.concept_vars.push_back(c.var);
            m.functional_words = sentence.functional_indices();
            m.labels.assign(static_cast<size_t>(m.items()) * static_cast<size_t>(m.items()), "O");

            std::vector<std::string> items;
            for (const ConceptNode& c : concepts) items.push_back(c.label);
            for (int w : m.functional_words)
                items.push_back(sentence.tokens[static_cast<size_t>(w - 1)].surface);
            const auto ctx = contextualize(heads.relation, res.provider->embed(items));
            for (int i = 0; i < m.items(); ++i) {
                for (int j = 0; j < m.items(); ++j) {
                    if (i == j) continue;
                    Eigen::Index cls;
                    const Eigen::VectorXd scores = biaffine_forward(
                        heads.relation, ctx[static_cast<size_t>(i)], ctx[static_cast<size_t>(j)]);
                    scores.maxCoeff(&cls);
                    if (cls == 0) continue;
                    m.at(i, j) = res.relation_inventory.label_of(static_cast<int>(cls));
                    if (i < m.concept_count() && j < m.concept_count())
                        edge_scores[{m.concept_vars[static_cast<size_t>(i)],
                                     m.concept_vars[static_cast<size_t>(j)]}] = scores[cls];
                }
            }
            MatrixDecode d = decode_matrix(m, concepts, m.functional_words);
            edges = std::move(d.edges);
            decode_diags = std::move(d.diagnostics);
        }

        AssembleOptions aopt;
        aopt.edge_scores = edge_scores.empty() ? nullptr : &edge_scores;
        if (!cfg.predict.orphan_attach_rel.empty()) aopt.attach_orphans_rel = cfg.predict.orphan_attach_rel;
        else aopt.attach_orphans_rel = std::nullopt;
        AssembledGraph assembled = assemble_graph(sentence, concepts, edges, aopt);
        cycles = assembled.cycles_broken;
        attached = assembled.orphans_attached;
        dropped = assembled.orphans_dropped;
        for (const auto& m : assembled.diagnostics) decode_diags.push_back(m);

        diag["stage2_diagnostics"] = decode_diags;
        diag["cycles_broken"] = cycles;
        diag["orphans_attached"] = attached;
        diag["orphans_dropped"] = dropped;

        auto violations = validate_graph(assembled.graph);
        if (!violations.empty()) {
            out.graph = detail::fallback_graph(input, cfg.predict.fallback_concept);
            diag["fallback"] = true;
            diag["fallback_reason"] = "assembled graph invalid: " + violations[0].rule;
            return out;
        }
        out.graph = std::move(assembled.graph);
        return out;
    } catch (const std::exception& e) {
        out.graph = detail::fallback_graph(input, cfg.predict.fallback_concept);
        diag["fallback"] = true;
        diag["fallback_reason"] = e.what();
        return out;
    }
}

struct PredictOutcome {
    CorpusDocument predictions;
    std::vector<json> diagnostics;
};

// Inference never reads gold graphs; the oracle modes exist to measure
// error propagation and to drive the round-trip suites.
inline PredictOutcome cmd_predict(const std::vector<Sentence>& sentences, const Resources& res,
                                  const TrainedHeads& heads, const PipelineConfig& cfg,
                                  OracleMode oracle = OracleMode::None,
                                  const std::map<std::string, const AmrGraph*>* gold_by_id = nullptr) {
    PredictOutcome out;
    for (const Sentence& s : sentences) {
        const AmrGraph* gold = nullptr;
        if (gold_by_id) {
            auto it = gold_by_id->find(s.id);
            if (it != gold_by_id->end()) gold = it->second;
        }
        SentencePrediction p = predict_sentence(s, res, heads, cfg, oracle, gold);
        out.predictions.entries.push_back(make_entry(std::move(p.graph)));
        out.diagnostics.push_back(std::move(p.diagnostics));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scoring, micro-averaged over sentences.

struct ScoreReport {
    CategoryCounts overall, instance, attribute, relation;
    long sentences = 0;
};

inline ScoreReport cmd_score(const CorpusDocument& pred, const CorpusDocument& gold,
                             const MatchOptions& opt) {
    std::map<std::string, const AmrGraph*> gold_by_id;
    for (const CorpusEntry& e : gold.entries)
        if (e.graph) gold_by_id[e.sentence.id] = &*e.graph;

    ScoreReport report;
    for (const CorpusEntry& e : pred.entries) {
        auto it = gold_by_id.find(e.sentence.id);
        if (it == gold_by_id.end())
            throw DataError("prediction id '" + e.sentence.id + "' has no gold graph");
        TripleBag pb = e.graph ? extract_triples(*e.graph) : TripleBag{};
        TripleBag gb = extract_triples(*it->second);
        MatchResult r = match_score(pb, gb, opt);
        report.overall += r.overall;
        report.instance += r.fine.instance;
        report.attribute += r.fine.attribute;
        report.relation += r.fine.relation;
        ++report.sentences;
    }
    return report;
}

inline std::string score_tsv(const ScoreReport& r) {
    std::ostringstream os;
    os.precision(4);
    os << std::fixed;
    auto row = [&](const char* name, const CategoryCounts& c) {
        os << name << '\t' << c.precision() << '\t' << c.recall() << '\t' << c.f1() << '\n';
    };
    os << "Task\tPrecision\tRecall\tF1\n";
    row("AlignSmatch", r.overall);
    row("Only Instance", r.instance);
    row("Only Attribute", r.attribute);
    row("Only Relation", r.relation);
    return os.str();
}

inline std::string score_pretty(const ScoreReport& r) {
    std::ostringstream os;
    os.precision(3);
    os << std::fixed;
    auto row = [&](const std::string& name, const CategoryCounts& c) {
        os << "  " << name;
        for (size_t pad = name.size(); pad < 18; ++pad) os << ' ';
        os << c.precision() << "   " << c.recall() << "   " << c.f1() << "\n";
    };
    os << "  Task              P       R       F1\n";
    row("AlignSmatch", r.overall);
    row("Only Instance", r.instance);
    row("Only Attribute", r.attribute);
    row("Only Relation", r.relation);
    return os.str();
}

// ---------------------------------------------------------------------------
// Training: the three tag heads and the relation head advance in lockstep
// epochs; both stages see gold inputs only (teacher forcing). After every
// epoch the full pipeline is scored against the dev corpus, and the epoch
// with the best dev score is kept as the "best" checkpoint set.

struct TrainOutcome {
    TrainedHeads final_heads;
    TrainedHeads best_heads;
    int best_epoch = -1;  // -1 when no epochs ran
    json report;
};

inline TrainOutcome cmd_train(const PipelineConfig& cfg, const CorpusDocument& train_doc,
                              const CorpusDocument& dev_doc, const Resources& res) {
    const std::vector<AmrGraph> train_graphs = train_doc.graphs();
    if (train_graphs.empty()) throw DataError("training corpus has no graphs");
    PreparedData data = prepare_datasets(train_graphs, res);
    if (data.surface.examples.empty()) throw DataError("no trainable sentences after encoding");
    PreparedData dev_data;
    std::vector<Sentence> dev_sentences;
    std::map<std::string, const AmrGraph*> dev_gold;
    for (const CorpusEntry& e : dev_doc.entries) {
        if (!e.graph) continue;
        dev_sentences.push_back(e.sentence);
        dev_gold[e.sentence.id] = &*e.graph;
    }
    const std::vector<AmrGraph> dev_graphs = dev_doc.graphs();
    if (!dev_graphs.empty()) dev_data = prepare_datasets(dev_graphs, res);

    const int d = res.provider->dim();
    TrainedHeads heads;
    heads.surface = LinearTagHead::zeros(d, kSurfaceTagCount);
    heads.norm = LinearTagHead::zeros(d, kNormTagCount);
    heads.nullc = LinearTagHead::zeros(d, res.null_inventory.classes());
    heads.relation = BiaffineHead::random(d, res.relation_inventory.classes(),
                                          cfg.embedding.rnn_hidden, cfg.seed ^ 0xb1affe, 0.1);

    // optional class weighting for the imbalance between "O"/"None" and the rest
    auto cfg_with_weights = [&](TrainConfig tc, uint64_t salt, const std::vector<int>& counts) {
        tc.seed = cfg.seed ^ salt;
        if (cfg.class_weighting == "inverse_freq") tc.class_weights = inverse_freq_weights(counts);
        return tc;
    };
    auto label_counts = [](const TagDataset& ds) {
        std::vector<int> counts(static_cast<size_t>(ds.classes), 0);
        for (const auto& ex : ds.examples)
            for (int y : ex.gold) counts[static_cast<size_t>(y)]++;
        return counts;
    };
    auto cell_counts = [](const RelationDataset& ds) {
        std::vector<int> counts(static_cast<size_t>(ds.classes), 0);
        for (const auto& ex : ds.examples)
            for (int y : ex.gold) counts[static_cast<size_t>(y)]++;
        return counts;
    };

    TagTrainer surface_tr(heads.surface, *res.provider, data.surface,
                          cfg_with_weights(cfg.surface, 1, label_counts(data.surface)));
    TagTrainer norm_tr(heads.norm, *res.provider, data.norm,
                       cfg_with_weights(cfg.normalization, 2, label_counts(data.norm)));
    TagTrainer null_tr(heads.nullc, *res.provider, data.nullc,
                       cfg_with_weights(cfg.null_concept, 3, label_counts(data.nullc)));
    RelationTrainer rel_tr(heads.relation, *res.provider, data.relation,
                           cfg_with_weights(cfg.relation, 4, cell_counts(data.relation)));

    const int total_epochs = std::max({cfg.surface.epochs, cfg.normalization.epochs,
                                       cfg.null_concept.epochs, cfg.relation.epochs});

    TrainOutcome out;
    json curve = json::array();
    double best_dev = -1.0;
    for (int e = 0; e < total_epochs; ++e) {
        json epoch;
        epoch["epoch"] = e;
        if (e < cfg.surface.epochs) epoch["surface_loss"] = surface_tr.run_epoch(e);
        if (e < cfg.normalization.epochs) epoch["normalization_loss"] = norm_tr.run_epoch(e);
        if (e < cfg.null_concept.epochs) epoch["null_concept_loss"] = null_tr.run_epoch(e);
        if (e < cfg.relation.epochs) epoch["relation_loss"] = rel_tr.run_epoch(e);

        if (!dev_data.surface.examples.empty()) {
            epoch["dev_surface_f1"] = surface_tr.evaluate(dev_data.surface).f1;
            epoch["dev_normalization_f1"] = norm_tr.evaluate(dev_data.norm).f1;
            epoch["dev_null_concept_f1"] = null_tr.evaluate(dev_data.nullc).f1;
            epoch["dev_relation_f1"] = rel_tr.evaluate(dev_data.relation).f1;
        }
        if (!dev_sentences.empty()) {
            PredictOutcome p = cmd_predict(dev_sentences, res, heads, cfg, OracleMode::None, nullptr);
            ScoreReport sr = cmd_score(p.predictions, dev_doc,
                                       {cfg.scorer.restarts, cfg.scorer.seed, cfg.scorer.mode});
            epoch["dev_align_smatch_f1"] = sr.overall.f1();
            if (sr.overall.f1() > best_dev) {
                best_dev = sr.overall.f1();
                out.best_heads = heads;
                out.best_epoch = e;
            }
        }
        curve.push_back(epoch);
    }
    if (out.best_epoch < 0) {  // no dev corpus: final weights are the best known
        out.best_heads = heads;
        out.best_epoch = total_epochs > 0 ? total_epochs - 1 : -1;
    }
    out.final_heads = heads;
    out.report["curve"] = curve;
    out.report["best_epoch"] = out.best_epoch;
    out.report["best_dev_align_smatch_f1"] = best_dev < 0 ? json() : json(best_dev);
    out.report["skipped_sentences"] = data.skipped;
    out.report["trainable_sentences"] = data.surface.examples.size();
    return out;
}

// ---------------------------------------------------------------------------
// Oracle round-trip over a whole corpus: gold tags and gold matrices pushed
// through the real decode path, then scored against gold.

struct OracleRoundTrip {
    long sentences = 0;
    long concept_exact = 0;  // sentences whose concepts decoded exactly
    ScoreReport score;
};

inline OracleRoundTrip cmd_oracle_roundtrip(const CorpusDocument& doc, const Resources& res,
                                            const PipelineConfig& cfg) {
    OracleRoundTrip out;
    std::vector<Sentence> sentences;
    std::map<std::string, const AmrGraph*> gold;
    for (const CorpusEntry& e : doc.entries) {
        if (!e.graph) continue;
        sentences.push_back(e.sentence);
        gold[e.sentence.id] = &*e.graph;
    }
    TrainedHeads untrained;
    PredictOutcome p = cmd_predict(sentences, res, untrained, cfg, OracleMode::Full, &gold);
    for (size_t i = 0; i < p.predictions.entries.size(); ++i) {
        const AmrGraph& pg = *p.predictions.entries[i].graph;
        const AmrGraph& gg = *gold.at(pg.sentence.id);
        ++out.sentences;
        if (pg.concepts == gg.concepts) ++out.concept_exact;
    }
    out.score = cmd_score(p.predictions, doc, {cfg.scorer.restarts, cfg.scorer.seed, cfg.scorer.mode});
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpus emission (resource files + manifest).

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write " + path.string());
    os << content;
}

inline void cmd_gen_synthetic(const SyntheticOptions& opt, const std::string& out_dir) {
    namespace fs = std::filesystem;
    SyntheticCorpus syn = generate_synthetic(opt);
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    write_file(dir / "corpus.camr", serialize_corpus(syn.document));

    std::ostringstream lex;
    write_split_lexicon(syn.split_lexicon, lex);
    write_file(dir / "split_lexicon.tsv", lex.str());

    std::ostringstream special;
    for (auto& [w, c] : syn.special_map) special << w << '\t' << c << '\n';
    write_file(dir / "special_map.tsv", special.str());

    std::ostringstream phon, calli;
    for (auto& [w, c] : syn.phon_codes) phon << w << '\t' << c << '\n';
    for (auto& [w, c] : syn.calli_codes) calli << w << '\t' << c << '\n';
    write_file(dir / "codes_phonological.tsv", phon.str());
    write_file(dir / "codes_calligraphic.tsv", calli.str());

    std::ostringstream rels;
    for (const auto& r : syn.relation_inventory) rels << r << '\n';
    write_file(dir / "relations.txt", rels.str());

    std::ostringstream nulls;
    for (const auto& n : syn.manifest.null_labels_used) nulls << n << '\n';
    write_file(dir / "null_concepts.txt", nulls.str());

    json manifest;
    manifest["sentences"] = syn.manifest.sentences;
    manifest["tokens"] = syn.manifest.tokens;
    manifest["concepts"] = syn.manifest.concepts;
    manifest["edges"] = syn.manifest.edges;
    manifest["functional_words"] = syn.manifest.functional_words;
    manifest["relation_alignments"] = syn.manifest.rel_alignments;
    manifest["constants"] = syn.manifest.constants;
    json counts;
    for (auto& [kind, n] : syn.manifest.alignment_counts) counts[kind_name(kind)] = n;
    manifest["alignment_counts"] = counts;
    manifest["seed"] = opt.seed;
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

// Checkpoint bundle naming for a whole trained pipeline.
inline void save_heads(const std::string& dir, const TrainedHeads& heads, uint64_t seed,
                       const std::string& config_echo, const std::string& suffix = "") {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path d(dir);
    save_checkpoint((d / ("surface" + suffix + ".ckpt")).string(), heads.surface, seed, config_echo);
    save_checkpoint((d / ("normalization" + suffix + ".ckpt")).string(), heads.norm, seed, config_echo);
    save_checkpoint((d / ("null_concept" + suffix + ".ckpt")).string(), heads.nullc, seed, config_echo);
    save_checkpoint((d / ("relation" + suffix + ".ckpt")).string(), heads.relation, seed, config_echo);
}

inline void load_heads(const std::string& dir, TrainedHeads& heads, const std::string& suffix = "") {
    namespace fs = std::filesystem;
    const fs::path d(dir);
    load_checkpoint((d / ("surface" + suffix + ".ckpt")).string(), heads.surface);
    load_checkpoint((d / ("normalization" + suffix + ".ckpt")).string(), heads.norm);
    load_checkpoint((d / ("null_concept" + suffix + ".ckpt")).string(), heads.nullc);
    load_checkpoint((d / ("relation" + suffix + ".ckpt")).string(), heads.relation);
}

}  // namespace camr
