// Command-line front end for the two-stage parsing toolkit.
//
// Exit codes: 0 success, 1 data error, 2 configuration/usage error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "camr/pipeline.hpp"

namespace fs = std::filesystem;
using namespace camr;

namespace {

CorpusDocument read_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    return parse_corpus(in);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CommonOpts {
    std::string config_path;
    std::optional<uint64_t> seed;

    PipelineConfig load() const {
        PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : load_config(config_path);
        if (seed) cfg.seed = *seed;
        return cfg;
    }
};

Resources resources_for(const PipelineConfig& cfg, const std::vector<AmrGraph>& train_graphs) {
    return load_resources(cfg, train_graphs);
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write " + path);
    os << content;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-stage Chinese AMR parsing toolkit with explicit word alignment"};
    app.require_subcommand(1);

    CommonOpts common;

    // ---- gen-synthetic
    auto* gen = app.add_subcommand("gen-synthetic", "Generate a synthetic aligned corpus + resources");
    std::string gen_out = "synthetic";
    int gen_sentences = 100;
    uint64_t gen_seed = 42;
    gen->add_option("--out", gen_out, "output directory");
    gen->add_option("--sentences", gen_sentences, "number of sentences");
    gen->add_option("--seed", gen_seed, "generator seed");

    // ---- stats
    auto* stats = app.add_subcommand("stats", "Corpus statistics");
    std::string stats_corpus;
    std::string stats_tsv_path;
    stats->add_option("corpus", stats_corpus, "corpus file")->required();
    stats->add_option("--tsv", stats_tsv_path, "also write the report as TSV");

    // ---- build-dicts
    auto* bd = app.add_subcommand("build-dicts", "Build dictionaries and inventories from a corpus");
    std::string bd_corpus, bd_out = "dicts";
    bd->add_option("corpus", bd_corpus, "training corpus with gold graphs")->required();
    bd->add_option("--out", bd_out, "output directory");

    // ---- train
    auto* tr = app.add_subcommand("train", "Train the tag heads and the relation head");
    tr->add_option("--config", common.config_path, "pipeline config (JSON)");
    std::string tr_train, tr_dev, tr_out;
    int tr_epochs = -1;
    tr->add_option("--train", tr_train, "training corpus (overrides config)");
    tr->add_option("--dev", tr_dev, "development corpus (overrides config)");
    tr->add_option("--out", tr_out, "checkpoint directory (overrides config)");
    tr->add_option("--epochs", tr_epochs, "override epochs for every head");
    uint64_t tr_seed = 0;
    auto* tr_seed_opt = tr->add_option("--seed", tr_seed, "override seed");

    // ---- predict
    auto* pr = app.add_subcommand("predict", "Parse sentences into aligned graphs");
    pr->add_option("--config", common.config_path, "pipeline config (JSON)");
    std::string pr_input, pr_output, pr_ckpt, pr_diag, pr_gold, pr_oracle = "none";
    pr->add_option("--input", pr_input, "corpus file with sentence blocks")->required();
    pr->add_option("--output", pr_output, "output corpus path")->required();
    pr->add_option("--checkpoints", pr_ckpt, "checkpoint directory from train");
    pr->add_option("--diagnostics", pr_diag, "JSON-lines diagnostics path");
    pr->add_option("--gold", pr_gold, "gold corpus for oracle modes");
    pr->add_option("--oracle", pr_oracle, "none | concepts | full");
    bool pr_inject_gold = false;
    pr->add_flag("--inject-gold-concepts", pr_inject_gold,
                 "stage 1 from gold, stage 2 from the model (same as --oracle concepts)");
    bool pr_best = false;
    pr->add_flag("--best", pr_best, "load the best-dev checkpoints instead of the final ones");

    // ---- score
    auto* sc = app.add_subcommand("score", "Alignment-aware Smatch report");
    std::string sc_pred, sc_gold, sc_tsv_path, sc_mode = "exact";
    int sc_restarts = 16;
    uint64_t sc_seed = 1;
    sc->add_option("pred", sc_pred, "predicted corpus")->required();
    sc->add_option("gold", sc_gold, "gold corpus")->required();
    sc->add_option("--restarts", sc_restarts, "hill-climbing restarts");
    sc->add_option("--seed", sc_seed, "scorer seed");
    sc->add_option("--mode", sc_mode, "exact | ignore (classic smatch)");
    sc->add_option("--tsv", sc_tsv_path, "also write the report as TSV");

    // ---- oracle-roundtrip
    auto* orc = app.add_subcommand("oracle-roundtrip",
                                   "Gold tags and matrices through the decode path, scored vs gold");
    orc->add_option("--config", common.config_path, "pipeline config (JSON)");
    std::string orc_corpus;
    orc->add_option("corpus", orc_corpus, "corpus with gold graphs")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*gen) {
            cmd_gen_synthetic({.sentences = gen_sentences, .seed = gen_seed}, gen_out);
            std::cout << "wrote synthetic corpus and resources to " << gen_out << "\n";
            return 0;
        }

        if (*stats) {
            StatsReport r = cmd_stats(read_corpus(stats_corpus));
            const std::string tsv = stats_tsv(r);
            std::cout << tsv;
            if (!stats_tsv_path.empty()) write_text(stats_tsv_path, tsv);
            return 0;
        }

        if (*bd) {
            CorpusDocument doc = read_corpus(bd_corpus);
            auto graphs = doc.graphs();
            if (graphs.empty()) throw DataError("corpus has no gold graphs");
            NormalizationDictionaries dicts = build_dictionaries(graphs);
            NullConceptInventory nulls = null_inventory_from_corpus(graphs);
            RelationInventory rels = relation_inventory_from_corpus(graphs);

            fs::create_directories(bd_out);
            std::ostringstream freq;
            write_freq_map(dicts, freq);
            write_text((fs::path(bd_out) / "freq_map.tsv").string(), freq.str());
            std::ostringstream ni;
            for (const auto& l : nulls.labels) ni << l << '\n';
            write_text((fs::path(bd_out) / "null_concepts.txt").string(), ni.str());
            std::ostringstream ri;
            for (const auto& l : rels.labels) ri << l << '\n';
            write_text((fs::path(bd_out) / "relations.txt").string(), ri.str());
            std::cout << "wrote freq_map.tsv (" << dicts.freq_map.size() << " words), null_concepts.txt ("
                      << nulls.labels.size() << "), relations.txt (" << rels.labels.size() << ") to "
                      << bd_out << "\n";
            return 0;
        }

        if (*tr) {
            PipelineConfig cfg = common.load();
            if (!tr_train.empty()) cfg.paths.train = tr_train;
            if (!tr_dev.empty()) cfg.paths.dev = tr_dev;
            if (!tr_out.empty()) cfg.paths.out_dir = tr_out;
            if (tr_seed_opt->count()) cfg.seed = tr_seed;
            if (tr_epochs >= 0)
                for (TrainConfig* t : {&cfg.surface, &cfg.normalization, &cfg.null_concept, &cfg.relation})
                    t->epochs = tr_epochs;
            if (cfg.paths.train.empty()) throw ConfigError("train: no training corpus configured");

            CorpusDocument train_doc = read_corpus(cfg.paths.train);
            CorpusDocument dev_doc =
                cfg.paths.dev.empty() ? CorpusDocument{} : read_corpus(cfg.paths.dev);
            Resources res = resources_for(cfg, train_doc.graphs());

            TrainOutcome out = cmd_train(cfg, train_doc, dev_doc, res);

            const std::string echo = config_to_json(cfg).dump();
            save_heads(cfg.paths.out_dir, out.final_heads, cfg.seed, echo);
            save_heads(cfg.paths.out_dir, out.best_heads, cfg.seed, echo, ".best");
            // persist the derived resources next to the checkpoints
            std::ostringstream freq;
            write_freq_map(res.dicts, freq);
            write_text((fs::path(cfg.paths.out_dir) / "freq_map.tsv").string(), freq.str());
            std::ostringstream ni;
            for (const auto& l : res.null_inventory.labels) ni << l << '\n';
            write_text((fs::path(cfg.paths.out_dir) / "null_concepts.txt").string(), ni.str());
            std::ostringstream ri;
            for (const auto& l : res.relation_inventory.labels) ri << l << '\n';
            write_text((fs::path(cfg.paths.out_dir) / "relations.txt").string(), ri.str());
            write_text((fs::path(cfg.paths.out_dir) / "train_report.json").string(),
                       out.report.dump(2) + "\n");
            write_text((fs::path(cfg.paths.out_dir) / "config.json").string(),
                       config_to_json(cfg).dump(2) + "\n");

            std::cout << "trained " << out.report["trainable_sentences"] << " sentences";
            if (out.best_epoch >= 0) std::cout << ", best epoch " << out.best_epoch;
            if (!out.report["best_dev_align_smatch_f1"].is_null())
                std::cout << ", best dev AlignSmatch F1 "
                          << out.report["best_dev_align_smatch_f1"].get<double>();
            std::cout << "; checkpoints in " << cfg.paths.out_dir << "\n";
            for (const auto& s : out.report["skipped_sentences"])
                std::cerr << "skipped: " << s.get<std::string>() << "\n";
            return 0;
        }

        if (*pr) {
            PipelineConfig cfg = common.load();
            OracleMode mode = OracleMode::None;
            if (pr_inject_gold) pr_oracle = "concepts";
            if (pr_oracle == "concepts") mode = OracleMode::Concepts;
            else if (pr_oracle == "full") mode = OracleMode::Full;
            else if (pr_oracle != "none") throw ConfigError("--oracle must be none, concepts or full");

            CorpusDocument input = read_corpus(pr_input);
            std::optional<CorpusDocument> gold_doc;
            std::map<std::string, const AmrGraph*> gold_by_id;
            if (mode != OracleMode::None) {
                if (pr_gold.empty()) throw ConfigError("--oracle modes require --gold");
                gold_doc = read_corpus(pr_gold);
                for (const CorpusEntry& e : gold_doc->entries)
                    if (e.graph) gold_by_id[e.sentence.id] = &*e.graph;
            }

            // resources: prefer explicit files; otherwise derive from gold corpus
            std::vector<AmrGraph> seed_graphs = gold_doc ? gold_doc->graphs() : input.graphs();
            Resources res = resources_for(cfg, seed_graphs);

            TrainedHeads heads;
            if (!pr_ckpt.empty()) {
                load_heads(pr_ckpt, heads, pr_best ? ".best" : "");
            } else {
                const int d = res.provider->dim();
                heads.surface = LinearTagHead::zeros(d, kSurfaceTagCount);
                heads.norm = LinearTagHead::zeros(d, kNormTagCount);
                heads.nullc = LinearTagHead::zeros(d, res.null_inventory.classes());
                heads.relation =
                    BiaffineHead::zeros(d, res.relation_inventory.classes(), cfg.embedding.rnn_hidden);
            }

            std::vector<Sentence> sentences;
            for (const CorpusEntry& e : input.entries) sentences.push_back(e.sentence);
            PredictOutcome out = cmd_predict(sentences, res, heads, cfg, mode,
                                             gold_by_id.empty() ? nullptr : &gold_by_id);
            write_text(pr_output, serialize_corpus(out.predictions));
            if (!pr_diag.empty()) {
                std::ostringstream os;
                for (const auto& d : out.diagnostics) os << d.dump() << "\n";
                write_text(pr_diag, os.str());
            }
            std::cout << "parsed " << sentences.size() << " sentences into " << pr_output << "\n";
            return 0;
        }

        if (*sc) {
            MatchOptions opt;
            opt.restarts = sc_restarts;
            opt.seed = sc_seed;
            if (sc_mode == "exact") opt.mode = AlignMode::Exact;
            else if (sc_mode == "ignore") opt.mode = AlignMode::Ignore;
            else throw ConfigError("--mode must be exact or ignore");

            ScoreReport r = cmd_score(read_corpus(sc_pred), read_corpus(sc_gold), opt);
            std::cout << score_pretty(r);
            if (!sc_tsv_path.empty()) write_text(sc_tsv_path, score_tsv(r));
            return 0;
        }

        if (*orc) {
            PipelineConfig cfg = common.load();
            CorpusDocument doc = read_corpus(orc_corpus);
            Resources res = resources_for(cfg, doc.graphs());
            OracleRoundTrip rt = cmd_oracle_roundtrip(doc, res, cfg);
            std::cout << "sentences " << rt.sentences << "\n";
            std::cout << "concepts reproduced exactly " << rt.concept_exact << "/" << rt.sentences
                      << "\n";
            std::cout << score_pretty(rt.score);
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 1;
    } catch (const TrainError& e) {
        std::cerr << "training aborted: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
