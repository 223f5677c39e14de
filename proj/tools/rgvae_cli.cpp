// Command-line front end: training, link-prediction evaluation, generation,
// latent interpolation, gradient checking and parameter export.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rgvae/checkpoint.hpp"
#include "rgvae/distmult.hpp"
#include "rgvae/eval_lp.hpp"
#include "rgvae/experiments.hpp"
#include "rgvae/gradcheck.hpp"
#include "rgvae/kg_data.hpp"
#include "rgvae/rgvae.hpp"

namespace {

using namespace rgvae;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

using KvList = std::vector<std::pair<std::string, std::string>>;

void write_report(const std::string& path, const KvList& header, const KvList& body) {
    std::ofstream os(path);
    if (!os) throw data_error("cannot write report " + path);
    for (const auto& [k, v] : header) os << "# " << k << "=" << v << "\n";
    for (const auto& [k, v] : body) os << k << "=" << v << "\n";
    if (!os) throw data_error("failed writing report " + path);
}

TripleStore load_store(const std::string& dir, bool final_mode) {
    return TripleStore::load(dir + "/train.txt", dir + "/valid.txt", dir + "/test.txt",
                             final_mode);
}

std::string checkpoint_model_kind(const std::string& path) {
    auto records = load_checkpoint(path);
    if (records.empty() || records[0].first != "config")
        throw format_error("checkpoint missing config record");
    std::string text = record_text(records[0].second);
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line))
        if (line.rfind("model=", 0) == 0) return line.substr(6);
    throw format_error("checkpoint config has no model kind");
}

class RgvaeScorer : public Scorer {
public:
    explicit RgvaeScorer(Rgvae& model) : model_(model) {}
    void score_candidates(const std::vector<Triple>& candidates,
                          std::vector<double>& out) const override {
        out = model_.score_triples(candidates);
    }

private:
    Rgvae& model_;
};

class DistMultScorer : public Scorer {
public:
    DistMultScorer(DistMult& model, EpsMode mode, uint64_t seed)
        : model_(model), mode_(mode), rng_(seed) {}
    void score_candidates(const std::vector<Triple>& candidates,
                          std::vector<double>& out) const override {
        out = model_.score_triples(candidates, mode_, rng_);
    }

private:
    DistMult& model_;
    EpsMode mode_;
    mutable Rng rng_;
};

struct TrainArgs {
    std::string dataset_dir, model = "rgvae", out = "checkpoint.bin", log;
    int epochs = 60, batch_size = 64, match_iterations = 40, negatives = 10;
    int lookahead_k = 6;
    double lr = 3e-5, beta = 1.0, delta = 0.0, dropout = 0.2, lookahead_alpha = 0.5;
    size_t d_z = 100, d_h = 512, d_emb = 256;
    bool perminv = true, clipgrad = true, gc = true, final_mode = false;
    std::string dm_loss = "bce";
    uint64_t seed = 0;
};

int cmd_train(const TrainArgs& a) {
    TripleStore store = load_store(a.dataset_dir, a.final_mode);
    std::string log_path = a.log.empty() ? a.out + ".log.tsv" : a.log;
    std::ofstream log(log_path);
    if (!log) throw data_error("cannot write training log " + log_path);

    OptimizerConfig opt_cfg;
    opt_cfg.learning_rate = a.lr;
    opt_cfg.lookahead_k = a.lookahead_k;
    opt_cfg.lookahead_alpha = a.lookahead_alpha;
    opt_cfg.use_gradient_centralization = a.gc;
    Ranger optimizer(opt_cfg);
    Rng shuffle_rng(a.seed + 1);

    std::vector<Triple> train = store.training();
    auto shuffled_batches = [&](std::vector<Triple>& pool) {
        for (size_t i = pool.size(); i > 1; --i)
            std::swap(pool[i - 1], pool[shuffle_rng.index(i)]);
    };

    if (a.model == "rgvae" || a.model == "crgvae") {
        RgvaeConfig cfg;
        cfg.d_e = store.num_entities();
        cfg.d_r = store.num_relations();
        cfg.d_z = a.d_z;
        cfg.d_h = a.d_h;
        cfg.dropout = a.dropout;
        cfg.beta = a.beta;
        cfg.delta = a.delta;
        cfg.perminv = a.perminv;
        cfg.clipgrad = a.clipgrad;
        cfg.match_iterations = a.match_iterations;
        cfg.encoder = a.model == "crgvae" ? EncoderKind::gcn : EncoderKind::mlp;
        Rgvae model(cfg, a.seed);

        log << "epoch\telbo\trecon\tkl\tperm_rate\n";
        for (int epoch = 1; epoch <= a.epochs; ++epoch) {
            shuffled_batches(train);
            double total = 0.0, recon = 0.0, kl = 0.0, perm = 0.0;
            size_t steps = 0;
            for (size_t off = 0; off < train.size(); off += a.batch_size) {
                size_t end = std::min(off + a.batch_size, train.size());
                std::vector<Triple> chunk(train.begin() + off, train.begin() + end);
                auto graphs = triples_to_graphs(chunk, cfg.n, cfg.d_e, cfg.d_r);
                StepStats st = model.train_step(graphs, optimizer);
                total += st.total;
                recon += st.recon;
                kl += st.kl;
                perm += st.perm_rate;
                ++steps;
            }
            double d = static_cast<double>(steps);
            log << epoch << "\t" << fmt(total / d) << "\t" << fmt(recon / d) << "\t"
                << fmt(kl / d) << "\t" << fmt(perm / d) << "\n";
        }
        model.save(a.out);
    } else if (a.model == "distmult" || a.model == "vdistmult") {
        DistMultConfig cfg;
        cfg.d_e = store.num_entities();
        cfg.d_r = store.num_relations();
        cfg.d_emb = a.d_emb;
        cfg.variational = a.model == "vdistmult";
        cfg.beta = a.beta;
        DistMult model(cfg, a.seed);
        DmLossKind kind = a.dm_loss == "elbo" ? DmLossKind::elbo : DmLossKind::bce;
        Rng train_rng(a.seed + 2);

        log << "epoch\tloss\n";
        for (int epoch = 1; epoch <= a.epochs; ++epoch) {
            shuffled_batches(train);
            double total = 0.0;
            size_t steps = 0;
            for (size_t off = 0; off < train.size(); off += a.batch_size) {
                size_t end = std::min(off + a.batch_size, train.size());
                std::vector<Triple> chunk(train.begin() + off, train.begin() + end);
                total += model.train_step(chunk, a.negatives, kind, optimizer, train_rng);
                ++steps;
            }
            log << epoch << "\t" << fmt(total / static_cast<double>(steps)) << "\n";
        }
        model.save(a.out);
    } else {
        throw contract_error("unknown model kind " + a.model);
    }
    std::cout << "checkpoint written to " << a.out << "\n";
    return 0;
}

struct EvalArgs {
    std::string checkpoint, dataset_dir, split = "test", report = "lp_report.txt", ranks;
    std::string eps_mode = "one";
    double fraction = 1.0;
    uint64_t seed = 0;
    bool raw = false, final_mode = false;
    int score_batch = 256;
};

int cmd_eval_lp(const EvalArgs& a) {
    TripleStore store = load_store(a.dataset_dir, a.final_mode);
    const std::vector<Triple>& split_triples =
        a.split == "valid" ? store.valid() : a.split == "train" ? store.train()
                                                                : store.test();
    std::vector<Triple> subset = subset_sample(split_triples, a.fraction, a.seed);

    std::string kind = checkpoint_model_kind(a.checkpoint);
    std::vector<RankRecord> records;
    LpReport rep;
    if (kind == "rgvae") {
        Rgvae model = Rgvae::load(a.checkpoint);
        RgvaeScorer scorer(model);
        rep = evaluate(subset, scorer, store, !a.raw, &records, a.score_batch);
    } else if (kind == "distmult") {
        DistMult model = DistMult::load(a.checkpoint);
        EpsMode mode = a.eps_mode == "sample" ? EpsMode::sample
                       : a.eps_mode == "zero" ? EpsMode::zero
                                              : EpsMode::one;
        DistMultScorer scorer(model, mode, a.seed);
        rep = evaluate(subset, scorer, store, !a.raw, &records, a.score_batch);
    } else {
        throw format_error("unsupported checkpoint model " + kind);
    }

    KvList header = {{"command", "eval-lp"},
                     {"checkpoint", a.checkpoint},
                     {"dataset_dir", a.dataset_dir},
                     {"split", a.split},
                     {"fraction", fmt(a.fraction)},
                     {"seed", std::to_string(a.seed)},
                     {"filtered", a.raw ? "0" : "1"},
                     {"final", a.final_mode ? "1" : "0"},
                     {"eps_mode", a.eps_mode},
                     {"score_batch", std::to_string(a.score_batch)}};
    KvList body = {{"mrr", fmt(rep.mrr)},       {"hits1", fmt(rep.hits1)},
                   {"hits3", fmt(rep.hits3)},   {"hits10", fmt(rep.hits10)},
                   {"count", std::to_string(rep.count)},
                   {"filtered", rep.filtered ? "1" : "0"}};
    write_report(a.report, header, body);

    std::string ranks_path = a.ranks.empty() ? a.report + ".ranks.tsv" : a.ranks;
    std::ofstream rt(ranks_path);
    if (!rt) throw data_error("cannot write " + ranks_path);
    rt << "s\tr\to\thead_rank\ttail_rank\n";
    for (const RankRecord& rec : records)
        rt << rec.triple.s << "\t" << rec.triple.r << "\t" << rec.triple.o << "\t"
           << fmt(rec.head_rank) << "\t" << fmt(rec.tail_rank) << "\n";

    std::cout << "mrr=" << fmt(rep.mrr) << " hits1=" << fmt(rep.hits1)
              << " hits3=" << fmt(rep.hits3) << " hits10=" << fmt(rep.hits10) << "\n";
    return 0;
}

struct GenerateArgs {
    std::string checkpoint, dataset_dir, types, report = "generation_report.txt";
    std::string key_type = "people", match_mode = "base";
    size_t count = 1000;
    double sigma = 1.0;
    uint64_t seed = 0;
    size_t max_attempt_factor = 200;
};

int cmd_generate(const GenerateArgs& a) {
    TripleStore store = load_store(a.dataset_dir, false);
    TypeCatalog catalog = TypeCatalog::load(a.types, store);
    Rgvae model = Rgvae::load(a.checkpoint);
    TypeMatchMode mode = a.match_mode == "substring" ? TypeMatchMode::substring
                                                     : TypeMatchMode::base_type;
    RelationFilter filter = RelationFilter::build(store, a.key_type, mode);
    Rng rng(a.seed);
    GenerationRun run =
        generate_triples(model, a.count, a.sigma, filter, rng, a.max_attempt_factor);
    GenerationReport rep = validate_generated(run.raw, catalog, store, a.key_type, mode);

    KvList header = {{"command", "generate"},
                     {"checkpoint", a.checkpoint},
                     {"dataset_dir", a.dataset_dir},
                     {"types", a.types},
                     {"key_type", a.key_type},
                     {"match_mode", a.match_mode},
                     {"count", std::to_string(a.count)},
                     {"sigma", fmt(a.sigma)},
                     {"seed", std::to_string(a.seed)},
                     {"max_attempt_factor", std::to_string(a.max_attempt_factor)}};
    KvList body = {{"total", std::to_string(rep.total)},
                   {"kept", std::to_string(rep.kept)},
                   {"valid", std::to_string(rep.valid)},
                   {"novel", std::to_string(rep.novel)},
                   {"baseline", fmt(rep.baseline)},
                   {"valid_rate", fmt(rep.kept ? static_cast<double>(rep.valid) /
                                                     static_cast<double>(rep.kept)
                                               : 0.0)},
                   {"z_draws", std::to_string(run.z_draws)},
                   {"capped", run.capped ? "1" : "0"}};
    write_report(a.report, header, body);
    std::cout << "kept=" << rep.kept << " valid=" << rep.valid
              << " baseline=" << fmt(rep.baseline) << "\n";
    return 0;
}

struct InterpolateArgs {
    std::string checkpoint, dataset_dir, mode = "between", out = "interpolation.tsv";
    std::vector<std::string> a, b;
    size_t steps = 10;
};

int cmd_interpolate(const InterpolateArgs& args) {
    TripleStore store = load_store(args.dataset_dir, false);
    Rgvae model = Rgvae::load(args.checkpoint);
    auto parse_triple = [&](const std::vector<std::string>& parts) {
        if (parts.size() != 3) throw contract_error("triple needs subject relation object");
        Triple t{store.entity_id(parts[0]), store.relation_id(parts[1]),
                 store.entity_id(parts[2])};
        if (t.s < 0 || t.r < 0 || t.o < 0)
            throw data_error("triple not in vocabulary: " + parts[0] + " " + parts[1] +
                             " " + parts[2]);
        return t;
    };

    std::ofstream os(args.out);
    if (!os) throw data_error("cannot write " + args.out);
    auto emit = [&](const std::string& prefix, const std::vector<Triple>& triples) {
        if (triples.empty()) {
            os << prefix << "\t-\n";
            return;
        }
        for (const Triple& t : triples)
            os << prefix << "\t" << store.triple_string(t) << "\n";
    };

    if (args.mode == "between") {
        Triple ta = parse_triple(args.a);
        Triple tb = parse_triple(args.b);
        auto steps = interpolate_between(model, ta, tb, args.steps);
        os << "step\tsubject\trelation\tobject\n";
        for (size_t j = 0; j < steps.size(); ++j) emit(std::to_string(j), steps[j]);
    } else if (args.mode == "dims") {
        Triple ta = parse_triple(args.a);
        auto grid = interpolate_dims(model, ta, args.steps);
        os << "dim\tstep\tsubject\trelation\tobject\n";
        for (size_t d = 0; d < grid.size(); ++d)
            for (size_t j = 0; j < grid[d].size(); ++j)
                emit(std::to_string(d) + "\t" + std::to_string(j), grid[d][j]);
    } else {
        throw contract_error("unknown interpolation mode " + args.mode);
    }
    std::cout << "interpolation written to " << args.out << "\n";
    return 0;
}

int cmd_gradcheck() {
    auto results = run_gradcheck_suite();
    bool all_ok = true;
    for (const auto& r : results) {
        std::printf("%-28s %.3e %s\n", r.name.c_str(), r.max_rel_error,
                    r.ok() ? "ok" : "FAIL");
        all_ok = all_ok && r.ok();
    }
    return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Relational graph VAE toolkit"};
    app.require_subcommand(1);

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");
    train->add_option("--dataset-dir", train_args.dataset_dir,
                      "Directory with train.txt/valid.txt/test.txt")->required();
    train->add_option("--model", train_args.model, "rgvae|crgvae|distmult|vdistmult");
    train->add_option("--epochs", train_args.epochs);
    train->add_option("--batch-size", train_args.batch_size);
    train->add_option("--lr", train_args.lr, "Learning rate");
    train->add_option("--beta", train_args.beta, "Regularization weight");
    train->add_option("--delta", train_args.delta, "KL truncation target");
    train->add_option("--d-z", train_args.d_z, "Latent dimension");
    train->add_option("--d-h", train_args.d_h, "Hidden dimension");
    train->add_option("--d-emb", train_args.d_emb, "Embedding dimension");
    train->add_option("--dropout", train_args.dropout);
    train->add_option("--match-iterations", train_args.match_iterations);
    train->add_option("--negatives", train_args.negatives, "Negatives per positive");
    train->add_option("--dm-loss", train_args.dm_loss, "bce|elbo");
    train->add_option("--lookahead-k", train_args.lookahead_k);
    train->add_option("--lookahead-alpha", train_args.lookahead_alpha);
    train->add_option("--seed", train_args.seed);
    train->add_option("--out", train_args.out, "Checkpoint path");
    train->add_option("--log", train_args.log, "Training log TSV path");
    train->add_flag("--perminv,!--no-perminv", train_args.perminv,
                    "Permutation-invariant loss");
    train->add_flag("--clipgrad,!--no-clipgrad", train_args.clipgrad);
    train->add_flag("--gc,!--no-gc", train_args.gc, "Gradient centralization");
    train->add_flag("--final", train_args.final_mode, "Train on train+valid, test split");

    EvalArgs eval_args;
    auto* ev = app.add_subcommand("eval-lp", "Filtered link-prediction ranking");
    ev->add_option("--checkpoint", eval_args.checkpoint)->required();
    ev->add_option("--dataset-dir", eval_args.dataset_dir)->required();
    ev->add_option("--split", eval_args.split, "train|valid|test");
    ev->add_option("--fraction", eval_args.fraction, "Subset fraction of the split");
    ev->add_option("--seed", eval_args.seed);
    ev->add_option("--report", eval_args.report);
    ev->add_option("--ranks", eval_args.ranks, "Per-triple rank TSV path");
    ev->add_option("--eps-mode", eval_args.eps_mode, "sample|one|zero (variational)");
    ev->add_option("--score-batch", eval_args.score_batch);
    ev->add_flag("--raw", eval_args.raw, "Raw instead of filtered ranks");
    ev->add_flag("--final", eval_args.final_mode);

    GenerateArgs gen_args;
    auto* gen = app.add_subcommand("generate", "Sample triples and score validity");
    gen->add_option("--checkpoint", gen_args.checkpoint)->required();
    gen->add_option("--dataset-dir", gen_args.dataset_dir)->required();
    gen->add_option("--types", gen_args.types, "Entity type TSV")->required();
    gen->add_option("--count", gen_args.count, "Kept-triple target");
    gen->add_option("--sigma", gen_args.sigma, "Latent draw scale");
    gen->add_option("--key-type", gen_args.key_type);
    gen->add_option("--match-mode", gen_args.match_mode, "base|substring");
    gen->add_option("--seed", gen_args.seed);
    gen->add_option("--report", gen_args.report);
    gen->add_option("--max-attempt-factor", gen_args.max_attempt_factor);

    InterpolateArgs ip_args;
    auto* ip = app.add_subcommand("interpolate", "Latent space interpolation");
    ip->add_option("--checkpoint", ip_args.checkpoint)->required();
    ip->add_option("--dataset-dir", ip_args.dataset_dir)->required();
    ip->add_option("--mode", ip_args.mode, "between|dims");
    ip->add_option("--a", ip_args.a, "First triple: subject relation object")
        ->expected(3)->required();
    ip->add_option("--b", ip_args.b, "Second triple (between mode)")->expected(3);
    ip->add_option("--steps", ip_args.steps);
    ip->add_option("--out", ip_args.out);

    auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient suite");

    std::string params_checkpoint, params_out = "params.tsv";
    auto* pr = app.add_subcommand("params", "Export per-layer parameter values");
    pr->add_option("--checkpoint", params_checkpoint)->required();
    pr->add_option("--out", params_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (train->parsed()) return cmd_train(train_args);
        if (ev->parsed()) return cmd_eval_lp(eval_args);
        if (gen->parsed()) return cmd_generate(gen_args);
        if (ip->parsed()) return cmd_interpolate(ip_args);
        if (gc->parsed()) return cmd_gradcheck();
        if (pr->parsed()) {
            export_param_histograms(params_checkpoint, params_out);
            std::cout << "parameters written to " << params_out << "\n";
            return 0;
        }
    } catch (const contract_error& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
    return 1;
}
