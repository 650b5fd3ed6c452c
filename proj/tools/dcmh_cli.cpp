// dcmh: synthetic data generation, training, encoding and retrieval evaluation.
//
//   dcmh synth  --out data.dcmh --classes 2 --per-class 100 --seed 7
//   dcmh train  --data data.dcmh --out model.ckpt --log train.csv --code-length 8 ...
//   dcmh encode --checkpoint model.ckpt --data data.dcmh --modality image --subset query --out q.codes
//   dcmh eval   --query q.codes --database db.codes --data data.dcmh --task i2t --pr-out pr.csv --map-out map.csv
//
// Every subcommand also accepts --config FILE: a flat "key = value" file whose
// keys are long flag names without the leading dashes. Flags given on the
// command line override values from the file.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dcmh/checkpoint.hpp"
#include "dcmh/data.hpp"
#include "dcmh/retrieval.hpp"
#include "dcmh/rng.hpp"
#include "dcmh/train.hpp"

namespace {

using namespace dcmh;

// Sub-stream ids fanned out from a command's --seed by derive_seed().
constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kTrainStream = 2;

struct SynthOptions {
    std::string out;
    SynthSpec spec;
};

struct TrainOptions {
    std::string data;
    std::string out;
    std::string log;
    Hyperparams hyper;
    std::string grad_scale = "mean";
    std::vector<Index> image_hidden{64};
    std::vector<Index> text_hidden{64};
    Index query_count = 2000;
    Index train_count = 5000;
    std::uint64_t seed = 0;
};

struct EncodeOptions {
    std::string checkpoint;
    std::string data;
    std::string modality;
    std::string subset = "database";
    std::string out;
};

struct EvalOptions {
    std::string query;
    std::string database;
    std::string data;
    std::string task;
    std::string pr_out;
    std::string map_out;
    std::string averaging = "micro";
    std::optional<std::size_t> top_k;
};

std::vector<LayerSpec> layers_for(Index in_dim, const std::vector<Index>& hidden, Index c) {
    std::vector<Index> widths;
    for (Index h : hidden)
        if (h > 0) widths.push_back(h);
    return mlp_specs(in_dim, widths, c);
}

void check_written(std::ostream& out, const std::string& path) {
    if (!out.flush()) throw std::runtime_error("failed writing " + path);
}

// ---------------------------------------------------------------------------

int run_synth(const SynthOptions& o) {
    const MultiModalDataset ds = synth_dataset(o.spec);
    save_dataset(ds, o.out);
    std::cout << "wrote " << o.out << ": n=" << ds.size() << " d_x=" << ds.image.rows()
              << " d_y=" << ds.text.rows() << " classes=" << o.spec.classes << "\n";
    return 0;
}

int run_train(TrainOptions o) {
    o.hyper.grad_scale = o.grad_scale == "sum" ? GradientScale::Sum : GradientScale::PointBatchMean;
    o.hyper.validate();
    const MultiModalDataset ds = load_dataset(o.data);

    const SplitSpec split_spec{o.query_count, o.train_count, derive_seed(o.seed, kSplitStream)};
    Split parts;
    try {
        parts = split(ds, split_spec);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string("--query-count/--train-count: ") + e.what());
    }
    if (parts.train.empty()) throw std::invalid_argument("--train-count: must be >= 1");
    const MultiModalDataset train_set = subset(ds, parts.train);
    const SimilarityMatrix S = build_similarity(train_set.labels, train_set.labels);
    const Architecture arch{
        layers_for(ds.image.rows(), o.image_hidden, o.hyper.code_length),
        layers_for(ds.text.rows(), o.text_hidden, o.hyper.code_length)};

    std::ofstream log(o.log);
    if (!log) throw std::runtime_error("cannot open " + o.log + " for writing");
    log << "iteration,total,likelihood,quantization,balance,seconds\n" << std::setprecision(17);

    const auto state = train(train_set.image, train_set.text, S, arch, o.hyper,
                             Rng(derive_seed(o.seed, kTrainStream)), [&](const IterationLog& it) {
                                 log << it.iteration << ',' << it.terms.total() << ','
                                     << it.terms.likelihood << ',' << it.terms.quantization << ','
                                     << it.terms.balance << ',' << it.seconds << '\n';
                                 log.flush();
                             });
    check_written(log, o.log);
    save_checkpoint(make_checkpoint(state, o.seed, split_spec), o.out);

    const ObjectiveTerms final_terms = objective_terms(state.F, state.G, state.B, S, o.hyper);
    std::cout << "trained on " << parts.train.size() << " points, c=" << o.hyper.code_length
              << ", " << o.hyper.outer_iters << " outer iterations\n"
              << "objective: initial " << state.initial.total() << ", final "
              << final_terms.total() << "\n"
              << "wrote " << o.out << " and " << o.log << "\n";
    return 0;
}

int run_encode(const EncodeOptions& o) {
    const Checkpoint ck = load_checkpoint(o.checkpoint);
    const MultiModalDataset ds = load_dataset(o.data);
    const Split parts = split(ds, ck.split);

    std::vector<Index> points;
    if (o.subset == "query")
        points = parts.query;
    else if (o.subset == "database")
        points = parts.database;
    else if (o.subset == "train")
        points = parts.train;
    else
        for (Index i = 0; i < ds.size(); ++i) points.push_back(i);

    const bool image = o.modality == "image";
    const FeedForwardNet& net = image ? ck.net_x : ck.net_y;
    const FeedForwardNet& other = image ? ck.net_y : ck.net_x;
    const DenseMatrix& feats = image ? ds.image : ds.text;
    const DenseMatrix& other_feats = image ? ds.text : ds.image;
    if (feats.rows() != net.input_dim())
        throw std::invalid_argument("--modality " + o.modality + ": network expects " +
                                    std::to_string(net.input_dim()) + " features, dataset has " +
                                    std::to_string(feats.rows()));

    CodeDatabase db;
    db.codes = CodeMatrix(ck.hyper.code_length, 0);
    for (Index p : points) db.ids.push_back(static_cast<std::uint64_t>(p));
    if (!points.empty()) {
        db.codes = encode(net, feats(Eigen::all, points));
        const CodeMatrix other_codes = encode(other, other_feats(Eigen::all, points));
        const double agree =
            static_cast<double>((db.codes.values().array() == other_codes.values().array()).count()) /
            static_cast<double>(db.codes.values().size());
        std::cout << "bit agreement with " << (image ? "text" : "image")
                  << " codes of the same points: " << std::fixed << std::setprecision(4) << agree
                  << std::defaultfloat << "\n";
    }
    save_code_database(db, o.out);
    std::cout << "wrote " << o.out << ": " << points.size() << " " << o.modality << " codes, c="
              << ck.hyper.code_length << "\n";
    return 0;
}

int run_eval(const EvalOptions& o) {
    const CodeDatabase queries = load_code_database(o.query);
    const CodeDatabase db = load_code_database(o.database);
    if (queries.code_length() != db.code_length())
        throw std::invalid_argument("code length mismatch: " + o.query + " has " +
                                    std::to_string(queries.code_length()) + " bits, " +
                                    o.database + " has " + std::to_string(db.code_length()));
    const MultiModalDataset ds = load_dataset(o.data);
    const auto labels_of = [&](const CodeDatabase& cd, const std::string& path) {
        std::vector<LabelSet> out;
        for (auto id : cd.ids) {
            if (id >= static_cast<std::uint64_t>(ds.size()))
                throw std::invalid_argument(path + ": id " + std::to_string(id) +
                                            " is not a point of " + o.data);
            out.push_back(ds.labels[id]);
        }
        return out;
    };
    const GroundTruth truth{build_similarity(labels_of(queries, o.query), labels_of(db, o.database))};
    const Task task = o.task == "i2t" ? Task::ImageToText : Task::TextToImage;

    const MapResult map = mean_average_precision(queries, db, truth, o.top_k);
    const auto curve = pr_curve(queries, db, truth,
                                o.averaging == "macro" ? Averaging::Macro : Averaging::Micro);

    std::ofstream pr(o.pr_out, std::ios::binary);
    if (!pr) throw std::runtime_error("cannot open " + o.pr_out + " for writing");
    write_pr_csv(pr, task, db.code_length(), curve);
    check_written(pr, o.pr_out);
    std::ofstream mp(o.map_out, std::ios::binary);
    if (!mp) throw std::runtime_error("cannot open " + o.map_out + " for writing");
    write_map_csv(mp, task, db.code_length(), map, o.top_k);
    check_written(mp, o.map_out);

    std::cout << task_label(task) << ": MAP " << std::fixed << std::setprecision(4) << map.map
              << " over " << map.evaluated << " queries";
    if (map.skipped > 0) std::cout << " (" << map.skipped << " without relevant points skipped)";
    std::cout << "\n";
    for (const auto& p : curve)
        if (p.radius <= 2)
            std::cout << "  r=" << p.radius << " precision " << p.precision << " recall "
                      << p.recall << " F " << p.f_measure << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// Flat key=value config files

std::map<std::string, std::string> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    const auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                        ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": empty key");
        kv[key] = value;
    }
    return kv;
}

/// Rewrites argv so that values from --config come before the command-line
/// flags; options keep the last value given, so the command line wins.
std::vector<std::string> expand_config(const std::vector<std::string>& args,
                                       const std::map<std::string, CLI::App*>& subs) {
    if (args.size() < 2 || !subs.count(args[1])) return args;
    CLI::App* sub = subs.at(args[1]);

    std::optional<std::string> config;
    std::vector<std::string> rest;
    for (std::size_t i = 2; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            config = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    if (!config) return args;

    std::set<std::string> known;
    for (const CLI::Option* opt : sub->get_options())
        for (const auto& name : opt->get_lnames()) known.insert(name);

    std::vector<std::string> out{args[0], args[1]};
    for (const auto& [key, value] : read_config(*config)) {
        if (!known.count(key) || key == "config" || key == "help")
            throw std::invalid_argument("config file " + *config + ": unknown key '" + key + "'");
        out.push_back("--" + key);
        std::stringstream ss(value);
        std::string tok;
        bool any = false;
        while (ss >> tok) {
            out.push_back(tok);
            any = true;
        }
        if (!any)
            throw std::invalid_argument("config file " + *config + ": key '" + key +
                                        "' has no value");
    }
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deep cross-modal hashing: train per-modality hash networks and evaluate "
                 "Hamming-space retrieval"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    const auto add_config_flag = [](CLI::App* sub) {
        sub->add_option("--config", "Flat key = value file of flag defaults (flags win)");
    };

    // synth ------------------------------------------------------------------
    SynthOptions so;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic paired image/text dataset");
    synth->add_option("--out", so.out, "Output dataset file")->required();
    synth->add_option("--classes", so.spec.classes, "Number of classes")
        ->capture_default_str()
        ->check(CLI::Range(Index{2}, Index{1} << 20));
    synth->add_option("--per-class", so.spec.per_class, "Points per class")
        ->capture_default_str()
        ->check(CLI::Range(Index{1}, Index{1} << 24));
    synth->add_option("--d-x", so.spec.d_x, "Image feature dimension")
        ->capture_default_str()
        ->check(CLI::Range(Index{1}, Index{1} << 20));
    synth->add_option("--d-y", so.spec.d_y, "Text vocabulary size")
        ->capture_default_str()
        ->check(CLI::Range(Index{1}, Index{1} << 20));
    synth->add_option("--noise", so.spec.noise, "Std. dev. of image feature noise")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    synth->add_option("--words-per-doc", so.spec.words_per_doc, "Words drawn per text")
        ->capture_default_str()
        ->check(CLI::Range(Index{1}, Index{1} << 20));
    synth->add_option("--seed", so.spec.seed, "Random seed")->capture_default_str();
    add_config_flag(synth);

    // train ------------------------------------------------------------------
    TrainOptions to;
    auto* trn = app.add_subcommand("train", "Train both hash networks by alternating optimization");
    trn->add_option("--data", to.data, "Dataset file")->required();
    trn->add_option("--out", to.out, "Checkpoint file to write")->required();
    trn->add_option("--log", to.log, "Per-iteration objective CSV to write")->required();
    trn->add_option("--code-length", to.hyper.code_length, "Bits per code (typical: 16, 32, 64)")
        ->capture_default_str()
        ->check(CLI::Range(Index{1}, Index{65536}));
    trn->add_option("--gamma", to.hyper.gamma, "Quantization weight")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    trn->add_option("--eta", to.hyper.eta, "Bit-balance weight")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    trn->add_option("--batch-size", to.hyper.batch_size, "Mini-batch size")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    trn->add_option("--outer-iters", to.hyper.outer_iters, "Outer iterations")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    trn->add_option("--lr", to.hyper.lr, "SGD learning rate")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    trn->add_option("--grad-scale", to.grad_scale,
                    "Batch gradient scaling: mean (divide by n * batch) or sum")
        ->capture_default_str()
        ->check(CLI::IsMember({"mean", "sum"}));
    trn->add_option("--image-hidden", to.image_hidden,
                    "Hidden ReLU layer widths of the image network (0 for none)")
        ->capture_default_str()
        ->delimiter(',')
        ->check(CLI::NonNegativeNumber);
    trn->add_option("--text-hidden", to.text_hidden,
                    "Hidden ReLU layer widths of the text network (0 for none)")
        ->capture_default_str()
        ->delimiter(',')
        ->check(CLI::NonNegativeNumber);
    trn->add_option("--query-count", to.query_count, "Points held out as queries")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    trn->add_option("--train-count", to.train_count, "Training points drawn from the database")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    trn->add_option("--seed", to.seed, "Random seed (split and training streams derive from it)")
        ->capture_default_str();
    add_config_flag(trn);
    // Vector options would otherwise append repeated values instead of replacing them.
    for (auto* name : {"--image-hidden", "--text-hidden"})
        trn->get_option(name)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);

    // encode -----------------------------------------------------------------
    EncodeOptions eo;
    auto* enc = app.add_subcommand("encode", "Encode dataset points with a trained network");
    enc->add_option("--checkpoint", eo.checkpoint, "Checkpoint from train")->required();
    enc->add_option("--data", eo.data, "Dataset file used for training")->required();
    enc->add_option("--modality", eo.modality, "Which network to use")
        ->required()
        ->check(CLI::IsMember({"image", "text"}));
    enc->add_option("--subset", eo.subset, "Points to encode")
        ->capture_default_str()
        ->check(CLI::IsMember({"query", "database", "train", "all"}));
    enc->add_option("--out", eo.out, "Code file to write (ids go to <out>.ids)")->required();
    add_config_flag(enc);

    // eval -------------------------------------------------------------------
    EvalOptions vo;
    auto* ev = app.add_subcommand("eval", "Hamming ranking MAP and hash lookup PR curve");
    ev->add_option("--query", vo.query, "Query code file")->required();
    ev->add_option("--database", vo.database, "Database code file")->required();
    ev->add_option("--data", vo.data, "Dataset file supplying labels")->required();
    ev->add_option("--task", vo.task, "i2t (Image → Text) or t2i (Text → Image)")
        ->required()
        ->check(CLI::IsMember({"i2t", "t2i"}));
    ev->add_option("--pr-out", vo.pr_out, "PR-curve CSV to write")->required();
    ev->add_option("--map-out", vo.map_out, "MAP summary CSV to write")->required();
    ev->add_option("--averaging", vo.averaging, "PR-curve averaging across queries")
        ->capture_default_str()
        ->check(CLI::IsMember({"micro", "macro"}));
    ev->add_option("--top-k", vo.top_k, "Only the first K ranks count toward MAP")
        ->check(CLI::PositiveNumber);
    add_config_flag(ev);

    std::vector<std::string> args(argv, argv + argc);
    try {
        args = expand_config(args, {{"synth", synth}, {"train", trn}, {"encode", enc}, {"eval", ev}});
        // Each subcommand's vector options take every value, so a config-file
        // value followed by a command-line value must not accumulate.
        for (auto* name : {"--image-hidden", "--text-hidden"}) {
            auto last = args.end();
            for (auto it = args.begin(); it != args.end(); ++it)
                if (*it == name) last = it;
            if (last == args.end()) continue;
            for (auto it = args.begin(); it != last;) {
                if (*it == name) {
                    auto stop = it + 1;
                    while (stop != args.end() && stop->rfind("--", 0) != 0) ++stop;
                    const auto removed = stop - it;
                    it = args.erase(it, stop);
                    last -= removed;
                } else {
                    ++it;
                }
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    std::vector<const char*> cargs;
    for (const auto& a : args) cargs.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*synth) return run_synth(so);
        if (*trn) return run_train(to);
        if (*enc) return run_encode(eo);
        if (*ev) return run_eval(vo);
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
