#include <aedmatch/exact_match.hpp>
#include <aedmatch/harness.hpp>
#include <aedmatch/model.hpp>
#include <aedmatch/pair_io.hpp>
#include <aedmatch/pairgen.hpp>
#include <aedmatch/tudataset.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace aedmatch;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    std::string out = "aedmatch-out";
    std::size_t threads = 1;
    bool verbose = false;
};

struct GenOpts {
    std::string source = "synthetic";
    std::size_t num = 100;
    std::size_t qmin = 5;
    std::size_t qmax = 8;
    std::string split = "8:1:1";
    std::size_t cap = 1000;
    std::size_t graphs = 100;
    std::size_t min_nodes = 15;
    std::size_t max_nodes = 25;
    double edge_prob = 0.3;
    int labels = 4;
};

struct MatchOpts {
    std::string pairs;
    std::string mode = "all";
    double deadline = 0.0;
    std::size_t limit = 0;
    bool non_induced = false;
    bool emit = false;
};

struct ModelOpts {
    std::size_t layers = 3;
    std::size_t heads = 4;
    std::size_t dim = 32;
    double lambda1 = 0.5;
    double lambda2 = 0.2;
    std::string pooling = "mean";
    bool shared_temperature = false;
    double tau0 = 0.95;
};

struct TrainOpts {
    std::string train;
    std::string val;
    std::string test;
    std::size_t epochs = 100;
    double lr = 0.001;
    bool no_cross = false;
    bool no_delete = false;
    bool include_truncated = false;
    double train_noise_std = 0.0;
};

struct EvalOpts {
    std::string pairs;
    std::string ckpt;
    double noise_std = 0.0;
    bool by_ratio = false;
};

struct BenchOpts {
    std::string pairs;
    std::string ckpt;
    double deadline = 0.0;
    std::size_t repeats = 1;
};

int usage_error(const std::string& msg) {
    std::cerr << "error: " << msg << "\nRun with --help for usage.\n";
    return 1;
}

void log_line(const Globals& g, const std::string& s) {
    if (g.verbose) std::cerr << s << '\n';
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

template <typename Fn>
void write_text(const fs::path& path, Fn&& fn) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    fn(out);
}

void emit_summary(const Globals& g, const json& summary) {
    if (g.verbose)
        std::cout << summary.dump(2) << '\n';
    else
        std::cout << summary.dump() << '\n';
}

std::vector<std::size_t> parse_split(const std::string& spec) {
    std::vector<std::size_t> parts;
    std::stringstream in(spec);
    std::string item;
    while (std::getline(in, item, ':')) {
        std::size_t pos = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(item, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos == 0 || pos != item.size()) throw ConfigError("--split must look like 8:1:1, got '" + spec + "'");
        parts.push_back(v);
    }
    if (parts.size() != 3) throw ConfigError("--split needs three fields train:val:test");
    if (parts[0] + parts[1] + parts[2] == 0) throw ConfigError("--split weights are all zero");
    return parts;
}

/// Largest-remainder apportionment of `total` by `weights`.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<std::size_t>& weights) {
    std::size_t wsum = 0;
    for (auto w : weights) wsum += w;
    std::vector<std::size_t> out(weights.size());
    std::vector<std::pair<std::size_t, std::size_t>> rem;
    std::size_t used = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        out[i] = total * weights[i] / wsum;
        used += out[i];
        rem.push_back({total * weights[i] % wsum, i});
    }
    std::stable_sort(rem.begin(), rem.end(), [](auto a, auto b) { return a.first > b.first; });
    for (std::size_t k = 0; used < total; ++k, ++used) ++out[rem[k % rem.size()].second];
    return out;
}

ModelConfig model_config(const ModelOpts& m, std::uint64_t seed) {
    ModelConfig cfg;
    cfg.layers = m.layers;
    cfg.heads = m.heads;
    cfg.hidden_dim = m.dim;
    cfg.lambda1 = m.lambda1;
    cfg.lambda2 = m.lambda2;
    cfg.pooling = json(m.pooling).get<Pooling>();
    cfg.shared_temperature = m.shared_temperature;
    cfg.initial_temperature = m.tau0;
    cfg.init_seed = seed;
    cfg.validate();
    return cfg;
}

TrainConfig train_config(const TrainOpts& t, std::uint64_t seed) {
    TrainConfig tc;
    tc.epochs = t.epochs;
    tc.lr = t.lr;
    tc.seed = seed;
    tc.no_cross = t.no_cross;
    tc.no_delete = t.no_delete;
    tc.include_truncated = t.include_truncated;
    tc.train_noise_std = t.train_noise_std;
    return tc;
}

void add_model_flags(CLI::App* sub, ModelOpts& m) {
    sub->add_option("--layers", m.layers, "Number of layers T (>= 2)")->capture_default_str();
    sub->add_option("--heads", m.heads, "Attention heads K")->capture_default_str();
    sub->add_option("--dim", m.dim, "Hidden width d (multiple of heads)")->capture_default_str();
    sub->add_option("--lambda1", m.lambda1, "Weight of the edge-deleting loss")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    sub->add_option("--lambda2", m.lambda2, "Weight of the intermediate layers' losses")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    sub->add_option("--pooling", m.pooling, "Query pooling: mean, sum or max")
        ->check(CLI::IsMember({"mean", "sum", "max"}))
        ->capture_default_str();
    sub->add_flag("--shared-temperature", m.shared_temperature, "One temperature for all layers");
    sub->add_option("--tau0", m.tau0, "Initial temperature in (0, 1)")->capture_default_str();
}

void add_train_flags(CLI::App* sub, TrainOpts& t) {
    sub->add_option("--epochs", t.epochs, "Training epochs")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--lr", t.lr, "Adam learning rate")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_flag("--no-cross", t.no_cross, "Disable cross-propagation (ablation)");
    sub->add_flag("--no-delete", t.no_delete, "Set lambda1 = 0 (ablation)");
    sub->add_flag("--include-truncated", t.include_truncated, "Also train on pairs with capped mapping sets");
    sub->add_option("--train-noise-std", t.train_noise_std, "Gaussian noise on numerical training features")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
}

fs::path prepare_out(const Globals& g) {
    fs::path out(g.out);
    fs::create_directories(out);
    return out;
}

/// Effective settings of the global options and the selected subcommand, in
/// the --config format. Unset paths are dropped so the file reloads cleanly.
std::string effective_config(const CLI::App& app, const CLI::App* sub) {
    std::istringstream all(app.config_to_str(true, false));
    std::ostringstream out;
    const std::string own = sub->get_name() + ".";
    std::string line;
    while (std::getline(all, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos || line.substr(eq + 1) == "\"\"") continue;
        const std::string key = line.substr(0, eq);
        if (key.find('.') == std::string::npos || key.rfind(own, 0) == 0) out << line << '\n';
    }
    return out.str();
}

json manifest(const CLI::App& app, const CLI::App* sub, const Globals& g, const std::vector<std::string>& argv) {
    return {{"tool", "aedmatch"},
            {"subcommand", sub->get_name()},
            {"seed", g.seed},
            {"argv", argv},
            {"effective_config", effective_config(app, sub)}};
}

json run_gen(const Globals& g, const GenOpts& o, json& man) {
    const auto split = parse_split(o.split);
    if (o.qmin == 0 || o.qmax < o.qmin) throw ConfigError("--qmin/--qmax must satisfy 1 <= qmin <= qmax");
    std::vector<LabeledGraph> corpus;
    if (o.source == "synthetic") {
        SyntheticParams sp;
        sp.count = o.graphs;
        sp.min_nodes = o.min_nodes;
        sp.max_nodes = o.max_nodes;
        sp.edge_prob = o.edge_prob;
        sp.num_labels = o.labels;
        Rng rng = make_rng(g.seed, "corpus");
        corpus = generate_synthetic_corpus(sp, rng);
    } else if (o.source.rfind("tud:", 0) == 0) {
        corpus = load_tudataset(o.source.substr(4));
    } else {
        throw ConfigError("--source must be 'synthetic' or 'tud:<dir>'");
    }
    log_line(g, "corpus: " + std::to_string(corpus.size()) + " graphs");

    const fs::path out = prepare_out(g);
    const auto counts = apportion(o.num, split);
    const char* names[] = {"train", "val", "test"};
    json files = json::object();
    json summary{{"corpus_graphs", corpus.size()}};
    for (std::size_t s = 0; s < 3; ++s) {
        GenResult r;
        if (counts[s] > 0) {
            GenConfig gc;
            gc.query_min = o.qmin;
            gc.query_max = o.qmax;
            gc.num_samples = counts[s];
            gc.seed = g.seed;
            gc.mapping_cap = o.cap;
            gc.stream = names[s];
            gc.threads = g.threads;
            r = generate_pairs(gc, corpus);
        }
        const fs::path file = out / (std::string(names[s]) + ".jsonl");
        write_pairs(file, r.pairs);
        files[names[s]] = file.string();
        summary[names[s]] = {{"pairs", r.pairs.size()}, {"truncated", r.truncated_pairs}};
        summary["skipped_graphs"] = r.skipped_graphs;
        log_line(g, std::string(names[s]) + ": " + std::to_string(r.pairs.size()) + " pairs, " +
                        std::to_string(r.truncated_pairs) + " truncated");
    }
    man["outputs"] = files;
    summary["outputs"] = files;
    return summary;
}

json run_match(const Globals& g, const MatchOpts& o, json& man) {
    MatchOptions mo;
    mo.mode = o.mode == "first" ? SearchMode::first : o.mode == "exists" ? SearchMode::exists : SearchMode::all;
    if (o.limit > 0) mo.limit = o.limit;
    if (o.deadline > 0.0) mo.deadline = std::chrono::duration<double>(o.deadline);
    mo.induced = !o.non_induced;
    const auto pairs = read_pairs(fs::path(o.pairs));
    const fs::path out = prepare_out(g);
    const fs::path file = out / "matches.jsonl";
    std::ofstream lines(file);
    if (!lines) throw DataError("cannot write " + file.string());
    json counts = json::array();
    std::size_t found = 0, truncated = 0, incomplete = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const MatchResult r = enumerate_mappings(pairs[i].data_graph(), pairs[i].query_graph(), mo);
        json rec{{"pair", i},
                 {"found", r.found},
                 {"mappings", r.mappings.size()},
                 {"truncated", r.truncated},
                 {"incomplete", r.incomplete},
                 {"recursions", r.stats.recursions},
                 {"seconds", r.stats.wall_seconds}};
        if (o.emit) {
            json maps = json::array();
            for (const Mapping& m : r.mappings) maps.push_back(m.assignment);
            rec["assignments"] = maps;
        }
        lines << rec.dump() << '\n';
        counts.push_back(r.mappings.size());
        found += r.found ? 1 : 0;
        truncated += r.truncated ? 1 : 0;
        incomplete += r.incomplete ? 1 : 0;
        log_line(g, "pair " + std::to_string(i) + ": " + std::to_string(r.mappings.size()) + " mappings" +
                        (r.incomplete ? " (deadline hit)" : ""));
    }
    man["outputs"] = {{"matches", file.string()}};
    return {{"pairs", pairs.size()},
            {"mode", o.mode},
            {"mappings", counts},
            {"found", found},
            {"truncated", truncated},
            {"incomplete", incomplete},
            {"output", file.string()}};
}

json run_train(const Globals& g, const ModelOpts& m, const TrainOpts& t, json& man) {
    const ModelConfig cfg = model_config(m, g.seed);
    TrainConfig tc = train_config(t, g.seed);
    const auto tr = read_pairs(fs::path(t.train));
    const auto va = read_pairs(fs::path(t.val));
    const fs::path out = prepare_out(g);
    tc.checkpoint_dir = out / "checkpoints";
    if (g.verbose) tc.log = &std::cerr;
    const TrainResult r = train(tr, va, cfg, tc);
    write_text(out / "train_log.jsonl", [&](std::ostream& os) { write_training_log(os, r.log); });
    const fs::path best = out / "best.json";
    fs::copy_file(*r.best_checkpoint, best, fs::copy_options::overwrite_existing);
    man["outputs"] = {{"log", (out / "train_log.jsonl").string()},
                      {"checkpoints", tc.checkpoint_dir->string()},
                      {"best", best.string()}};
    man["model"] = r.best.config;
    return {{"epochs", r.log.size()},
            {"steps", r.steps},
            {"best_epoch", r.best_epoch},
            {"best_val_f1", r.best_val_f1},
            {"best_checkpoint", r.best_checkpoint->string()},
            {"skipped_truncated", r.skipped_truncated},
            {"final_train_loss", r.log.back().train_loss}};
}

json run_eval(const Globals& g, const EvalOpts& o, json& man) {
    const Model model = load_model(fs::path(o.ckpt));
    const auto pairs = read_pairs(fs::path(o.pairs));
    EvalOptions eo;
    eo.noise_std = o.noise_std;
    eo.by_ratio = o.by_ratio;
    eo.seed = g.seed;
    eo.threads = g.threads;
    const EvalReport r = evaluate(pairs, model, eo);
    const fs::path out = prepare_out(g);
    write_text(out / "eval.csv", [&](std::ostream& os) { write_eval_csv(os, r); });
    json outputs{{"report", (out / "eval.csv").string()}};
    if (o.by_ratio) {
        write_text(out / "ratio.csv", [&](std::ostream& os) { write_ratio_csv(os, r); });
        outputs["ratio"] = (out / "ratio.csv").string();
    }
    json summary = eval_summary(r);
    write_json(out / "summary.json", summary);
    man["outputs"] = outputs;
    return summary;
}

json run_bench(const Globals& g, const BenchOpts& o, json& man) {
    const auto pairs = read_pairs(fs::path(o.pairs));
    std::optional<Model> model;
    if (!o.ckpt.empty()) model = load_model(fs::path(o.ckpt));
    BenchOptions bo;
    if (o.deadline > 0.0) bo.deadline_seconds = o.deadline;
    bo.repeats = o.repeats;
    const BenchReport r = bench_runtime(pairs, model ? &*model : nullptr, bo);
    const fs::path out = prepare_out(g);
    write_text(out / "bench.csv", [&](std::ostream& os) { write_bench_csv(os, r); });
    json summary = bench_summary(r);
    write_json(out / "summary.json", summary);
    man["outputs"] = {{"report", (out / "bench.csv").string()}};
    return summary;
}

json run_ablate(const Globals& g, const ModelOpts& m, const TrainOpts& t, json& man) {
    const ModelConfig cfg = model_config(m, g.seed);
    TrainConfig tc = train_config(t, g.seed);
    const auto tr = read_pairs(fs::path(t.train));
    const auto va = read_pairs(fs::path(t.val));
    const auto te = read_pairs(fs::path(t.test));
    const fs::path out = prepare_out(g);
    tc.checkpoint_dir = out / "checkpoints";
    if (g.verbose) tc.log = &std::cerr;
    EvalOptions eo;
    eo.seed = g.seed;
    eo.threads = g.threads;
    const AblationReport r = run_ablation(tr, va, te, cfg, tc, eo);
    write_text(out / "ablation.csv", [&](std::ostream& os) { write_ablation_csv(os, r); });
    json rows = json::array();
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        const std::string& v = r.rows[i].variant;
        write_text(out / (v + "_train_log.jsonl"), [&](std::ostream& os) { write_training_log(os, r.runs[i].log); });
        write_text(out / (v + "_eval.csv"), [&](std::ostream& os) { write_eval_csv(os, r.evaluations[i]); });
        rows.push_back({{"variant", v},
                        {"best_epoch", r.rows[i].best_epoch},
                        {"val_f1", r.rows[i].val_f1},
                        {"test_f1", r.rows[i].test.f1}});
    }
    man["outputs"] = {{"report", (out / "ablation.csv").string()}};
    json summary{{"variants", rows}};
    write_json(out / "summary.json", summary);
    return summary;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Subgraph matching: pair generation, exact search, and a learned matcher."};
    app.set_config("--config", "", "INI file with option defaults; explicit flags override it");
    app.failure_message(CLI::FailureMessage::help);
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Root seed for every random stream")->capture_default_str();
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads for gen and eval")
        ->check(CLI::Range(std::size_t{1}, std::size_t{1024}))
        ->capture_default_str();
    app.add_flag("-v,--verbose", g.verbose, "Human-readable progress on stderr");

    GenOpts gen;
    auto* gen_cmd = app.add_subcommand("gen", "Generate train/val/test pair files and a manifest");
    gen_cmd->add_option("--source", gen.source, "'synthetic' or 'tud:<dir>'")->capture_default_str();
    gen_cmd->add_option("--num", gen.num, "Total pairs over all splits")->capture_default_str();
    gen_cmd->add_option("--qmin", gen.qmin, "Smallest query size")->capture_default_str();
    gen_cmd->add_option("--qmax", gen.qmax, "Largest query size")->capture_default_str();
    gen_cmd->add_option("--split", gen.split, "Split weights train:val:test")->capture_default_str();
    gen_cmd->add_option("--cap", gen.cap, "Mapping cap per pair")->check(CLI::PositiveNumber)->capture_default_str();
    gen_cmd->add_option("--graphs", gen.graphs, "Synthetic corpus size")->capture_default_str();
    gen_cmd->add_option("--min-nodes", gen.min_nodes, "Synthetic graph size lower bound")->capture_default_str();
    gen_cmd->add_option("--max-nodes", gen.max_nodes, "Synthetic graph size upper bound")->capture_default_str();
    gen_cmd->add_option("--edge-prob", gen.edge_prob, "Synthetic edge probability")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    gen_cmd->add_option("--labels", gen.labels, "Synthetic label count (0 = unlabeled)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();

    MatchOpts match;
    auto* match_cmd = app.add_subcommand("match", "Exact subgraph matching on a pair file");
    match_cmd->add_option("pairs,--pairs", match.pairs, "Pair file (.jsonl)")->required();
    match_cmd->add_option("--mode", match.mode, "all, first or exists")
        ->check(CLI::IsMember({"all", "first", "exists"}))
        ->capture_default_str();
    match_cmd->add_option("--deadline", match.deadline, "Seconds per pair (0 = none)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    match_cmd->add_option("--limit", match.limit, "Stop after this many mappings (0 = none)")->capture_default_str();
    match_cmd->add_flag("--non-induced", match.non_induced, "Allow extra data edges between matched nodes");
    match_cmd->add_flag("--emit-mappings", match.emit, "Write every mapping to matches.jsonl");

    ModelOpts model;
    TrainOpts tr;
    auto* train_cmd = app.add_subcommand("train", "Train the model; writes a checkpoint per epoch");
    train_cmd->add_option("--train", tr.train, "Training pair file")->required();
    train_cmd->add_option("--val", tr.val, "Validation pair file")->required();
    add_train_flags(train_cmd, tr);
    add_model_flags(train_cmd, model);

    EvalOpts ev;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint (top-1 F1)");
    eval_cmd->add_option("--pairs", ev.pairs, "Pair file")->required();
    eval_cmd->add_option("--ckpt", ev.ckpt, "Checkpoint file")->required();
    eval_cmd->add_option("--noise-std", ev.noise_std, "Gaussian noise on numerical features")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    eval_cmd->add_flag("--by-ratio", ev.by_ratio, "Also report F1 by |Q|/|G| bucket");

    BenchOpts bench;
    auto* bench_cmd = app.add_subcommand("bench", "Time exact search and model inference per pair");
    bench_cmd->add_option("--pairs", bench.pairs, "Pair file")->required();
    bench_cmd->add_option("--ckpt", bench.ckpt, "Checkpoint for the model column");
    bench_cmd->add_option("--deadline", bench.deadline, "Exact search deadline in seconds (0 = none)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    bench_cmd->add_option("--repeats", bench.repeats, "Runs per timing (median)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    ModelOpts amodel;
    TrainOpts atr;
    auto* ablate_cmd = app.add_subcommand("ablate", "Train and test full, no-cross and no-delete variants");
    ablate_cmd->add_option("--train", atr.train, "Training pair file")->required();
    ablate_cmd->add_option("--val", atr.val, "Validation pair file")->required();
    ablate_cmd->add_option("--test", atr.test, "Test pair file")->required();
    add_train_flags(ablate_cmd, atr);
    add_model_flags(ablate_cmd, amodel);

    for (CLI::App* sub : app.get_subcommands({}))
        sub->footer("Global options (before or after the subcommand): --seed UINT, --config FILE, --out DIR,\n"
                    "--threads UINT, -v/--verbose. See 'aedmatch --help'.");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    const std::vector<std::string> args(argv, argv + argc);
    const CLI::App* sub = app.get_subcommands().front();
    json man = manifest(app, sub, g, args);
    const auto fail = [&](int code, const std::string& kind, const std::string& msg) {
        man["status"] = kind;
        man["error"] = msg;
        try {
            if (fs::is_directory(g.out)) write_json(fs::path(g.out) / "manifest.json", man);
        } catch (const std::exception&) {
        }
        if (code == 1) return usage_error(msg);
        std::cerr << kind << ": " << msg << '\n';
        return code;
    };
    try {
        json summary;
        if (sub == gen_cmd)
            summary = run_gen(g, gen, man);
        else if (sub == match_cmd)
            summary = run_match(g, match, man);
        else if (sub == train_cmd)
            summary = run_train(g, model, tr, man);
        else if (sub == eval_cmd)
            summary = run_eval(g, ev, man);
        else if (sub == bench_cmd)
            summary = run_bench(g, bench, man);
        else
            summary = run_ablate(g, amodel, atr, man);
        man["status"] = "ok";
        write_json(fs::path(g.out) / "manifest.json", man);
        write_text(fs::path(g.out) / "effective.ini", [&](std::ostream& os) { os << man["effective_config"].get<std::string>(); });
        emit_summary(g, summary);
        return 0;
    } catch (const ConfigError& e) {
        return fail(1, "usage error", e.what());
    } catch (const NumericError& e) {
        return fail(3, "numeric error", e.what());
    } catch (const DataError& e) {
        return fail(2, "data error", e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(2, "data error", e.what());
    } catch (const fs::filesystem_error& e) {
        return fail(2, "data error", e.what());
    }
}