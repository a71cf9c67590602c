#pragma once

#include <aedmatch/errors.hpp>
#include <aedmatch/exact_match.hpp>
#include <aedmatch/graph.hpp>
#include <aedmatch/model.hpp>
#include <aedmatch/parallel.hpp>
#include <aedmatch/params.hpp>
#include <aedmatch/rng.hpp>

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace aedmatch {

// ---------------------------------------------------------------------------
// Metrics

struct F1Score {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// One prediction per query row; (i, j) is correct when some known mapping
/// sends i to j. A data node predicted by several rows counts at most once.
inline F1Score f1_score(std::span<const NodeId> prediction, const MatchingMatrix& truth) {
    if (prediction.size() != truth.rows())
        throw DataError("prediction has " + std::to_string(prediction.size()) + " rows, ground truth has " +
                        std::to_string(truth.rows()));
    if (truth.rows() == 0) return {};
    std::vector<char> used(truth.cols(), 0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        const NodeId j = prediction[i];
        if (j < 0 || static_cast<std::size_t>(j) >= truth.cols() || used[j] || !truth.at(i, j)) continue;
        used[j] = 1;
        ++correct;
    }
    F1Score s;
    s.precision = s.recall = static_cast<double>(correct) / static_cast<double>(truth.rows());
    // 2PR / (P + R) with P = R, written so the identity holds bit for bit.
    s.f1 = s.precision;
    return s;
}

namespace harness_detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double mean(std::span<const double> v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Shortest decimal text that reads back to the same double.
inline std::string fmt(double x) {
    std::ostringstream s;
    s << std::setprecision(17) << x;
    return s.str();
}

inline void add_noise(Tensor& x, double stddev, Rng& rng) {
    std::normal_distribution<double> n(0.0, stddev);
    for (double& v : x.values()) v += n(rng);
}

struct PreparedPair {
    std::size_t index;
    GraphInput query;
    GraphInput data;
    NeighborPartition partition;
    const MatchPair* pair;
};

inline PreparedPair prepare(const FeatureEncoder& enc, const MatchPair& p, std::size_t index) {
    return {index, make_graph_input(enc, p.query_graph()), make_graph_input(enc, p.data_graph()),
            make_neighbor_partition(p.data_graph(), p.query_graph(), p.primary_mapping()), &p};
}

}  // namespace harness_detail

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
    std::size_t epochs = 100;
    double lr = 0.001;
    std::uint64_t seed = 0;
    /// When set, every epoch's parameters are written to epoch_NNNN.json here.
    std::optional<std::filesystem::path> checkpoint_dir;
    bool no_cross = false;
    bool no_delete = false;
    bool include_truncated = false;
    /// Gaussian noise on numerical training features (evaluation noise is
    /// separate).
    double train_noise_std = 0.0;
    /// Receives one JSON line per epoch.
    std::ostream* log = nullptr;
    std::size_t threads = 1;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double delete_loss = 0.0;
    double matching_loss = 0.0;
    double val_f1 = 0.0;
    double wall_seconds = 0.0;

    nlohmann::json to_json(bool with_time = true) const {
        nlohmann::json j{{"epoch", epoch},
                         {"train_loss", train_loss},
                         {"delete_loss", delete_loss},
                         {"matching_loss", matching_loss},
                         {"val_f1", val_f1}};
        if (with_time) j["wall_time"] = wall_seconds;
        return j;
    }
};

struct TrainResult {
    Model best;
    Model last;
    std::size_t best_epoch = 0;
    double best_val_f1 = -1.0;
    std::vector<EpochRecord> log;
    std::optional<std::filesystem::path> best_checkpoint;
    std::size_t skipped_truncated = 0;
    std::size_t steps = 0;
};

inline ModelConfig apply_ablation(ModelConfig cfg, const TrainConfig& tc) {
    if (tc.no_cross) cfg.no_cross = true;
    if (tc.no_delete) cfg.lambda1 = 0.0;
    return cfg;
}

inline std::filesystem::path epoch_checkpoint_path(const std::filesystem::path& dir, std::size_t epoch) {
    std::ostringstream name;
    name << "epoch_" << std::setw(4) << std::setfill('0') << epoch << ".json";
    return dir / name.str();
}

/// Mean top-1 F1 of a model over prepared pairs.
inline double mean_f1(const Model& model, std::span<const harness_detail::PreparedPair> pairs, std::size_t threads = 1) {
    std::vector<double> f1(pairs.size());
    parallel_for(pairs.size(), threads, [&](std::size_t i) {
        const Tensor m = model.predict(pairs[i].query, pairs[i].data);
        f1[i] = f1_score(extract_top1(m), pairs[i].pair->matrix()).f1;
    });
    return harness_detail::mean(f1);
}

/// Per-pair Adam training with a seeded shuffle each epoch. The returned
/// best model is the one with the highest validation F1 (earliest on ties).
inline TrainResult train(std::span<const MatchPair> train_pairs, std::span<const MatchPair> val_pairs,
                         const ModelConfig& model_cfg, const TrainConfig& tc) {
    using namespace harness_detail;
    if (tc.epochs == 0) throw ConfigError("epochs must be >= 1");
    if (!(tc.lr > 0.0)) throw ConfigError("learning rate must be > 0");
    if (val_pairs.empty()) throw ConfigError("validation set is empty");

    TrainResult result;
    std::vector<const MatchPair*> usable;
    for (const MatchPair& p : train_pairs) {
        if (p.truncated() && !tc.include_truncated)
            ++result.skipped_truncated;
        else
            usable.push_back(&p);
    }
    if (usable.empty()) throw DataError("no untruncated training pairs");

    std::vector<MatchPair> all(train_pairs.begin(), train_pairs.end());
    all.insert(all.end(), val_pairs.begin(), val_pairs.end());
    Model model = Model::create(apply_ablation(model_cfg, tc), FeatureEncoder::fit(all));

    std::vector<PreparedPair> train_set, val_set;
    for (const MatchPair* p : usable)
        train_set.push_back(prepare(model.encoder, *p, static_cast<std::size_t>(p - train_pairs.data())));
    for (std::size_t i = 0; i < val_pairs.size(); ++i) val_set.push_back(prepare(model.encoder, val_pairs[i], i));
    if (tc.train_noise_std > 0.0 && model.encoder.kind != FeatureKind::numerical)
        throw ConfigError("training noise applies to numerical features only");
    if (tc.checkpoint_dir) std::filesystem::create_directories(*tc.checkpoint_dir);

    const AdamConfig adam{.lr = tc.lr};
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle_rng = make_rng(tc.seed, "shuffle", epoch);
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double loss_sum = 0.0, de_sum = 0.0, lm_sum = 0.0;
        for (std::size_t k = 0; k < order.size(); ++k) {
            const PreparedPair& pp = train_set[order[k]];
            try {
                ad::Tape tape;
                TapeParams params(tape, model.params);
                GraphInput q = pp.query, g = pp.data;
                if (tc.train_noise_std > 0.0) {
                    Rng noise = make_rng(tc.seed, "train-noise", epoch * train_set.size() + k);
                    add_noise(q.features, tc.train_noise_std, noise);
                    add_noise(g.features, tc.train_noise_std, noise);
                }
                ForwardResult fr = model_forward(params, model.config, q, g);
                LossBreakdown losses = compute_losses(fr, model.config, pp.pair->matrix(), pp.partition);
                tape.backward(losses.total);
                adam_step(model.params, params.gradients(), adam);
                loss_sum += losses.total.scalar();
                de_sum += losses.mean_delete();
                lm_sum += losses.mean_matching();
                ++result.steps;
            } catch (const NumericError& e) {
                throw NumericError("training pair " + std::to_string(pp.index) + " (epoch " + std::to_string(epoch) +
                                   "): " + e.what());
            }
        }

        EpochRecord rec;
        rec.epoch = epoch;
        const auto n = static_cast<double>(train_set.size());
        rec.train_loss = loss_sum / n;
        rec.delete_loss = de_sum / n;
        rec.matching_loss = lm_sum / n;
        rec.val_f1 = mean_f1(model, val_set, tc.threads);
        rec.wall_seconds = seconds_since(t0);
        result.log.push_back(rec);
        if (tc.log) *tc.log << rec.to_json().dump() << '\n' << std::flush;

        nlohmann::json extra{{"epoch", epoch}, {"val_f1", rec.val_f1}};
        if (tc.checkpoint_dir) save_model(epoch_checkpoint_path(*tc.checkpoint_dir, epoch), model, extra);
        if (rec.val_f1 > result.best_val_f1) {
            result.best_val_f1 = rec.val_f1;
            result.best_epoch = epoch;
            result.best = model;
            if (tc.checkpoint_dir) result.best_checkpoint = epoch_checkpoint_path(*tc.checkpoint_dir, epoch);
        }
    }
    result.last = std::move(model);
    return result;
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalOptions {
    double noise_std = 0.0;
    bool by_ratio = false;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

struct PairEval {
    std::size_t index = 0;
    std::size_t query_nodes = 0;
    std::size_t data_nodes = 0;
    F1Score score;
    double seconds = 0.0;
    double ratio() const { return static_cast<double>(query_nodes) / static_cast<double>(data_nodes); }
};

struct RatioBucket {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t count = 0;
    double mean_f1 = 0.0;
};

struct EvalReport {
    std::vector<PairEval> pairs;
    F1Score mean;
    double noise_std = 0.0;
    double total_seconds = 0.0;
    std::vector<RatioBucket> buckets;  // non-empty buckets only
};

/// Buckets of width 0.1 over |Q| / |G|; a ratio of exactly 1 joins the top
/// bucket.
inline std::vector<RatioBucket> ratio_buckets(std::span<const PairEval> rows) {
    constexpr std::size_t kBuckets = 10;
    std::vector<RatioBucket> all(kBuckets);
    for (std::size_t b = 0; b < kBuckets; ++b) {
        all[b].lower = static_cast<double>(b) / kBuckets;
        all[b].upper = static_cast<double>(b + 1) / kBuckets;
    }
    for (const PairEval& r : rows) {
        const auto b = std::min(kBuckets - 1, static_cast<std::size_t>(std::floor(r.ratio() * kBuckets)));
        ++all[b].count;
        all[b].mean_f1 += r.score.f1;
    }
    std::vector<RatioBucket> out;
    for (RatioBucket& b : all)
        if (b.count) {
            b.mean_f1 /= static_cast<double>(b.count);
            out.push_back(b);
        }
    return out;
}

inline EvalReport evaluate(std::span<const MatchPair> pairs, const Model& model, const EvalOptions& opt = {}) {
    using namespace harness_detail;
    if (opt.noise_std < 0.0) throw ConfigError("noise standard deviation must be >= 0");
    if (opt.noise_std > 0.0 && model.encoder.kind != FeatureKind::numerical)
        throw ConfigError("noise applies to numerical features only; these pairs are " + to_string(model.encoder.kind));
    EvalReport report;
    report.noise_std = opt.noise_std;
    report.pairs.resize(pairs.size());
    const auto t_all = std::chrono::steady_clock::now();
    parallel_for(pairs.size(), opt.threads, [&](std::size_t i) {
        const MatchPair& p = pairs[i];
        PreparedPair pp = prepare(model.encoder, p, i);
        if (opt.noise_std > 0.0) {
            Rng rng = make_rng(opt.seed, "eval-noise", i);
            add_noise(pp.query.features, opt.noise_std, rng);
            add_noise(pp.data.features, opt.noise_std, rng);
        }
        const auto t0 = std::chrono::steady_clock::now();
        const Tensor m = model.predict(pp.query, pp.data);
        PairEval& row = report.pairs[i];
        row.score = f1_score(extract_top1(m), p.matrix());
        row.seconds = seconds_since(t0);
        row.index = i;
        row.query_nodes = p.query_graph().num_nodes();
        row.data_nodes = p.data_graph().num_nodes();
    });
    report.total_seconds = seconds_since(t_all);
    std::vector<double> pr, rc, f1;
    for (const PairEval& r : report.pairs) {
        pr.push_back(r.score.precision);
        rc.push_back(r.score.recall);
        f1.push_back(r.score.f1);
    }
    report.mean = {mean(pr), mean(rc), mean(f1)};
    if (opt.by_ratio) report.buckets = ratio_buckets(report.pairs);
    return report;
}

/// One row per pair and a "mean" footer. Timing columns are optional so
/// reports can be compared byte-for-byte across runs.
inline void write_eval_csv(std::ostream& out, const EvalReport& r, bool with_time = true) {
    using harness_detail::fmt;
    out << "pair,query_nodes,data_nodes,precision,recall,f1" << (with_time ? ",seconds" : "") << '\n';
    for (const PairEval& p : r.pairs) {
        out << p.index << ',' << p.query_nodes << ',' << p.data_nodes << ',' << fmt(p.score.precision) << ','
            << fmt(p.score.recall) << ',' << fmt(p.score.f1);
        if (with_time) out << ',' << fmt(p.seconds);
        out << '\n';
    }
    out << "mean,,," << fmt(r.mean.precision) << ',' << fmt(r.mean.recall) << ',' << fmt(r.mean.f1);
    if (with_time) out << ',' << fmt(r.total_seconds);
    out << '\n';
}

inline void write_ratio_csv(std::ostream& out, const EvalReport& r) {
    using harness_detail::fmt;
    out << "ratio_lower,ratio_upper,count,mean_f1\n";
    for (const RatioBucket& b : r.buckets)
        out << fmt(b.lower) << ',' << fmt(b.upper) << ',' << b.count << ',' << fmt(b.mean_f1) << '\n';
}

inline nlohmann::json eval_summary(const EvalReport& r) {
    nlohmann::json j{{"pairs", r.pairs.size()},
                     {"precision", r.mean.precision},
                     {"recall", r.mean.recall},
                     {"f1", r.mean.f1},
                     {"noise_std", r.noise_std},
                     {"seconds", r.total_seconds}};
    if (!r.buckets.empty()) {
        auto b = nlohmann::json::array();
        for (const RatioBucket& x : r.buckets)
            b.push_back({{"lower", x.lower}, {"upper", x.upper}, {"count", x.count}, {"mean_f1", x.mean_f1}});
        j["ratio_buckets"] = b;
    }
    return j;
}

// ---------------------------------------------------------------------------
// Runtime benchmark

struct BenchOptions {
    std::optional<double> deadline_seconds;
    std::size_t repeats = 1;
};

struct BenchRow {
    std::size_t index = 0;
    std::size_t data_nodes = 0;
    std::size_t data_edges = 0;
    std::size_t query_nodes = 0;
    double exact_all_seconds = 0.0;
    std::size_t exact_all_mappings = 0;
    std::uint64_t exact_all_recursions = 0;
    bool exact_all_incomplete = false;
    double exact_first_seconds = 0.0;
    std::optional<double> model_seconds;
};

struct BenchSummary {
    double mean = 0.0;
    double median = 0.0;
};

struct BenchReport {
    std::vector<BenchRow> rows;
    BenchSummary exact_all;
    BenchSummary exact_first;
    std::optional<BenchSummary> model;
};

/// Wall time per pair for exhaustive and first-match exact search and, with
/// a model, one inference. Each time is the median over `repeats` runs.
/// Runs sequentially.
inline BenchReport bench_runtime(std::span<const MatchPair> pairs, const Model* model, const BenchOptions& opt = {}) {
    using namespace harness_detail;
    if (opt.repeats == 0) throw ConfigError("repeats must be >= 1");
    BenchReport report;
    const auto timed = [&](auto&& fn) {
        std::vector<double> t;
        for (std::size_t r = 0; r < opt.repeats; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            fn();
            t.push_back(seconds_since(t0));
        }
        return median(t);
    };
    std::vector<double> all_t, first_t, model_t;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const MatchPair& p = pairs[i];
        BenchRow row;
        row.index = i;
        row.data_nodes = p.data_graph().num_nodes();
        row.data_edges = p.data_graph().num_edges();
        row.query_nodes = p.query_graph().num_nodes();

        MatchOptions all;
        if (opt.deadline_seconds) all.deadline = std::chrono::duration<double>(*opt.deadline_seconds);
        MatchOptions first = all;
        first.mode = SearchMode::first;
        MatchResult res;
        row.exact_all_seconds = timed([&] { res = enumerate_mappings(p.data_graph(), p.query_graph(), all); });
        row.exact_all_mappings = res.mappings.size();
        row.exact_all_recursions = res.stats.recursions;
        row.exact_all_incomplete = res.incomplete;
        row.exact_first_seconds = timed([&] { enumerate_mappings(p.data_graph(), p.query_graph(), first); });
        if (model) {
            row.model_seconds = timed([&] { (void)model->predict(p.data_graph(), p.query_graph()); });
            model_t.push_back(*row.model_seconds);
        }
        all_t.push_back(row.exact_all_seconds);
        first_t.push_back(row.exact_first_seconds);
        report.rows.push_back(row);
    }
    report.exact_all = {mean(all_t), median(all_t)};
    report.exact_first = {mean(first_t), median(first_t)};
    if (model) report.model = BenchSummary{mean(model_t), median(model_t)};
    return report;
}

inline void write_bench_csv(std::ostream& out, const BenchReport& r) {
    using harness_detail::fmt;
    out << "pair,data_nodes,data_edges,query_nodes,exact_all_s,mappings,recursions,incomplete,exact_first_s,model_s\n";
    for (const BenchRow& b : r.rows) {
        out << b.index << ',' << b.data_nodes << ',' << b.data_edges << ',' << b.query_nodes << ','
            << fmt(b.exact_all_seconds) << ',' << b.exact_all_mappings << ',' << b.exact_all_recursions << ','
            << (b.exact_all_incomplete ? 1 : 0) << ',' << fmt(b.exact_first_seconds) << ','
            << (b.model_seconds ? fmt(*b.model_seconds) : "") << '\n';
    }
    out << "mean,,,," << fmt(r.exact_all.mean) << ",,,," << fmt(r.exact_first.mean) << ','
        << (r.model ? fmt(r.model->mean) : "") << '\n';
    out << "median,,,," << fmt(r.exact_all.median) << ",,,," << fmt(r.exact_first.median) << ','
        << (r.model ? fmt(r.model->median) : "") << '\n';
}

inline nlohmann::json bench_summary(const BenchReport& r) {
    nlohmann::json j{{"pairs", r.rows.size()},
                     {"exact_all", {{"mean", r.exact_all.mean}, {"median", r.exact_all.median}}},
                     {"exact_first", {{"mean", r.exact_first.mean}, {"median", r.exact_first.median}}}};
    if (r.model) j["model"] = {{"mean", r.model->mean}, {"median", r.model->median}};
    std::size_t incomplete = 0;
    for (const BenchRow& b : r.rows) incomplete += b.exact_all_incomplete ? 1 : 0;
    j["exact_all_incomplete"] = incomplete;
    return j;
}

// ---------------------------------------------------------------------------
// Ablation

struct AblationRow {
    std::string variant;
    std::size_t best_epoch = 0;
    double val_f1 = 0.0;
    F1Score test;
};

struct AblationReport {
    std::vector<AblationRow> rows;        // full, no_cross, no_delete
    std::vector<TrainResult> runs;        // parallel to rows
    std::vector<EvalReport> evaluations;  // test-set reports, parallel to rows
};

/// Trains and tests the full model and the two ablations with identical
/// seeds and data.
inline AblationReport run_ablation(std::span<const MatchPair> train_pairs, std::span<const MatchPair> val_pairs,
                                   std::span<const MatchPair> test_pairs, const ModelConfig& cfg, const TrainConfig& tc,
                                   const EvalOptions& eval_opt = {}) {
    AblationReport report;
    for (const std::string variant : {"full", "no_cross", "no_delete"}) {
        TrainConfig run = tc;
        run.no_cross = tc.no_cross || variant == "no_cross";
        run.no_delete = tc.no_delete || variant == "no_delete";
        if (tc.checkpoint_dir) run.checkpoint_dir = *tc.checkpoint_dir / variant;
        TrainResult tr = train(train_pairs, val_pairs, cfg, run);
        EvalReport ev = evaluate(test_pairs, tr.best, eval_opt);
        report.rows.push_back({variant, tr.best_epoch, tr.best_val_f1, ev.mean});
        report.runs.push_back(std::move(tr));
        report.evaluations.push_back(std::move(ev));
    }
    return report;
}

inline void write_ablation_csv(std::ostream& out, const AblationReport& r) {
    using harness_detail::fmt;
    out << "variant,best_epoch,val_f1,test_precision,test_recall,test_f1\n";
    for (const AblationRow& a : r.rows)
        out << a.variant << ',' << a.best_epoch << ',' << fmt(a.val_f1) << ',' << fmt(a.test.precision) << ','
            << fmt(a.test.recall) << ',' << fmt(a.test.f1) << '\n';
}

inline void write_training_log(std::ostream& out, std::span<const EpochRecord> log, bool with_time = true) {
    for (const EpochRecord& e : log) out << e.to_json(with_time).dump() << '\n';
}

}  // namespace aedmatch
