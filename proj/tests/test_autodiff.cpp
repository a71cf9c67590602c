#include <aedmatch/autodiff.hpp>
#include <aedmatch/grad_check.hpp>
#include <aedmatch/params.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>

#include <unistd.h>

namespace aedmatch {
namespace {

using namespace ad;

Tensor random_tensor(std::mt19937& rng, std::size_t r, std::size_t c, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    Tensor t(r, c);
    for (double& v : t.values()) v = n(rng);
    return t;
}

// Contract an op's output with fixed random weights so every output entry
// receives a distinct upstream adjoint.
ScalarObjective contracted(std::function<Var(TapeParams&)> op, std::size_t r, std::size_t c, unsigned seed) {
    std::mt19937 rng(seed);
    Tensor w = random_tensor(rng, r, c);
    return [op, w](TapeParams& p) {
        Var out = op(p);
        return sum_all(mul(out, p.tape().constant(w)));
    };
}

void expect_passes(const ScalarObjective& f, const ParamStore& store) {
    auto report = grad_check(f, store);
    for (const auto& e : report.entries) EXPECT_TRUE(e.passed) << e.name << " rel " << e.max_rel_error;
    EXPECT_TRUE(report.passed);
}

class PrimitiveGradTest : public ::testing::Test {
protected:
    void SetUp() override {
        std::mt19937 rng(11);
        store.add("a", random_tensor(rng, 3, 4));
        store.add("b", random_tensor(rng, 4, 5));
        store.add("c", random_tensor(rng, 3, 4));
        store.add("col", random_tensor(rng, 3, 1));
        store.add("row", random_tensor(rng, 1, 4));
        store.add("s", Tensor::scalar(0.7));
    }
    ParamStore store;
};

TEST_F(PrimitiveGradTest, Matmul) {
    expect_passes(contracted([](TapeParams& p) { return matmul(p["a"], p["b"]); }, 3, 5, 1), store);
}

TEST_F(PrimitiveGradTest, Transpose) {
    expect_passes(contracted([](TapeParams& p) { return transpose(p["a"]); }, 4, 3, 2), store);
}

TEST_F(PrimitiveGradTest, ConcatBothAxes) {
    expect_passes(contracted([](TapeParams& p) { return concat({p["a"], p["c"]}, 1); }, 3, 8, 3), store);
    expect_passes(contracted([](TapeParams& p) { return concat({p["a"], p["c"], p["row"]}, 0); }, 7, 4, 4), store);
}

TEST_F(PrimitiveGradTest, Elementwise) {
    expect_passes(contracted([](TapeParams& p) { return add(p["a"], p["c"]); }, 3, 4, 5), store);
    expect_passes(contracted([](TapeParams& p) { return sub(p["a"], p["c"]); }, 3, 4, 6), store);
    expect_passes(contracted([](TapeParams& p) { return mul(p["a"], p["c"]); }, 3, 4, 7), store);
    expect_passes(contracted([](TapeParams& p) { return scale(p["a"], -1.7); }, 3, 4, 8), store);
    expect_passes(contracted([](TapeParams& p) { return add_scalar(p["a"], 2.0); }, 3, 4, 9), store);
}

TEST_F(PrimitiveGradTest, Broadcasts) {
    expect_passes(contracted([](TapeParams& p) { return add_row(p["a"], p["row"]); }, 3, 4, 10), store);
    expect_passes(contracted([](TapeParams& p) { return outer_add(p["col"], p["row"]); }, 3, 4, 11), store);
}

TEST_F(PrimitiveGradTest, Activations) {
    expect_passes(contracted([](TapeParams& p) { return leaky_relu(p["a"], 0.2); }, 3, 4, 12), store);
    expect_passes(contracted([](TapeParams& p) { return sigmoid(p["a"]); }, 3, 4, 13), store);
    expect_passes(contracted([](TapeParams& p) { return div_scalar(p["a"], p["s"]); }, 3, 4, 14), store);
    expect_passes(contracted([](TapeParams& p) { return abs_value(p["a"]); }, 3, 4, 28), store);
}

TEST_F(PrimitiveGradTest, MaskedSoftmax) {
    Mask mask(3, 4);
    mask.set(0, 1);
    mask.set(0, 3);
    mask.set(1, 0);
    mask.set(1, 1);
    mask.set(1, 2);
    expect_passes(contracted([mask](TapeParams& p) {
        return row_softmax_masked(p["a"], mask, 0.6, EmptyRows::zero);
    }, 3, 4, 15), store);
    expect_passes(contracted([](TapeParams& p) { return row_softmax(p["a"], sigmoid(p["s"])); }, 3, 4, 16), store);
}

TEST_F(PrimitiveGradTest, Reductions) {
    expect_passes(contracted([](TapeParams& p) { return row_l2_norm(p["a"]); }, 3, 1, 17), store);
    expect_passes(contracted([](TapeParams& p) { return sum(p["a"], 0); }, 1, 4, 18), store);
    expect_passes(contracted([](TapeParams& p) { return sum(p["a"], 1); }, 3, 1, 19), store);
    expect_passes(contracted([](TapeParams& p) { return mean(p["a"], 0); }, 1, 4, 20), store);
    expect_passes(contracted([](TapeParams& p) { return mean(p["a"], 1); }, 3, 1, 21), store);
    expect_passes(contracted([](TapeParams& p) { return max_rows(p["a"]); }, 1, 4, 22), store);
    expect_passes([](TapeParams& p) { return mean_all(mul(p["a"], p["c"])); }, store);
}

TEST_F(PrimitiveGradTest, SelectRowsWithRepeats) {
    expect_passes(contracted([](TapeParams& p) { return select_rows(p["a"], {2, 0, 2}); }, 3, 4, 23), store);
    expect_passes(contracted([](TapeParams& p) { return slice_cols(p["a"], 1, 3); }, 3, 2, 29), store);
}

TEST_F(PrimitiveGradTest, Similarity) {
    expect_passes(contracted([](TapeParams& p) { return row_normalize(p["a"]); }, 3, 4, 24), store);
    expect_passes(contracted([](TapeParams& p) { return cosine_similarity_matrix(p["a"], p["c"]); }, 3, 3, 25),
                  store);
    expect_passes(contracted([](TapeParams& p) { return neg_sq_euclidean_matrix(p["a"], p["c"]); }, 3, 3, 26),
                  store);
}

TEST_F(PrimitiveGradTest, Mlp) {
    std::mt19937 rng(5);
    store.add("w1", random_tensor(rng, 4, 6));
    store.add("b1", random_tensor(rng, 1, 6));
    store.add("w2", random_tensor(rng, 6, 2));
    store.add("b2", random_tensor(rng, 1, 2));
    expect_passes(contracted([](TapeParams& p) {
        std::vector<DenseLayer> layers{{p["w1"], p["b1"]}, {p["w2"], p["b2"]}};
        return mlp_apply(p["a"], layers);
    }, 3, 2, 27), store);
}

TEST(SoftmaxTest, UniformLogitsGiveUniformRows) {
    Tape tape;
    Mask mask(2, 5);
    for (std::size_t j : {0, 2, 4}) mask.set(0, j);
    for (std::size_t j : {1, 3}) mask.set(1, j);
    Var y = row_softmax_masked(tape.constant(Tensor(2, 5, 3.0)), mask);
    for (std::size_t j : {0, 2, 4}) EXPECT_DOUBLE_EQ(y.value()(0, j), 1.0 / 3.0);
    for (std::size_t j : {1, 3}) EXPECT_DOUBLE_EQ(y.value()(1, j), 0.5);
    EXPECT_EQ(y.value()(0, 1), 0.0);
    EXPECT_EQ(y.value()(1, 0), 0.0);
}

TEST(SoftmaxTest, TwoEntryClosedForm) {
    Tape tape;
    Var y = row_softmax_masked(tape.constant(Tensor::from_rows({{1.0, 0.0}})), Mask(1, 2, true));
    const double e = std::exp(1.0);
    EXPECT_NEAR(y.value()(0, 0), e / (1.0 + e), 1e-15);
    EXPECT_NEAR(y.value()(0, 1), 1.0 / (1.0 + e), 1e-15);
}

TEST(SoftmaxTest, LargeLogitsStayFinite) {
    Tape tape;
    Var y = row_softmax_masked(tape.constant(Tensor::from_rows({{1000.0, 999.0, -1000.0}})), Mask(1, 3, true));
    EXPECT_TRUE(y.value().all_finite());
    EXPECT_NEAR(y.value()(0, 0) + y.value()(0, 1) + y.value()(0, 2), 1.0, 1e-12);
}

TEST(SoftmaxTest, Errors) {
    Tape tape;
    Var x = tape.constant(Tensor(2, 2, 0.0));
    Mask empty_row(2, 2);
    empty_row.set(0, 0);
    EXPECT_THROW(row_softmax_masked(x, empty_row), NumericError);
    EXPECT_NO_THROW(row_softmax_masked(x, empty_row, 1.0, EmptyRows::zero));
    EXPECT_THROW(row_softmax_masked(x, Mask(2, 3, true)), NumericError);
    EXPECT_THROW(row_softmax_masked(x, Mask(2, 2, true), 0.0), NumericError);
}

TEST(SoftmaxProperty, RowsSumToOne) {
    std::mt19937 rng(3);
    std::bernoulli_distribution coin(0.5);
    for (int trial = 0; trial < 100; ++trial) {
        Tape tape;
        const std::size_t r = 1 + rng() % 6, c = 1 + rng() % 8;
        Mask mask(r, c);
        for (std::size_t i = 0; i < r; ++i) {
            mask.set(i, rng() % c);
            for (std::size_t j = 0; j < c; ++j)
                if (coin(rng)) mask.set(i, j);
        }
        Var y = row_softmax_masked(tape.constant(random_tensor(rng, r, c, 5.0)), mask, 0.3);
        for (std::size_t i = 0; i < r; ++i) {
            double s = 0.0;
            for (double v : y.value().row(i)) s += v;
            EXPECT_NEAR(s, 1.0, 1e-9);
        }
    }
}

TEST(PrimitiveErrorsTest, ShapeMismatchAndNonFinite) {
    Tape tape;
    Var a = tape.constant(Tensor(2, 3));
    Var b = tape.constant(Tensor(2, 2));
    EXPECT_THROW(matmul(a, b), NumericError);
    EXPECT_THROW(add(a, b), NumericError);
    EXPECT_THROW(concat({a, b}, 0), NumericError);
    Var big = tape.constant(Tensor(1, 1, 1e308));
    EXPECT_THROW(scale(big, 10.0), NumericError);
}

TEST(CosineTest, SelfSimilarityDiagonalIsOne) {
    std::mt19937 rng(9);
    Tape tape;
    Var x = tape.constant(random_tensor(rng, 5, 3));
    Var s = cosine_similarity_matrix(x, x);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(s.value()(i, i), 1.0, 1e-12);
}

TEST(CosineTest, ZeroRowsHaveZeroSimilarity) {
    Tape tape;
    Var a = tape.variable(Tensor::from_rows({{0.0, 0.0}, {1.0, 2.0}}));
    Var s = cosine_similarity_matrix(a, a);
    EXPECT_EQ(s.value()(0, 0), 0.0);
    EXPECT_EQ(s.value()(0, 1), 0.0);
    tape.backward(sum_all(s));
    EXPECT_TRUE(a.grad().all_finite());
}

TEST(GradCheckTest, ConstantObjective) {
    ParamStore store;
    store.add("w", Tensor::from_rows({{1.0, -2.0}}));
    auto report = grad_check([](TapeParams& p) { return p.tape().constant(Tensor::scalar(4.0)); }, store);
    EXPECT_TRUE(report.passed);
    EXPECT_EQ(report.max_rel_error, 0.0);
}

TEST(GradCheckTest, SumOfSquares) {
    ParamStore store;
    store.add("w", Tensor::from_rows({{0.5, -1.5, 2.0}, {3.0, 0.1, -0.7}}));
    auto report = grad_check([](TapeParams& p) { return sum_all(mul(p["w"], p["w"])); }, store);
    EXPECT_LT(report.max_rel_error, 1e-6);
}

TEST(GradCheckTest, DetectsWrongAdjoint) {
    ParamStore store;
    store.add("w", Tensor::from_rows({{0.5, -1.5}}));
    // forward computes 2w but the adjoint claims 3
    auto report = grad_check([](TapeParams& p) {
        Var w = p["w"];
        Tensor out = w.value();
        for (double& v : out.values()) v *= 2.0;
        Var y = p.tape().record(std::move(out), {w}, [w](Tape& t, std::size_t self) {
            if (Tensor* g = t.grad_slot(w.id()))
                for (std::size_t k = 0; k < g->size(); ++k) (*g)[k] += 3.0 * t.grad(self)[k];
        }, "wrong");
        return sum_all(y);
    }, store);
    EXPECT_FALSE(report.passed);
}

TEST(AdamTest, ZeroGradientLeavesParametersUnchanged) {
    ParamStore store;
    store.add("w", Tensor::from_rows({{1.0, 2.0}}));
    const Tensor before = store.value("w");
    adam_step(store, {Tensor(1, 2)});
    EXPECT_EQ(store.value("w"), before);
    EXPECT_EQ(store.step(), 1u);
}

TEST(AdamTest, FirstStepMovesByLearningRate) {
    ParamStore store;
    store.add("w", Tensor::scalar(1.0));
    adam_step(store, {Tensor::scalar(2.0)}, {.lr = 0.1});
    EXPECT_NEAR(store.value("w")[0], 0.9, 1e-6);
}

TEST(AdamTest, ConvergesOnShiftedQuadratic) {
    ParamStore store;
    store.add("w", Tensor::scalar(0.0));
    for (int i = 0; i < 100; ++i) {
        const double w = store.value("w")[0];
        adam_step(store, {Tensor::scalar(2.0 * (w - 3.0))}, {.lr = 0.1});
    }
    EXPECT_LT(std::abs(store.value("w")[0] - 3.0), 0.1);
}

TEST(AdamTest, RejectsBadGradients) {
    ParamStore store;
    store.add("w", Tensor::scalar(0.0));
    EXPECT_THROW(adam_step(store, {Tensor::scalar(std::nan(""))}), NumericError);
    EXPECT_THROW(adam_step(store, {Tensor(1, 2)}), NumericError);
    EXPECT_THROW(adam_step(store, {}), NumericError);
    EXPECT_EQ(store.step(), 0u);
}

TEST(ParamStoreTest, NamesAreUnique) {
    ParamStore store;
    store.add("w", Tensor::scalar(0.0));
    EXPECT_THROW(store.add("w", Tensor::scalar(1.0)), ConfigError);
    EXPECT_THROW(store.value("missing"), ConfigError);
}

TEST(CheckpointTest, RoundTripIsExact) {
    std::mt19937 rng(4);
    ParamStore store;
    store.add("layer.w", random_tensor(rng, 3, 2));
    store.add("tau", Tensor::scalar(0.123456789012345678));
    for (int i = 0; i < 3; ++i) adam_step(store, {random_tensor(rng, 3, 2), random_tensor(rng, 1, 1)});
    const auto path = std::filesystem::temp_directory_path() / ("aedmatch_ckpt_" + std::to_string(::getpid()) + ".json");
    save_checkpoint(path, store, {{"note", "x"}});
    nlohmann::json meta;
    ParamStore loaded = load_checkpoint(path, &meta);
    std::filesystem::remove(path);
    EXPECT_EQ(loaded, store);
    EXPECT_EQ(meta["note"], "x");
}

TEST(CheckpointTest, RejectsForeignDocuments) {
    EXPECT_THROW(checkpoint_from_json({{"format", "other"}}), DataError);
    EXPECT_THROW(checkpoint_from_json({{"format", "aedmatch-checkpoint"}, {"version", 99}}), DataError);
    EXPECT_THROW(load_checkpoint("/nonexistent/ckpt.json"), DataError);
}

TEST(DeterminismTest, RepeatedForwardIsBitIdentical) {
    std::mt19937 rng(8);
    const Tensor a = random_tensor(rng, 4, 3), b = random_tensor(rng, 6, 3);
    const auto run = [&] {
        Tape tape;
        Var s = row_softmax(cosine_similarity_matrix(tape.constant(a), tape.constant(b)), tape.constant(Tensor::scalar(0.4)));
        return s.value();
    };
    EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace aedmatch
