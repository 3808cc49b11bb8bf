#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "positq/errors.hpp"
#include "positq/quantizer.hpp"

using namespace positq;

namespace {

Tensor random_tensor(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> data(n);
    for (double& v : data) v = dist(rng);
    return Tensor({n}, std::move(data));
}

std::vector<Codec> all_codecs() {
    std::vector<Codec> out{Codec::identity()};
    for (int n = 2; n <= 8; ++n) {
        out.push_back(Codec::posit(PositFormat(n, 0)));
        out.push_back(Codec::normalized_posit(PositFormat(n, 0)));
    }
    out.push_back(Codec::normalized_posit(PositFormat(8, 1)));
    for (int f = 0; f <= 15; ++f) out.push_back(Codec::fixed(FixedFormat(f)));
    return out;
}

}  // namespace

TEST(Codec, BitsAndLabels) {
    EXPECT_EQ(Codec::identity().bits(), 32);
    EXPECT_EQ(Codec::normalized_posit(PositFormat(5, 0)).bits(), 5);
    EXPECT_EQ(Codec::fixed(FixedFormat(6)).bits(), 7);
    EXPECT_EQ(Codec::normalized_posit(PositFormat(5, 0)).family(), "normalized-posit-es0");
    EXPECT_EQ(Codec::posit(PositFormat(5, 1)).label(), "posit-es1/5");
    EXPECT_EQ(Codec::fixed(FixedFormat(6)).label(), "fixed/7");
}

TEST(QuantizeTensor, IdentityIsBitExact) {
    const Tensor t = random_tensor(1000, 1, -3.0, 3.0);
    const auto q = quantize_tensor(t, Codec::identity());
    EXPECT_EQ(q.values, t);
    EXPECT_EQ(q.report.max_abs_error, 0.0);
    EXPECT_EQ(q.report.mean_abs_error, 0.0);
    EXPECT_EQ(q.report.weight_count, 1000u);
    EXPECT_EQ(q.report.bits_per_weight, 32);
}

TEST(QuantizeTensor, FixedExample) {
    const Tensor t({3}, {0.3, -1.0, 0.0});
    const auto q = quantize_tensor(t, Codec::fixed(FixedFormat(2)));
    EXPECT_EQ(q.values, Tensor({3}, {0.25, -1.0, 0.0}));
    EXPECT_DOUBLE_EQ(q.report.max_abs_error, 0.05);
    EXPECT_EQ(q.report.bits_per_weight, 3);
}

TEST(QuantizeTensor, NormalizedPositExample) {
    const Tensor t({2}, {0.5, 0.015625});
    const auto q = quantize_tensor(t, Codec::normalized_posit(PositFormat(8, 0)));
    EXPECT_EQ(q.values, t);
    EXPECT_EQ(q.report.max_abs_error, 0.0);
}

TEST(QuantizeTensor, NonFiniteNamesTensorAndIndex) {
    const Tensor t({3}, {0.1, NAN, 0.2});
    try {
        quantize_tensor(t, Codec::fixed(FixedFormat(4)), "fc1.weight");
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("fc1.weight"), std::string::npos);
        EXPECT_NE(msg.find("index 1"), std::string::npos);
    }
    // Identity also rejects non-finite data.
    EXPECT_THROW(quantize_tensor(t, Codec::identity()), DataError);
}

TEST(QuantizeTensor, IdempotentAndShapePreserving) {
    const Tensor t = random_tensor(4096, 2, -1.5, 1.5).reshaped({64, 64});
    for (const Codec& c : all_codecs()) {
        const auto once = quantize_tensor(t, c);
        const auto twice = quantize_tensor(once.values, c);
        ASSERT_EQ(once.values.shape(), t.shape()) << c.label();
        ASSERT_EQ(twice.values, once.values) << c.label();
        ASSERT_EQ(twice.report.max_abs_error, 0.0) << c.label();
        ASSERT_EQ(once.report.weight_count, t.size());
        ASSERT_GE(once.report.max_abs_error, once.report.mean_abs_error);
    }
}

TEST(QuantizeTensor, FixedErrorBoundInRange) {
    for (int f = 0; f <= 15; ++f) {
        const FixedFormat fmt(f);
        const Tensor t = random_tensor(5000, 100 + f, -1.0, 1.0 - fmt.step());
        const auto q = quantize_tensor(t, Codec::fixed(fmt));
        EXPECT_LE(q.report.max_abs_error, std::ldexp(1.0, -(f + 1))) << "f=" << f;
    }
}

TEST(QuantizeTensor, NormalizedPositErrorFollowsLocalStep) {
    // Tapered precision: the error at x is bounded by half the gap between the two
    // codes around x, and for es=0 that gap is widest next to +/-1.
    const PositFormat fmt(6, 0);
    const Codec codec = Codec::normalized_posit(fmt);
    std::vector<double> values;
    for (std::uint32_t b = 0; b < fmt.code_count(); ++b) {
        if (b != fmt.nar_bits()) values.push_back(decode_normalized(PositCode(b, fmt)));
    }
    std::sort(values.begin(), values.end());

    const double step_near_zero = values[values.size() / 2 + 2] - values[values.size() / 2 + 1];
    const double step_near_one = values.back() - values[values.size() - 2];
    EXPECT_GT(step_near_one, step_near_zero);

    const Tensor t = random_tensor(20000, 3);
    const auto q = quantize_tensor(t, codec);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double x = t[i];
        const auto hi = std::lower_bound(values.begin(), values.end(), x);
        const double upper = *hi;
        const double lower = hi == values.begin() ? upper : *(hi - 1);
        const double local_step = upper - lower;
        if (std::fabs(x) > values[values.size() / 2 + 1]) {  // outside the minpos underflow band
            ASSERT_LE(std::fabs(q.values[i] - x), local_step / 2) << x;
        }
    }
}

TEST(QuantizeModel, SkipBiasLeavesBiasesUntouched) {
    Layer d;
    d.kind = LayerKind::kDense;
    d.weights = "w";
    d.bias = "b";
    Layer s;
    s.kind = LayerKind::kSoftmax;
    ParameterMap params;
    params.emplace("w", Tensor({2, 2}, {0.3, -0.3, 0.1, 0.9}));
    params.emplace("b", Tensor({2}, {0.3, -0.3}));
    const Model model({d, s}, params, {2}, 2);

    const Codec codec = Codec::fixed(FixedFormat(2));
    const auto all = quantize_model(model, codec);
    EXPECT_EQ(all.model.parameter("b"), Tensor({2}, {0.25, -0.25}));
    EXPECT_EQ(all.report.weight_count, 6u);

    const auto weights_only = quantize_model(model, codec, true);
    EXPECT_EQ(weights_only.model.parameter("b"), params.at("b"));
    EXPECT_EQ(weights_only.model.parameter("w"), Tensor({2, 2}, {0.25, -0.25, 0.0, 0.75}));
    EXPECT_EQ(weights_only.report.weight_count, 4u);
}

TEST(MemoryReduction, Examples) {
    EXPECT_EQ(format_percent(memory_reduction(5, 7)), "28.6%");
    EXPECT_EQ(format_percent(memory_reduction(7, 11)), "36.4%");
    EXPECT_EQ(format_percent(memory_reduction(8, 8)), "0.0%");
    EXPECT_EQ(format_percent(memory_reduction(7, 9)), "22.2%");
    EXPECT_DOUBLE_EQ(memory_reduction(7, 9), 100.0 * 2.0 / 9.0);
}

TEST(MemoryReduction, Errors) {
    EXPECT_THROW(memory_reduction(1, 0), DomainError);
    EXPECT_THROW(memory_reduction(0, 0), DomainError);
    EXPECT_THROW(memory_reduction(9, 7), DomainError);
    EXPECT_THROW(memory_reduction(-1, 7), DomainError);
}
