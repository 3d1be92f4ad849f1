#include "doctest.h"
#include "oracles.hpp"

#include "cfd/codec/quantize.hpp"
#include "cfd/error.hpp"

#include <numeric>
#include <set>

using namespace cfd;

namespace {

constexpr int kShift = 30;

std::vector<std::uint16_t> q(std::vector<double> p, int bits, std::uint64_t seed = 0) {
    Rng rng(seed);
    return quantize(p, bits, rng);
}

// Random point on the simplex with coordinates k_i / 2^30.
std::vector<std::int64_t> dyadic_simplex_point(int classes, Rng& rng) {
    std::uniform_int_distribution<std::int64_t> cut(0, std::int64_t{1} << kShift);
    std::vector<std::int64_t> cuts{0, std::int64_t{1} << kShift};
    for (int i = 0; i + 1 < classes; ++i) cuts.push_back(cut(rng));
    std::sort(cuts.begin(), cuts.end());
    std::vector<std::int64_t> k;
    for (std::size_t i = 1; i < cuts.size(); ++i) k.push_back(cuts[i] - cuts[i - 1]);
    return k;
}

std::vector<double> to_double(const std::vector<std::int64_t>& k) {
    std::vector<double> p;
    for (auto v : k) p.push_back(std::ldexp(static_cast<double>(v), -kShift));
    return p;
}

std::vector<int> to_int(const std::vector<std::uint16_t>& g) { return {g.begin(), g.end()}; }

}  // namespace

TEST_CASE("quantize examples") {
    CHECK(q({0.2, 0.5, 0.3}, 1) == std::vector<std::uint16_t>{0, 1, 0});
    CHECK(q({0.6, 0.25, 0.15}, 2) == std::vector<std::uint16_t>{2, 1, 0});
    CHECK(q({1.0 / 3, 1.0 / 3, 1.0 / 3}, 2) == std::vector<std::uint16_t>{1, 1, 1});
    CHECK(q({0.0, 1.0}, 16) == std::vector<std::uint16_t>{0, 65535});
}

TEST_CASE("quantize rejects bad input") {
    CHECK_THROWS_AS(q({0.5, 0.6}, 1), ValidationError);
    CHECK_THROWS_AS(q({-0.1, 1.1}, 1), ValidationError);
    CHECK_THROWS_AS(q({0.5, 0.5}, 0), ValidationError);
    CHECK_THROWS_AS(q({0.5, 0.5}, 17), ValidationError);
}

TEST_CASE("ties are broken by the seeded stream") {
    std::set<std::vector<std::uint16_t>> seen;
    for (std::uint64_t seed = 0; seed < 64; ++seed) {
        const auto g = q({0.5, 0.5}, 1, seed);
        CHECK(g == q({0.5, 0.5}, 1, seed));
        seen.insert(g);
    }
    CHECK(seen.size() == 2);
}

TEST_CASE("L1 objective equals brute-force minimum") {
    Rng rng(17);
    for (int classes : {2, 3, 4}) {
        for (int bits : {1, 2, 3}) {
            const int levels = (1 << bits) - 1;
            for (int trial = 0; trial < 300; ++trial) {
                const auto k = dyadic_simplex_point(classes, rng);
                const auto grid = to_int(q(to_double(k), bits, static_cast<std::uint64_t>(trial)));
                CHECK(std::accumulate(grid.begin(), grid.end(), 0) == levels);
                CHECK(oracle::scaled_l1(grid, k, levels, kShift) == oracle::brute_force_min_l1(k, bits, kShift));
            }
        }
    }
}

TEST_CASE("one bit is the one-hot argmax for unique maxima") {
    Rng rng(5);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto p = sample_dirichlet(6, 0.7, rng);
        const auto top = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
        const auto g = q(p, 1, static_cast<std::uint64_t>(trial));
        for (std::size_t c = 0; c < p.size(); ++c) CHECK(g[c] == (c == top ? 1 : 0));
    }
}

TEST_CASE("refinement") {
    SUBCASE("error never grows when the finer grid contains the coarser one") {
        // (2^1 - 1) divides (2^2 - 1) and (2^2 - 1) divides (2^4 - 1).
        Rng rng(8);
        for (int trial = 0; trial < 500; ++trial) {
            const auto k = dyadic_simplex_point(4, rng);
            const auto p = to_double(k);
            const auto e1 = oracle::scaled_l1(to_int(q(p, 1)), k, 1, kShift) * 15;
            const auto e2 = oracle::scaled_l1(to_int(q(p, 2)), k, 3, kShift) * 5;
            const auto e4 = oracle::scaled_l1(to_int(q(p, 4)), k, 15, kShift);
            CHECK(e2 <= e1);
            CHECK(e4 <= e2);
        }
    }
    SUBCASE("one more bit can increase the error") {
        const std::vector<double> p{1.0 / 3, 2.0 / 3};
        CHECK(q(p, 2) == std::vector<std::uint16_t>{1, 2});
        CHECK(q(p, 3) == std::vector<std::uint16_t>{2, 5});  // L1 error 2/21 > 0
    }
}

TEST_CASE("quantize_matrix") {
    SUBCASE("one-hot rows map to their class ids") {
        const auto labels = quantize_matrix(SoftLabelMatrix(one_hot({2, 0, 1}, 3)), 1, 0);
        CHECK(labels.class_ids() == std::vector<std::uint32_t>{3, 1, 2});
    }
    SUBCASE("empty input") {
        const auto labels = quantize_matrix(SoftLabelMatrix(Matrix(0, 4)), 2, 0);
        CHECK(labels.rows() == 0);
        CHECK(labels.grid().empty());
    }
    SUBCASE("sum constraint on a random 100 x 10 matrix") {
        Rng rng(1);
        Matrix m(100, 10);
        for (Eigen::Index r = 0; r < 100; ++r) {
            const auto p = sample_dirichlet(10, 1.0, rng);
            for (Eigen::Index c = 0; c < 10; ++c) m(r, c) = p[static_cast<std::size_t>(c)];
        }
        const auto labels = quantize_matrix(SoftLabelMatrix(m), 3, 9);
        for (std::size_t r = 0; r < 100; ++r) {
            const auto row = labels.row(r);
            CHECK(std::accumulate(row.begin(), row.end(), 0u) == 7u);
        }
        CHECK(labels == quantize_matrix(SoftLabelMatrix(m), 3, 9));
        const Matrix back = labels.dequantize();
        for (Eigen::Index r = 0; r < 100; ++r) CHECK(back.row(r).sum() == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("QuantizedLabels validation") {
    CHECK_NOTHROW(QuantizedLabels(1, 3, 2, {1, 1, 1}));
    CHECK_THROWS_AS(QuantizedLabels(1, 3, 2, {1, 1, 0}), ValidationError);
    CHECK_THROWS_AS(QuantizedLabels(1, 2, 1, {1, 1}), ValidationError);
    CHECK_THROWS_AS(QuantizedLabels(2, 2, 1, {1, 0, 1, 1}), ValidationError);
    CHECK_THROWS_AS(QuantizedLabels(2, 2, 1, {1, 0}), ShapeError);
    const std::vector<std::uint32_t> ids{2, 1};
    const auto labels = QuantizedLabels::from_class_ids(ids, 2);
    CHECK(labels.grid()[1] == 1);
    CHECK(labels.grid()[2] == 1);
    const std::vector<std::uint32_t> bad{3};
    CHECK_THROWS_AS(QuantizedLabels::from_class_ids(bad, 2), ValidationError);
}
