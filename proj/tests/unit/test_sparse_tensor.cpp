#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "spe/error.hpp"
#include "spe/io.hpp"
#include "spe/sparse_tensor.hpp"

using namespace spe;

namespace {

Errc code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected spe::Error");
    return Errc::InvalidArgument;
}

}  // namespace

TEST_CASE("from_entries sorts by row then column") {
    const auto t = PillarTensor::from_entries(4, 4, 1, {{{1, 1}, {2.0f}}, {{0, 3}, {1.0f}}});
    REQUIRE(t.size() == 2);
    CHECK(t.coord(0) == Coord{0, 3});
    CHECK(t.coord(1) == Coord{1, 1});
    CHECK(t.feature(0)[0] == 1.0f);
    CHECK(t.feature(1)[0] == 2.0f);
}

TEST_CASE("from_entries edge cases and errors") {
    const auto empty = PillarTensor::from_entries(4, 4, 1, {});
    CHECK(empty.empty());
    CHECK(density(empty) == 0.0);

    CHECK(code_of([] { PillarTensor::from_entries(2, 2, 2, {{{0, 0}, {1.0f}}}); }) == Errc::BadVectorLength);
    CHECK(code_of([] { PillarTensor::from_entries(2, 2, 1, {{{0, 0}, {1.0f}}, {{0, 0}, {2.0f}}}); }) ==
          Errc::DuplicateCoord);
    CHECK(code_of([] { PillarTensor::from_entries(2, 2, 1, {{{2, 0}, {1.0f}}}); }) == Errc::OutOfBounds);
    CHECK(code_of([] { PillarTensor::from_entries(2, 2, 1, {{{0, -1}, {1.0f}}}); }) == Errc::OutOfBounds);
}

TEST_CASE("from_sorted validates order and sizes") {
    CHECK(code_of([] { PillarTensor::from_sorted(3, 3, 1, {{1, 1}, {0, 0}}, {1.0f, 2.0f}); }) ==
          Errc::UnsortedInput);
    CHECK(code_of([] { PillarTensor::from_sorted(3, 3, 1, {{1, 1}, {1, 1}}, {1.0f, 2.0f}); }) ==
          Errc::DuplicateCoord);
    CHECK(code_of([] { PillarTensor::from_sorted(3, 3, 2, {{1, 1}}, {1.0f}); }) == Errc::BadVectorLength);
}

TEST_CASE("to_dense places features row-major") {
    const auto empty = PillarTensor(3, 3, 2);
    const auto g0 = to_dense(empty);
    CHECK(g0.data.size() == 18);
    CHECK(std::all_of(g0.data.begin(), g0.data.end(), [](float v) { return v == 0.0f; }));

    const auto t = PillarTensor::from_entries(3, 3, 1, {{{1, 1}, {3.0f}}});
    const auto g = to_dense(t);
    REQUIRE(g.data.size() == 9);
    for (size_t i = 0; i < 9; ++i) CHECK(g.data[i] == (i == 4 ? 3.0f : 0.0f));
}

TEST_CASE("explicit-zero actives do not survive a dense round trip") {
    const auto t = PillarTensor::from_entries(3, 3, 2, {{{0, 0}, {0.0f, 0.0f}}, {{2, 1}, {0.0f, -1.0f}}});
    const auto back = from_dense(to_dense(t));
    REQUIRE(back.size() == 1);
    CHECK(back.coord(0) == Coord{2, 1});
}

TEST_CASE("dense round trip is identity without explicit zeros") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        const auto t = oracle::random_tensor(9, 13, 3, 0.3, seed);
        CHECK(from_dense(to_dense(t)) == t);
    }
}

TEST_CASE("density") {
    CHECK(density(PillarTensor::from_entries(4, 4, 1, {{{0, 0}, {1.0f}}, {{3, 3}, {1.0f}}})) == 0.125);
    CHECK(density(PillarTensor(4, 4, 1)) == 0.0);
    std::vector<Entry> all;
    for (int32_t r = 0; r < 3; ++r) {
        for (int32_t c = 0; c < 3; ++c) all.push_back({{r, c}, {1.0f}});
    }
    CHECK(density(PillarTensor::from_entries(3, 3, 1, all)) == 1.0);
    CHECK(density(from_dense_full(DenseGrid(5, 2, 1))) == 1.0);
}

TEST_CASE("relu clamps values and keeps coordinates") {
    const auto t = PillarTensor::from_entries(2, 2, 2, {{{0, 1}, {-1.0f, 2.0f}}, {{1, 0}, {-3.0f, -0.5f}}});
    const auto r = relu(t);
    CHECK(std::equal(r.coords().begin(), r.coords().end(), t.coords().begin(), t.coords().end()));
    CHECK(r.feature(0)[0] == 0.0f);
    CHECK(r.feature(0)[1] == 2.0f);
    CHECK(r.feature(1)[0] == 0.0f);
    CHECK(r.feature(1)[1] == 0.0f);
}

TEST_CASE("CoordIndex agrees with linear search") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
        const auto t = oracle::random_tensor(11, 7, 1, 0.25, seed);
        const CoordIndex idx(t.coords(), t.shape());
        for (int32_t r = -1; r <= 11; ++r) {
            for (int32_t c = -1; c <= 7; ++c) {
                const auto it = std::find(t.coords().begin(), t.coords().end(), Coord{r, c});
                const std::ptrdiff_t want = it == t.coords().end() ? CoordIndex::npos : it - t.coords().begin();
                CHECK(idx.find({r, c}) == want);
            }
        }
        for (int32_t r = 0; r < 11; ++r) {
            const auto [a, b] = idx.row_range(r);
            for (size_t i = a; i < b; ++i) CHECK(t.coord(i).row == r);
            CHECK(static_cast<size_t>(std::count_if(t.coords().begin(), t.coords().end(),
                                                    [r](Coord c) { return c.row == r; })) == b - a);
        }
    }
}

TEST_CASE("PLT round trip is exact") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        const auto t = oracle::random_tensor(6, 5, 3, 0.4, seed);
        std::ostringstream os;
        write_plt(os, t);
        std::istringstream is(os.str());
        CHECK(read_plt(is) == t);
    }
    std::ostringstream os;
    write_plt(os, PillarTensor(2, 3, 4));
    CHECK(os.str() == "PLT v1 2 3 4 0\n");
}

TEST_CASE("PLT reader rejects malformed input") {
    const auto parse = [](const std::string& s) {
        std::istringstream is(s);
        return read_plt(is);
    };
    CHECK(code_of([&] { parse("PLT v1 3 3 1 2\n1 1 1.0\n0 0 1.0\n"); }) == Errc::UnsortedInput);
    CHECK(code_of([&] { parse("PLT v1 3 3 1 2\n1 1 1.0\n1 1 1.0\n"); }) == Errc::DuplicateCoord);
    CHECK(code_of([&] { parse("PLT v1 3 3 1 1\n5 1 1.0\n"); }) == Errc::OutOfBounds);
    CHECK(code_of([&] { parse("PLT v2 3 3 1 0\n"); }) == Errc::ParseError);
    CHECK(code_of([&] { parse("PLT v1 3 3 2 1\n0 0 1.0\n"); }) == Errc::ParseError);
    CHECK(code_of([&] { parse("PLT v1 3 3 1 2\n0 0 1.0\n"); }) == Errc::ParseError);
    CHECK(code_of([&] { parse("PLT v1 3 3 1 1\n0 0 abc\n"); }) == Errc::ParseError);
}

TEST_CASE("format_real uses nine significant digits") {
    CHECK(format_real(0.125) == "1.25000000e-01");
    CHECK(format_real(1.0 / 3.0) == "3.33333333e-01");
    CHECK(format_real(-2.5e10) == "-2.50000000e+10");
    CHECK(format_real(0.0) == "0.00000000e+00");
}
