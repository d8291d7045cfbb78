#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "subloc/io.hpp"

using namespace subloc;

TEST(FormatDouble, ShortestRoundTrip) {
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(-2.0), "-2");
    EXPECT_EQ(format_double(1e-300), "1e-300");
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.normal() * std::pow(10.0, double(rng.uniform_index(40)) - 20.0);
        EXPECT_EQ(parse_double(format_double(v)), v);
    }
    EXPECT_THROW(parse_double("1,5"), validation_error);
    EXPECT_THROW(parse_double(""), validation_error);
}

TEST(SignalJson, RoundTripAndFieldNames) {
    PlantedSignal s{10, 12, {{{1, 4}, {0, 2, 9}, 2.5}, {{6}, {5}, 1.0}}};
    const json j = to_json(s);
    EXPECT_EQ(j.dump(), R"({"blocks":[{"cols":[0,2,9],"lambda":2.5,"rows":[1,4]},{"cols":[5],"lambda":1.0,"rows":[6]}],"m":10,"n":12})");
    EXPECT_EQ(signal_from_json(j), s);
}

TEST(SignalJson, RejectsInvalid) {
    EXPECT_THROW(signal_from_json(json::parse(R"({"m":5,"n":5,"blocks":[{"rows":[3,1],"cols":[0],"lambda":1}]})")),
                 validation_error);
    EXPECT_THROW(signal_from_json(json::parse(R"({"m":5,"blocks":[]})")), validation_error);
    EXPECT_THROW(signal_from_json(json::parse(R"({"m":5,"n":5,"blocks":[{"rows":[1],"cols":["a"],"lambda":1}]})")),
                 validation_error);
    EXPECT_THROW(signal_from_json(json::parse(R"({"m":5,"n":5,"blocks":[{"rows":[1],"cols":[7],"lambda":1}]})")),
                 validation_error);
}

TEST(NoiseJson, RoundTrip) {
    for (auto f : {NoiseFamily::Gaussian, NoiseFamily::Rademacher, NoiseFamily::UniformSymmetric}) {
        const NoiseSpec n{f, 0.75};
        EXPECT_EQ(noise_from_json(to_json(n)), n);
    }
    EXPECT_EQ(to_json(NoiseSpec{}).dump(), R"({"family":"Gaussian","sigma":1.0})");
    EXPECT_THROW(noise_from_json(json::parse(R"({"family":"Cauchy","sigma":1})")), validation_error);
    EXPECT_THROW(noise_from_json(json::parse(R"({"family":"Gaussian","sigma":-1})")), validation_error);
}

TEST(ResultJson, Layout) {
    LocalizationResult r;
    r.blocks.push_back({{0, 3}, {1}});
    r.diagnostics["row_gap"] = 1.5;
    EXPECT_EQ(to_json(r).dump(), R"({"blocks":[{"cols":[1],"rows":[0,3]}],"diagnostics":{"row_gap":1.5}})");
    const auto back = result_from_json(to_json(r));
    EXPECT_EQ(back.blocks, r.blocks);
    EXPECT_EQ(back.diagnostics, r.diagnostics);
}

TEST(MatrixCsv, RoundTripBitExact) {
    Matrix x(3, 4);
    Rng rng(7);
    for (index_t i = 0; i < 3; ++i)
        for (index_t j = 0; j < 4; ++j) x(i, j) = rng.normal();
    x(0, 0) = -0.0;
    x(2, 3) = 1e308;
    std::stringstream ss;
    write_csv(ss, x);
    const Matrix y = read_csv(ss);
    ASSERT_EQ(y.rows(), 3);
    ASSERT_EQ(y.cols(), 4);
    EXPECT_EQ(std::memcmp(x.data(), y.data(), sizeof(double) * 12), 0);
}

TEST(MatrixCsv, LayoutAndErrors) {
    Matrix x(2, 2);
    x << 1.5, -2, 0, 3;
    std::ostringstream os;
    write_csv(os, x);
    EXPECT_EQ(os.str(), "1.5,-2\n0,3\n");
    std::istringstream ragged("1,2\n3\n");
    EXPECT_THROW(read_csv(ragged), validation_error);
    std::istringstream empty("");
    EXPECT_THROW(read_csv(empty), validation_error);
    std::istringstream crlf("1,2\r\n3,4\r\n");
    EXPECT_EQ(read_csv(crlf)(1, 0), 3.0);
}

TEST(MatrixBinary, LayoutIsLittleEndianRowMajor) {
    Matrix x(1, 2);
    x << 1.0, -2.0;
    std::ostringstream os;
    write_binary(os, x);
    const std::string b = os.str();
    ASSERT_EQ(b.size(), 32u);
    const unsigned char expected[32] = {1, 0, 0, 0, 0, 0, 0, 0,  2, 0, 0, 0, 0, 0, 0, 0,
                                        0, 0, 0, 0, 0, 0, 0xF0, 0x3F, 0, 0, 0, 0, 0, 0, 0, 0xC0};
    EXPECT_EQ(std::memcmp(b.data(), expected, 32), 0);
}

TEST(MatrixBinary, RoundTripAndTruncation) {
    Matrix x(5, 3);
    Rng rng(8);
    for (index_t i = 0; i < 5; ++i)
        for (index_t j = 0; j < 3; ++j) x(i, j) = rng.normal();
    x(1, 1) = std::numeric_limits<double>::quiet_NaN();
    std::stringstream ss;
    write_binary(ss, x);
    const Matrix y = read_binary(ss);
    EXPECT_EQ(std::memcmp(x.data(), y.data(), sizeof(double) * 15), 0);
    std::string cut;
    {
        std::ostringstream os;
        write_binary(os, x);
        cut = os.str().substr(0, 40);
    }
    std::istringstream is(cut);
    EXPECT_THROW(read_binary(is), validation_error);
}

TEST(CliqueSidecar, Fields) {
    const auto g = generate_clique(20, 4, CliqueMode::Fixed, 3);
    const json j = clique_sidecar(g);
    EXPECT_EQ(j.at("N"), 20);
    EXPECT_EQ(j.at("mode"), "fixed");
    EXPECT_EQ(j.at("clique").get<IndexSet>(), g.clique);
}
