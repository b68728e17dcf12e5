#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "gridlearn/errors.hpp"
#include "gridlearn/gmat_io.hpp"

using namespace gridlearn;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    fs::path d = fs::temp_directory_path() / "gridlearn_io_test";
    fs::create_directories(d);
    return d;
}

std::vector<unsigned char> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(bool(in));
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("io_formats") {

TEST_CASE("gmat round-trips values exactly") {
    Eigen::MatrixXd m(3, 2);
    m << 1.0, -0.25, 1e-300, 3.141592653589793, -1e300, 0.1;
    fs::path p = scratch_dir() / "roundtrip.gmat";
    write_gmat(p, m);
    Eigen::MatrixXd back = read_gmat(p);
    REQUIRE(back.rows() == 3);
    REQUIRE(back.cols() == 2);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) CHECK(back(i, j) == m(i, j));
}

TEST_CASE("gmat layout: padded magic, u64 dims, row-major f64 payload") {
    Eigen::MatrixXd m(2, 3);
    m << 1, 2, 3, 4, 5, 6;
    fs::path p = scratch_dir() / "layout.gmat";
    write_gmat(p, m);
    auto bytes = slurp(p);
    REQUIRE(bytes.size() == 16 + 16 + 6 * 8);
    CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "GMAT0001");
    for (int i = 8; i < 16; ++i) CHECK(bytes[i] == 0);
    auto u64_at = [&](size_t off) {
        std::uint64_t v = 0;
        for (int b = 7; b >= 0; --b) v = (v << 8) | bytes[off + b];
        return v;
    };
    CHECK(u64_at(16) == 2);
    CHECK(u64_at(24) == 3);
    // Row-major order: first payload double is m(0,0), fourth is m(1,0).
    double first, fourth;
    std::memcpy(&first, bytes.data() + 32, 8);
    std::memcpy(&fourth, bytes.data() + 32 + 3 * 8, 8);
    CHECK(first == 1.0);
    CHECK(fourth == 4.0);
}

TEST_CASE("gmat read rejects bad magic and truncation") {
    fs::path p = scratch_dir() / "bad.gmat";
    {
        std::ofstream out(p, std::ios::binary);
        out << "NOTMAGIC";
    }
    CHECK_THROWS_AS(read_gmat(p), IoError);

    Eigen::MatrixXd m = Eigen::MatrixXd::Ones(4, 4);
    write_gmat(p, m);
    auto bytes = slurp(p);
    fs::path t = scratch_dir() / "trunc.gmat";
    {
        std::ofstream out(t, std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size() - 8));
    }
    CHECK_THROWS_AS(read_gmat(t), IoError);
    CHECK_THROWS_AS(read_gmat(scratch_dir() / "missing.gmat"), IoError);
}

TEST_CASE("csv matrix round-trips at full double precision") {
    Eigen::MatrixXd m(2, 2);
    m << 1.0 / 3.0, -7.25e-5, 2e18, -0.0;
    fs::path p = scratch_dir() / "m.csv";
    write_csv_matrix(p, m);
    Eigen::MatrixXd back = read_csv_matrix(p);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(back(i, j) == m(i, j));
}

TEST_CASE("csv read rejects ragged rows and bad cells") {
    fs::path p = scratch_dir() / "ragged.csv";
    {
        std::ofstream out(p);
        out << "1,2\n3\n";
    }
    CHECK_THROWS_AS(read_csv_matrix(p), IoError);
    {
        std::ofstream out(p);
        out << "1,banana\n";
    }
    CHECK_THROWS_AS(read_csv_matrix(p), IoError);
}

TEST_CASE("sparse triplets keep only entries at or above the threshold") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
    m(0, 1) = 0.5;
    m(1, 2) = -0.05;
    m(2, 0) = 0.099999;
    fs::path p = scratch_dir() / "sparse.csv";
    write_sparse_triplets(p, m, 0.1);
    std::ifstream in(p);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(line);
    REQUIRE(lines.size() == 2);  // header + the single surviving entry
    CHECK(lines[0] == "row,col,value");
    CHECK(lines[1] == "0,1,0.5");
}

TEST_CASE("manifest round-trips and writes keys sorted") {
    std::map<std::string, std::string> kv{
        {"zulu", "26"}, {"alpha", "1"}, {"mid", "x=y"}};
    fs::path p = scratch_dir() / "m.meta";
    write_manifest(p, kv);
    std::ifstream in(p);
    std::string first;
    std::getline(in, first);
    CHECK(first == "alpha=1");
    auto back = read_manifest(p);
    CHECK(back == kv);  // value may itself contain '='; split is on the first
    CHECK_THROWS_AS(read_manifest(scratch_dir() / "nope.meta"), IoError);
}

TEST_CASE("format_double survives a parse round-trip") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.123456789, -2.5e17})
        CHECK(std::stod(format_double(v)) == v);
}

}  // TEST_SUITE
