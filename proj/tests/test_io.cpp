#include "afa/errors.hpp"
#include "afa/io.hpp"
#include "afa/svg.hpp"

#include "doctest.h"

#include <charconv>
#include <cstring>
#include <limits>
#include <random>

using namespace afa;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("afa_io_" + tag + "_" + std::to_string(std::random_device{}()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

} // namespace

TEST_CASE("format_double round-trips") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> e(-300.0, 300.0);
    for (int i = 0; i < 2000; ++i) {
        const double v = (i % 2 ? -1.0 : 1.0) * std::pow(10.0, e(rng)) * 1.2345678901234567;
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(12.0) == "12");
    const std::string tiny = format_double(std::numeric_limits<double>::denorm_min());
    double back = 0.0;
    std::from_chars(tiny.data(), tiny.data() + tiny.size(), back);
    CHECK(back == std::numeric_limits<double>::denorm_min());
}

TEST_CASE("csv write and read") {
    TempDir d("csv");
    const fs::path f = d.path / "t.csv";
    {
        CsvWriter w(f, {"a", "b", "c"}, "0123456789abcdef");
        w << 1 << 0.1 << "x";
        w.end_row();
        w << std::size_t{7} << -2.5e-300 << std::string("yz");
        w.end_row();
    }
    {
        CsvWriter w(d.path / "short.csv", {"a", "b"}, "0");
        w << 1.0;
        CHECK_THROWS_AS(w.end_row(), Error);
    }
    CHECK_THROWS_AS(read_csv(d.path / "short.csv"), Error);
    const CsvTable t = read_csv(f);
    CHECK(t.comment.find("afa 1.0.0") != std::string::npos);
    CHECK(t.comment.find("config=0123456789abcdef") != std::string::npos);
    REQUIRE(t.columns == std::vector<std::string>{"a", "b", "c"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.number(0, t.column("b")) == 0.1);
    CHECK(t.number(1, t.column("b")) == -2.5e-300);
    CHECK(t.rows[1][2] == "yz");
    CHECK_THROWS_AS(t.column("nope"), Error);
    CHECK_THROWS_AS(t.number(0, t.column("c")), Error);
}

TEST_CASE("float64 sidecar files") {
    TempDir d("bin");
    const fs::path f = d.path / "v.bin";
    const std::vector<double> v{1.0, -0.0, 3.141592653589793, 1e-310};
    write_doubles(f, v);
    CHECK(fs::file_size(f) == 32);
    const auto back = read_doubles(f);
    REQUIRE(back.size() == v.size());
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::memcmp(&back[i], &v[i], 8) == 0);
    // little-endian: 1.0 is 00 .. 00 f0 3f
    std::ifstream in(f, std::ios::binary);
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    CHECK(b[6] == 0xf0);
    CHECK(b[7] == 0x3f);

    std::ofstream(d.path / "bad.bin", std::ios::binary) << "12345";
    CHECK_THROWS_AS(read_doubles(d.path / "bad.bin"), Error);
}

TEST_CASE("sha256 test vectors") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("manifest lists and verifies every file") {
    TempDir d("man");
    std::ofstream(d.path / "b.txt") << "beta";
    fs::create_directories(d.path / "sub");
    std::ofstream(d.path / "sub" / "a.txt") << "alpha";
    write_json(d.path / "c.json", {{"x", 1}});
    write_manifest(d.path);
    const auto m = read_json(d.path / "manifest.json");
    const auto& files = m.at("files");
    REQUIRE(files.size() == 3);
    CHECK(files[0].at("path") == "b.txt");
    CHECK(files[2].at("path") == "sub/a.txt");
    CHECK(files[0].at("sha256") == sha256_hex("beta"));
    CHECK(files[0].at("bytes") == 4);
    CHECK(verify_manifest(d.path).empty());

    std::ofstream(d.path / "b.txt") << "BETA";
    const auto bad = verify_manifest(d.path);
    REQUIRE(bad.size() == 1);
    CHECK(bad[0] == "b.txt");
}

TEST_CASE("svg figure is well formed") {
    PlotFrame f;
    f.title = "a < b & c";
    f.x_min = 0.0;
    f.x_max = 1.0;
    f.y_min = -1.0;
    f.y_max = 1.0;
    SvgFigure fig(f);
    fig.scatter(ScatterSeries{{0.1, 0.5}, {0.2, -0.3}, "#000000", 1.0, "pts"});
    fig.lines(LineSeries{{0.0, 1.0}, {0.0, 1.0}, "#ff0000", 1.0, true, "line"});
    fig.bars({0.5}, {0.7}, 0.1);
    fig.heatmap({0.0, 1.0, 2.0, 3.0}, 2, 2);
    const std::string s = fig.str();
    CHECK(s.rfind("<svg", 0) == 0);
    CHECK(s.find("</svg>") != std::string::npos);
    CHECK(s.find("a &lt; b &amp; c") != std::string::npos);
    CHECK(s.find("a < b") == std::string::npos);
    CHECK(s.find("<circle") != std::string::npos);
    CHECK(s.find("stroke-dasharray") != std::string::npos);
}
