#include "afa/io.hpp"

#include "afa/errors.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <memory>
#include <sstream>

namespace afa {

namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

CsvWriter::CsvWriter(const fs::path& path, const std::vector<std::string>& columns, const std::string& config_hash)
    : out_(path), path_(path), n_columns_(columns.size()) {
    if (!out_) throw Error("cannot open " + path.string() + " for writing");
    out_ << "# afa " << kVersion << " config=" << config_hash << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << '\n';
}

void CsvWriter::sep() {
    if (cell_++ > 0) out_ << ',';
}

CsvWriter& CsvWriter::operator<<(double v) {
    sep();
    out_ << format_double(v);
    return *this;
}

CsvWriter& CsvWriter::operator<<(long long v) {
    sep();
    out_ << v;
    return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& s) {
    if (s.find_first_of(",\n\"") != std::string::npos) throw Error("CSV cell needs quoting: " + s);
    sep();
    out_ << s;
    return *this;
}

void CsvWriter::end_row() {
    if (cell_ != n_columns_) {
        throw Error(path_.string() + ": row has " + std::to_string(cell_) + " cells, header has " +
                    std::to_string(n_columns_));
    }
    out_ << '\n';
    cell_ = 0;
}

void CsvWriter::close() {
    out_.close();
    if (!out_) throw Error("write failed: " + path_.string());
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

} // namespace

int CsvTable::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw Error("CSV column '" + name + "' missing");
    return static_cast<int>(it - columns.begin());
}

double CsvTable::number(std::size_t row, int col) const {
    const std::string& s = rows.at(row).at(static_cast<std::size_t>(col));
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw Error("not a number in CSV: '" + s + "'");
    return v;
}

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    CsvTable t;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] == '#') {
            if (t.comment.empty()) t.comment = line.substr(1);
            continue;
        }
        if (!header) {
            t.columns = split(line);
            header = true;
            continue;
        }
        auto cells = split(line);
        if (cells.size() != t.columns.size()) throw Error(path.string() + ": ragged CSV row");
        t.rows.push_back(std::move(cells));
    }
    if (!header) throw Error(path.string() + ": CSV without header");
    return t;
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << doc.dump(1) << '\n';
    if (!out) throw Error("write failed: " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

void write_doubles(const fs::path& path, const std::vector<double>& values) {
    static_assert(std::endian::native == std::endian::little, "float64 files are little-endian");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!out) throw Error("write failed: " + path.string());
}

std::vector<double> read_doubles(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    const auto size = fs::file_size(path);
    if (size % sizeof(double) != 0) throw Error(path.string() + ": size is not a multiple of 8");
    std::vector<double> v(size / sizeof(double));
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(size));
    if (!in) throw Error("read failed: " + path.string());
    return v;
}

namespace {

struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new()) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 init failed");
    }
    void update(const void* data, std::size_t n) {
        if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw Error("SHA-256 update failed");
    }
    std::string hex() {
        unsigned char md[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_.get(), md, &len) != 1) throw Error("SHA-256 final failed");
        static const char* digits = "0123456789abcdef";
        std::string s;
        for (unsigned i = 0; i < len; ++i) {
            s += digits[md[i] >> 4];
            s += digits[md[i] & 15];
        }
        return s;
    }

private:
    std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx_;
};

} // namespace

std::string sha256_hex(std::string_view data) {
    Sha256 h;
    h.update(data.data(), data.size());
    return h.hex();
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    Sha256 h;
    std::vector<char> buf(1 << 20);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return h.hex();
}

void write_manifest(const fs::path& dir) {
    std::vector<std::string> names;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const std::string rel = fs::relative(e.path(), dir).generic_string();
        if (rel != "manifest.json") names.push_back(rel);
    }
    std::sort(names.begin(), names.end());
    nlohmann::json files = nlohmann::json::array();
    for (const auto& n : names) {
        files.push_back({{"path", n}, {"bytes", fs::file_size(dir / n)}, {"sha256", sha256_file(dir / n)}});
    }
    write_json(dir / "manifest.json", {{"producer", "afa " + std::string(kVersion)}, {"files", files}});
}

std::vector<std::string> verify_manifest(const fs::path& dir) {
    const auto doc = read_json(dir / "manifest.json");
    std::vector<std::string> bad;
    for (const auto& f : doc.at("files")) {
        const std::string rel = f.at("path");
        if (!fs::exists(dir / rel) || sha256_file(dir / rel) != f.at("sha256").get<std::string>()) bad.push_back(rel);
    }
    return bad;
}

} // namespace afa
