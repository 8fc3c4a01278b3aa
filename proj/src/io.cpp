#include "spe/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

#include "spe/error.hpp"

namespace spe {

namespace {

class TokenReader {
public:
    TokenReader(std::string_view line, size_t line_no) : rest_(line), line_no_(line_no) {}

    std::string_view next() {
        while (!rest_.empty() && (rest_.front() == ' ' || rest_.front() == '\t' || rest_.front() == '\r')) {
            rest_.remove_prefix(1);
        }
        size_t n = 0;
        while (n < rest_.size() && rest_[n] != ' ' && rest_[n] != '\t' && rest_[n] != '\r') ++n;
        auto tok = rest_.substr(0, n);
        rest_.remove_prefix(n);
        if (tok.empty()) fail("unexpected end of line");
        return tok;
    }

    bool at_end() {
        while (!rest_.empty() && (rest_.front() == ' ' || rest_.front() == '\t' || rest_.front() == '\r')) {
            rest_.remove_prefix(1);
        }
        return rest_.empty();
    }

    template <typename T>
    T number() {
        const auto tok = next();
        T value{};
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (ec != std::errc() || ptr != tok.data() + tok.size()) {
            fail("malformed number '" + std::string(tok) + "'");
        }
        return value;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw Error(Errc::ParseError, "line " + std::to_string(line_no_) + ": " + msg);
    }

private:
    std::string_view rest_;
    size_t line_no_;
};

}  // namespace

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.8e", v);
    return buf;
}

void write_plt(std::ostream& os, const PillarTensor& t) {
    os << "PLT v1 " << t.height() << ' ' << t.width() << ' ' << t.channels() << ' ' << t.size()
       << '\n';
    std::string line;
    for (size_t i = 0; i < t.size(); ++i) {
        line.clear();
        line += std::to_string(t.coord(i).row);
        line += ' ';
        line += std::to_string(t.coord(i).col);
        for (float v : t.feature(i)) {
            line += ' ';
            line += format_real(v);
        }
        line += '\n';
        os << line;
    }
}

PillarTensor read_plt(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw Error(Errc::ParseError, "missing PLT header");
    TokenReader header(line, 1);
    if (header.next() != "PLT" || header.next() != "v1") header.fail("expected 'PLT v1' header");
    const auto height = header.number<int32_t>();
    const auto width = header.number<int32_t>();
    const auto channels = header.number<int32_t>();
    const auto n = header.number<int64_t>();
    if (!header.at_end()) header.fail("trailing tokens in header");
    if (height < 0 || width < 0 || channels < 0 || n < 0) header.fail("negative header field");

    std::vector<Coord> coords;
    std::vector<float> features;
    coords.reserve(static_cast<size_t>(n));
    features.reserve(static_cast<size_t>(n) * channels);
    for (int64_t i = 0; i < n; ++i) {
        if (!std::getline(is, line)) {
            throw Error(Errc::ParseError, "expected " + std::to_string(n) + " entries, got " +
                                              std::to_string(i));
        }
        TokenReader tr(line, static_cast<size_t>(i) + 2);
        Coord c{tr.number<int32_t>(), tr.number<int32_t>()};
        for (int32_t k = 0; k < channels; ++k) features.push_back(tr.number<float>());
        if (!tr.at_end()) tr.fail("more than " + std::to_string(channels) + " feature values");
        coords.push_back(c);
    }
    // from_sorted rejects unsorted and duplicate coordinates
    return PillarTensor::from_sorted(height, width, channels, std::move(coords), std::move(features));
}

void save_plt(const std::filesystem::path& path, const PillarTensor& t) {
    std::ostringstream os;
    write_plt(os, t);
    write_file(path, os.str());
}

PillarTensor load_plt(const std::filesystem::path& path) {
    std::istringstream is(read_file(path));
    return read_plt(is);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::IoError, "short write to " + path.string());
}

}  // namespace spe
