#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace camr {

// Malformed input data (corpus files, dictionaries, checkpoints).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad configuration (missing paths, invalid hyper-parameters).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Corpus text that cannot be parsed; carries a 1-based position.
class ParseError : public DataError {
public:
    ParseError(const std::string& msg, int line, int column = 0)
        : DataError(format(msg, line, column)), line_(line), column_(column) {}

    int line() const { return line_; }
    int column() const { return column_; }

private:
    static std::string format(const std::string& msg, int line, int column) {
        std::ostringstream os;
        os << "line " << line;
        if (column > 0) os << ", column " << column;
        os << ": " << msg;
        return os.str();
    }
    int line_ = 0;
    int column_ = 0;
};

// Non-finite losses and other unrecoverable training states.
class TrainError : public std::runtime_error {
public:
    explicit TrainError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace str {

inline std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && s[i] == ' ') ++i;
        size_t j = i;
        while (j < s.size() && s[j] != ' ') ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    for (size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

template <typename It>
std::string join(It begin, It end, std::string_view sep) {
    std::ostringstream os;
    for (It it = begin; it != end; ++it) {
        if (it != begin) os << sep;
        os << *it;
    }
    return os.str();
}

template <typename C>
std::string join(const C& c, std::string_view sep) {
    return join(c.begin(), c.end(), sep);
}

inline std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

inline bool starts_with(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

}  // namespace str

namespace utf8 {

// Decodes one UTF-8 scalar value at byte offset i; advances i past it.
// Returns nullopt on malformed input (i is left unchanged).
inline std::optional<char32_t> decode_at(std::string_view s, size_t& i) {
    if (i >= s.size()) return std::nullopt;
    const auto b0 = static_cast<unsigned char>(s[i]);
    int len;
    char32_t cp;
    if (b0 < 0x80) {
        len = 1;
        cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        return std::nullopt;
    }
    if (i + len > s.size()) return std::nullopt;
    for (int k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) return std::nullopt;
        cp = (cp << 6) | (b & 0x3F);
    }
    // reject overlong encodings and surrogate range
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000))
        return std::nullopt;
    if (cp >= 0xD800 && cp <= 0xDFFF) return std::nullopt;
    if (cp > 0x10FFFF) return std::nullopt;
    i += len;
    return cp;
}

inline bool valid(std::string_view s) {
    size_t i = 0;
    while (i < s.size()) {
        if (!decode_at(s, i)) return false;
    }
    return true;
}

inline std::vector<char32_t> decode(std::string_view s) {
    std::vector<char32_t> out;
    size_t i = 0;
    while (i < s.size()) {
        auto cp = decode_at(s, i);
        if (!cp) throw DataError("invalid UTF-8 byte sequence");
        out.push_back(*cp);
    }
    return out;
}

inline std::string encode(char32_t cp) {
    std::string out;
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
    return out;
}

inline std::string encode(const std::vector<char32_t>& cps) {
    std::string out;
    for (char32_t cp : cps) out += encode(cp);
    return out;
}

// First UTF-8 scalar of a string as its own string; empty input yields "".
inline std::string first_char(std::string_view s) {
    size_t i = 0;
    auto cp = decode_at(s, i);
    if (!cp) return std::string(s.substr(0, s.empty() ? 0 : 1));
    return std::string(s.substr(0, i));
}

inline size_t length(std::string_view s) { return decode(s).size(); }

}  // namespace utf8
}  // namespace camr
