#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nlslab/rate_fit.hpp"

namespace nlslab {

/// Fixed shortest-roundtrip formatting so reruns are byte identical.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    void write_csv(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot open " + path);
        for (std::size_t i = 0; i < header.size(); ++i)
            out << header[i] << (i + 1 < header.size() ? "," : "\n");
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i)
                out << format_double(row[i]) << (i + 1 < row.size() ? "," : "\n");
        }
    }
};

struct Verdict {
    std::string check;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct ExperimentReport {
    std::string name;
    std::map<std::string, std::string> params;
    std::map<std::string, Table> tables;
    std::vector<std::pair<std::string, RateFit>> fits;
    std::vector<Verdict> verdicts;

    bool pass() const {
        for (const auto& v : verdicts)
            if (!v.pass) return false;
        return true;
    }

    void add_verdict(const std::string& check, bool ok, double value, double threshold,
                     const std::string& detail = "") {
        verdicts.push_back({check, ok, value, threshold, detail});
    }
};

namespace detail {

/// SHA-1 (RFC 3174), for git-style content hashing of config and inputs.
class Sha1 {
  public:
    void update(const void* data, std::size_t len) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        while (len--) {
            buf_[buflen_++] = *p++;
            total_++;
            if (buflen_ == 64) {
                process();
                buflen_ = 0;
            }
        }
    }

    std::string hex_digest() {
        std::uint64_t bits = total_ * 8;
        std::uint8_t pad = 0x80;
        update(&pad, 1);
        std::uint8_t zero = 0;
        while (buflen_ != 56) update(&zero, 1);
        for (int i = 7; i >= 0; --i) {
            std::uint8_t b = static_cast<std::uint8_t>(bits >> (8 * i));
            update(&b, 1);
        }
        std::ostringstream out;
        for (std::uint32_t h : h_) {
            char tmp[9];
            std::snprintf(tmp, sizeof tmp, "%08x", h);
            out << tmp;
        }
        return out.str();
    }

  private:
    static std::uint32_t rol(std::uint32_t x, int s) { return (x << s) | (x >> (32 - s)); }

    void process() {
        std::uint32_t w[80];
        for (int i = 0; i < 16; ++i)
            w[i] = (buf_[4 * i] << 24) | (buf_[4 * i + 1] << 16) | (buf_[4 * i + 2] << 8) |
                   buf_[4 * i + 3];
        for (int i = 16; i < 80; ++i) w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
        std::uint32_t a = h_[0], b = h_[1], c = h_[2], d = h_[3], e = h_[4];
        for (int i = 0; i < 80; ++i) {
            std::uint32_t f, k;
            if (i < 20) {
                f = (b & c) | (~b & d);
                k = 0x5A827999;
            } else if (i < 40) {
                f = b ^ c ^ d;
                k = 0x6ED9EBA1;
            } else if (i < 60) {
                f = (b & c) | (b & d) | (c & d);
                k = 0x8F1BBCDC;
            } else {
                f = b ^ c ^ d;
                k = 0xCA62C1D6;
            }
            std::uint32_t t = rol(a, 5) + f + e + k + w[i];
            e = d;
            d = c;
            c = rol(b, 30);
            b = a;
            a = t;
        }
        h_[0] += a;
        h_[1] += b;
        h_[2] += c;
        h_[3] += d;
        h_[4] += e;
    }

    std::array<std::uint32_t, 5> h_ = {0x67452301, 0xEFCDAB89, 0x98BADCFE, 0x10325476,
                                       0xC3D2E1F0};
    std::uint8_t buf_[64];
    std::size_t buflen_ = 0;
    std::uint64_t total_ = 0;
};

} // namespace detail

inline std::string sha1_hex(const std::string& bytes) {
    detail::Sha1 h;
    h.update(bytes.data(), bytes.size());
    return h.hex_digest();
}

/// Git blob hash of a byte string: sha1("blob <len>\0" + content).
inline std::string git_blob_hash(const std::string& content) {
    detail::Sha1 h;
    std::string prefix = "blob " + std::to_string(content.size());
    h.update(prefix.data(), prefix.size() + 1); // include the NUL
    h.update(content.data(), content.size());
    return h.hex_digest();
}

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace nlslab
