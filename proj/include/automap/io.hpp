#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "automap/types.hpp"

namespace automap {

// ---- little-endian scalar IO ------------------------------------------------

inline void put_u32_le(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

inline void put_u64_le(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

inline void put_f64_le(std::string& out, double d) {
    uint64_t bits;
    std::memcpy(&bits, &d, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    put_u64_le(out, bits);
}

inline void put_f64_le(std::string& out, const std::vector<double>& v) {
    out.reserve(out.size() + v.size() * 8);
    for (double d : v) put_f64_le(out, d);
}

struct ByteReader {
    const std::string& buf;
    size_t pos = 0;

    void need(size_t k) const {
        if (pos + k > buf.size()) throw IoError("truncated file");
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= uint64_t(uint8_t(buf[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() {
        uint64_t bits = u64();
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        double d;
        std::memcpy(&d, &bits, 8);
        return d;
    }
    void f64(std::vector<double>& out, size_t count) {
        out.resize(count);
        for (size_t i = 0; i < count; ++i) out[i] = f64();
    }
    std::string bytes(size_t k) {
        need(k);
        std::string s = buf.substr(pos, k);
        pos += k;
        return s;
    }
};

// ---- whole-file helpers -----------------------------------------------------

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path);
    std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (!f.good() && !f.eof()) throw IoError("read failed: " + path);
    return data;
}

// Write-temp-then-rename so partially written artifacts are never observed.
inline void write_file_atomic(const std::string& path, const std::string& data) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
    }
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open for writing: " + tmp.string());
        f.write(data.data(), std::streamsize(data.size()));
        if (!f.good()) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw IoError("rename failed for " + path + ": " + ec.message());
}

// ---- base64 (RFC 4648, with padding) ----------------------------------------

inline std::string base64_encode(const std::vector<uint8_t>& data) {
    static const char* tbl = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    size_t i = 0;
    for (; i + 3 <= data.size(); i += 3) {
        uint32_t v = uint32_t(data[i]) << 16 | uint32_t(data[i + 1]) << 8 | data[i + 2];
        out.push_back(tbl[(v >> 18) & 63]);
        out.push_back(tbl[(v >> 12) & 63]);
        out.push_back(tbl[(v >> 6) & 63]);
        out.push_back(tbl[v & 63]);
    }
    size_t rem = data.size() - i;
    if (rem == 1) {
        uint32_t v = uint32_t(data[i]) << 16;
        out.push_back(tbl[(v >> 18) & 63]);
        out.push_back(tbl[(v >> 12) & 63]);
        out += "==";
    } else if (rem == 2) {
        uint32_t v = uint32_t(data[i]) << 16 | uint32_t(data[i + 1]) << 8;
        out.push_back(tbl[(v >> 18) & 63]);
        out.push_back(tbl[(v >> 12) & 63]);
        out.push_back(tbl[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

inline std::vector<uint8_t> base64_decode(const std::string& text) {
    auto val = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        if (c == '=') return -1;
        throw IoError("invalid base64 character");
    };
    std::vector<uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    uint32_t acc = 0;
    int bits = 0;
    for (char c : text) {
        int v = val(c);
        if (v < 0) break;  // padding
        acc = (acc << 6) | uint32_t(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(uint8_t((acc >> bits) & 0xff));
        }
    }
    return out;
}

// ---- PGM (binary P5, 8-bit) ---------------------------------------------------

struct PgmImage {
    int width = 0, height = 0;
    std::vector<uint8_t> gray;  // row-major
};

inline PgmImage read_pgm(const std::string& path) {
    std::string data = read_file(path);
    size_t pos = 0;
    auto skip_space = [&] {
        while (pos < data.size()) {
            char c = data[pos];
            if (c == '#') {
                while (pos < data.size() && data[pos] != '\n') ++pos;
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() -> int {
        skip_space();
        size_t start = pos;
        while (pos < data.size() && data[pos] >= '0' && data[pos] <= '9') ++pos;
        if (pos == start) throw IoError("malformed PGM header: " + path);
        return std::stoi(data.substr(start, pos - start));
    };
    if (data.size() < 2 || data[0] != 'P' || data[1] != '5')
        throw IoError("not a binary PGM (P5) file: " + path);
    pos = 2;
    PgmImage img;
    img.width = read_int();
    img.height = read_int();
    int maxval = read_int();
    if (maxval <= 0 || maxval > 255) throw IoError("unsupported PGM maxval in " + path);
    ++pos;  // single whitespace after maxval
    size_t count = size_t(img.width) * img.height;
    if (pos + count > data.size()) throw IoError("PGM payload truncated: " + path);
    img.gray.assign(data.begin() + pos, data.begin() + pos + count);
    return img;
}

inline void write_pgm(const std::string& path, int width, int height,
                      const std::vector<uint8_t>& gray) {
    std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(gray.data()), gray.size());
    write_file_atomic(path, out);
}

// Min-max scale a real image to 8 bits; a constant image maps to 0.
inline void write_pgm_scaled(const std::string& path, const Image& img) {
    double lo = img.pix.empty() ? 0.0 : img.pix[0];
    double hi = lo;
    for (double v : img.pix) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::vector<uint8_t> gray(img.pix.size(), 0);
    if (hi > lo) {
        double s = 255.0 / (hi - lo);
        for (size_t i = 0; i < img.pix.size(); ++i)
            gray[i] = uint8_t(std::lround((img.pix[i] - lo) * s));
    }
    write_pgm(path, img.n, img.n, gray);
}

// Raw float64 sidecar: bare little-endian doubles, row-major.
inline void write_f64_sidecar(const std::string& path, const std::vector<double>& v) {
    std::string out;
    put_f64_le(out, v);
    write_file_atomic(path, out);
}

inline std::vector<double> read_f64_sidecar(const std::string& path) {
    std::string data = read_file(path);
    if (data.size() % 8 != 0) throw IoError("sidecar size not a multiple of 8: " + path);
    ByteReader r{data};
    std::vector<double> v;
    r.f64(v, data.size() / 8);
    return v;
}

// Deterministic float formatting for CSV output; %.17g round-trips doubles.
inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace automap
