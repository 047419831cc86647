// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0

#include "pcflow/io.hpp"

#include <array>
#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pcflow/error.hpp"

namespace pcflow::io {

namespace {

constexpr char kMagic[4] = {'P', 'P', 'W', 'C'};
constexpr std::uint32_t kVersion = 1;

void require_rows3(const ad::Tensor& rows, const char* what) {
    if (rows.ndim() != 2 || rows.shape[1] != 3) {
        throw IoError(std::string(what) + ": expected an N x 3 tensor, got " +
                      ad::shape_str(rows.shape));
    }
}

void put_u32(std::ostream& os, std::uint32_t v) {
    std::array<unsigned char, 4> b;
    for (int i = 0; i < 4; ++i) b[static_cast<std::size_t>(i)] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b.data()), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    std::array<unsigned char, 8> b;
    for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b.data()), 8);
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

std::uint32_t get_u32(std::istream& is) {
    std::array<unsigned char, 4> b;
    is.read(reinterpret_cast<char*>(b.data()), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[static_cast<std::size_t>(i)]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& is) {
    std::array<unsigned char, 8> b;
    is.read(reinterpret_cast<char*>(b.data()), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[static_cast<std::size_t>(i)]) << (8 * i);
    return v;
}

double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

} // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_rows3_text(const std::string& path, const ad::Tensor& rows) {
    require_rows3(rows, "write");
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    for (std::int64_t i = 0; i < rows.shape[0]; ++i) {
        out << format_double(rows.at(i, 0)) << ' ' << format_double(rows.at(i, 1)) << ' '
            << format_double(rows.at(i, 2)) << '\n';
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

ad::Tensor read_rows3_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<double> data;
    std::string line;
    std::int64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        double x, y, z;
        if (!(ls >> x >> y >> z)) {
            throw IoError("'" + path + "' line " + std::to_string(lineno) +
                          ": expected three decimals");
        }
        data.push_back(x);
        data.push_back(y);
        data.push_back(z);
    }
    if (data.empty()) throw IoError("'" + path + "' contains no records");
    const auto n = static_cast<std::int64_t>(data.size() / 3);
    return ad::Tensor({n, 3}, std::move(data));
}

void write_rows3_binary(const std::string& path, const ad::Tensor& rows) {
    require_rows3(rows, "write");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u64(out, static_cast<std::uint64_t>(rows.shape[0]));
    for (double v : rows.data) put_f64(out, v);
    if (!out) throw IoError("write failed for '" + path + "'");
}

ad::Tensor read_rows3_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw IoError("'" + path + "' is not a binary point file (bad magic)");
    }
    const std::uint32_t version = get_u32(in);
    if (version != kVersion) {
        throw IoError("'" + path + "': unsupported format version " + std::to_string(version));
    }
    const std::uint64_t n = get_u64(in);
    ad::Tensor t({static_cast<std::int64_t>(n), 3});
    for (auto& v : t.data) v = get_f64(in);
    if (!in) throw IoError("'" + path + "' truncated");
    return t;
}

ad::Tensor read_rows3(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    char magic[4] = {0, 0, 0, 0};
    in.read(magic, 4);
    in.close();
    if (std::memcmp(magic, kMagic, 4) == 0) return read_rows3_binary(path);
    return read_rows3_text(path);
}

void append_loss_log(const std::string& path, const std::vector<LossLogRow>& rows) {
    const bool fresh = !std::filesystem::exists(path);
    std::ofstream out(path, std::ios::app);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    if (fresh) out << "step,loss,epe3d\n";
    for (const auto& r : rows) {
        out << r.step << ',' << format_double(r.loss) << ',' << format_double(r.epe3d) << '\n';
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<LossLogRow> read_loss_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<LossLogRow> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (first) {
            first = false;
            continue; // header
        }
        if (line.empty()) continue;
        LossLogRow r;
        if (std::sscanf(line.c_str(), "%" SCNd64 ",%lg,%lg", &r.step, &r.loss, &r.epe3d) != 3) {
            throw IoError("'" + path + "': malformed log line '" + line + "'");
        }
        rows.push_back(r);
    }
    return rows;
}

} // namespace pcflow::io
