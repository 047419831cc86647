// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0

#include "pcflow/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "pcflow/error.hpp"

namespace pcflow::io {

namespace {

constexpr char kMagic[8] = {'P', 'C', 'F', 'L', 'O', 'W', 'C', 'P'};
constexpr std::uint32_t kVersion = 1;

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

std::uint32_t get_u32(std::istream& is) {
    std::array<unsigned char, 4> b{};
    is.read(reinterpret_cast<char*>(b.data()), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[static_cast<std::size_t>(i)]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& is) {
    std::array<unsigned char, 8> b{};
    is.read(reinterpret_cast<char*>(b.data()), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[static_cast<std::size_t>(i)]) << (8 * i);
    return v;
}

} // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const ad::Tensor*>>& tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(kMagic, 8);
    put_u32(out, kVersion);
    put_u64(out, tensors.size());
    for (const auto& [name, t] : tensors) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u32(out, static_cast<std::uint32_t>(t->shape.size()));
        for (auto d : t->shape) put_u64(out, static_cast<std::uint64_t>(d));
        for (double v : t->data) put_u64(out, std::bit_cast<std::uint64_t>(v));
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<std::pair<std::string, ad::Tensor>> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) {
        throw IoError("'" + path + "' is not a checkpoint (bad magic)");
    }
    const std::uint32_t version = get_u32(in);
    if (version != kVersion) {
        throw IoError("'" + path + "': unsupported checkpoint version " + std::to_string(version));
    }
    const std::uint64_t count = get_u64(in);
    std::vector<std::pair<std::string, ad::Tensor>> out;
    out.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = get_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const std::uint32_t ndim = get_u32(in);
        ad::Shape shape(ndim);
        for (auto& d : shape) d = static_cast<std::int64_t>(get_u64(in));
        ad::Tensor t(shape);
        for (auto& v : t.data) v = std::bit_cast<double>(get_u64(in));
        if (!in) throw IoError("'" + path + "' truncated at tensor '" + name + "'");
        out.emplace_back(std::move(name), std::move(t));
    }
    return out;
}

void load_network_params(net::NetworkParams& params,
                         const std::vector<std::pair<std::string, ad::Tensor>>& entries) {
    std::map<std::string, const ad::Tensor*> by_name;
    for (const auto& [name, t] : entries) {
        if (name.rfind("opt.", 0) == 0) continue;
        by_name[name] = &t;
    }
    auto slots = net::param_list(params);
    for (auto& [name, slot] : slots) {
        auto it = by_name.find(name);
        if (it == by_name.end()) {
            throw IoError("checkpoint mismatch: missing tensor '" + name + "'");
        }
        if (it->second->shape != slot->shape) {
            throw IoError("checkpoint mismatch: tensor '" + name + "' has shape " +
                          ad::shape_str(it->second->shape) + ", network expects " +
                          ad::shape_str(slot->shape));
        }
        *slot = it->second->detached();
        by_name.erase(it);
    }
    if (!by_name.empty()) {
        throw IoError("checkpoint mismatch: unexpected tensor '" + by_name.begin()->first + "'");
    }
}

} // namespace pcflow::io
