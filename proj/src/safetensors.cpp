// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "para/safetensors.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "json.hpp"
#include "para/errors.hpp"

namespace para::safetensors {

namespace {

using json = nlohmann::json;

constexpr std::uint64_t kMaxHeaderBytes = 100ull << 20;

std::uint64_t read_u64_le(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

void append_u64_le(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b, const std::string& name) {
    if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
        throw FormatError("tensor '" + name + "' size overflows");
    }
    return a * b;
}

TensorEntry parse_entry(const std::string& name, const json& info) {
    if (!info.is_object()) throw FormatError("tensor '" + name + "' header entry is not an object");
    TensorEntry t;
    t.name = name;

    const auto dtype = info.find("dtype");
    if (dtype == info.end() || !dtype->is_string()) throw FormatError("tensor '" + name + "' has no dtype string");
    t.dtype = dtype->get<std::string>();
    const std::size_t width = dtype_width(t.dtype);
    if (width == 0) throw FormatError("tensor '" + name + "' has unknown dtype '" + t.dtype + "'");

    const auto shape = info.find("shape");
    if (shape == info.end() || !shape->is_array()) throw FormatError("tensor '" + name + "' has no shape array");
    std::uint64_t numel = 1;
    for (const auto& d : *shape) {
        if (!d.is_number_unsigned()) throw FormatError("tensor '" + name + "' shape has a non-integer extent");
        t.shape.push_back(d.get<std::uint64_t>());
        numel = checked_mul(numel, t.shape.back(), name);
    }

    const auto offsets = info.find("data_offsets");
    if (offsets == info.end() || !offsets->is_array() || offsets->size() != 2 || !(*offsets)[0].is_number_unsigned() ||
        !(*offsets)[1].is_number_unsigned()) {
        throw FormatError("tensor '" + name + "' data_offsets must be two unsigned integers");
    }
    t.begin = (*offsets)[0].get<std::uint64_t>();
    t.end = (*offsets)[1].get<std::uint64_t>();
    if (t.end < t.begin) throw FormatError("tensor '" + name + "' data_offsets are reversed");
    if (t.end - t.begin != checked_mul(numel, width, name)) {
        throw FormatError("tensor '" + name + "' byte range does not match dtype and shape");
    }
    return t;
}

} // namespace

const TensorEntry* File::find(const std::string& name) const {
    for (const auto& t : tensors) {
        if (t.name == name) return &t;
    }
    return nullptr;
}

std::span<const std::uint8_t> File::bytes(const TensorEntry& t) const {
    return std::span<const std::uint8_t>(buffer).subspan(t.begin, t.end - t.begin);
}

std::size_t dtype_width(const std::string& dtype) noexcept {
    static const std::map<std::string, std::size_t> widths = {
        {"F64", 8}, {"F32", 4}, {"F16", 2},  {"BF16", 2}, {"I64", 8},     {"I32", 4},     {"I16", 2},
        {"I8", 1},  {"U64", 8}, {"U32", 4},  {"U16", 2},  {"U8", 1},      {"BOOL", 1},    {"F8_E4M3", 1},
        {"F8_E5M2", 1},
    };
    const auto it = widths.find(dtype);
    return it == widths.end() ? 0 : it->second;
}

File parse(std::span<const std::uint8_t> image) {
    if (image.size() < 8) throw FormatError("file shorter than the 8-byte header length");
    const std::uint64_t header_len = read_u64_le(image.data());
    if (header_len > kMaxHeaderBytes) throw FormatError("header length exceeds limit");
    if (header_len > image.size() - 8) throw FormatError("header length runs past end of file");
    if (header_len < 2) throw FormatError("header too short to be a JSON object");

    const auto* hbegin = reinterpret_cast<const char*>(image.data() + 8);
    json header;
    try {
        header = json::parse(hbegin, hbegin + header_len);
    } catch (const json::exception& e) {
        throw FormatError(std::string("header is not valid JSON: ") + e.what());
    }
    if (!header.is_object()) throw FormatError("header is not a JSON object");

    File file;
    for (const auto& [name, info] : header.items()) {
        if (name == "__metadata__") {
            if (!info.is_object()) throw FormatError("__metadata__ is not an object");
            for (const auto& [k, v] : info.items()) {
                if (!v.is_string()) throw FormatError("__metadata__ value for '" + k + "' is not a string");
                file.metadata[k] = v.get<std::string>();
            }
            continue;
        }
        file.tensors.push_back(parse_entry(name, info));
    }

    const std::uint64_t buffer_len = image.size() - 8 - header_len;
    std::sort(file.tensors.begin(), file.tensors.end(), [](const TensorEntry& a, const TensorEntry& b) {
        return a.begin != b.begin ? a.begin < b.begin : a.end < b.end;
    });
    std::uint64_t cursor = 0;
    for (const auto& t : file.tensors) {
        if (t.end > buffer_len) throw FormatError("tensor '" + t.name + "' data_offsets exceed the data buffer");
        if (t.begin < cursor) throw FormatError("tensor '" + t.name + "' overlaps another tensor");
        if (t.begin > cursor) throw FormatError("data buffer has a gap before tensor '" + t.name + "'");
        cursor = t.end;
    }
    if (cursor != buffer_len) throw FormatError("data buffer has trailing bytes not owned by any tensor");

    const auto* data = image.data() + 8 + header_len;
    file.buffer.assign(data, data + buffer_len);
    return file;
}

File read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> image((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("failed reading " + path.string());
    return parse(image);
}

std::vector<std::uint8_t> serialize(std::vector<TensorData> tensors,
                                    const std::map<std::string, std::string>& metadata) {
    std::sort(tensors.begin(), tensors.end(), [](const TensorData& a, const TensorData& b) { return a.name < b.name; });

    json header = json::object();
    if (!metadata.empty()) header["__metadata__"] = metadata;
    std::uint64_t offset = 0;
    for (const auto& t : tensors) {
        if (t.name == "__metadata__") throw FormatError("tensor name '__metadata__' is reserved");
        const std::size_t width = dtype_width(t.dtype);
        if (width == 0) throw FormatError("unknown dtype '" + t.dtype + "' for tensor '" + t.name + "'");
        std::uint64_t numel = 1;
        for (auto d : t.shape) numel = checked_mul(numel, d, t.name);
        if (numel * width != t.bytes.size()) {
            throw FormatError("tensor '" + t.name + "' byte length does not match dtype and shape");
        }
        header[t.name] = {{"dtype", t.dtype}, {"shape", t.shape}, {"data_offsets", {offset, offset + t.bytes.size()}}};
        offset += t.bytes.size();
    }

    std::string text = header.dump();
    text.append((8 - text.size() % 8) % 8, ' ');

    std::vector<std::uint8_t> out;
    out.reserve(8 + text.size() + offset);
    append_u64_le(out, text.size());
    out.insert(out.end(), text.begin(), text.end());
    for (const auto& t : tensors) out.insert(out.end(), t.bytes.begin(), t.bytes.end());
    return out;
}

void write(const std::filesystem::path& path, std::vector<TensorData> tensors,
           const std::map<std::string, std::string>& metadata) {
    const auto image = serialize(std::move(tensors), metadata);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(image.data()), static_cast<std::streamsize>(image.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

} // namespace para::safetensors
