// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// safetensors container:
//   [u64 little-endian header length N][N bytes UTF-8 JSON header][data buffer]
// The header maps each tensor name to {"dtype", "shape", "data_offsets"}, with
// offsets relative to the start of the data buffer, plus an optional
// "__metadata__" object of string values.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace para::safetensors {

struct TensorEntry {
    std::string name;
    std::string dtype;  ///< e.g. "F32", "BF16"
    std::vector<std::uint64_t> shape;
    std::uint64_t begin = 0;
    std::uint64_t end = 0;
};

class File {
public:
    std::map<std::string, std::string> metadata;
    std::vector<TensorEntry> tensors;  ///< ordered by data offset
    std::vector<std::uint8_t> buffer;

    const TensorEntry* find(const std::string& name) const;
    std::span<const std::uint8_t> bytes(const TensorEntry& t) const;
};

/// Byte width of a safetensors dtype name; 0 when unknown.
std::size_t dtype_width(const std::string& dtype) noexcept;

/// Validates and splits a complete file image. Rejects, with FormatError:
/// truncated images, oversized or non-JSON headers, unknown dtypes, shapes
/// whose byte size disagrees with the offsets, offsets outside the buffer,
/// overlapping tensors, and buffers not fully covered by tensors.
File parse(std::span<const std::uint8_t> image);

/// Reads and parses a file. IoError when the file cannot be read.
File read(const std::filesystem::path& path);

struct TensorData {
    std::string name;
    std::string dtype;
    std::vector<std::uint64_t> shape;
    std::vector<std::uint8_t> bytes;
};

/// Serializes tensors in name order; the header is space-padded to an
/// 8-byte boundary. Output is a pure function of the inputs.
std::vector<std::uint8_t> serialize(std::vector<TensorData> tensors,
                                    const std::map<std::string, std::string>& metadata = {});

void write(const std::filesystem::path& path, std::vector<TensorData> tensors,
           const std::map<std::string, std::string>& metadata = {});

} // namespace para::safetensors
