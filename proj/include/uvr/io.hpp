// Copyright 2026 The uvr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef UVR_IO_HPP_
#define UVR_IO_HPP_

#include <bit>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace uvr {

// On-disk payloads are little-endian; the implementation assumes a
// little-endian host and refuses to build elsewhere.
static_assert(std::endian::native == std::endian::little,
              "little-endian host required");

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);

// Write-temp-then-rename so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path,
                       const void* data, size_t size);

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& text);

std::vector<float> read_f32(const std::filesystem::path& path);
void write_f32(const std::filesystem::path& path,
               const std::vector<float>& values);

nlohmann::json load_json(const std::filesystem::path& path);
void save_json(const std::filesystem::path& path, const nlohmann::json& j,
               int indent = 2);

// FNV-1a 64-bit over raw bytes; provenance hashes in manifests.
uint64_t fnv1a64(const void* data, size_t size);
std::string file_hash_hex(const std::filesystem::path& path);

}  // namespace uvr

#endif  // UVR_IO_HPP_
