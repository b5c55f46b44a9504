// Copyright 2026 The ode2vae-cpp Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace o2v::io {

// Little-endian helpers over byte strings.
void put_u32(std::string& out, std::uint32_t v);
void put_u64(std::string& out, std::uint64_t v);
void put_f32(std::string& out, float v);
std::uint32_t get_u32(std::string_view in, std::size_t off);
std::uint64_t get_u64(std::string_view in, std::size_t off);
float get_f32(std::string_view in, std::size_t off);

std::uint32_t crc32(std::string_view bytes);
// zlib stream at maximum compression.
std::string deflate(std::string_view bytes);

// Throw FormatError(kIo) on failure.
std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, std::string_view bytes);
// Writes to a sibling temporary and renames over `p`.
void write_file_atomic(const std::filesystem::path& p, std::string_view bytes);

}  // namespace o2v::io
