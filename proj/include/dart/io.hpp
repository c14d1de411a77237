// Binary token (DTOK) and attention (DATT) files, plus CSV import.
//
// DTOK, little-endian:
//   "DTOK" | u32 version=1 | u32 n | u32 d | u32 flags
//   [flags bit1] u32 rows | u32 cols
//   [flags bit0] n bytes of modality (0 visual, 1 text)
//   n*d f32, row-major
// DATT, little-endian:
//   "DATT" | u32 version=1 | u32 n | n*n f32, row-major
// CSV: first line "d=<int>", then one comma-separated row per token.
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "dart/core.hpp"

namespace dart::io {

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::uint32_t kFlagModality = 1u << 0;
inline constexpr std::uint32_t kFlagGrid = 1u << 1;

std::vector<std::uint8_t> encode_tokens(const TokenMatrix& tokens);
/// Parses and validates; the byte length must match the header exactly.
TokenMatrix decode_tokens(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_attention(const AttentionMap& attn);
AttentionMap decode_attention(std::span<const std::uint8_t> bytes);

TokenMatrix parse_csv(std::string_view text);

/// Dispatches on extension: ".csv" is parsed as CSV, anything else as DTOK.
TokenMatrix read_tokens(const std::filesystem::path& path);
void write_tokens(const std::filesystem::path& path, const TokenMatrix& tokens);

AttentionMap read_attention(const std::filesystem::path& path);
void write_attention(const std::filesystem::path& path, const AttentionMap& attn);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace dart::io
