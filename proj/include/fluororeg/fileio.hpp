#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fluororeg {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);

/// Test seam for atomic writes: called after `bytes_written` bytes of the
/// temporary file are on disk and before the rename. Throwing from it
/// simulates a crash mid-write.
using WriteFaultHook = std::function<void(std::size_t bytes_written)>;

/// Writes to `<path>.tmp.<pid>`, flushes, then renames over `path`. Readers
/// see either the old or the new content, never a partial file. The
/// temporary is removed if the write fails.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes,
                       const WriteFaultHook& fault_hook = {});
void write_file_atomic(const std::filesystem::path& path, std::string_view text, const WriteFaultHook& fault_hook = {});

}  // namespace fluororeg
