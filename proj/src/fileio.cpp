#include "fluororeg/fileio.hpp"

#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <iterator>
#include <system_error>

#include "fluororeg/error.hpp"

namespace fluororeg {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string read_file_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes,
                       const WriteFaultHook& fault_hook) {
  const std::filesystem::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  std::FILE* f = std::fopen(tmp.c_str(), "wb");
  if (f == nullptr) fail(ErrorKind::IoError, "cannot create " + tmp.string());
  try {
    // Two halves so a fault hook can observe a partially written file.
    const std::size_t half = bytes.size() / 2;
    if (std::fwrite(bytes.data(), 1, half, f) != half) fail(ErrorKind::IoError, "short write to " + tmp.string());
    std::fflush(f);
    if (fault_hook) fault_hook(half);
    const std::size_t rest = bytes.size() - half;
    if (std::fwrite(bytes.data() + half, 1, rest, f) != rest) fail(ErrorKind::IoError, "short write to " + tmp.string());
    if (std::fflush(f) != 0 || ::fsync(::fileno(f)) != 0) fail(ErrorKind::IoError, "cannot flush " + tmp.string());
    if (fault_hook) fault_hook(bytes.size());
  } catch (...) {
    std::fclose(f);
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw;
  }
  std::fclose(f);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorKind::IoError, "cannot rename into " + path.string());
  }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text, const WriteFaultHook& fault_hook) {
  write_file_atomic(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()),
                    fault_hook);
}

}  // namespace fluororeg
