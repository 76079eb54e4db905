#pragma once

// File identity snapshots used for cache invalidation.

#include <openssl/evp.h>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <string_view>

#include "seqeval/errors.hpp"

namespace seqeval::store {

enum class FingerprintMode { Fast, Strict };

inline std::string_view to_string(FingerprintMode m) { return m == FingerprintMode::Fast ? "fast" : "strict"; }

inline FingerprintMode parse_fingerprint_mode(std::string_view s) {
  if (s == "fast") return FingerprintMode::Fast;
  if (s == "strict") return FingerprintMode::Strict;
  throw ConfigError("unknown fingerprint mode '" + std::string(s) + "' (expected fast or strict)");
}

/// Incremental SHA-256.
class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 initialisation failed");
  }

  Sha256& update(std::string_view data) {
    EVP_DigestUpdate(ctx_.get(), data.data(), data.size());
    return *this;
  }

  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md, &len);
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 0xf];
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

inline std::string sha256_hex(std::string_view data) { return Sha256().update(data).hex(); }

inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  Sha256 h;
  std::string buf(1 << 16, '\0');
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())));
  }
  return h.hex();
}

struct Fingerprint {
  std::uint64_t size = 0;
  std::int64_t mtime_ns = 0;
  std::string digest;  ///< hex SHA-256; empty in fast mode
  FingerprintMode mode = FingerprintMode::Fast;

  /// Strict snapshots compare size and content digest; otherwise size and
  /// modification time.
  bool operator==(const Fingerprint& o) const {
    if (mode == FingerprintMode::Strict && o.mode == FingerprintMode::Strict) {
      return size == o.size && digest == o.digest;
    }
    return size == o.size && mtime_ns == o.mtime_ns;
  }

  /// The fields that take part in equality under this snapshot's mode.
  std::string identity() const {
    return mode == FingerprintMode::Strict ? std::to_string(size) + ":" + digest
                                           : std::to_string(size) + "@" + std::to_string(mtime_ns);
  }
};

inline Fingerprint fingerprint(const std::filesystem::path& path, FingerprintMode mode) {
  std::error_code ec;
  Fingerprint f;
  f.mode = mode;
  f.size = std::filesystem::file_size(path, ec);
  if (ec) throw Error("cannot stat " + path.string() + ": " + ec.message());
  const auto t = std::filesystem::last_write_time(path, ec);
  if (ec) throw Error("cannot stat " + path.string() + ": " + ec.message());
  f.mtime_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(t.time_since_epoch()).count();
  if (mode == FingerprintMode::Strict) f.digest = sha256_file(path);
  return f;
}

}  // namespace seqeval::store
