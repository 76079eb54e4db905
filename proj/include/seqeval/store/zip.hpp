#pragma once

// Minimal zip archive reader and writer (stored and deflate entries, no
// zip64, no encryption) on top of zlib.

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "seqeval/errors.hpp"

namespace seqeval::store {

class ZipError : public Error {
 public:
  using Error::Error;
};

struct ZipEntry {
  std::string name;
  std::uint16_t method = 0;  ///< 0 = stored, 8 = deflate
  std::uint32_t crc32 = 0;
  std::uint64_t compressed_size = 0;
  std::uint64_t size = 0;
  std::uint64_t local_header_offset = 0;
  std::uint32_t external_attributes = 0;
  std::uint16_t creator_system = 0;

  bool is_directory() const { return !name.empty() && name.back() == '/'; }

  /// True for entries flagged as Unix symbolic links.
  bool is_symlink() const { return creator_system == 3 && ((external_attributes >> 16) & 0170000) == 0120000; }
};

namespace detail {

inline std::uint16_t le16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
inline std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put16(std::string& out, std::uint16_t v) {
  out += static_cast<char>(v & 0xff);
  out += static_cast<char>(v >> 8);
}
inline void put32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out += static_cast<char>((v >> (8 * k)) & 0xff);
}

inline std::uint32_t crc(std::string_view data) {
  uLong c = crc32(0L, Z_NULL, 0);
  std::size_t off = 0;
  while (off < data.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(data.size() - off, 1u << 30));
    c = crc32(c, reinterpret_cast<const Bytef*>(data.data() + off), chunk);
    off += chunk;
  }
  return static_cast<std::uint32_t>(c);
}

inline std::string inflate_raw(std::string_view in, std::uint64_t expected_size) {
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw ZipError("inflateInit2 failed");
  std::string out(expected_size, '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  const auto produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected_size) throw ZipError("corrupt deflate stream");
  return out;
}

inline std::string deflate_raw(std::string_view in) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw ZipError("deflateInit2 failed");
  }
  std::string out(deflateBound(&zs, static_cast<uLong>(in.size())), '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  out.resize(zs.total_out);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw ZipError("deflate failed");
  return out;
}

}  // namespace detail

/// Read access to a zip archive held in memory or on disk. File-backed
/// archives read member data on demand.
class ZipReader {
 public:
  static ZipReader from_memory(std::string blob) {
    ZipReader z;
    z.blob_ = std::make_shared<const std::string>(std::move(blob));
    z.size_ = z.blob_->size();
    z.parse();
    return z;
  }

  static ZipReader from_file(const std::filesystem::path& path) {
    ZipReader z;
    z.path_ = path;
    std::error_code ec;
    z.size_ = std::filesystem::file_size(path, ec);
    if (ec) throw ZipError("cannot open archive " + path.string());
    z.parse();
    return z;
  }

  const std::vector<ZipEntry>& entries() const { return entries_; }

  const ZipEntry* find(std::string_view name) const {
    for (const auto& e : entries_) {
      if (e.name == name) return &e;
    }
    return nullptr;
  }

  std::string read(const ZipEntry& e) const {
    const std::string header = bytes(e.local_header_offset, 30);
    const auto* h = reinterpret_cast<const unsigned char*>(header.data());
    if (detail::le32(h) != 0x04034b50) throw ZipError("bad local header for " + e.name);
    const std::uint64_t data_offset = e.local_header_offset + 30 + detail::le16(h + 26) + detail::le16(h + 28);
    const std::string raw = bytes(data_offset, e.compressed_size);
    std::string out;
    if (e.method == 0) {
      if (e.compressed_size != e.size) throw ZipError("size mismatch in stored entry " + e.name);
      out = raw;
    } else if (e.method == 8) {
      out = detail::inflate_raw(raw, e.size);
    } else {
      throw ZipError("unsupported compression method " + std::to_string(e.method) + " for " + e.name);
    }
    if (detail::crc(out) != e.crc32) throw ZipError("CRC mismatch in " + e.name);
    return out;
  }

 private:
  std::string bytes(std::uint64_t offset, std::uint64_t len) const {
    if (offset > size_ || len > size_ - offset) throw ZipError("truncated archive");
    if (blob_) return blob_->substr(offset, len);
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw ZipError("cannot open archive " + path_.string());
    in.seekg(static_cast<std::streamoff>(offset));
    std::string out(len, '\0');
    in.read(out.data(), static_cast<std::streamsize>(len));
    if (static_cast<std::uint64_t>(in.gcount()) != len) throw ZipError("truncated archive");
    return out;
  }

  void parse() {
    if (size_ < 22) throw ZipError("not a zip archive");
    const std::uint64_t tail_len = std::min<std::uint64_t>(size_, 22 + 65535);
    const std::string tail = bytes(size_ - tail_len, tail_len);
    const auto* t = reinterpret_cast<const unsigned char*>(tail.data());
    std::optional<std::size_t> eocd;
    for (std::size_t i = tail.size() - 22 + 1; i-- > 0;) {
      if (detail::le32(t + i) == 0x06054b50) {
        eocd = i;
        break;
      }
    }
    if (!eocd) throw ZipError("end of central directory not found");
    const auto* e = t + *eocd;
    const std::uint16_t count = detail::le16(e + 10);
    const std::uint32_t cd_size = detail::le32(e + 12);
    const std::uint32_t cd_offset = detail::le32(e + 16);
    if (count == 0xffff || cd_offset == 0xffffffff) throw ZipError("zip64 archives are not supported");
    const std::string cd = bytes(cd_offset, cd_size);
    const auto* p = reinterpret_cast<const unsigned char*>(cd.data());
    std::size_t pos = 0;
    for (std::uint16_t k = 0; k < count; ++k) {
      if (pos + 46 > cd.size() || detail::le32(p + pos) != 0x02014b50) throw ZipError("corrupt central directory");
      ZipEntry entry;
      entry.creator_system = static_cast<std::uint16_t>(detail::le16(p + pos + 4) >> 8);
      const std::uint16_t flags = detail::le16(p + pos + 8);
      if (flags & 1) throw ZipError("encrypted archives are not supported");
      entry.method = detail::le16(p + pos + 10);
      entry.crc32 = detail::le32(p + pos + 16);
      entry.compressed_size = detail::le32(p + pos + 20);
      entry.size = detail::le32(p + pos + 24);
      const std::uint16_t name_len = detail::le16(p + pos + 28);
      const std::uint16_t extra_len = detail::le16(p + pos + 30);
      const std::uint16_t comment_len = detail::le16(p + pos + 32);
      entry.external_attributes = detail::le32(p + pos + 38);
      entry.local_header_offset = detail::le32(p + pos + 42);
      if (pos + 46 + name_len > cd.size()) throw ZipError("corrupt central directory");
      entry.name.assign(cd.data() + pos + 46, name_len);
      pos += 46 + name_len + extra_len + comment_len;
      entries_.push_back(std::move(entry));
    }
  }

  std::shared_ptr<const std::string> blob_;
  std::filesystem::path path_;
  std::uint64_t size_ = 0;
  std::vector<ZipEntry> entries_;
};

/// Builds a zip archive in memory.
class ZipWriter {
 public:
  void add(const std::string& name, std::string_view data, bool compress = true) {
    Record r;
    r.name = name;
    r.crc = detail::crc(data);
    r.size = static_cast<std::uint32_t>(data.size());
    std::string payload = compress ? detail::deflate_raw(data) : std::string(data);
    r.method = compress ? 8 : 0;
    r.compressed_size = static_cast<std::uint32_t>(payload.size());
    r.offset = static_cast<std::uint32_t>(body_.size());
    detail::put32(body_, 0x04034b50);
    detail::put16(body_, 20);
    detail::put16(body_, 0x0800);  // UTF-8 names
    detail::put16(body_, r.method);
    detail::put16(body_, 0);
    detail::put16(body_, 0x21);
    detail::put32(body_, r.crc);
    detail::put32(body_, r.compressed_size);
    detail::put32(body_, r.size);
    detail::put16(body_, static_cast<std::uint16_t>(name.size()));
    detail::put16(body_, 0);
    body_ += name;
    body_ += payload;
    records_.push_back(std::move(r));
  }

  void add_directory(const std::string& name) { add(name.back() == '/' ? name : name + "/", "", false); }

  /// Adds a Unix symbolic link entry pointing at `target`.
  void add_symlink(const std::string& name, const std::string& target) {
    add(name, target, false);
    records_.back().external_attributes = (0120777u << 16);
    records_.back().creator_system = 3;
  }

  std::string finish() const {
    std::string out = body_;
    const auto cd_offset = static_cast<std::uint32_t>(out.size());
    for (const auto& r : records_) {
      detail::put32(out, 0x02014b50);
      detail::put16(out, static_cast<std::uint16_t>((r.creator_system << 8) | 20));
      detail::put16(out, 20);
      detail::put16(out, 0x0800);
      detail::put16(out, r.method);
      detail::put16(out, 0);
      detail::put16(out, 0x21);
      detail::put32(out, r.crc);
      detail::put32(out, r.compressed_size);
      detail::put32(out, r.size);
      detail::put16(out, static_cast<std::uint16_t>(r.name.size()));
      detail::put16(out, 0);
      detail::put16(out, 0);
      detail::put16(out, 0);
      detail::put16(out, 0);
      detail::put32(out, r.external_attributes);
      detail::put32(out, r.offset);
      out += r.name;
    }
    const auto cd_size = static_cast<std::uint32_t>(out.size() - cd_offset);
    detail::put32(out, 0x06054b50);
    detail::put16(out, 0);
    detail::put16(out, 0);
    detail::put16(out, static_cast<std::uint16_t>(records_.size()));
    detail::put16(out, static_cast<std::uint16_t>(records_.size()));
    detail::put32(out, cd_size);
    detail::put32(out, cd_offset);
    detail::put16(out, 0);
    return out;
  }

 private:
  struct Record {
    std::string name;
    std::uint16_t method = 0;
    std::uint32_t crc = 0;
    std::uint32_t compressed_size = 0;
    std::uint32_t size = 0;
    std::uint32_t offset = 0;
    std::uint32_t external_attributes = 0;
    std::uint16_t creator_system = 0;
  };

  std::string body_;
  std::vector<Record> records_;
};

}  // namespace seqeval::store
