#pragma once

#include <filesystem>
#include <fstream>

#include <zlib.h>

#include "qer/common.hpp"

namespace qer {

/// Streaming writer that appends a CRC32 of everything written.
class ChecksumWriter {
  public:
    explicit ChecksumWriter(const std::filesystem::path& file)
        : out_(file, std::ios::binary) {
        if (!out_) {
            throw IoError("cannot open " + file.string() + " for writing");
        }
    }
    void write(const void* data, std::size_t size) {
        out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        crc_ = crc32(crc_, static_cast<const Bytef*>(data), static_cast<uInt>(size));
    }
    template <typename T> void put(T v) { write(&v, sizeof(T)); }
    void finish() {
        const auto crc = static_cast<std::uint32_t>(crc_);
        out_.write(reinterpret_cast<const char*>(&crc), sizeof(crc));
        out_.flush();
        if (!out_) {
            throw IoError("write failed while flushing");
        }
    }

  private:
    std::ofstream out_;
    uLong crc_ = crc32(0L, Z_NULL, 0);
};

/// Matching reader; verify() checks the trailing CRC32 and rejects any
/// trailing bytes.
class ChecksumReader {
  public:
    explicit ChecksumReader(const std::filesystem::path& file)
        : in_(file, std::ios::binary) {
        if (!in_) {
            throw IoError("cannot open " + file.string());
        }
    }
    void read(void* data, std::size_t size) {
        in_.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
        if (in_.gcount() != static_cast<std::streamsize>(size)) {
            throw IoError("truncated file");
        }
        crc_ = crc32(crc_, static_cast<const Bytef*>(data), static_cast<uInt>(size));
    }
    template <typename T> T get() {
        T v;
        read(&v, sizeof(T));
        return v;
    }
    void verify() {
        std::uint32_t stored;
        in_.read(reinterpret_cast<char*>(&stored), sizeof(stored));
        if (in_.gcount() != sizeof(stored)) {
            throw IoError("truncated file: missing checksum");
        }
        if (stored != static_cast<std::uint32_t>(crc_)) {
            throw IoError("checksum mismatch: file corrupted");
        }
        char extra;
        if (in_.read(&extra, 1).gcount() != 0) {
            throw IoError("trailing bytes after checksum");
        }
    }

  private:
    std::ifstream in_;
    uLong crc_ = crc32(0L, Z_NULL, 0);
};

} // namespace qer
