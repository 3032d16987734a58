#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace aqc {

struct TensorEntry {
    std::string name;
    std::vector<std::int64_t> shape;
    std::vector<float> data;

    std::int64_t numel() const;
};

// Ordered named float tensors; the architecture-coupled checkpoint form.
//
// On-disk "AQT0" layout, bit-exact:
//   magic "AQT0" | version u8 = 1 | header_len u32 LE | header JSON (UTF-8)
//   | payload: raw little-endian f32, entries back to back
// The header lists (name, shape, dtype, byte offset, byte length) per entry
// in order. Entry order is significant and survives round trips.
struct TensorArchive {
    std::vector<TensorEntry> entries;

    const TensorEntry* find(const std::string& name) const;
};

// Throws ArgumentError if names are empty/duplicated or a data length does
// not match its shape product.
void validate(const TensorArchive& archive);

std::uint64_t total_scalars(const TensorArchive& archive);

// Returns the number of bytes written.
std::uint64_t write_archive(const TensorArchive& archive, std::ostream& out);

// Rejects trailing garbage after the declared payload.
TensorArchive read_archive(std::istream& in);

void save_archive(const TensorArchive& archive, const std::string& path);
TensorArchive load_archive(const std::string& path);

}  // namespace aqc
