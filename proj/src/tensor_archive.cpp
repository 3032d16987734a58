#include "aqc/tensor_archive.hpp"

#include "aqc/error.hpp"
#include "aqc/wire.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <unordered_set>

namespace aqc {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'A', 'Q', 'T', '0'};
constexpr std::uint8_t kFormatVersion = 1;

}  // namespace

std::int64_t TensorEntry::numel() const {
    std::int64_t n = 1;
    for (std::int64_t d : shape) {
        n *= d;
    }
    return n;
}

const TensorEntry* TensorArchive::find(const std::string& name) const {
    for (const TensorEntry& e : entries) {
        if (e.name == name) {
            return &e;
        }
    }
    return nullptr;
}

void validate(const TensorArchive& archive) {
    std::unordered_set<std::string> seen;
    for (const TensorEntry& e : archive.entries) {
        if (e.name.empty()) {
            throw ArgumentError("archive entry with empty name");
        }
        if (!seen.insert(e.name).second) {
            throw ArgumentError("duplicate archive entry name: " + e.name);
        }
        for (std::int64_t d : e.shape) {
            if (d <= 0) {
                throw ArgumentError("non-positive dimension in shape of " + e.name);
            }
        }
        if (static_cast<std::int64_t>(e.data.size()) != e.numel()) {
            throw ArgumentError("data length does not match shape product for " + e.name);
        }
    }
}

std::uint64_t total_scalars(const TensorArchive& archive) {
    std::uint64_t t = 0;
    for (const TensorEntry& e : archive.entries) {
        t += static_cast<std::uint64_t>(e.numel());
    }
    return t;
}

std::uint64_t write_archive(const TensorArchive& archive, std::ostream& out) {
    validate(archive);

    json header;
    header["entries"] = json::array();
    std::uint64_t offset = 0;
    for (const TensorEntry& e : archive.entries) {
        const std::uint64_t bytes = static_cast<std::uint64_t>(e.numel()) * 4;
        header["entries"].push_back({
            {"name", e.name},
            {"shape", e.shape},
            {"dtype", "f32"},
            {"offset", offset},
            {"bytes", bytes},
        });
        offset += bytes;
    }
    header["payload_bytes"] = offset;

    const std::string text = header.dump();

    wire::put_bytes(out, kMagic, 4);
    wire::put_u8(out, kFormatVersion);
    wire::put_u32(out, static_cast<std::uint32_t>(text.size()));
    wire::put_bytes(out, text.data(), text.size());
    for (const TensorEntry& e : archive.entries) {
        for (float v : e.data) {
            wire::put_f32(out, v);
        }
    }
    return 4 + 1 + 4 + text.size() + offset;
}

TensorArchive read_archive(std::istream& in) {
    char magic[4];
    wire::read_exact(in, magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw ParseError(ParseError::Kind::BadMagic, "not an AQT0 archive");
    }
    const std::uint8_t version = wire::get_u8(in, "version");
    if (version != kFormatVersion) {
        throw ParseError(ParseError::Kind::BadVersion,
                         "unsupported AQT0 version " + std::to_string(version));
    }
    const std::uint32_t header_len = wire::get_u32(in, "header length");
    std::string text(header_len, '\0');
    wire::read_exact(in, text.data(), header_len, "header");

    json header = json::parse(text, nullptr, false);
    if (header.is_discarded() || !header.contains("entries") || !header.contains("payload_bytes")) {
        throw ParseError(ParseError::Kind::BadHeader, "malformed AQT0 header");
    }

    TensorArchive archive;
    std::uint64_t expect_offset = 0;
    try {
        for (const json& je : header["entries"]) {
            TensorEntry e;
            e.name = je.at("name").get<std::string>();
            e.shape = je.at("shape").get<std::vector<std::int64_t>>();
            if (je.at("dtype").get<std::string>() != "f32") {
                throw ParseError(ParseError::Kind::BadHeader,
                                 "unsupported dtype for " + e.name + " (only f32 in v1)");
            }
            const auto offset = je.at("offset").get<std::uint64_t>();
            const auto bytes = je.at("bytes").get<std::uint64_t>();
            if (offset != expect_offset || bytes != static_cast<std::uint64_t>(e.numel()) * 4) {
                throw ParseError(ParseError::Kind::BadHeader,
                                 "inconsistent offsets in header for " + e.name);
            }
            expect_offset += bytes;
            archive.entries.push_back(std::move(e));
        }
    } catch (const json::exception&) {
        throw ParseError(ParseError::Kind::BadHeader, "malformed AQT0 header entry");
    }
    if (header["payload_bytes"].get<std::uint64_t>() != expect_offset) {
        throw ParseError(ParseError::Kind::BadHeader, "header payload size mismatch");
    }

    for (TensorEntry& e : archive.entries) {
        e.data.resize(static_cast<std::size_t>(e.numel()));
        for (float& v : e.data) {
            v = wire::get_f32(in, "payload");
        }
    }
    wire::expect_eof(in, "payload");

    validate(archive);
    return archive;
}

void save_archive(const TensorArchive& archive, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open for writing: " + path);
    }
    write_archive(archive, out);
    out.close();
    if (!out) {
        throw IoError("write failed: " + path);
    }
}

TensorArchive load_archive(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open: " + path);
    }
    return read_archive(in);
}

}  // namespace aqc
