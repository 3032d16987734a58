#include "aqc/pager.hpp"

#include "aqc/error.hpp"

#include <bit>
#include <cstring>
#include <iomanip>
#include <sstream>

namespace aqc {

using nlohmann::json;

void validate(const PageManifest& m) {
    if (m.page_size == 0) {
        throw ArgumentError("manifest page_size must be positive");
    }
    const std::uint64_t expect_pages =
        (m.total_scalars + m.page_size - 1) / m.page_size;
    if (m.page_count != expect_pages) {
        throw StructuralError("manifest page_count does not equal ceil(T/D)");
    }
    if (m.pad_count >= m.page_size ||
        m.page_count * m.page_size != m.total_scalars + m.pad_count) {
        throw StructuralError("manifest pad_count inconsistent with T and D");
    }
    std::uint64_t offset = 0;
    for (const TensorSlot& slot : m.table) {
        if (slot.offset != offset) {
            throw StructuralError("manifest offsets not contiguous at " + slot.name);
        }
        offset += slot.count;
    }
    if (offset != m.total_scalars) {
        throw StructuralError("manifest slot counts do not sum to total_scalars");
    }
}

namespace {

Paged flatten_stream(std::vector<float> stream, std::vector<TensorSlot> table,
                     std::uint32_t page_size, std::string digest) {
    const std::uint64_t total = stream.size();
    const std::uint64_t pages = (total + page_size - 1) / page_size;

    Paged out;
    out.manifest.page_size = page_size;
    out.manifest.total_scalars = total;
    out.manifest.page_count = pages;
    out.manifest.pad_count = static_cast<std::uint32_t>(pages * page_size - total);
    out.manifest.table = std::move(table);
    out.manifest.mask_digest = std::move(digest);

    out.pages = MatF::Zero(static_cast<Eigen::Index>(pages), page_size);
    std::memcpy(out.pages.data(), stream.data(), total * sizeof(float));
    return out;
}

}  // namespace

Paged flatten(const TensorArchive& archive, std::uint32_t page_size) {
    if (page_size == 0) {
        throw ArgumentError("page_size must be positive");
    }
    validate(archive);
    if (archive.entries.empty()) {
        throw ArgumentError("cannot flatten an empty archive");
    }

    std::vector<float> stream;
    stream.reserve(total_scalars(archive));
    std::vector<TensorSlot> table;
    for (const TensorEntry& e : archive.entries) {
        table.push_back({e.name, e.shape, stream.size(),
                         static_cast<std::uint64_t>(e.numel())});
        stream.insert(stream.end(), e.data.begin(), e.data.end());
    }
    return flatten_stream(std::move(stream), std::move(table), page_size, "");
}

TensorArchive unflatten(const MatF& pages, const PageManifest& manifest) {
    validate(manifest);
    if (!manifest.mask_digest.empty()) {
        throw StructuralError("masked manifest cannot be unflattened without its mask");
    }
    if (static_cast<std::uint64_t>(pages.rows()) != manifest.page_count ||
        static_cast<std::uint64_t>(pages.cols()) != manifest.page_size) {
        throw StructuralError("page matrix dimensions do not match manifest");
    }

    TensorArchive archive;
    const float* stream = pages.data();
    for (const TensorSlot& slot : manifest.table) {
        TensorEntry e;
        e.name = slot.name;
        e.shape = slot.shape;
        if (static_cast<std::uint64_t>(e.numel()) != slot.count) {
            throw StructuralError("slot count does not match shape for " + slot.name);
        }
        e.data.assign(stream + slot.offset, stream + slot.offset + slot.count);
        archive.entries.push_back(std::move(e));
    }
    return archive;
}

Paged flatten_masked(const TensorArchive& archive, const TensorArchive& mask,
                     std::uint32_t page_size) {
    if (page_size == 0) {
        throw ArgumentError("page_size must be positive");
    }
    validate(archive);
    validate(mask);
    if (mask.entries.size() != archive.entries.size()) {
        throw ArgumentError("mask entry count does not match archive");
    }

    std::vector<float> stream;
    std::vector<TensorSlot> table;
    for (std::size_t i = 0; i < archive.entries.size(); ++i) {
        const TensorEntry& e = archive.entries[i];
        const TensorEntry& m = mask.entries[i];
        if (m.name != e.name || m.shape != e.shape) {
            throw ArgumentError("mask entry " + m.name + " does not match archive entry " +
                                e.name);
        }
        const std::uint64_t begin = stream.size();
        for (std::size_t j = 0; j < e.data.size(); ++j) {
            if (m.data[j] == 1.0f) {
                stream.push_back(e.data[j]);
            } else if (m.data[j] != 0.0f) {
                throw ArgumentError("mask value is not exactly 0.0 or 1.0 in " + m.name);
            }
        }
        table.push_back({e.name, e.shape, begin, stream.size() - begin});
    }
    if (stream.empty()) {
        throw ArgumentError("mask selects no parameters");
    }
    return flatten_stream(std::move(stream), std::move(table), page_size,
                          mask_digest(mask));
}

std::vector<TensorArchive> partition(const TensorArchive& archive, std::uint32_t parts) {
    if (parts == 0) {
        throw ArgumentError("parts must be positive");
    }
    validate(archive);
    const std::uint64_t total = total_scalars(archive);
    if (parts > total) {
        throw ArgumentError("more parts than scalar parameters");
    }

    std::vector<float> stream;
    stream.reserve(total);
    for (const TensorEntry& e : archive.entries) {
        stream.insert(stream.end(), e.data.begin(), e.data.end());
    }

    const std::uint64_t base = total / parts;
    const std::uint64_t extra = total % parts;
    std::vector<TensorArchive> out;
    std::uint64_t offset = 0;
    for (std::uint32_t i = 0; i < parts; ++i) {
        const std::uint64_t size = base + (i < extra ? 1 : 0);
        TensorEntry e;
        e.name = "part_" + std::to_string(i);
        e.shape = {static_cast<std::int64_t>(size)};
        e.data.assign(stream.begin() + offset, stream.begin() + offset + size);
        offset += size;
        TensorArchive part;
        part.entries.push_back(std::move(e));
        out.push_back(std::move(part));
    }
    return out;
}

std::string mask_digest(const TensorArchive& mask) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](const void* p, std::size_t n) {
        const auto* bytes = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ull;
        }
    };
    for (const TensorEntry& e : mask.entries) {
        mix(e.name.data(), e.name.size());
        for (float v : e.data) {
            const std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
            mix(&bits, 4);
        }
    }
    std::ostringstream os;
    os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

json manifest_to_json(const PageManifest& m) {
    json table = json::array();
    for (const TensorSlot& slot : m.table) {
        table.push_back({
            {"name", slot.name},
            {"shape", slot.shape},
            {"offset", slot.offset},
            {"count", slot.count},
        });
    }
    return json{
        {"page_size", m.page_size},
        {"total_scalars", m.total_scalars},
        {"page_count", m.page_count},
        {"pad_count", m.pad_count},
        {"mask_digest", m.mask_digest},
        {"table", std::move(table)},
    };
}

PageManifest manifest_from_json(const json& j) {
    PageManifest m;
    try {
        m.page_size = j.at("page_size").get<std::uint32_t>();
        m.total_scalars = j.at("total_scalars").get<std::uint64_t>();
        m.page_count = j.at("page_count").get<std::uint64_t>();
        m.pad_count = j.at("pad_count").get<std::uint32_t>();
        m.mask_digest = j.at("mask_digest").get<std::string>();
        for (const json& js : j.at("table")) {
            TensorSlot slot;
            slot.name = js.at("name").get<std::string>();
            slot.shape = js.at("shape").get<std::vector<std::int64_t>>();
            slot.offset = js.at("offset").get<std::uint64_t>();
            slot.count = js.at("count").get<std::uint64_t>();
            m.table.push_back(std::move(slot));
        }
    } catch (const json::exception&) {
        throw ParseError(ParseError::Kind::BadHeader, "malformed page manifest");
    }
    validate(m);
    return m;
}

}  // namespace aqc
