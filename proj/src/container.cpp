#include "aqc/container.hpp"

#include "aqc/error.hpp"
#include "aqc/wire.hpp"

#include <json.hpp>

#include <bit>
#include <fstream>
#include <sstream>

namespace aqc {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'A', 'Q', 'P', 'K'};
constexpr std::uint8_t kFormatVersion = 1;
constexpr const char* kStreamOrder = "page-major,msb-first";

}  // namespace

std::vector<std::uint8_t> write_container(const Codebooks<float>& books,
                                          const CodeMatrix& codes,
                                          const PageManifest& manifest,
                                          const AqHyper& hyper) {
    hyper.check();
    validate(manifest);
    if (static_cast<std::size_t>(hyper.num_books) != books.size() ||
        codes.books() != hyper.num_books || codes.alphabet != hyper.book_size ||
        static_cast<std::uint64_t>(codes.pages()) != manifest.page_count ||
        manifest.page_size != static_cast<std::uint32_t>(hyper.page_size)) {
        throw StructuralError("container inputs are mutually inconsistent");
    }
    for (const MatF& basis : books) {
        if (basis.rows() != hyper.book_size || basis.cols() != hyper.page_size) {
            throw StructuralError("codebook shape does not match hyper");
        }
    }

    auto [sorted_books, sorted_codes] = sort_codebooks(codes, books);
    const HuffmanSpec spec = build_huffman(sorted_codes);
    const Bitstream stream = pack(sorted_codes, spec);

    json header{
        {"schema", 1},
        {"D", hyper.page_size},
        {"M", hyper.num_books},
        {"K", hyper.book_size},
        {"H", hyper.hidden},
        {"tau", hyper.tau},
        {"seed", hyper.seed},
        {"P", manifest.page_count},
        {"pad_count", manifest.pad_count},
        {"T", manifest.total_scalars},
        {"stream_order", kStreamOrder},
        {"manifest", manifest_to_json(manifest)},
    };
    const std::string text = header.dump();

    std::ostringstream out(std::ios::binary);
    wire::put_bytes(out, kMagic, 4);
    wire::put_u8(out, kFormatVersion);
    wire::put_u32(out, static_cast<std::uint32_t>(text.size()));
    wire::put_bytes(out, text.data(), text.size());
    for (const MatF& basis : sorted_books) {
        for (Eigen::Index k = 0; k < basis.rows(); ++k) {
            for (Eigen::Index d = 0; d < basis.cols(); ++d) {
                wire::put_f32(out, basis(k, d));
            }
        }
    }
    wire::put_bytes(out, spec.code_lengths.data(), spec.code_lengths.size());
    wire::put_u64(out, stream.bit_count);
    if (!stream.bytes.empty()) {
        wire::put_bytes(out, stream.bytes.data(), stream.bytes.size());
    }

    const std::string s = out.str();
    return {s.begin(), s.end()};
}

ContainerData read_container(const std::vector<std::uint8_t>& bytes) {
    std::istringstream in(std::string(bytes.begin(), bytes.end()), std::ios::binary);

    char magic[4];
    wire::read_exact(in, magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw ParseError(ParseError::Kind::BadMagic, "not an AQPK container");
    }
    const std::uint8_t version = wire::get_u8(in, "version");
    if (version != kFormatVersion) {
        throw ParseError(ParseError::Kind::BadVersion,
                         "unsupported AQPK version " + std::to_string(version));
    }
    const std::uint32_t header_len = wire::get_u32(in, "header length");
    std::string text(header_len, '\0');
    wire::read_exact(in, text.data(), header_len, "header");

    json header = json::parse(text, nullptr, false);
    if (header.is_discarded()) {
        throw ParseError(ParseError::Kind::BadHeader, "malformed AQPK header");
    }

    ContainerData data;
    std::uint64_t pages = 0;
    try {
        data.hyper.page_size = header.at("D").get<std::int32_t>();
        data.hyper.num_books = header.at("M").get<std::int32_t>();
        data.hyper.book_size = header.at("K").get<std::int32_t>();
        data.hyper.hidden = header.at("H").get<std::int32_t>();
        data.hyper.tau = header.at("tau").get<double>();
        data.hyper.seed = header.at("seed").get<std::uint64_t>();
        pages = header.at("P").get<std::uint64_t>();
        data.manifest = manifest_from_json(header.at("manifest"));
        if (header.at("stream_order").get<std::string>() != kStreamOrder) {
            throw ParseError(ParseError::Kind::BadHeader, "unknown stream order tag");
        }
        if (header.at("pad_count").get<std::uint32_t>() != data.manifest.pad_count ||
            header.at("T").get<std::uint64_t>() != data.manifest.total_scalars) {
            throw ParseError(ParseError::Kind::BadHeader,
                             "header fields disagree with embedded manifest");
        }
    } catch (const json::exception&) {
        throw ParseError(ParseError::Kind::BadHeader, "malformed AQPK header field");
    }
    data.hyper.check();
    if (pages != data.manifest.page_count ||
        data.manifest.page_size != static_cast<std::uint32_t>(data.hyper.page_size)) {
        throw ParseError(ParseError::Kind::BadHeader,
                         "header dimensions disagree with embedded manifest");
    }

    for (std::int32_t m = 0; m < data.hyper.num_books; ++m) {
        MatF basis(data.hyper.book_size, data.hyper.page_size);
        for (Eigen::Index k = 0; k < basis.rows(); ++k) {
            for (Eigen::Index d = 0; d < basis.cols(); ++d) {
                basis(k, d) = wire::get_f32(in, "codebooks");
            }
        }
        data.books.push_back(std::move(basis));
    }

    std::vector<std::uint8_t> lengths(static_cast<std::size_t>(data.hyper.book_size));
    wire::read_exact(in, lengths.data(), lengths.size(), "code lengths");
    const HuffmanSpec spec = HuffmanSpec::from_lengths(std::move(lengths));

    const std::uint64_t bit_count = wire::get_u64(in, "bit count");
    std::vector<std::uint8_t> stream((bit_count + 7) / 8);
    if (!stream.empty()) {
        wire::read_exact(in, stream.data(), stream.size(), "bitstream");
    }
    wire::expect_eof(in, "bitstream");

    data.codes = unpack(stream, bit_count, spec, pages,
                        static_cast<std::uint32_t>(data.hyper.num_books));
    return data;
}

void save_container(const std::vector<std::uint8_t>& bytes, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open for writing: " + path);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) {
        throw IoError("write failed: " + path);
    }
}

std::vector<std::uint8_t> load_container_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open: " + path);
    }
    std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>()};
    return bytes;
}

ContainerData load_container(const std::string& path) {
    return read_container(load_container_bytes(path));
}

std::uint64_t bitwise_bits(std::uint64_t pages, std::uint32_t books, std::uint32_t alphabet) {
    if (alphabet < 1) {
        throw ArgumentError("alphabet must be >= 1");
    }
    const std::uint32_t per_code =
        alphabet <= 2 ? 1 : static_cast<std::uint32_t>(std::bit_width(alphabet - 1));
    return pages * books * per_code;
}

double compression_ratio(std::uint64_t total_scalars, std::uint32_t page_size,
                         std::uint32_t books, std::uint32_t alphabet,
                         std::uint64_t pages, std::uint64_t code_bits,
                         bool include_table, std::uint64_t table_bits) {
    if (total_scalars == 0 || page_size == 0 || books == 0 || alphabet == 0 || pages == 0) {
        throw ArgumentError("compression_ratio arguments must be positive");
    }
    const double original = static_cast<double>(total_scalars) * 32.0;
    double compressed = static_cast<double>(code_bits) +
                        static_cast<double>(books) * alphabet * page_size * 32.0;
    if (include_table) {
        compressed += static_cast<double>(table_bits);
    }
    return original / compressed;
}

}  // namespace aqc
