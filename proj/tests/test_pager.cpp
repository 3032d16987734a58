#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aqc/error.hpp"
#include "aqc/pager.hpp"
#include "helpers.hpp"

using namespace aqc;

namespace {

TensorArchive stream_archive(std::int64_t n) {
    TensorArchive a;
    TensorEntry e;
    e.name = "w";
    e.shape = {n};
    for (std::int64_t i = 0; i < n; ++i) {
        e.data.push_back(static_cast<float>(i + 1));
    }
    a.entries.push_back(std::move(e));
    return a;
}

}  // namespace

TEST_CASE("flatten shapes and padding") {
    const Paged paged = flatten(stream_archive(10), 4);
    CHECK(paged.manifest.page_count == 3);
    CHECK(paged.manifest.pad_count == 2);
    CHECK(paged.manifest.total_scalars == 10);
    CHECK(paged.pages(2, 2) == 0.0f);
    CHECK(paged.pages(2, 3) == 0.0f);
    CHECK(paged.pages(0, 0) == 1.0f);
    CHECK(paged.pages(2, 1) == 10.0f);

    const Paged exact = flatten(stream_archive(12), 4);
    CHECK(exact.manifest.pad_count == 0);
}

TEST_CASE("resnet-scale page arithmetic") {
    // ceil-division oracle at the checkpoint size used by the ratio check
    const std::uint64_t total = 25557032;
    const std::uint64_t page = 32;
    const std::uint64_t pages = (total + page - 1) / page;
    CHECK(pages == 798658);
    CHECK(pages * page - total == 24);

    PageManifest m;
    m.page_size = 32;
    m.total_scalars = total;
    m.page_count = pages;
    m.pad_count = 24;
    m.table = {{"all", {static_cast<std::int64_t>(total)}, 0, total}};
    CHECK_NOTHROW(validate(m));
}

TEST_CASE("flatten/unflatten is the identity") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        const TensorArchive a = testing::random_archive(seed);
        for (std::uint32_t page : {1u, 3u, 8u}) {
            const Paged paged = flatten(a, page);
            CHECK(testing::archives_equal(a, unflatten(paged.pages, paged.manifest)));
        }
    }
}

TEST_CASE("unflatten rejects wrong dimensions") {
    const Paged paged = flatten(stream_archive(10), 4);
    MatF wrong = MatF::Zero(paged.pages.rows() + 1, paged.pages.cols());
    CHECK_THROWS_AS(unflatten(wrong, paged.manifest), StructuralError);
}

TEST_CASE("single tensor exactly one page") {
    const Paged paged = flatten(stream_archive(4), 4);
    CHECK(paged.manifest.page_count == 1);
    CHECK(paged.manifest.pad_count == 0);
    CHECK(testing::archives_equal(stream_archive(4), unflatten(paged.pages, paged.manifest)));
}

TEST_CASE("flatten argument errors") {
    CHECK_THROWS_AS(flatten(stream_archive(4), 0), ArgumentError);
    TensorArchive empty;
    CHECK_THROWS_AS(flatten(empty, 4), ArgumentError);
}

TEST_CASE("masked flatten") {
    const TensorArchive a = testing::random_archive(3);

    TensorArchive ones = a;
    for (auto& e : ones.entries) {
        std::fill(e.data.begin(), e.data.end(), 1.0f);
    }
    const Paged all = flatten_masked(a, ones, 4);
    const Paged plain = flatten(a, 4);
    CHECK(all.pages == plain.pages);
    CHECK(all.manifest.total_scalars == plain.manifest.total_scalars);
    CHECK_FALSE(all.manifest.mask_digest.empty());

    TensorArchive zeros = a;
    for (auto& e : zeros.entries) {
        std::fill(e.data.begin(), e.data.end(), 0.0f);
    }
    CHECK_THROWS_AS(flatten_masked(a, zeros, 4), ArgumentError);

    TensorArchive bad = ones;
    bad.entries[0].data[0] = 0.5f;
    CHECK_THROWS_AS(flatten_masked(a, bad, 4), ArgumentError);
}

TEST_CASE("random masks pack the right count and scatter back") {
    for (std::uint64_t seed = 40; seed < 46; ++seed) {
        const TensorArchive a = testing::random_archive(seed, 5, 6);
        Rng rng(seed * 31 + 1);
        TensorArchive mask = a;
        std::uint64_t ones = 0;
        for (auto& e : mask.entries) {
            for (auto& v : e.data) {
                v = rng.uniform() < 0.2 ? 1.0f : 0.0f;
                ones += v == 1.0f ? 1 : 0;
            }
        }
        if (ones == 0) {
            continue;
        }
        const Paged packed = flatten_masked(a, mask, 3);
        CHECK(packed.manifest.total_scalars == ones);

        // brute-force re-scatter through the retained mask recovers exactly
        // the surviving scalars in order
        std::size_t cursor = 0;
        const float* stream = packed.pages.data();
        for (std::size_t i = 0; i < a.entries.size(); ++i) {
            for (std::size_t j = 0; j < a.entries[i].data.size(); ++j) {
                if (mask.entries[i].data[j] == 1.0f) {
                    CHECK(stream[cursor++] == a.entries[i].data[j]);
                }
            }
        }
        CHECK(cursor == ones);

        CHECK_THROWS_AS(unflatten(packed.pages, packed.manifest), StructuralError);
    }
}

TEST_CASE("partition near-equal split") {
    const auto parts = partition(stream_archive(10), 4);
    REQUIRE(parts.size() == 4);
    CHECK(parts[0].entries[0].data.size() == 3);
    CHECK(parts[1].entries[0].data.size() == 3);
    CHECK(parts[2].entries[0].data.size() == 2);
    CHECK(parts[3].entries[0].data.size() == 2);
    CHECK(parts[0].entries[0].name == "part_0");
    CHECK(parts[3].entries[0].name == "part_3");
}

TEST_CASE("partition concatenation restores the stream") {
    for (std::uint64_t seed = 50; seed < 56; ++seed) {
        const TensorArchive a = testing::random_archive(seed);
        const std::uint64_t total = total_scalars(a);
        for (std::uint32_t n : {1u, 2u, 5u}) {
            if (n > total) {
                continue;
            }
            const auto parts = partition(a, n);
            std::vector<float> joined;
            std::uint64_t max_size = 0, min_size = UINT64_MAX;
            for (const auto& part : parts) {
                joined.insert(joined.end(), part.entries[0].data.begin(),
                              part.entries[0].data.end());
                max_size = std::max<std::uint64_t>(max_size, part.entries[0].data.size());
                min_size = std::min<std::uint64_t>(min_size, part.entries[0].data.size());
            }
            CHECK(max_size - min_size <= 1);

            std::vector<float> original;
            for (const auto& e : a.entries) {
                original.insert(original.end(), e.data.begin(), e.data.end());
            }
            CHECK(joined == original);
        }
    }
}

TEST_CASE("partition argument errors") {
    CHECK_THROWS_AS(partition(stream_archive(4), 0), ArgumentError);
    CHECK_THROWS_AS(partition(stream_archive(4), 5), ArgumentError);
    CHECK_NOTHROW(partition(stream_archive(4), 1));
}

TEST_CASE("manifest json round trip") {
    const TensorArchive a = testing::random_archive(9);
    const Paged paged = flatten(a, 5);
    const PageManifest back = manifest_from_json(manifest_to_json(paged.manifest));
    CHECK(back.page_size == paged.manifest.page_size);
    CHECK(back.total_scalars == paged.manifest.total_scalars);
    CHECK(back.page_count == paged.manifest.page_count);
    CHECK(back.pad_count == paged.manifest.pad_count);
    CHECK(back.table.size() == paged.manifest.table.size());
    for (std::size_t i = 0; i < back.table.size(); ++i) {
        CHECK(back.table[i].name == paged.manifest.table[i].name);
        CHECK(back.table[i].shape == paged.manifest.table[i].shape);
        CHECK(back.table[i].offset == paged.manifest.table[i].offset);
        CHECK(back.table[i].count == paged.manifest.table[i].count);
    }
}
