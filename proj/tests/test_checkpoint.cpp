#include <doctest.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "cor/checkpoint.hpp"

using namespace cor;
namespace fs = std::filesystem;

namespace {
fs::path temp_file(const char* name) {
    auto dir = fs::temp_directory_path() / "cor_tests";
    fs::create_directories(dir);
    return dir / name;
}
}  // namespace

TEST_CASE("checkpoint round-trips values through float32") {
    ParamStore store;
    auto a = store.add("m.weight", Tensor::from({2, 2}, {0.25, -1.5, 3.0, 0.125}, true));
    auto b = store.add("m.bias", Tensor::from({2}, {1.0, -2.0}, false));
    auto path = temp_file("roundtrip.ckpt");
    save_checkpoint(store, path);

    ParamStore loaded;
    loaded.add("m.weight", Tensor::make({2, 2}, 0.0, true));
    loaded.add("m.bias", Tensor::make({2}, 0.0));
    load_checkpoint(loaded, path);
    for (int i = 0; i < 4; ++i) {
        CHECK(loaded.at("m.weight")->data[i] == doctest::Approx(a->data[i]));
    }
    CHECK(loaded.at("m.bias")->data[1] == doctest::Approx(b->data[1]));
}

TEST_CASE("checkpoint payload is little-endian float32 after the header") {
    ParamStore store;
    store.add("w", Tensor::from({1}, {1.0}));
    auto path = temp_file("payload.ckpt");
    save_checkpoint(store, path);

    std::ifstream is(path, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(is)), {});
    // tag(8) + version(4) + count(4) + name_len(4) + "w"(1) + rank(4) + dim(4) + f32(4)
    REQUIRE(bytes.size() == 33);
    CHECK(std::memcmp(bytes.data(), "CORCKPT\0", 8) == 0);
    std::uint32_t bits;
    std::memcpy(&bits, bytes.data() + 29, 4);
    CHECK(bits == 0x3f800000u);  // 1.0f
}

TEST_CASE("checkpoint mismatches raise CheckpointError") {
    ParamStore store;
    store.add("w", Tensor::from({2}, {1.0, 2.0}));
    auto path = temp_file("mismatch.ckpt");
    save_checkpoint(store, path);

    SUBCASE("wrong shape") {
        ParamStore other;
        other.add("w", Tensor::make({3}, 0.0));
        CHECK_THROWS_AS(load_checkpoint(other, path), CheckpointError);
    }
    SUBCASE("wrong name") {
        ParamStore other;
        other.add("v", Tensor::make({2}, 0.0));
        CHECK_THROWS_AS(load_checkpoint(other, path), CheckpointError);
    }
    SUBCASE("missing file") {
        ParamStore other;
        other.add("w", Tensor::make({2}, 0.0));
        CHECK_THROWS_AS(load_checkpoint(other, temp_file("nope.ckpt")), CheckpointError);
    }
    SUBCASE("corrupt tag") {
        auto bad = temp_file("bad.ckpt");
        std::ofstream os(bad, std::ios::binary);
        os << "NOTATAG!";
        os.close();
        ParamStore other;
        other.add("w", Tensor::make({2}, 0.0));
        CHECK_THROWS_AS(load_checkpoint(other, bad), CheckpointError);
    }
}

TEST_CASE("param store rejects duplicates and filters trainable") {
    ParamStore store;
    store.add("a", Tensor::make({1}, 0.0, true));
    store.add("b", Tensor::make({1}, 0.0, false));
    CHECK_THROWS_AS(store.add("a", Tensor::make({1}, 0.0)), std::logic_error);
    CHECK(store.trainable().size() == 1);
}
