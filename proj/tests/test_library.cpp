#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "qer/library.hpp"

using namespace qer;
namespace fs = std::filesystem;

namespace {

const double kLn2 = std::log(2.0);

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("qer_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<unsigned char> slurp(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    REQUIRE(in);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& file, const std::vector<unsigned char>& bytes) {
    std::ofstream out(file, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

} // namespace

TEST_CASE("bin_label edges and errors") {
    const BinningScheme scheme{MeasureKind::Entropy, kLn2, 4};
    CHECK(bin_label(0.0, scheme) == 1);
    CHECK(bin_label(0.5, scheme) == 3); // 0.5 / 0.17329 = 2.885
    CHECK(bin_label(kLn2, scheme) == 4);
    CHECK(bin_label(kLn2 - 1e-15, scheme) == 4);
    CHECK_THROWS_AS(bin_label(kLn2 + 1e-3, scheme), ValidationError);
    CHECK_THROWS_AS(bin_label(-0.1, scheme), ValidationError);
    CHECK_THROWS_AS(bin_label(0.5, BinningScheme{MeasureKind::Entropy, 0.0, 4}),
                    ValidationError);
    CHECK_THROWS_AS(bin_label(0.5, BinningScheme{MeasureKind::Entropy, 1.0, 1}),
                    ValidationError);
}

TEST_CASE("ground library: flat bins, consistent labels, determinism") {
    const RotationSet rot = sample_cue_rotations(3, 6, 11);
    const BinningScheme scheme{MeasureKind::Entropy, kLn2, 4};
    const Library lib = build_ground_library(ModelKind::TfiPlus, scheme, 40, rot, 5);
    REQUIRE(lib.entries.size() == 40);

    std::map<int, int> histogram;
    for (const auto& entry : lib.entries) {
        CHECK(entry.bin == bin_label(entry.exact_value, scheme));
        CHECK(entry.provenance.state_class == "ground");
        CHECK(entry.provenance.field > 1.0);
        CHECK(entry.image.exact);
        for (Eigen::Index i = 0; i < entry.image.rotations(); ++i) {
            CHECK(std::abs(entry.image.probs.row(i).sum() - 1.0) < 1e-10);
        }
        ++histogram[entry.bin];
    }
    for (int b = 1; b <= 4; ++b) {
        CHECK(histogram[b] == 10); // exact quotas
    }
    audit_labels(lib, 0.05, 3);

    const Library again = build_ground_library(ModelKind::TfiPlus, scheme, 40, rot, 5);
    for (std::size_t i = 0; i < lib.entries.size(); ++i) {
        CHECK((lib.entries[i].image.probs - again.entries[i].image.probs)
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
        CHECK(lib.entries[i].exact_value == again.entries[i].exact_value);
    }
}

TEST_CASE("ground library rejects unreachable bins") {
    const RotationSet rot = sample_cue_rotations(2, 4, 1);
    // at L=4 the reachable entropy tops out near 0.522, so the last fifth of
    // [0, ln 2] cannot be populated
    const BinningScheme scheme{MeasureKind::Entropy, kLn2, 5};
    CHECK_THROWS_AS(build_ground_library(ModelKind::TfiPlus, scheme, 10, rot, 1),
                    ValidationError);
    // and a grossly oversized e_max fails for any chain
    const RotationSet rot6 = sample_cue_rotations(2, 6, 1);
    const BinningScheme wide{MeasureKind::Entropy, 3.0, 4};
    CHECK_THROWS_AS(build_ground_library(ModelKind::TfiPlus, wide, 8, rot6, 1),
                    ValidationError);
    CHECK_THROWS_AS(build_ground_library(
                        ModelKind::TfiPlus,
                        BinningScheme{MeasureKind::LogNegativity, 1.0, 2}, 8, rot6, 1),
                    ValidationError);
    CHECK_THROWS_AS(build_ground_library(ModelKind::NiTfiPlus, scheme, 8, rot6, 1),
                    ValidationError);
}

TEST_CASE("excited library keeps at most n_bins states per field value") {
    const RotationSet rot = sample_cue_rotations(2, 6, 21);
    const BinningScheme scheme{MeasureKind::Entropy, 3.0 * kLn2, 5};
    const std::vector<double> grid{1.01, 1.03, 1.05};
    const Library lib = build_excited_library(ModelKind::TfiPlus, scheme, grid, rot, 9);
    CHECK(lib.entries.size() <= 15);
    CHECK(lib.entries.size() >= 9); // a couple of sparse selection bins may skip
    std::map<double, int> per_field;
    for (const auto& entry : lib.entries) {
        CHECK(entry.bin == bin_label(entry.exact_value, scheme));
        CHECK(entry.provenance.state_class == "excited");
        ++per_field[entry.provenance.field];
    }
    for (const auto& [h, count] : per_field) {
        CHECK(count <= 5);
        CHECK(h > 1.0);
        CHECK(h < 1.07);
    }
    // negativity-labeled variant (used by the dissipative recipe)
    const BinningScheme neg{MeasureKind::LogNegativity, 3.0, 5};
    const Library lib_neg = build_excited_library(ModelKind::NiTfiPlus, neg, grid, rot, 9);
    for (const auto& entry : lib_neg.entries) {
        CHECK(entry.bin == bin_label(entry.exact_value, neg));
    }
    CHECK_THROWS_AS(build_excited_library(ModelKind::Xx, scheme, grid, rot, 9),
                    ValidationError);
}

TEST_CASE("unitary dynamics library: three classes, product states in bin 1") {
    const RotationSet rot = sample_cue_rotations(3, 6, 31);
    const BinningScheme scheme{MeasureKind::Entropy, 3.0 * kLn2, 4};
    const Library lib =
        build_unitary_dynamics_library(scheme, DynamicsCounts{12, 12, 12}, rot, 17);
    CHECK(lib.meta.class_counts.at("ground") == 12);
    CHECK(lib.meta.class_counts.at("product") == 12);
    CHECK(lib.meta.class_counts.at("excited") <= 12);
    long products_in_bin1 = 0, products = 0;
    for (const auto& entry : lib.entries) {
        CHECK(entry.bin == bin_label(entry.exact_value, scheme));
        if (entry.provenance.state_class == "product") {
            ++products;
            products_in_bin1 += (entry.bin == 1) ? 1 : 0;
            CHECK(entry.exact_value < 1e-10);
        }
    }
    CHECK(products == 12);
    CHECK(products_in_bin1 == 12);
}

TEST_CASE("dissipative library: four classes, separable states in bin 1") {
    const RotationSet rot = sample_cue_rotations(2, 4, 41);
    const BinningScheme scheme{MeasureKind::LogNegativity, 2.0, 3};
    const Library lib = build_dissipative_library(
        scheme, DissipativeCounts{6, 6, 6, 9}, rot, 19);
    CHECK(lib.meta.params.at("gamma").get<double>() == 0.1);
    long separable = 0, dissipated = 0;
    for (const auto& entry : lib.entries) {
        CHECK(entry.bin == bin_label(entry.exact_value, scheme));
        if (entry.provenance.state_class == "separable") {
            ++separable;
            CHECK(entry.bin == 1);
            CHECK(entry.exact_value < 1e-9);
        }
        if (entry.provenance.state_class == "dissipated") {
            ++dissipated;
        }
    }
    CHECK(separable == 6);
    CHECK(dissipated >= 6);
    CHECK(dissipated <= 9);
    CHECK_THROWS_AS(build_dissipative_library(BinningScheme{MeasureKind::Entropy, 2.0, 3},
                                              DissipativeCounts{4, 4, 4, 4}, rot, 1),
                    ValidationError);
}

TEST_CASE("rebin recomputes labels under a new bin count") {
    const RotationSet rot = sample_cue_rotations(2, 6, 51);
    const BinningScheme scheme{MeasureKind::Entropy, kLn2, 4};
    const Library lib = build_ground_library(ModelKind::Xx, scheme, 16, rot, 23);
    const Library two = rebin(lib, BinningScheme{MeasureKind::Entropy, kLn2, 2});
    for (std::size_t i = 0; i < lib.entries.size(); ++i) {
        CHECK(two.entries[i].bin ==
              bin_label(lib.entries[i].exact_value,
                        BinningScheme{MeasureKind::Entropy, kLn2, 2}));
    }
    CHECK_THROWS_AS(rebin(lib, BinningScheme{MeasureKind::LogNegativity, kLn2, 2}),
                    ValidationError);
}

TEST_CASE("library round-trip is bit-exact at 32-bit image precision") {
    const RotationSet rot = sample_cue_rotations(3, 6, 61);
    const BinningScheme scheme{MeasureKind::Entropy, kLn2, 4};
    const Library lib = build_ground_library(ModelKind::TfiMinus, scheme, 12, rot, 29);
    const fs::path dir = temp_dir("roundtrip");
    write_library(lib, dir);
    const Library loaded = read_library(dir);
    REQUIRE(loaded.entries.size() == lib.entries.size());
    CHECK(loaded.meta.model == "tfi-");
    CHECK(loaded.meta.rotation_seed == 61);
    CHECK(loaded.meta.boundary == "periodic");
    for (std::size_t i = 0; i < lib.entries.size(); ++i) {
        CHECK(loaded.entries[i].bin == lib.entries[i].bin);
        CHECK(loaded.entries[i].exact_value == lib.entries[i].exact_value);
        for (Eigen::Index r = 0; r < lib.entries[i].image.rotations(); ++r) {
            for (Eigen::Index c = 0; c < lib.entries[i].image.dim(); ++c) {
                CHECK(loaded.entries[i].image.probs(r, c) ==
                      static_cast<double>(static_cast<float>(lib.entries[i].image.probs(r, c))));
            }
        }
    }
    // write(read(write(lib))) reproduces the blob byte for byte
    const fs::path dir2 = temp_dir("roundtrip2");
    write_library(loaded, dir2);
    CHECK(slurp(dir / "library.qerl") == slurp(dir2 / "library.qerl"));
}

TEST_CASE("library file corruption and version skew are detected") {
    const RotationSet rot = sample_cue_rotations(2, 4, 71);
    const BinningScheme scheme{MeasureKind::Entropy, 0.5, 2};
    const Library lib = build_ground_library(ModelKind::TfiPlus, scheme, 6, rot, 31);
    const fs::path dir = temp_dir("corrupt");
    write_library(lib, dir);

    auto bytes = slurp(dir / "library.qerl");
    bytes[bytes.size() / 2] ^= 0x40;
    spit(dir / "library.qerl", bytes);
    CHECK_THROWS_AS(read_library(dir), IoError);

    write_library(lib, dir);
    bytes = slurp(dir / "library.qerl");
    bytes.resize(bytes.size() - 7);
    spit(dir / "library.qerl", bytes);
    CHECK_THROWS_AS(read_library(dir), IoError);

    // manifest count mismatch reads as version skew
    write_library(lib, dir);
    Library tampered = lib;
    tampered.meta.class_counts["ground"] = 99;
    std::ofstream manifest(dir / "manifest.json");
    manifest << R"({"boundary":"periodic","build_seed":31,"class_counts":{"ground":99},)"
             << R"("e_max":0.5,"format_version":1,"measure":"entropy","model":"tfi+",)"
             << R"("n_bins":2,"params":{},"recipe":"ground","rotation_seed":71,)"
             << R"("rotations":2,"shots":0,"sites":4})" << '\n';
    manifest.close();
    CHECK_THROWS_AS(read_library(dir), IoError);

    CHECK_THROWS_AS(read_library(temp_dir("missing")), IoError);
    Library empty;
    CHECK_THROWS_AS(write_library(empty, temp_dir("empty")), ValidationError);
}

TEST_CASE("rotation files round-trip and validate unitarity") {
    const RotationSet set = sample_cue_rotations(5, 10, 77);
    const fs::path dir = temp_dir("rotations");
    write_rotations(set, dir / "rot.qerr");
    const RotationSet loaded = read_rotations(dir / "rot.qerr");
    CHECK(loaded.rotations == 5);
    CHECK(loaded.sites == 10);
    CHECK(loaded.seed == 77);
    for (std::size_t k = 0; k < set.locals.size(); ++k) {
        CHECK((set.locals[k].u - loaded.locals[k].u).cwiseAbs().maxCoeff() == 0.0);
    }

    auto bytes = slurp(dir / "rot.qerr");
    bytes[20] ^= 0x01;
    spit(dir / "rot.qerr", bytes);
    CHECK_THROWS_AS(read_rotations(dir / "rot.qerr"), IoError);
}

TEST_CASE("library audit catches tampered labels") {
    const RotationSet rot = sample_cue_rotations(2, 4, 81);
    const BinningScheme scheme{MeasureKind::Entropy, 0.5, 2};
    Library lib = build_ground_library(ModelKind::TfiPlus, scheme, 6, rot, 37);
    audit_labels(lib, 1.0, 5);
    lib.entries[2].bin = 3 - lib.entries[2].bin;
    CHECK_THROWS_AS(audit_labels(lib, 1.0, 5), ValidationError);
}
