#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "tabmda/dataset.hpp"
#include "tabmda/errors.hpp"
#include "tabmda/synthetic.hpp"

using namespace tabmda;

namespace {

struct TempCsv {
    std::string path;
    explicit TempCsv(const std::string& name, const std::string& content)
        : path("/tmp/tabmda_test_" + name) {
        std::ofstream file(path, std::ios::trunc);
        file << content;
    }
    ~TempCsv() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("encode_labels: lexicographic for strings, numeric by value") {
    {
        const auto [labels, names] = encode_labels({"b", "a", "b"});
        CHECK(names == std::vector<std::string>{"a", "b"});
        CHECK(labels == std::vector<int>{1, 0, 1});
    }
    {
        const auto [labels, names] = encode_labels({"10", "2", "10"});
        CHECK(names == std::vector<std::string>{"2", "10"});
        CHECK(labels == std::vector<int>{1, 0, 1});
    }
    {
        const auto [labels, names] = encode_labels({"only"});
        CHECK(names.size() == 1);
        CHECK(labels == std::vector<int>{0});
    }
}

TEST_CASE("load_csv: small well-formed file") {
    TempCsv csv("ok.csv", "x,y,target\n1,2,a\n3,4,b\n5,6,a\n");
    const Dataset ds = load_csv(csv.path);
    CHECK(ds.size() == 3);
    CHECK(ds.dim() == 2);
    CHECK(ds.class_count() == 2);
    CHECK(ds.labels == std::vector<int>{0, 1, 0});
    CHECK(ds.features(1, 0) == doctest::Approx(3.0));
    CHECK(ds.feature_names == std::vector<std::string>{"x", "y"});
}

TEST_CASE("load_csv: identical loads") {
    TempCsv csv("same.csv", "x,target\n1.5,p\n2.5,q\n");
    const Dataset a = load_csv(csv.path);
    const Dataset b = load_csv(csv.path);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);
    CHECK(a.class_names == b.class_names);
}

TEST_CASE("load_csv: error cases") {
    TempCsv bad_cell("badcell.csv", "x,target\nabc,a\n");
    CHECK_THROWS_AS(load_csv(bad_cell.path), ParseError);

    TempCsv missing("missing.csv", "x,y,target\n1,,a\n");
    CHECK_THROWS_AS(load_csv(missing.path), MissingValue);

    TempCsv short_row("short.csv", "x,y,target\n1,a\n");
    CHECK_THROWS_AS(load_csv(short_row.path), MissingValue);

    TempCsv no_label("nolabel.csv", "x,y\n1,2\n");
    CHECK_THROWS_AS(load_csv(no_label.path), SchemaError);

    CHECK_THROWS_AS(load_csv("/tmp/tabmda_nonexistent.csv"), RuntimeError);
}

TEST_CASE("load_csv: custom label column") {
    TempCsv csv("label.csv", "a,klass,b\n1,x,2\n3,y,4\n");
    const Dataset ds = load_csv(csv.path, "klass");
    CHECK(ds.dim() == 2);
    CHECK(ds.class_names == std::vector<std::string>{"x", "y"});
    CHECK(ds.features(0, 1) == doctest::Approx(2.0));
}

TEST_CASE("registry: the six datasets") {
    const auto& entries = registry();
    REQUIRE(entries.size() == 6);

    const auto* protein = find_registry_entry("protein");
    REQUIRE(protein != nullptr);
    CHECK(protein->openml_id == 40966);
    CHECK(protein->expected_d == 77);
    CHECK(protein->expected_classes == 8);

    const auto* texture = find_registry_entry("texture");
    REQUIRE(texture != nullptr);
    CHECK(texture->expected_classes == 11);

    const auto* vehicle = find_registry_entry("vehicle");
    REQUIRE(vehicle != nullptr);
    CHECK(vehicle->openml_id == 54);
    CHECK(vehicle->expected_n == 846);
    CHECK(vehicle->expected_d == 18);
    CHECK(vehicle->expected_classes == 4);

    CHECK(find_registry_entry("nope") == nullptr);
}

TEST_CASE("registry: mismatch fails loudly") {
    const Dataset blobs = make_blobs(30, 4, 3, 1.0, 1);
    CHECK_THROWS_AS(check_registry(blobs, *find_registry_entry("vehicle")), RegistryMismatch);
}

TEST_CASE("registry: a vehicle-shaped dataset validates") {
    const Dataset shaped = make_blobs(846, 18, 4, 1.0, 4);
    CHECK_NOTHROW(check_registry(shaped, *find_registry_entry("vehicle")));
}

TEST_CASE("save_csv then load_csv preserves the dataset") {
    const Dataset blobs = make_blobs(25, 3, 4, 0.8, 9);
    TempCsv out("blobs_roundtrip.csv", "");
    save_csv(blobs, out.path);
    const Dataset loaded = load_csv(out.path);
    CHECK(loaded.size() == blobs.size());
    CHECK(loaded.dim() == blobs.dim());
    CHECK(loaded.labels == blobs.labels);
    for (std::size_t i = 0; i < blobs.size(); ++i) {
        for (std::size_t j = 0; j < blobs.dim(); ++j) {
            CHECK(loaded.features(i, j) == blobs.features(i, j)); // %.17g is lossless
        }
    }
}
