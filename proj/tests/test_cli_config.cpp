#include <doctest.h>

#include "../tools/cli_support.hpp"
#include "tabmda/errors.hpp"

using tabmda_cli::parse_config;

TEST_CASE("config: empty object yields the protocol defaults") {
    const auto cfg = parse_config("{}");
    CHECK(cfg.experiment.n_real_grid == std::vector<std::size_t>{20, 50, 100, 200, 500});
    CHECK(cfg.experiment.fraction_grid == std::vector<double>{0.5, 0.7, 0.9, 1.0});
    CHECK(cfg.experiment.k_grid == std::vector<std::size_t>{5, 20, 50});
    CHECK(cfg.experiment.repeats == 10);
    CHECK_FALSE(cfg.experiment.trivial_augment);
    CHECK(cfg.experiment.classifiers.size() == 5);
    CHECK(cfg.experiment.hyperparams.knn_k == 5);
    CHECK(cfg.experiment.hyperparams.gbdt_lr == 0.3);
    CHECK(cfg.gen_weights.d_model == 512);
    CHECK(cfg.gen_weights.f_max == 100);
    CHECK(cfg.gen_weights.c_max == 10);
}

TEST_CASE("config: type mismatches are rejected") {
    CHECK_THROWS_AS(parse_config(R"({"experiment":{"repeats":"ten"}})"), tabmda::ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"seed":"abc"})"), tabmda::ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"ics":{"fraction_grid":"half"}})"),
                    tabmda::ConfigError);
}

TEST_CASE("config: unknown keys are rejected") {
    CHECK_THROWS_AS(parse_config(R"({"repeats":10})"), tabmda::ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"experiment":{"nreal":[20]}})"), tabmda::ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"hyperparams":{"knn":3}})"), tabmda::ConfigError);
}

TEST_CASE("config: invalid JSON is rejected") {
    CHECK_THROWS_AS(parse_config("not json"), tabmda::ConfigError);
    CHECK_THROWS_AS(parse_config("[1,2]"), tabmda::ConfigError);
}

TEST_CASE("config: trivial_augment switches the sweep") {
    const auto cfg = parse_config(R"({"ics":{"trivial_augment":true}})");
    CHECK(cfg.experiment.trivial_augment);
    CHECK(cfg.ics_trivial_augment);
}

TEST_CASE("config: nested overrides apply") {
    const auto cfg = parse_config(
        R"({"seed":9,"experiment":{"repeats":3,"classifiers":["knn","gbdt"]},
            "ics":{"k_grid":[2,4]},"hyperparams":{"forest_trees":50}})");
    CHECK(cfg.seed == 9);
    CHECK(cfg.experiment.repeats == 3);
    CHECK(cfg.experiment.classifiers ==
          std::vector<tabmda::ClassifierKind>{tabmda::ClassifierKind::knn,
                                              tabmda::ClassifierKind::gbdt});
    CHECK(cfg.experiment.k_grid == std::vector<std::size_t>{2, 4});
    CHECK(cfg.experiment.hyperparams.forest_trees == 50);
    // untouched defaults survive
    CHECK(cfg.experiment.hyperparams.gbdt_rounds == 200);
}

TEST_CASE("config: unknown classifier name is rejected") {
    CHECK_THROWS_AS(parse_config(R"({"experiment":{"classifiers":["xgboost9000"]}})"),
                    tabmda::ConfigError);
}
