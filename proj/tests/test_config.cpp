#include <doctest.h>

#include <fstream>

#include "aogtrack/config.hpp"
#include "json.hpp"
#include "support/fixtures.hpp"

using namespace aog;

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

TEST_CASE("default configuration") {
    const EngineConfig cfg;
    CHECK(cfg.learner.C == 100.0);
    CHECK(cfg.tracker.dp_window == 5);
    CHECK(cfg.tracker.sigma == 3.0);
    CHECK(cfg.features.cell_size == 4);
    CHECK(cfg.parser.nms_iou == 0.7);
}

TEST_CASE("JSON round trip") {
    EngineConfig cfg;
    cfg.learner.C = 3.5;
    cfg.tracker.temporal_dp = false;
    cfg.flow.grid = 7;
    EngineConfig back;
    apply_config_json(back, config_to_json(cfg));
    CHECK(config_to_json(back) == config_to_json(cfg));
    CHECK(config_hash(back) == config_hash(cfg));
    CHECK(config_hash(back) != config_hash(EngineConfig{}));
}

TEST_CASE("partial patches keep other values") {
    EngineConfig cfg;
    apply_config_json(cfg, R"({"tracker": {"roi_scale": 2.5}, "parser": {"radius": 2}})");
    CHECK(cfg.tracker.roi_scale == 2.5);
    CHECK(cfg.parser.radius == 2);
    CHECK(cfg.tracker.dp_window == 5);
}

TEST_CASE("bad configurations throw") {
    EngineConfig cfg;
    CHECK_THROWS_AS(apply_config_json(cfg, R"({"tracker": {"roi_sclae": 2}})"), std::invalid_argument);
    CHECK_THROWS_AS(apply_config_json(cfg, R"({"nonsense": 1})"), std::invalid_argument);
    CHECK_THROWS_AS(apply_config_json(cfg, R"({"tracker": 3})"), std::invalid_argument);
    CHECK_THROWS_AS(apply_config_json(cfg, R"({"parser": {"radius": "three"}})"), std::invalid_argument);
    CHECK_THROWS_AS(apply_config_json(cfg, "{"), std::invalid_argument);
    CHECK_THROWS_AS(load_config_file("/nonexistent/config.json"), std::runtime_error);
}

TEST_CASE("config files") {
    const auto dir = fixtures::temp_dir("config");
    {
        std::ofstream os(dir / "c.json");
        os << R"({"learner": {"C": 0.5}})";
    }
    CHECK(load_config_file((dir / "c.json").string()).learner.C == 0.5);
}

TEST_CASE("hash is FNV-1a of the compact JSON") {
    const EngineConfig cfg;
    const std::string compact = nlohmann::json::parse(config_to_json(cfg)).dump();
    CHECK(config_hash(cfg) == fnv1a(compact));
    CHECK(std::string(engine_version()).size() > 0);
}
