// Acceptance suite: runs every invariant and acceptance check against the
// standard configuration and requires all of them to pass. One PASS/FAIL line
// is printed per check as it completes.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <iostream>

#include "krvi/harness.hpp"

#ifndef KRVI_SOURCE_DIR
#define KRVI_SOURCE_DIR "."
#endif

TEST_CASE("acceptance: full verify suite on the standard configuration") {
    const std::string config_path = std::string(KRVI_SOURCE_DIR) + "/configs/standard.cfg";
    const auto config = krvi::harness::ExperimentConfig::from_file(config_path);
    const auto results = krvi::harness::run_verify(config, std::cout);
    REQUIRE(!results.empty());
    for (const auto& result : results) {
        INFO(result.name, ": ", result.detail);
        CHECK(result.pass);
    }
}
