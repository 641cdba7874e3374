#include <doctest.h>

#include "support/gradsuite.hpp"

TEST_CASE("finite-difference gradient suite: every op and branch") {
    for (const auto& item : dpfnet::testing::run_grad_suite()) {
        CAPTURE(item.name);
        INFO(item.result.worst);
        CHECK(item.result.ok(1e-3));
    }
}
