#include <doctest.h>

#include "crpo/cmdp.hpp"
#include "crpo/envs.hpp"
#include "test_util.hpp"

using namespace crpo;

TEST_CASE("valid twostate model passes validation") {
    CHECK(validate_report(make_twostate()).ok());
}

TEST_CASE("non-stochastic transition row is reported with its indices") {
    auto m = make_twostate();
    m.transition[m.sas(0, 0, 0)] = 0.9;
    auto rep = validate_report(m);
    REQUIRE_FALSE(rep.ok());
    bool found = false;
    for (const auto& issue : rep.issues)
        if (issue.kind == ValidationIssue::Kind::RowNotStochastic &&
            issue.detail.find("(0,0)") != std::string::npos)
            found = true;
    CHECK(found);
}

TEST_CASE("gamma outside (0,1) is BadDiscount") {
    auto m = make_twostate();
    m.gamma = 1.0;
    auto rep = validate_report(m);
    REQUIRE_FALSE(rep.ok());
    CHECK(rep.issues.front().kind == ValidationIssue::Kind::BadDiscount);
}

TEST_CASE("bad initial distribution and negative entries are both listed") {
    auto m = make_twostate();
    m.xi = {0.7, 0.7};
    m.transition[m.sas(1, 0, 1)] = -0.5;
    m.transition[m.sas(1, 0, 0)] = 1.5;
    auto rep = validate_report(m);
    bool neg = false, bad_xi = false;
    for (const auto& issue : rep.issues) {
        if (issue.kind == ValidationIssue::Kind::NegativeEntry) neg = true;
        if (issue.kind == ValidationIssue::Kind::BadInitialDist) bad_xi = true;
    }
    CHECK(neg);
    CHECK(bad_xi);
}

TEST_CASE("validate throws with a row-level report") {
    auto m = make_twostate();
    m.gamma = -0.1;
    CHECK_THROWS_AS(validate(m), ValidationError);
}

TEST_CASE("json round trip is bit-faithful") {
    auto m = testutil::random_cmdp(4, 3, 2, 99);
    auto back = cmdp_from_json(to_json(m));
    CHECK(back.num_states == m.num_states);
    CHECK(back.num_actions == m.num_actions);
    CHECK(back.gamma == m.gamma);
    CHECK(back.c_max == m.c_max);
    CHECK(back.xi == m.xi);
    CHECK(back.transition == m.transition);
    CHECK(back.channels == m.channels);
    CHECK(back.limits == m.limits);
    // and the serialized forms agree byte for byte
    CHECK(to_json(m).dump() == to_json(back).dump());
}

TEST_CASE("softmax policy rows are normalized and shift invariant") {
    auto pol = testutil::random_policy(5, 4, 7);
    auto shifted = pol;
    for (std::size_t s = 0; s < 5; ++s)
        for (std::size_t a = 0; a < 4; ++a) shifted.w(s, a) += 3.25 * (double(s) + 1.0);
    auto p1 = pol.probs(), p2 = shifted.probs();
    for (std::size_t s = 0; s < 5; ++s) {
        double sum = 0.0;
        for (std::size_t a = 0; a < 4; ++a) {
            sum += p1[s * 4 + a];
            CHECK(p1[s * 4 + a] == doctest::Approx(p2[s * 4 + a]).epsilon(1e-12));
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}
