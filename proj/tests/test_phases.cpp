#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cmr/errors.hpp"
#include "cmr/phases.hpp"
#include "helpers.hpp"

using namespace cmr;

namespace {

// Sampled -sin with exact zeros at the crossings (sin(pi) is not exactly
// zero in floating point).
std::vector<double> neg_sine(int t_len) {
    std::vector<double> out(t_len);
    for (int t = 0; t < t_len; ++t) {
        double v = -std::sin(2.0 * M_PI * t / t_len);
        if (std::fabs(v) < 1e-12) v = 0.0;
        out[t] = v;
    }
    return out;
}

} // namespace

TEST_CASE("zero_crossings") {
    SUBCASE("sampled -sin crosses at 16 (neg->pos) and 0 (pos->neg)") {
        const auto crossings = zero_crossings(neg_sine(32));
        REQUIRE(crossings.size() == 2);
        CHECK(crossings[0].index == 0);
        CHECK(crossings[0].dir == CrossingDir::pos_to_neg);
        CHECK(crossings[1].index == 16);
        CHECK(crossings[1].dir == CrossingDir::neg_to_pos);
    }
    SUBCASE("all-negative signal has no crossings") {
        CHECK(zero_crossings({-1.0, -0.5, -2.0, -0.1}).empty());
    }
    SUBCASE("all-zero signal has no crossings") {
        CHECK(zero_crossings({0.0, 0.0, 0.0, 0.0}).empty());
    }
    SUBCASE("alternating signal crosses at every step") {
        CHECK(zero_crossings({-1.0, 1.0, -1.0, 1.0}).size() == 4);
    }
    SUBCASE("a zero touching between equal signs is not a crossing") {
        CHECK(zero_crossings({-1.0, 0.0, -1.0, -0.5}).empty());
    }
}

TEST_CASE("extract_phases on the sampled sinusoid") {
    MotionDescriptor d;
    d.alpha_norm = neg_sine(32);
    d.alpha_raw = d.alpha_norm;
    d.vnorm_raw_mm.assign(32, 1.0);

    const PhaseSet ps = extract_phases(d);
    CHECK(ps.ms == 8);
    CHECK(ps.es == 16);
    CHECK(ps.pf == 24);
    CHECK(ps.ed == 0);
    CHECK(ps.md == 28);
    CHECK(ps.t_len == 32);
    CHECK(ps.ordered());
    CHECK_FALSE(ps.ms_tie);

    SUBCASE("shifting by +10 shifts every phase by +10 mod 32") {
        MotionDescriptor shifted;
        shifted.alpha_norm = testutil::rotate_signal(d.alpha_norm, 10);
        const PhaseSet ps2 = extract_phases(shifted);
        CHECK(ps2.ms == (ps.ms + 10) % 32);
        CHECK(ps2.es == (ps.es + 10) % 32);
        CHECK(ps2.pf == (ps.pf + 10) % 32);
        CHECK(ps2.ed == (ps.ed + 10) % 32);
        CHECK(ps2.md == (ps.md + 10) % 32);
    }
    SUBCASE("positive scaling leaves the phase set unchanged") {
        MotionDescriptor scaled;
        scaled.alpha_norm = d.alpha_norm;
        for (double& v : scaled.alpha_norm) v *= 0.37;
        const PhaseSet ps2 = extract_phases(scaled);
        CHECK(ps2.ms == ps.ms);
        CHECK(ps2.es == ps.es);
        CHECK(ps2.pf == ps.pf);
        CHECK(ps2.ed == ps.ed);
        CHECK(ps2.md == ps.md);
    }
}

TEST_CASE("extract_phases properties on random smooth signals") {
    cmr::Rng rng(50);
    int done = 0;
    while (done < 10) {
        const int t_len = 16 + rng.uniform_int(0, 24);
        const auto alpha = testutil::random_cyclic_signal(t_len, rng);
        MotionDescriptor d;
        d.alpha_norm = alpha;
        PhaseSet ps;
        try {
            ps = extract_phases(d);
        } catch (const rule_error&) {
            continue;  // diffuse signal, no qualifying frames
        }
        ++done;

        CHECK(ps.ordered());
        for (int t = 0; t < t_len; ++t) CHECK(alpha[ps.ms] <= alpha[t]);

        // equivariance under a couple of rotations
        for (int k : {1, t_len / 3, t_len - 2}) {
            MotionDescriptor rot;
            rot.alpha_norm = testutil::rotate_signal(alpha, k);
            const PhaseSet ps2 = extract_phases(rot);
            CHECK(ps2.ms == (ps.ms + k) % t_len);
            CHECK(ps2.es == (ps.es + k) % t_len);
            CHECK(ps2.pf == (ps.pf + k) % t_len);
            CHECK(ps2.ed == (ps.ed + k) % t_len);
            CHECK(ps2.md == (ps.md + k) % t_len);
        }
    }
}

TEST_CASE("extract_phases error reporting") {
    MotionDescriptor d;

    SUBCASE("empty normalized curve") {
        CHECK_THROWS_AS(extract_phases(d), usage_error);
    }
    SUBCASE("all-positive curve names the ES rule") {
        d.alpha_norm = {0.5, 1.0, 0.7, 0.9, 0.6};
        CHECK_THROWS_WITH_AS(extract_phases(d), doctest::Contains("ES"), rule_error);
    }
    SUBCASE("all-negative curve fails on a missing crossing") {
        d.alpha_norm = {-0.5, -1.0, -0.7, -0.9, -0.6};
        CHECK_THROWS_AS(extract_phases(d), rule_error);
    }
    SUBCASE("rule_error carries the rule name") {
        d.alpha_norm = {0.5, 1.0, 0.7, 0.9, 0.6};
        try {
            extract_phases(d);
            FAIL("expected rule_error");
        } catch (const rule_error& e) {
            CHECK(e.rule_name == "ES");
        }
    }
}

TEST_CASE("phases_to_original") {
    PreprocessReport rep;
    rep.original_t = 25;
    rep.repeated_to = 40;

    PhaseSet ps;
    ps.t_len = 40;
    ps.ed = 30;
    ps.ms = 10;
    ps.es = 14;
    ps.pf = 20;
    ps.md = 25;

    const PhaseSet out = phases_to_original(ps, rep);
    CHECK(out.ed == 5);   // 30 mod 25
    CHECK(out.ms == 10);  // unchanged
    CHECK(out.es == 14);
    CHECK(out.pf == 20);
    CHECK(out.md == 0);  // 25 mod 25
    CHECK(out.t_len == 25);

    SUBCASE("all-zero phase set is unchanged") {
        PhaseSet zeros;
        zeros.t_len = 40;
        const PhaseSet z = phases_to_original(zeros, rep);
        CHECK(z.ed == 0);
        CHECK(z.ms == 0);
        CHECK(z.md == 0);
    }
    SUBCASE("requires a recorded repetition") {
        PreprocessReport none;
        none.original_t = 25;
        CHECK_THROWS_AS(phases_to_original(ps, none), usage_error);
    }
}
