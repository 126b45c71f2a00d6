#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "cmr/errors.hpp"
#include "cmr/evalqc.hpp"
#include "helpers.hpp"

using namespace cmr;

namespace {

int pfd_bruteforce(int p, int phat, int t_len) {
    int best = 1 << 30;
    for (int k = -1; k <= 1; ++k) best = std::min(best, std::abs(p - phat + k * t_len));
    return best;
}

PhaseSet make_ps(int t_len, int ed, int ms, int es, int pf, int md) {
    PhaseSet ps;
    ps.t_len = t_len;
    ps.ed = ed;
    ps.ms = ms;
    ps.es = es;
    ps.pf = pf;
    ps.md = md;
    return ps;
}

} // namespace

TEST_CASE("pfd") {
    SUBCASE("first vs last frame is one step apart") {
        for (int t_len : {2, 5, 12, 30, 40}) CHECK(pfd(0, t_len - 1, t_len) == 1);
    }
    SUBCASE("within-range difference") {
        CHECK(pfd(5, 8, 30) == 3);
    }
    SUBCASE("exhaustive agreement with the brute-force cyclic distance") {
        for (int t_len = 2; t_len <= 40; ++t_len)
            for (int p = 0; p < t_len; ++p)
                for (int q = 0; q < t_len; ++q) CHECK(pfd(p, q, t_len) == pfd_bruteforce(p, q, t_len));
    }
    SUBCASE("symmetry, identity, triangle inequality, maximum") {
        for (int t_len : {7, 12, 30}) {
            int max_seen = 0;
            for (int a = 0; a < t_len; ++a) {
                CHECK(pfd(a, a, t_len) == 0);
                for (int b = 0; b < t_len; ++b) {
                    CHECK(pfd(a, b, t_len) == pfd(b, a, t_len));
                    max_seen = std::max(max_seen, pfd(a, b, t_len));
                    for (int c = 0; c < t_len; ++c)
                        CHECK(pfd(a, c, t_len) <= pfd(a, b, t_len) + pfd(b, c, t_len));
                }
            }
            CHECK(max_seen == t_len / 2);
        }
    }
    SUBCASE("out-of-range index is rejected") {
        CHECK_THROWS_AS(pfd(5, 2, 5), usage_error);
        CHECK_THROWS_AS(pfd(-1, 2, 5), usage_error);
    }
}

TEST_CASE("evaluate_phases") {
    const PhaseSet gt = make_ps(30, 0, 5, 10, 13, 22);

    SUBCASE("identical sets give all zeros") {
        const PhaseEval ev = evaluate_phases(gt, gt);
        for (int v : ev.per_phase_pfd) CHECK(v == 0);
    }
    SUBCASE("shift by one gives all ones") {
        const PhaseSet pred = make_ps(30, 1, 6, 11, 14, 23);
        const PhaseEval ev = evaluate_phases(pred, gt);
        for (int v : ev.per_phase_pfd) CHECK(v == 1);
    }
    SUBCASE("matches five independent pfd calls") {
        cmr::Rng rng(60);
        for (int rep = 0; rep < 20; ++rep) {
            const int t_len = 5 + rng.uniform_int(0, 30);
            const auto r = [&] { return rng.uniform_int(0, t_len - 1); };
            const PhaseSet a = make_ps(t_len, r(), r(), r(), r(), r());
            const PhaseSet b = make_ps(t_len, r(), r(), r(), r(), r());
            const PhaseEval ev = evaluate_phases(a, b);
            CHECK(ev.per_phase_pfd[0] == pfd(a.ed, b.ed, t_len));
            CHECK(ev.per_phase_pfd[1] == pfd(a.ms, b.ms, t_len));
            CHECK(ev.per_phase_pfd[2] == pfd(a.es, b.es, t_len));
            CHECK(ev.per_phase_pfd[3] == pfd(a.pf, b.pf, t_len));
            CHECK(ev.per_phase_pfd[4] == pfd(a.md, b.md, t_len));
        }
    }
    SUBCASE("length mismatch is rejected") {
        const PhaseSet other = make_ps(20, 0, 5, 10, 13, 16);
        CHECK_THROWS_AS(evaluate_phases(other, gt), usage_error);
    }
}

TEST_CASE("cohort aggregation") {
    std::vector<PhaseEval> evals(3);
    evals[0].per_phase_pfd = {0, 1, 2, 3, 4};
    evals[1].per_phase_pfd = {2, 1, 0, 1, 0};
    evals[2].per_phase_pfd = {1, 1, 1, 2, 2};

    const CohortSummary s = aggregate(evals);
    CHECK(s.n == 3);
    CHECK(s.per_phase[0].mean == doctest::Approx(1.0));
    CHECK(s.per_phase[1].sd == doctest::Approx(0.0));
    CHECK(s.per_phase[3].max == 3);
    CHECK(s.per_phase[4].median == doctest::Approx(2.0));
}

TEST_CASE("detect_cutoff") {
    SUBCASE("constant magnitudes are not flagged") {
        const std::vector<double> v(12, 0.8);
        const QcVerdict q = detect_cutoff(v);
        CHECK_FALSE(q.cutoff_flag);
        CHECK(std::fabs(q.robust_score) < 1e-3);
    }
    SUBCASE("an outlier last step is flagged") {
        std::vector<double> v(12, 0.5);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += 0.01 * static_cast<double>(i % 3);
        v.back() = 3.0;
        const QcVerdict q = detect_cutoff(v);
        CHECK(q.cutoff_flag);
        CHECK(q.robust_score > 5.0);
        CHECK(q.last_to_first_mag_mm == doctest::Approx(3.0));
    }
    SUBCASE("score is invariant under positive scaling") {
        cmr::Rng rng(61);
        std::vector<double> v(20);
        for (auto& x : v) x = rng.uniform(0.2, 1.0);
        v.back() = 4.0;
        const QcVerdict a = detect_cutoff(v);
        for (auto& x : v) x *= 37.0;
        const QcVerdict b = detect_cutoff(v);
        CHECK(a.cutoff_flag == b.cutoff_flag);
        CHECK(a.robust_score == doctest::Approx(b.robust_score).epsilon(1e-6));
    }
    SUBCASE("too-short sequences are rejected") {
        CHECK_THROWS_AS(detect_cutoff({1.0, 2.0, 3.0}), usage_error);
    }
}
