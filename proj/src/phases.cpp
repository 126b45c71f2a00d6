#include "cmr/phases.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cmr/errors.hpp"

namespace cmr {

namespace {

int wrap(int i, int t_len) {
    i %= t_len;
    return i < 0 ? i + t_len : i;
}

} // namespace

bool PhaseSet::ordered() const {
    // forward distances from MS must be strictly increasing for ES, PF, MD, ED
    const int d_es = wrap(es - ms, t_len);
    const int d_pf = wrap(pf - ms, t_len);
    const int d_md = wrap(md - ms, t_len);
    const int d_ed = wrap(ed - ms, t_len);
    return 0 < d_es && d_es < d_pf && d_pf < d_md && d_md < d_ed && d_ed < t_len;
}

std::vector<Crossing> zero_crossings(const std::vector<double>& alpha) {
    const int t_len = static_cast<int>(alpha.size());
    if (t_len < 3) throw usage_error("zero_crossings: need T >= 3");

    // Resolve each sample to a sign; zeros inherit the next nonzero sign
    // (they open the following run).
    std::vector<int> sign(t_len, 0);
    for (int t = 0; t < t_len; ++t)
        sign[t] = alpha[t] > 0.0 ? 1 : (alpha[t] < 0.0 ? -1 : 0);

    int last = 0;
    for (int t = 2 * t_len - 1; t >= 0; --t) {
        const int i = t % t_len;
        if (sign[i] != 0)
            last = sign[i];
        else
            sign[i] = last;
    }

    std::vector<Crossing> out;
    if (sign[0] == 0) return out;  // all zeros
    for (int t = 0; t < t_len; ++t) {
        const int prev = sign[wrap(t - 1, t_len)];
        if (prev != sign[t])
            out.push_back({t, prev < 0 ? CrossingDir::neg_to_pos : CrossingDir::pos_to_neg});
    }
    return out;
}

PhaseSet extract_phases_from_curve(const std::vector<double>& alpha) {
    const int t_len = static_cast<int>(alpha.size());
    if (t_len < 3) throw usage_error("extract_phases: need T >= 3");

    const std::vector<Crossing> crossings = zero_crossings(alpha);
    std::vector<char> is_np(t_len, 0), is_pn(t_len, 0);
    bool any_np = false, any_pn = false;
    for (const Crossing& c : crossings) {
        if (c.dir == CrossingDir::neg_to_pos) {
            is_np[c.index] = 1;
            any_np = true;
        } else {
            is_pn[c.index] = 1;
            any_pn = true;
        }
    }
    if (!any_np) throw rule_error("ES", "no neg->pos zero crossing in the curve");
    if (!any_pn) throw rule_error("ED", "no pos->neg zero crossing in the curve");

    PhaseSet ps;
    ps.t_len = t_len;

    // MS: global minimum, earliest index on ties.
    int ms = 0;
    int tie_count = 1;
    for (int t = 1; t < t_len; ++t) {
        if (alpha[t] < alpha[ms]) {
            ms = t;
            tie_count = 1;
        } else if (alpha[t] == alpha[ms]) {
            ++tie_count;
        }
    }
    ps.ms = ms;
    ps.ms_tie = tie_count > 1;

    // ES: first neg->pos crossing at or after MS.
    int es = -1;
    for (int k = 0; k < t_len; ++k) {
        const int t = wrap(ms + k, t_len);
        if (is_np[t]) {
            es = t;
            break;
        }
    }
    if (es < 0) throw rule_error("ES", "no neg->pos crossing at or after MS");
    ps.es = es;

    // PF: first strict local maximum after ES, before the cycle returns to MS.
    int pf = -1;
    const int pf_span = wrap(ms - es, t_len);
    for (int k = 1; k < pf_span; ++k) {
        const int t = wrap(es + k, t_len);
        const double prev = alpha[wrap(t - 1, t_len)];
        const double next = alpha[wrap(t + 1, t_len)];
        if (alpha[t] > prev && alpha[t] >= next) {
            pf = t;
            break;
        }
    }
    if (pf < 0)
        throw rule_error("PF", "no local maximum in the cyclic interval (ES=" +
                                   std::to_string(es) + ", MS=" + std::to_string(ms) + ")");
    ps.pf = pf;

    // ED: last pos->neg crossing in the cyclic interval (PF, MS], i.e. the
    // first one found scanning backward from MS.
    int ed = -1;
    const int span = wrap(ms - pf, t_len);
    for (int k = 0; k < span; ++k) {
        const int t = wrap(ms - k, t_len);
        if (is_pn[t]) {
            ed = t;
            break;
        }
    }
    if (ed < 0)
        throw rule_error("ED", "no pos->neg crossing in the cyclic interval (PF=" +
                                   std::to_string(pf) + ", MS=" + std::to_string(ms) + "]");
    ps.ed = ed;

    // MD: cyclic midpoint of the arc PF -> ED, rounded half up.
    const int arc = wrap(ed - pf, t_len);
    ps.md = wrap(pf + (arc + 1) / 2, t_len);

    if (!ps.ordered())
        throw rule_error("ordering",
                         "extracted phases do not follow the cyclic MS->ES->PF->MD->ED order");
    return ps;
}

PhaseSet extract_phases(const MotionDescriptor& desc) {
    if (desc.alpha_norm.empty())
        throw usage_error("extract_phases: descriptor has no normalized curve");
    return extract_phases_from_curve(desc.alpha_norm);
}

PhaseSet phases_to_original(const PhaseSet& ps, const PreprocessReport& report) {
    if (report.repeated_to <= 0)
        throw usage_error("phases_to_original: no temporal repetition recorded");
    PhaseSet out = ps;
    out.t_len = report.original_t;
    out.ed = wrap(ps.ed, report.original_t);
    out.ms = wrap(ps.ms, report.original_t);
    out.es = wrap(ps.es, report.original_t);
    out.pf = wrap(ps.pf, report.original_t);
    out.md = wrap(ps.md, report.original_t);
    return out;
}

} // namespace cmr
