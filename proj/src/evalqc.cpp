#include "cmr/evalqc.hpp"

#include <algorithm>
#include <cmath>

#include "cmr/errors.hpp"
#include "cmr/stats.hpp"

namespace cmr {

int pfd(int p, int phat, int t_len) {
    if (t_len < 1 || p < 0 || p >= t_len || phat < 0 || phat >= t_len)
        throw usage_error("pfd: index out of range");
    const int direct = std::abs(p - phat);
    const int wrapped = t_len - std::max(p, phat) + std::min(p, phat);
    return std::min(direct, wrapped);
}

PhaseEval evaluate_phases(const PhaseSet& pred, const PhaseSet& gt) {
    if (pred.t_len != gt.t_len)
        throw usage_error("evaluate_phases: sequence lengths differ");
    PhaseEval ev;
    ev.t_len = pred.t_len;
    for (int i = 0; i < 5; ++i) ev.per_phase_pfd[i] = pfd(pred.of(i), gt.of(i), pred.t_len);
    return ev;
}

CohortSummary aggregate(const std::vector<PhaseEval>& evals) {
    CohortSummary sum;
    sum.n = static_cast<int>(evals.size());
    for (int i = 0; i < 5; ++i) {
        std::vector<double> vals;
        vals.reserve(evals.size());
        int mx = 0;
        for (const auto& e : evals) {
            vals.push_back(e.per_phase_pfd[i]);
            mx = std::max(mx, e.per_phase_pfd[i]);
        }
        if (!vals.empty()) {
            const auto [m, sd] = mean_std(vals);
            sum.per_phase[i] = {m, sd, median(vals), mx};
        }
    }
    return sum;
}

QcVerdict detect_cutoff(const std::vector<double>& vnorm_raw_mm, double threshold) {
    if (vnorm_raw_mm.size() < 4) throw usage_error("detect_cutoff: need T >= 4");

    const std::vector<double> body(vnorm_raw_mm.begin(), vnorm_raw_mm.end() - 1);
    const double med = median(std::vector<double>(body));
    const double spread = mad(body);

    QcVerdict v;
    v.threshold = threshold;
    v.last_to_first_mag_mm = vnorm_raw_mm.back();
    v.robust_score = (vnorm_raw_mm.back() - med) / (spread + 1e-9);
    v.cutoff_flag = v.robust_score > threshold;
    return v;
}

} // namespace cmr
