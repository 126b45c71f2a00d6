#pragma once

#include <array>
#include <string>
#include <vector>

#include "cmr/phases.hpp"

namespace cmr {

/// Cyclic distance between a predicted and a labeled frame index.
int pfd(int p, int phat, int t_len);

inline constexpr std::array<const char*, 5> kPhaseNames{"ed", "ms", "es", "pf", "md"};

struct PhaseEval {
    std::array<int, 5> per_phase_pfd{};  // ED, MS, ES, PF, MD
    int t_len = 0;
};

PhaseEval evaluate_phases(const PhaseSet& pred, const PhaseSet& gt);

struct PhaseStats {
    double mean = 0.0;
    double sd = 0.0;
    double median = 0.0;
    int max = 0;
};

struct CohortSummary {
    std::array<PhaseStats, 5> per_phase{};
    int n = 0;
};

CohortSummary aggregate(const std::vector<PhaseEval>& evals);

struct QcVerdict {
    bool cutoff_flag = false;
    double last_to_first_mag_mm = 0.0;
    double robust_score = 0.0;
    double threshold = 0.0;
};

/// Cut-off sequence check: the last-to-first deformation magnitude is
/// scored as a median/MAD outlier against the within-cycle magnitudes.
QcVerdict detect_cutoff(const std::vector<double>& vnorm_raw_mm, double threshold = 5.0);

} // namespace cmr
