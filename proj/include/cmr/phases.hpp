#pragma once

#include <vector>

#include "cmr/descriptor.hpp"
#include "cmr/volume.hpp"

namespace cmr {

/// The five cardiac key frames on a cyclic time base of length T.
/// Traversing the cycle forward from MS visits ES, PF, MD, ED in order.
struct PhaseSet {
    int ed = 0;
    int ms = 0;
    int es = 0;
    int pf = 0;
    int md = 0;
    int t_len = 0;
    bool ms_tie = false;  // multiple equal minima, earliest was chosen

    int of(int which) const {  // 0=ED 1=MS 2=ES 3=PF 4=MD
        switch (which) {
            case 0: return ed;
            case 1: return ms;
            case 2: return es;
            case 3: return pf;
            default: return md;
        }
    }
    bool ordered() const;
};

enum class CrossingDir { neg_to_pos, pos_to_neg };

struct Crossing {
    int index = 0;
    CrossingDir dir = CrossingDir::neg_to_pos;
};

/// Cyclic sign-change detection. A crossing is reported at the first index
/// of the new sign run; exact zeros take the sign of the next nonzero
/// sample, so a signal touching zero while changing sign crosses at the
/// zero itself. All-zero input yields no crossings.
std::vector<Crossing> zero_crossings(const std::vector<double>& alpha);

/// Rule-based key-frame extraction on the normalized direction curve:
/// MS at the global minimum, ES at the first neg->pos crossing after MS,
/// PF at the first strict local maximum after ES, ED at the last pos->neg
/// crossing in the cyclic interval (PF, MS], MD at the cyclic midpoint of
/// the arc PF -> ED (round half up). Throws rule_error naming the rule
/// that found no qualifying frame.
PhaseSet extract_phases(const MotionDescriptor& desc);

/// Same rules applied to a bare curve (used for oracle signals).
PhaseSet extract_phases_from_curve(const std::vector<double>& alpha);

/// Map indices found on a temporally repeated sequence back to the
/// original time base (reduction modulo original_t).
PhaseSet phases_to_original(const PhaseSet& ps, const PreprocessReport& report);

} // namespace cmr
