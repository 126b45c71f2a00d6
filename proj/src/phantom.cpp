#include "cmr/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

#include "cmr/errors.hpp"
#include "cmr/rng.hpp"
#include "cmr/volume_io.hpp"

namespace cmr {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Cycle-fraction landmarks of the contraction profile. Systole occupies
// [0, kSysEnd], rapid filling [kSysEnd, kFillEnd], diastasis (exactly flat)
// [kFillEnd, kBumpStart], late filling bump [kBumpStart, 1). With the
// default 30 frames every derived key frame lands on an integer.
constexpr double kSysEnd = 4.0 / 15.0;
constexpr double kFillEnd = 7.0 / 15.0;
constexpr double kBumpStart = 13.0 / 15.0;
// Fraction of the contraction recovered by the late bump.
constexpr double kLateFraction = 0.45;

double cosine_ramp01(double u) {  // 0 -> 1 with zero slope at both ends
    return 0.5 * (1.0 - std::cos(kPi * std::clamp(u, 0.0, 1.0)));
}

// 1 on the plateau, cosine taper to 0 over `taper` beyond `flat`.
double plateau_weight(double dist, double flat, double taper) {
    const double d = std::fabs(dist);
    if (d <= flat) return 1.0;
    if (d >= flat + taper) return 0.0;
    return 0.5 * (1.0 + std::cos(kPi * (d - flat) / taper));
}

double motion_extent(const PhantomConfig& cfg) { return 1.25 * cfg.wall_thickness; }

// Mid-shell radius at sequence frame t (may be fractional for profile use).
double radius_at(const PhantomConfig& cfg, int t) {
    const int full_t = cfg.t_len;
    int shifted = (t - cfg.phase_offset) % full_t;
    if (shifted < 0) shifted += full_t;
    const double x = static_cast<double>(shifted) / full_t;
    return cfg.rest_radius() * (1.0 - cfg.amplitude * phantom_profile(x));
}

// Weight of the ground-truth displacement. The plateau spans the whole band
// swept by the shell over the cycle, so the set of moving voxels does not
// change with the phase and the volume-mean direction reduces exactly to
// sign(R(t+1) - R(t)).
double motion_weight(const PhantomConfig& cfg, double r) {
    const double lo = cfg.rest_radius() * (1.0 - cfg.amplitude);
    const double hi = cfg.rest_radius();
    const double dist = r < lo ? lo - r : (r > hi ? r - hi : 0.0);
    return plateau_weight(dist, 0.75 * cfg.wall_thickness, 0.5 * cfg.wall_thickness);
}

} // namespace

double phantom_profile(double x) {
    x -= std::floor(x);
    if (x < kSysEnd) return cosine_ramp01(x / kSysEnd);
    if (x < kFillEnd)
        return kLateFraction +
               (1.0 - kLateFraction) * (1.0 - cosine_ramp01((x - kSysEnd) / (kFillEnd - kSysEnd)));
    if (x < kBumpStart) return kLateFraction;
    return kLateFraction * (1.0 - cosine_ramp01((x - kBumpStart) / (1.0 - kBumpStart)));
}

std::array<double, 5> phantom_landmarks() {
    const double pf = 0.5 * (kSysEnd + kFillEnd);
    // ED, MS, ES, PF, MD; ED sits at the cycle wrap, MD halfway along the
    // arc from PF forward to ED.
    return {1.0, 0.5 * kSysEnd, kSysEnd, pf, 0.5 * (pf + 1.0)};
}

void PhantomConfig::validate() const {
    if (t_len < 2) throw usage_error("phantom: t_len must be >= 2");
    if (spatial.z < 4 || spatial.y < 4 || spatial.x < 4)
        throw usage_error("phantom: spatial shape too small");
    if (!(amplitude > 0.0 && amplitude < 0.5))
        throw usage_error("phantom: amplitude must be in (0, 0.5)");
    if (!(truncate_fraction > 0.0 && truncate_fraction <= 1.0))
        throw usage_error("phantom: truncate_fraction must be in (0, 1]");
    if (!(inner_radius > 0.0) || !(wall_thickness > 0.0))
        throw usage_error("phantom: radii must be positive");
    if (!(spacing_mm > 0.0)) throw usage_error("phantom: spacing must be positive");
    if (output_t() < 2) throw usage_error("phantom: truncation leaves fewer than 2 frames");

    const auto c = resolved_center();
    const double reach = rest_radius() + motion_extent(*this);
    const double margins[3] = {std::min(c[0], spatial.z - 1 - c[0]),
                               std::min(c[1], spatial.y - 1 - c[1]),
                               std::min(c[2], spatial.x - 1 - c[2])};
    for (double m : margins)
        if (reach > m + 1e-9)
            throw usage_error("phantom: shell plus motion extent does not fit inside the grid");
}

std::array<double, 3> PhantomConfig::resolved_center() const {
    std::array<double, 3> c = center;
    if (c[0] < 0.0) c[0] = (spatial.z - 1) / 2.0;
    if (c[1] < 0.0) c[1] = (spatial.y - 1) / 2.0;
    if (c[2] < 0.0) c[2] = (spatial.x - 1) / 2.0;
    return c;
}

int PhantomConfig::output_t() const {
    return std::max(2, static_cast<int>(std::llround(t_len * truncate_fraction)));
}

VectorField3D analytic_field(const PhantomConfig& cfg, int t) {
    const int out_t = cfg.output_t();
    if (t < 0 || t >= out_t) throw usage_error("analytic_field: frame index out of range");

    const double r_now = radius_at(cfg, t);
    const double r_next = radius_at(cfg, t + 1 == out_t ? 0 : t + 1);
    const double dr = r_next - r_now;
    const auto c = cfg.resolved_center();

    VectorField3D field(cfg.spatial, cfg.spacing_mm);
    std::size_t i = 0;
    for (int z = 0; z < cfg.spatial.z; ++z)
        for (int y = 0; y < cfg.spatial.y; ++y)
            for (int x = 0; x < cfg.spatial.x; ++x, ++i) {
                const double pz = z - c[0], py = y - c[1], px = x - c[2];
                const double r = std::sqrt(pz * pz + py * py + px * px);
                if (r == 0.0) continue;
                const double mag = dr * motion_weight(cfg, r);
                if (mag == 0.0) continue;
                field.disp[i * 3] = mag * pz / r;
                field.disp[i * 3 + 1] = mag * py / r;
                field.disp[i * 3 + 2] = mag * px / r;
            }
    return field;
}

std::pair<Volume4D, PhantomTruth> generate_phantom(const PhantomConfig& cfg) {
    cfg.validate();
    const int out_t = cfg.output_t();
    const auto c = cfg.resolved_center();

    Volume4D vol;
    vol.t_len = out_t;
    vol.spatial = cfg.spatial;
    vol.spacing_mm = {cfg.spacing_mm, cfg.spacing_mm, cfg.spacing_mm};
    vol.data.resize(static_cast<std::size_t>(out_t) * cfg.spatial.size());

    // Frozen noise texture shared by all frames, so a motionless phantom is
    // exactly static and frame differences reflect motion only.
    Rng rng(cfg.seed);
    std::vector<float> noise(cfg.spatial.size());
    for (float& v : noise) v = static_cast<float>(rng.normal(0.0, cfg.noise_sigma));

    constexpr double kBg = 0.1, kMid = 0.55, kBright = 1.0;
    const double flat = 0.25 * cfg.wall_thickness;   // bright plateau half-width
    const double taper = 0.5 * cfg.wall_thickness;   // shell edge taper
    const double blend = 1.0;                        // interior/background blend width

    for (int t = 0; t < out_t; ++t) {
        const double shell_r = radius_at(cfg, t);
        float* frame = vol.frame(t);
        std::size_t i = 0;
        for (int z = 0; z < cfg.spatial.z; ++z)
            for (int y = 0; y < cfg.spatial.y; ++y)
                for (int x = 0; x < cfg.spatial.x; ++x, ++i) {
                    const double pz = z - c[0], py = y - c[1], px = x - c[2];
                    const double r = std::sqrt(pz * pz + py * py + px * px);
                    const double base = kBg + (kMid - kBg) * cosine_ramp01((shell_r - r) / blend);
                    const double w = plateau_weight(r - shell_r, flat, taper);
                    frame[i] = static_cast<float>(base + (kBright - base) * w + noise[i]);
                }
    }

    PhantomTruth truth;
    truth.fields.reserve(out_t);
    for (int t = 0; t < out_t; ++t) truth.fields.push_back(analytic_field(cfg, t));
    truth.radius_profile.reserve(out_t);
    for (int t = 0; t < out_t; ++t) truth.radius_profile.push_back(radius_at(cfg, t));

    const auto lm = phantom_landmarks();
    const auto to_frame = [&](double frac) {
        const int idx = static_cast<int>(std::floor(frac * cfg.t_len + 0.5)) + cfg.phase_offset;
        const int m = idx % cfg.t_len;
        return m < 0 ? m + cfg.t_len : m;
    };
    truth.phases.t_len = cfg.t_len;
    truth.phases.ed = to_frame(lm[0]);
    truth.phases.ms = to_frame(lm[1]);
    truth.phases.es = to_frame(lm[2]);
    truth.phases.pf = to_frame(lm[3]);
    truth.phases.md = to_frame(lm[4]);

    return {std::move(vol), std::move(truth)};
}

void save_phantom(const std::filesystem::path& out_dir, const PhantomConfig& cfg,
                  const Volume4D& vol, const PhantomTruth& truth) {
    std::filesystem::create_directories(out_dir / "fields");
    save_volume4d(out_dir / "volume.json", vol);
    for (std::size_t t = 0; t < truth.fields.size(); ++t) {
        char name[32];
        std::snprintf(name, sizeof(name), "field_%03zu.json", t);
        save_field(out_dir / "fields" / name, truth.fields[t]);
    }

    nlohmann::ordered_json j;
    j["indexing"] = "0-based";
    j["T"] = vol.t_len;
    j["phases"] = {{"T", truth.phases.t_len}, {"ed", truth.phases.ed}, {"ms", truth.phases.ms},
                   {"es", truth.phases.es},   {"pf", truth.phases.pf}, {"md", truth.phases.md}};
    j["radius_profile_voxels"] = truth.radius_profile;
    j["config"] = {{"t_len", cfg.t_len},
                   {"shape", {cfg.t_len, cfg.spatial.z, cfg.spatial.y, cfg.spatial.x}},
                   {"center", cfg.resolved_center()},
                   {"inner_radius", cfg.inner_radius},
                   {"wall_thickness", cfg.wall_thickness},
                   {"amplitude", cfg.amplitude},
                   {"noise_sigma", cfg.noise_sigma},
                   {"phase_offset", cfg.phase_offset},
                   {"truncate_fraction", cfg.truncate_fraction},
                   {"seed", cfg.seed},
                   {"spacing_mm", cfg.spacing_mm}};

    std::ofstream out(out_dir / "truth.json");
    if (!out) throw io_error("cannot write " + (out_dir / "truth.json").string());
    out << j.dump(2) << "\n";
}

} // namespace cmr
