#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cmr/descriptor.hpp"
#include "cmr/evalqc.hpp"
#include "cmr/phantom.hpp"
#include "cmr/phases.hpp"
#include "cmr/registration.hpp"
#include "cmr/volume.hpp"

namespace cmr {

struct RunConfig {
    // input: exactly one of input_path / phantom
    std::string input_path;
    bool use_phantom = false;
    PhantomConfig phantom;
    std::string out_dir = "out";

    // preprocessing
    double resample_mm = 2.5;
    double clip_quantile = 0.999;
    int repeat_to = 0;            // 0 = no temporal repetition
    Shape3 crop_pad{0, 0, 0};     // zeros = no crop/pad

    // registration
    RegistrationConfig reg;
    int jobs = 0;

    // descriptor
    FocusStrategy focus = FocusStrategy::vol;
    double mse_quantile = 0.70;
    std::string lv_mask_path;
    std::array<double, 3> rvip_ant{-1.0, -1.0, -1.0};
    std::array<double, 3> rvip_inf{-1.0, -1.0, -1.0};
    bool have_rvips = false;
    double mask_quantile = 0.70;
    bool unmasked = false;
    double sigma = 2.0;

    // quality control
    double cutoff_threshold = 5.0;

    void validate() const;
};

struct DetectResult {
    Volume4D preprocessed;
    PreprocessReport clip_report;
    std::optional<PreprocessReport> repeat_report;
    SequenceRegistration registration;
    FocusPoint focus;
    Mask3 mask;
    MotionDescriptor descriptor;
    PhaseSet phases;           // on the registered time base
    PhaseSet phases_original;  // mapped back when repetition was enabled
    QcVerdict qc;
};

/// load -> preprocess -> register -> focus -> mask -> reduce -> normalize ->
/// extract -> qc, all in memory.
DetectResult run_detect(const RunConfig& cfg);

/// Stage pieces shared by the CLI subcommands (identical code paths, so the
/// stage-wise outputs match the end-to-end run byte for byte).
Volume4D load_input(const RunConfig& cfg);
std::pair<Volume4D, std::pair<PreprocessReport, std::optional<PreprocessReport>>> preprocess(
    const Volume4D& vol, const RunConfig& cfg);
FocusPoint resolve_focus(const Volume4D& preprocessed, const RunConfig& cfg);
MotionDescriptor build_descriptor(const std::vector<VectorField3D>& fields,
                                  const Volume4D& preprocessed, const RunConfig& cfg,
                                  FocusPoint* focus_out = nullptr, Mask3* mask_out = nullptr);

// ---- file interfaces -------------------------------------------------

void write_descriptor_csv(const std::filesystem::path& path, const MotionDescriptor& desc);
MotionDescriptor read_descriptor_csv(const std::filesystem::path& path);
void write_descriptor_sidecar(const std::filesystem::path& path, const MotionDescriptor& desc);

void write_phases_json(const std::filesystem::path& path, const PhaseSet& ps);
PhaseSet read_phases_json(const std::filesystem::path& path, bool one_based = false);

void write_qc_json(const std::filesystem::path& path, const QcVerdict& qc);

void write_registration_json(const std::filesystem::path& path, const RegistrationConfig& cfg,
                             const SequenceRegistration& seq);
void save_fields(const std::filesystem::path& dir, const std::vector<VectorField3D>& fields);
std::vector<VectorField3D> load_fields(const std::filesystem::path& dir);

struct EvalRow {
    std::string subject;
    PhaseEval eval;
    std::optional<QcVerdict> qc;
};
void write_eval_csv(const std::filesystem::path& path, const std::vector<EvalRow>& rows);
void write_cohort_summary(const std::filesystem::path& path, const CohortSummary& summary);

/// Writes descriptor CSV/sidecar, phases JSON, QC JSON, the SVG plot and
/// registration artifacts into cfg.out_dir.
void write_detect_outputs(const RunConfig& cfg, const DetectResult& result);

} // namespace cmr
