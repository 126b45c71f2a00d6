#include "cmr/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cmr/errors.hpp"
#include "cmr/svg_plot.hpp"
#include "cmr/volume_io.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace cmr {

namespace {

std::string g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

Mask3 load_binary_mask(const fs::path& path) {
    const RawJsonArray arr = load_raw_json(path);
    if (arr.shape.size() != 3)
        throw io_error(path.string() + ": mask container must have shape [Z,Y,X]");
    Mask3 mask({arr.shape[0], arr.shape[1], arr.shape[2]}, 0);
    for (std::size_t i = 0; i < arr.data.size(); ++i) mask.data[i] = arr.data[i] != 0.0f ? 1 : 0;
    return mask;
}

} // namespace

void RunConfig::validate() const {
    if (use_phantom == !input_path.empty())
        throw usage_error("exactly one input source required: --input or a phantom");
    if (out_dir.empty()) throw usage_error("output directory required");
    if (!(resample_mm > 0.0)) throw usage_error("resample spacing must be > 0");
    if (!(clip_quantile > 0.5 && clip_quantile <= 1.0))
        throw usage_error("clip quantile must be in (0.5, 1]");
    if (repeat_to < 0) throw usage_error("repeat length must be >= 0");
    if (!(mask_quantile > 0.0 && mask_quantile < 1.0))
        throw usage_error("mask quantile must be in (0, 1)");
    if (!(mse_quantile > 0.0 && mse_quantile < 1.0))
        throw usage_error("mse focus quantile must be in (0, 1)");
    if (sigma < 0.0) throw usage_error("sigma must be >= 0");
    if (focus == FocusStrategy::sept && !have_rvips)
        throw usage_error("--focus sept requires --rvip-ant and --rvip-inf coordinates");
    if (focus == FocusStrategy::lv && lv_mask_path.empty())
        throw usage_error("--focus lv requires --lv-mask");
    reg.validate();
}

Volume4D load_input(const RunConfig& cfg) {
    if (cfg.use_phantom) {
        auto [vol, truth] = generate_phantom(cfg.phantom);
        (void)truth;
        return vol;
    }
    return load_volume4d(cfg.input_path);
}

std::pair<Volume4D, std::pair<PreprocessReport, std::optional<PreprocessReport>>> preprocess(
    const Volume4D& vol, const RunConfig& cfg) {
    Volume4D cur = resample_isotropic(vol, cfg.resample_mm);

    std::optional<PreprocessReport> repeat_rep;
    if (cfg.repeat_to > 0) {
        auto [repeated, rep] = repeat_temporal(cur, cfg.repeat_to);
        cur = std::move(repeated);
        repeat_rep = rep;
    }
    if (cfg.crop_pad.z > 0 && cfg.crop_pad.y > 0 && cfg.crop_pad.x > 0)
        cur = crop_pad_centered(cur, cfg.crop_pad);

    auto [standardized, clip_rep] = clip_standardize(cur, cfg.clip_quantile);
    clip_rep.resampled_spacing_mm = cfg.resample_mm;
    if (repeat_rep) clip_rep.original_t = repeat_rep->original_t;
    return {std::move(standardized), {clip_rep, repeat_rep}};
}

FocusPoint resolve_focus(const Volume4D& preprocessed, const RunConfig& cfg) {
    switch (cfg.focus) {
        case FocusStrategy::vol: return focus_vol(preprocessed);
        case FocusStrategy::mse: return focus_mse(preprocessed, cfg.mse_quantile);
        case FocusStrategy::lv: return focus_lv(load_binary_mask(cfg.lv_mask_path));
        case FocusStrategy::sept:
            return focus_sept(cfg.rvip_ant, cfg.rvip_inf, preprocessed.spatial);
    }
    throw usage_error("unknown focus strategy");
}

MotionDescriptor build_descriptor(const std::vector<VectorField3D>& fields,
                                  const Volume4D& preprocessed, const RunConfig& cfg,
                                  FocusPoint* focus_out, Mask3* mask_out) {
    const FocusPoint focus = resolve_focus(preprocessed, cfg);
    Mask3 mask;
    if (cfg.unmasked)
        mask = Mask3(fields.front().shape, 1);
    else
        mask = magnitude_mask(fields, cfg.mask_quantile);

    MotionDescriptor desc = reduce_descriptor(fields, focus, mask);
    desc.mask_quantile = cfg.unmasked ? 0.0 : cfg.mask_quantile;
    desc = smooth_normalize(std::move(desc), cfg.sigma);

    if (focus_out) *focus_out = focus;
    if (mask_out) *mask_out = std::move(mask);
    return desc;
}

DetectResult run_detect(const RunConfig& cfg) {
    cfg.validate();

    DetectResult res;
    const Volume4D raw = load_input(cfg);
    auto [pre, reports] = preprocess(raw, cfg);
    res.preprocessed = std::move(pre);
    res.clip_report = reports.first;
    res.repeat_report = reports.second;

    res.registration = register_sequence_detailed(res.preprocessed, cfg.reg, cfg.jobs);

    std::vector<VectorField3D> fields;
    fields.reserve(res.registration.pairs.size());
    for (const auto& p : res.registration.pairs) fields.push_back(p.field);

    res.descriptor = build_descriptor(fields, res.preprocessed, cfg, &res.focus, &res.mask);
    res.phases = extract_phases(res.descriptor);
    res.phases_original =
        res.repeat_report ? phases_to_original(res.phases, *res.repeat_report) : res.phases;
    res.qc = detect_cutoff(res.descriptor.vnorm_raw_mm, cfg.cutoff_threshold);
    return res;
}

// ---- file interfaces -------------------------------------------------

void write_descriptor_csv(const fs::path& path, const MotionDescriptor& desc) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path.string());
    out << "t,alpha_raw,alpha_norm,vnorm_raw_mm,vnorm_norm\n";
    for (std::size_t t = 0; t < desc.alpha_raw.size(); ++t) {
        out << t << ',' << g9(desc.alpha_raw[t]) << ','
            << g9(desc.alpha_norm.empty() ? 0.0 : desc.alpha_norm[t]) << ','
            << g9(desc.vnorm_raw_mm[t]) << ','
            << g9(desc.vnorm_norm.empty() ? 0.0 : desc.vnorm_norm[t]) << "\n";
    }
}

MotionDescriptor read_descriptor_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("missing file: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("t,alpha_raw", 0) != 0)
        throw io_error(path.string() + ": not a descriptor CSV (bad header)");

    MotionDescriptor desc;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<double> cells;
        while (std::getline(row, cell, ',')) cells.push_back(std::stod(cell));
        if (cells.size() != 5)
            throw io_error(path.string() + ": descriptor CSV row with wrong column count");
        desc.alpha_raw.push_back(cells[1]);
        desc.alpha_norm.push_back(cells[2]);
        desc.vnorm_raw_mm.push_back(cells[3]);
        desc.vnorm_norm.push_back(cells[4]);
    }
    if (desc.alpha_raw.empty()) throw io_error(path.string() + ": empty descriptor CSV");
    return desc;
}

void write_descriptor_sidecar(const fs::path& path, const MotionDescriptor& desc) {
    ordered_json j;
    j["indexing"] = "0-based";
    j["focus"] = {{"strategy", to_string(desc.focus.strategy)},
                  {"coord_zyx", desc.focus.coord}};
    j["mask_quantile"] = desc.mask_quantile;
    j["sigma_frames"] = desc.sigma;
    j["T"] = desc.alpha_raw.size();
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

void write_phases_json(const fs::path& path, const PhaseSet& ps) {
    ordered_json j;
    j["T"] = ps.t_len;
    j["ed"] = ps.ed;
    j["ms"] = ps.ms;
    j["es"] = ps.es;
    j["pf"] = ps.pf;
    j["md"] = ps.md;
    j["ties"] = {{"ms", ps.ms_tie}};
    j["indexing"] = "0-based";
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

PhaseSet read_phases_json(const fs::path& path, bool one_based) {
    std::ifstream in(path);
    if (!in) throw io_error("missing file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw io_error("malformed phases JSON " + path.string() + ": " + e.what());
    }
    if (j.contains("phases")) j = j["phases"];  // accept a phantom truth.json

    PhaseSet ps;
    try {
        ps.t_len = j.at("T").get<int>();
        const int off = one_based ? 1 : 0;
        ps.ed = j.at("ed").get<int>() - off;
        ps.ms = j.at("ms").get<int>() - off;
        ps.es = j.at("es").get<int>() - off;
        ps.pf = j.at("pf").get<int>() - off;
        ps.md = j.at("md").get<int>() - off;
    } catch (const nlohmann::json::exception& e) {
        throw io_error(path.string() + ": missing phase field: " + e.what());
    }
    return ps;
}

void write_qc_json(const fs::path& path, const QcVerdict& qc) {
    ordered_json j;
    j["cutoff_flag"] = qc.cutoff_flag;
    j["last_to_first_mag_mm"] = qc.last_to_first_mag_mm;
    j["robust_score"] = qc.robust_score;
    j["threshold"] = qc.threshold;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

void write_registration_json(const fs::path& path, const RegistrationConfig& cfg,
                             const SequenceRegistration& seq) {
    ordered_json j;
    j["config"] = {{"lambda", cfg.lambda},
                   {"ssim_window", cfg.ssim_window},
                   {"ssim_eps1", cfg.ssim_eps1},
                   {"ssim_eps2", cfg.ssim_eps2},
                   {"pyramid_levels", cfg.pyramid_levels},
                   {"iters_per_level", cfg.iters_per_level},
                   {"step_size", cfg.step_size},
                   {"convergence_tol", cfg.convergence_tol}};
    ordered_json pairs = ordered_json::array();
    const int t_len = static_cast<int>(seq.pairs.size());
    for (int t = 0; t < t_len; ++t) {
        const auto& p = seq.pairs[t];
        ordered_json levels = ordered_json::array();
        for (const auto& lv : p.levels)
            levels.push_back({{"level", lv.level},
                              {"shape", {lv.shape.z, lv.shape.y, lv.shape.x}},
                              {"losses", lv.losses},
                              {"fullres_loss_after", lv.fullres_loss_after}});
        pairs.push_back({{"t", t},
                         {"fixed_frame", t},
                         {"moving_frame", (t + 1) % t_len},
                         {"initial_loss", p.initial_loss},
                         {"final_loss", p.final_loss},
                         {"levels", levels}});
    }
    j["pairs"] = pairs;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

void save_fields(const fs::path& dir, const std::vector<VectorField3D>& fields) {
    fs::create_directories(dir);
    for (std::size_t t = 0; t < fields.size(); ++t) {
        char name[32];
        std::snprintf(name, sizeof(name), "field_%03zu.json", t);
        save_field(dir / name, fields[t]);
    }
}

std::vector<VectorField3D> load_fields(const fs::path& dir) {
    std::vector<fs::path> paths;
    if (!fs::is_directory(dir)) throw io_error("missing field directory: " + dir.string());
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("field_", 0) == 0 && entry.path().extension() == ".json")
            paths.push_back(entry.path());
    }
    if (paths.empty()) throw io_error("no field_*.json files in " + dir.string());
    std::sort(paths.begin(), paths.end());

    std::vector<VectorField3D> fields;
    fields.reserve(paths.size());
    for (const auto& p : paths) fields.push_back(load_field(p));
    return fields;
}

void write_eval_csv(const fs::path& path, const std::vector<EvalRow>& rows) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path.string());
    out << "subject,T,ed_pfd,ms_pfd,es_pfd,pf_pfd,md_pfd,cutoff_flag,robust_score\n";
    for (const auto& r : rows) {
        out << r.subject << ',' << r.eval.t_len;
        for (int i = 0; i < 5; ++i) out << ',' << r.eval.per_phase_pfd[i];
        if (r.qc)
            out << ',' << (r.qc->cutoff_flag ? 1 : 0) << ',' << g9(r.qc->robust_score);
        else
            out << ",,";
        out << "\n";
    }
}

void write_cohort_summary(const fs::path& path, const CohortSummary& summary) {
    ordered_json j;
    j["n"] = summary.n;
    j["indexing"] = "0-based";
    for (int i = 0; i < 5; ++i) {
        const auto& s = summary.per_phase[i];
        j[kPhaseNames[i]] = {
            {"mean", s.mean}, {"sd", s.sd}, {"median", s.median}, {"max", s.max}};
    }
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

void write_detect_outputs(const RunConfig& cfg, const DetectResult& result) {
    const fs::path out(cfg.out_dir);
    fs::create_directories(out);

    std::vector<VectorField3D> fields;
    fields.reserve(result.registration.pairs.size());
    for (const auto& p : result.registration.pairs) fields.push_back(p.field);
    save_fields(out / "fields", fields);
    write_registration_json(out / "registration.json", cfg.reg, result.registration);

    write_descriptor_csv(out / "descriptor.csv", result.descriptor);
    write_descriptor_sidecar(out / "descriptor.json", result.descriptor);
    write_phases_json(out / "phases.json", result.phases_original);
    write_qc_json(out / "qc.json", result.qc);
    write_descriptor_plot(out / "plot.svg", result.descriptor, result.phases);
}

} // namespace cmr
