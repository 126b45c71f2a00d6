#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cmr/errors.hpp"
#include "cmr/pipeline.hpp"
#include "cmr/volume_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliState {
    cmr::RunConfig cfg;
    bool phantom_default = false;
    bool phantom_custom = false;
    std::vector<double> rvip_ant, rvip_inf;
    std::vector<int> crop_pad;
    std::string focus_name = "vol";
    std::string descriptor_csv;
    std::string fields_dir;
    std::string manifest_path;
    std::string out_file;
    bool gt_one_based = false;
    int map_original_t = 0;
};

void apply_config_file(const std::string& path, CliState& st) {
    std::ifstream in(path);
    if (!in) throw cmr::io_error("missing config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw cmr::io_error("malformed config " + path + ": " + e.what());
    }

    cmr::RunConfig& cfg = st.cfg;
    const auto get = [&](const char* key, auto& target) {
        if (j.contains(key)) target = j[key].template get<std::decay_t<decltype(target)>>();
    };
    get("input", cfg.input_path);
    get("out", cfg.out_dir);
    get("resample_mm", cfg.resample_mm);
    get("clip_quantile", cfg.clip_quantile);
    get("repeat_to", cfg.repeat_to);
    get("mask_quantile", cfg.mask_quantile);
    get("mse_quantile", cfg.mse_quantile);
    get("sigma", cfg.sigma);
    get("unmasked", cfg.unmasked);
    get("cutoff_threshold", cfg.cutoff_threshold);
    get("jobs", cfg.jobs);
    get("lambda", cfg.reg.lambda);
    get("ssim_window", cfg.reg.ssim_window);
    get("pyramid_levels", cfg.reg.pyramid_levels);
    get("iters_per_level", cfg.reg.iters_per_level);
    get("step_size", cfg.reg.step_size);
    get("convergence_tol", cfg.reg.convergence_tol);
    get("focus", st.focus_name);
    get("lv_mask", cfg.lv_mask_path);
}

void add_preprocess_opts(CLI::App* app, CliState& st) {
    app->add_option("--resample", st.cfg.resample_mm, "isotropic target spacing in mm");
    app->add_option("--clip-quantile", st.cfg.clip_quantile, "outlier clipping quantile");
    app->add_option("--repeat-to", st.cfg.repeat_to,
                    "repeat frames cyclically up to this length (0 = off)");
    app->add_option("--crop-pad", st.crop_pad, "center crop/pad to Z Y X voxels")
        ->expected(3);
}

void add_registration_opts(CLI::App* app, CliState& st) {
    app->add_option("--lambda", st.cfg.reg.lambda, "smoothness weight");
    app->add_option("--ssim-window", st.cfg.reg.ssim_window, "ssim window size (odd)");
    app->add_option("--levels", st.cfg.reg.pyramid_levels, "pyramid levels");
    app->add_option("--iters", st.cfg.reg.iters_per_level, "iterations per level");
    app->add_option("--step", st.cfg.reg.step_size, "descent step in voxels");
    app->add_option("--tol", st.cfg.reg.convergence_tol, "relative loss change stop");
    app->add_option("--jobs", st.cfg.jobs, "parallel pair registrations (0 = all cores)");
}

void add_focus_opts(CLI::App* app, CliState& st) {
    app->add_option("--focus", st.focus_name, "focus strategy: vol, mse, lv, sept");
    app->add_option("--mse-quantile", st.cfg.mse_quantile, "threshold for the mse focus");
    app->add_option("--lv-mask", st.cfg.lv_mask_path, "binary LV mask (raw+json, [Z,Y,X])");
    app->add_option("--rvip-ant", st.rvip_ant, "anterior RV insertion point z y x")->expected(3);
    app->add_option("--rvip-inf", st.rvip_inf, "inferior RV insertion point z y x")->expected(3);
    app->add_option("--mask-quantile", st.cfg.mask_quantile, "magnitude mask quantile");
    app->add_flag("--unmasked", st.cfg.unmasked, "average over all voxels instead of the mask");
    app->add_option("--sigma", st.cfg.sigma, "Gaussian smoothing of the direction curve, frames");
}

void add_phantom_opts(CLI::App* app, CliState& st) {
    app->add_flag("--phantom-default", st.phantom_default, "run on the built-in default phantom");
    app->add_flag("--phantom", st.phantom_custom, "run on a customized phantom");
    app->add_option("--phantom-t", st.cfg.phantom.t_len, "phantom frames");
    app->add_option("--phantom-z", st.cfg.phantom.spatial.z, "phantom slices");
    app->add_option("--phantom-y", st.cfg.phantom.spatial.y, "phantom rows");
    app->add_option("--phantom-x", st.cfg.phantom.spatial.x, "phantom columns");
    app->add_option("--phantom-amplitude", st.cfg.phantom.amplitude, "contraction amplitude");
    app->add_option("--phantom-offset", st.cfg.phantom.phase_offset, "starting-phase offset");
    app->add_option("--phantom-truncate", st.cfg.phantom.truncate_fraction,
                    "fraction of the cycle to keep (cut-off emulation)");
    app->add_option("--phantom-noise", st.cfg.phantom.noise_sigma, "intensity noise sigma");
    app->add_option("--phantom-inner-radius", st.cfg.phantom.inner_radius, "inner radius, voxels");
    app->add_option("--phantom-wall", st.cfg.phantom.wall_thickness, "wall thickness, voxels");
    app->add_option("--seed", st.cfg.phantom.seed, "phantom noise seed");
}

void finalize(CliState& st) {
    st.cfg.focus = cmr::focus_strategy_from_string(st.focus_name);
    st.cfg.use_phantom = st.phantom_default || st.phantom_custom;
    if (st.rvip_ant.size() == 3 && st.rvip_inf.size() == 3) {
        st.cfg.have_rvips = true;
        for (int i = 0; i < 3; ++i) {
            st.cfg.rvip_ant[i] = st.rvip_ant[i];
            st.cfg.rvip_inf[i] = st.rvip_inf[i];
        }
    }
    if (st.crop_pad.size() == 3) st.cfg.crop_pad = {st.crop_pad[0], st.crop_pad[1], st.crop_pad[2]};
}

int cmd_detect(CliState& st) {
    finalize(st);
    st.cfg.validate();
    if (st.cfg.use_phantom) {
        auto [vol, truth] = cmr::generate_phantom(st.cfg.phantom);
        cmr::save_phantom(fs::path(st.cfg.out_dir) / "phantom", st.cfg.phantom, vol, truth);
    }
    const cmr::DetectResult result = cmr::run_detect(st.cfg);
    cmr::write_detect_outputs(st.cfg, result);
    std::printf("detected phases: ED=%d MS=%d ES=%d PF=%d MD=%d (T=%d)\n",
                result.phases_original.ed, result.phases_original.ms, result.phases_original.es,
                result.phases_original.pf, result.phases_original.md,
                result.phases_original.t_len);
    if (result.qc.cutoff_flag)
        std::printf("warning: cut-off sequence suspected (robust score %.2f > %.2f)\n",
                    result.qc.robust_score, result.qc.threshold);
    return 0;
}

int cmd_register(CliState& st) {
    finalize(st);
    st.cfg.validate();
    const cmr::Volume4D raw = cmr::load_input(st.cfg);
    auto [pre, reports] = cmr::preprocess(raw, st.cfg);
    (void)reports;
    const cmr::SequenceRegistration seq =
        cmr::register_sequence_detailed(pre, st.cfg.reg, st.cfg.jobs);

    const fs::path out(st.cfg.out_dir);
    std::vector<cmr::VectorField3D> fields;
    for (const auto& p : seq.pairs) fields.push_back(p.field);
    cmr::save_fields(out / "fields", fields);
    cmr::write_registration_json(out / "registration.json", st.cfg.reg, seq);
    std::printf("registered %zu frame pairs\n", seq.pairs.size());
    return 0;
}

int cmd_descriptor(CliState& st) {
    finalize(st);
    st.cfg.validate();
    const cmr::Volume4D raw = cmr::load_input(st.cfg);
    auto [pre, reports] = cmr::preprocess(raw, st.cfg);
    (void)reports;
    const std::vector<cmr::VectorField3D> fields = cmr::load_fields(st.fields_dir);
    const cmr::MotionDescriptor desc = cmr::build_descriptor(fields, pre, st.cfg);

    const fs::path out(st.cfg.out_dir);
    fs::create_directories(out);
    cmr::write_descriptor_csv(out / "descriptor.csv", desc);
    cmr::write_descriptor_sidecar(out / "descriptor.json", desc);
    return 0;
}

int cmd_phases(CliState& st) {
    cmr::MotionDescriptor desc = cmr::read_descriptor_csv(st.descriptor_csv);
    cmr::PhaseSet ps = cmr::extract_phases(desc);
    if (st.map_original_t > 0) {
        cmr::PreprocessReport rep;
        rep.original_t = st.map_original_t;
        rep.repeated_to = static_cast<int>(desc.alpha_raw.size());
        ps = cmr::phases_to_original(ps, rep);
    }
    cmr::write_phases_json(st.out_file, ps);
    std::printf("ED=%d MS=%d ES=%d PF=%d MD=%d (T=%d)\n", ps.ed, ps.ms, ps.es, ps.pf, ps.md,
                ps.t_len);
    return 0;
}

int cmd_qc(CliState& st) {
    const cmr::MotionDescriptor desc = cmr::read_descriptor_csv(st.descriptor_csv);
    const cmr::QcVerdict qc = cmr::detect_cutoff(desc.vnorm_raw_mm, st.cfg.cutoff_threshold);
    cmr::write_qc_json(st.out_file, qc);
    std::printf("robust score %.3f, cutoff %s\n", qc.robust_score,
                qc.cutoff_flag ? "suspected" : "not indicated");
    return 0;
}

int cmd_phantom(CliState& st) {
    auto [vol, truth] = cmr::generate_phantom(st.cfg.phantom);
    cmr::save_phantom(st.cfg.out_dir, st.cfg.phantom, vol, truth);
    std::printf("phantom written to %s (T=%d)\n", st.cfg.out_dir.c_str(), vol.t_len);
    return 0;
}

int cmd_eval(CliState& st) {
    std::ifstream in(st.manifest_path);
    if (!in) throw cmr::io_error("missing manifest: " + st.manifest_path);
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw cmr::io_error("malformed manifest: " + std::string(e.what()));
    }
    if (!manifest.is_array()) throw cmr::io_error("manifest must be a JSON array of subjects");

    std::vector<cmr::EvalRow> rows;
    std::vector<cmr::PhaseEval> evals;
    for (const auto& entry : manifest) {
        cmr::EvalRow row;
        row.subject = entry.at("subject").get<std::string>();
        const cmr::PhaseSet pred = cmr::read_phases_json(entry.at("pred").get<std::string>());
        const cmr::PhaseSet gt =
            cmr::read_phases_json(entry.at("gt").get<std::string>(), st.gt_one_based);
        row.eval = cmr::evaluate_phases(pred, gt);
        if (entry.contains("qc")) {
            std::ifstream qin(entry["qc"].get<std::string>());
            if (!qin) throw cmr::io_error("missing qc file for subject " + row.subject);
            json qj;
            qin >> qj;
            cmr::QcVerdict qc;
            qc.cutoff_flag = qj.at("cutoff_flag").get<bool>();
            qc.robust_score = qj.at("robust_score").get<double>();
            qc.threshold = qj.value("threshold", 0.0);
            qc.last_to_first_mag_mm = qj.value("last_to_first_mag_mm", 0.0);
            row.qc = qc;
        }
        evals.push_back(row.eval);
        rows.push_back(std::move(row));
    }

    const fs::path out(st.cfg.out_dir);
    fs::create_directories(out);
    cmr::write_eval_csv(out / "eval.csv", rows);
    cmr::write_cohort_summary(out / "summary.json", cmr::aggregate(evals));
    std::printf("evaluated %zu subjects\n", rows.size());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-supervised cardiac phase detection from 4D image sequences"};
    app.require_subcommand(1);

    CliState st;

    // config file values are loaded first; explicit flags override them
    std::string config_path;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
    try {
        if (!config_path.empty()) apply_config_file(config_path, st);
    } catch (const cmr::io_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    app.add_option("--config", config_path, "JSON config file (flags override)");

    CLI::App* detect = app.add_subcommand("detect", "end-to-end phase detection");
    detect->add_option("--input", st.cfg.input_path, "input 4D volume (.json or .nrrd)");
    detect->add_option("--out", st.cfg.out_dir, "output directory");
    add_preprocess_opts(detect, st);
    add_registration_opts(detect, st);
    add_focus_opts(detect, st);
    add_phantom_opts(detect, st);
    detect->add_option("--cutoff-threshold", st.cfg.cutoff_threshold, "QC outlier threshold");

    CLI::App* reg = app.add_subcommand("register", "sequential deformable registration only");
    reg->add_option("--input", st.cfg.input_path, "input 4D volume")->required();
    reg->add_option("--out", st.cfg.out_dir, "output directory");
    add_preprocess_opts(reg, st);
    add_registration_opts(reg, st);

    CLI::App* desc = app.add_subcommand("descriptor", "reduce precomputed fields to 1D curves");
    desc->add_option("--input", st.cfg.input_path, "input 4D volume")->required();
    desc->add_option("--fields", st.fields_dir, "directory with field_*.json")->required();
    desc->add_option("--out", st.cfg.out_dir, "output directory");
    add_preprocess_opts(desc, st);
    add_focus_opts(desc, st);

    CLI::App* ph = app.add_subcommand("phases", "extract key frames from a descriptor CSV");
    ph->add_option("--descriptor", st.descriptor_csv, "descriptor.csv path")->required();
    ph->add_option("--out", st.out_file, "output phases JSON")->required();
    ph->add_option("--map-original-t", st.map_original_t,
                   "map indices back to this original sequence length");

    CLI::App* qc = app.add_subcommand("qc", "cut-off sequence check from a descriptor CSV");
    qc->add_option("--descriptor", st.descriptor_csv, "descriptor.csv path")->required();
    qc->add_option("--out", st.out_file, "output QC JSON")->required();
    qc->add_option("--cutoff-threshold", st.cfg.cutoff_threshold, "QC outlier threshold");

    CLI::App* phm = app.add_subcommand("phantom", "generate the analytic beating phantom");
    add_phantom_opts(phm, st);
    phm->add_option("--out", st.cfg.out_dir, "output directory");

    CLI::App* ev = app.add_subcommand("eval", "periodic frame difference evaluation");
    ev->add_option("--manifest", st.manifest_path, "JSON manifest of subjects")->required();
    ev->add_option("--out", st.cfg.out_dir, "output directory");
    ev->add_flag("--gt-one-based", st.gt_one_based, "ground-truth labels are 1-indexed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (detect->parsed()) return cmd_detect(st);
        if (reg->parsed()) return cmd_register(st);
        if (desc->parsed()) return cmd_descriptor(st);
        if (ph->parsed()) return cmd_phases(st);
        if (qc->parsed()) return cmd_qc(st);
        if (phm->parsed()) return cmd_phantom(st);
        if (ev->parsed()) return cmd_eval(st);
    } catch (const cmr::usage_error& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 1;
    } catch (const cmr::io_error& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return 2;
    } catch (const cmr::rule_error& e) {
        std::fprintf(stderr, "extraction error: %s\n", e.what());
        return 4;
    } catch (const cmr::numeric_error& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 1;
}
