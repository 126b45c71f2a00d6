#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "cmr/errors.hpp"
#include "cmr/pipeline.hpp"
#include "cmr/volume_io.hpp"
#include "helpers.hpp"

using namespace cmr;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    return std::string((std::istreambuf_iterator<char>(in)), {});
}

// Small, fast phantom configuration for pipeline-level tests.
PhantomConfig small_phantom() {
    PhantomConfig cfg;
    cfg.t_len = 15;
    cfg.spatial = {12, 32, 32};
    cfg.inner_radius = 2.5;
    cfg.wall_thickness = 1.6;
    cfg.seed = 99;
    return cfg;
}

RunConfig small_run(const fs::path& out) {
    RunConfig cfg;
    cfg.use_phantom = true;
    cfg.phantom = small_phantom();
    cfg.out_dir = out.string();
    cfg.reg.iters_per_level = 30;
    cfg.jobs = 2;
    return cfg;
}

} // namespace

TEST_CASE("run config validation") {
    RunConfig cfg;
    SUBCASE("needs exactly one input source") {
        CHECK_THROWS_AS(cfg.validate(), usage_error);  // neither
        cfg.input_path = "x.json";
        cfg.use_phantom = true;
        CHECK_THROWS_AS(cfg.validate(), usage_error);  // both
    }
    SUBCASE("sept focus needs landmarks") {
        cfg.use_phantom = true;
        cfg.focus = FocusStrategy::sept;
        CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("rvip"), usage_error);
    }
    SUBCASE("lv focus needs a mask path") {
        cfg.use_phantom = true;
        cfg.focus = FocusStrategy::lv;
        CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("lv-mask"), usage_error);
    }
    SUBCASE("missing input file raises an io error") {
        cfg.input_path = "/nonexistent/vol.json";
        CHECK_THROWS_AS(load_input(cfg), io_error);
    }
}

TEST_CASE("descriptor csv round trip") {
    const auto dir = testutil::temp_dir("descriptor_csv");
    MotionDescriptor d;
    d.alpha_raw = {-0.5, -1.0, 0.25, 1.0, 0.5};
    d.alpha_norm = {-0.4, -1.0, 0.3, 1.0, 0.6};
    d.vnorm_raw_mm = {0.1, 0.9, 0.4, 0.2, 0.15};
    d.vnorm_norm = {0.0, 1.0, 0.375, 0.125, 0.0625};

    write_descriptor_csv(dir / "d.csv", d);
    const MotionDescriptor back = read_descriptor_csv(dir / "d.csv");
    REQUIRE(back.alpha_raw.size() == 5);
    for (int t = 0; t < 5; ++t) {
        CHECK(back.alpha_raw[t] == doctest::Approx(d.alpha_raw[t]).epsilon(1e-9));
        CHECK(back.alpha_norm[t] == doctest::Approx(d.alpha_norm[t]).epsilon(1e-9));
        CHECK(back.vnorm_raw_mm[t] == doctest::Approx(d.vnorm_raw_mm[t]).epsilon(1e-9));
        CHECK(back.vnorm_norm[t] == doctest::Approx(d.vnorm_norm[t]).epsilon(1e-9));
    }

    SUBCASE("wrong header is rejected") {
        std::ofstream bad(dir / "bad.csv");
        bad << "frame,alpha\n0,1\n";
        bad.close();
        CHECK_THROWS_AS(read_descriptor_csv(dir / "bad.csv"), io_error);
    }
}

TEST_CASE("phases json round trip and truth ingestion") {
    const auto dir = testutil::temp_dir("phases_json");
    PhaseSet ps;
    ps.t_len = 30;
    ps.ed = 0;
    ps.ms = 5;
    ps.es = 10;
    ps.pf = 13;
    ps.md = 22;
    write_phases_json(dir / "phases.json", ps);

    const PhaseSet back = read_phases_json(dir / "phases.json");
    CHECK(back.t_len == 30);
    CHECK(back.ed == 0);
    CHECK(back.md == 22);

    SUBCASE("phantom truth nesting is accepted") {
        auto [vol, truth] = generate_phantom(small_phantom());
        save_phantom(dir / "ph", small_phantom(), vol, truth);
        const PhaseSet t = read_phases_json(dir / "ph" / "truth.json");
        CHECK(t.t_len == truth.phases.t_len);
        CHECK(t.ms == truth.phases.ms);
    }
    SUBCASE("one-based labels convert on ingestion") {
        const PhaseSet one = read_phases_json(dir / "phases.json", true);
        CHECK(one.ed == -1 + 0);  // 0-based file read as 1-based shifts down
        CHECK(one.ms == 4);
    }
}

TEST_CASE("field save/load round trip") {
    const auto dir = testutil::temp_dir("fields_io");
    cmr::Rng rng(70);
    std::vector<VectorField3D> fields;
    for (int t = 0; t < 3; ++t) {
        VectorField3D f({3, 4, 5}, 2.5);
        for (auto& d : f.disp) d = rng.normal();
        fields.push_back(std::move(f));
    }
    save_fields(dir / "fields", fields);
    const auto back = load_fields(dir / "fields");
    REQUIRE(back.size() == 3);
    CHECK(back[1].shape == fields[1].shape);
    CHECK(back[1].grid_spacing_mm == doctest::Approx(2.5));
    for (std::size_t i = 0; i < fields[1].disp.size(); ++i)
        CHECK(back[1].disp[i] == doctest::Approx(fields[1].disp[i]).epsilon(1e-6));
}

TEST_CASE("eval csv format") {
    const auto dir = testutil::temp_dir("eval_csv");
    EvalRow row;
    row.subject = "s01";
    row.eval.t_len = 30;
    row.eval.per_phase_pfd = {0, 1, 0, 2, 1};
    QcVerdict qc;
    qc.cutoff_flag = true;
    qc.robust_score = 7.25;
    row.qc = qc;

    write_eval_csv(dir / "eval.csv", {row});
    const std::string text = slurp(dir / "eval.csv");
    CHECK(text.find("subject,T,ed_pfd,ms_pfd,es_pfd,pf_pfd,md_pfd,cutoff_flag,robust_score") !=
          std::string::npos);
    CHECK(text.find("s01,30,0,1,0,2,1,1,7.25") != std::string::npos);
}

TEST_CASE("end-to-end detect on a small phantom") {
    const auto out = testutil::temp_dir("detect_small");
    RunConfig cfg = small_run(out);

    const DetectResult res = run_detect(cfg);
    write_detect_outputs(cfg, res);

    SUBCASE("artifacts exist") {
        CHECK(fs::exists(out / "descriptor.csv"));
        CHECK(fs::exists(out / "descriptor.json"));
        CHECK(fs::exists(out / "phases.json"));
        CHECK(fs::exists(out / "qc.json"));
        CHECK(fs::exists(out / "plot.svg"));
        CHECK(fs::exists(out / "registration.json"));
        CHECK(fs::exists(out / "fields" / "field_000.json"));
    }
    SUBCASE("phase set is ordered and in range") {
        CHECK(res.phases.ordered());
        CHECK(res.phases.t_len == cfg.phantom.t_len);
    }
    SUBCASE("reruns are byte-identical") {
        const auto out2 = testutil::temp_dir("detect_small_rerun");
        RunConfig cfg2 = small_run(out2);
        const DetectResult res2 = run_detect(cfg2);
        write_detect_outputs(cfg2, res2);
        for (const char* name : {"descriptor.csv", "phases.json", "qc.json", "plot.svg",
                                 "registration.json"})
            CHECK(slurp(out / name) == slurp(out2 / name));
    }
    SUBCASE("pipeline equals the composition of stage functions") {
        // register -> descriptor -> phases -> qc with the same config
        const Volume4D raw = load_input(cfg);
        auto [pre, reports] = preprocess(raw, cfg);
        const SequenceRegistration seq = register_sequence_detailed(pre, cfg.reg, cfg.jobs);
        std::vector<VectorField3D> fields;
        for (const auto& p : seq.pairs) fields.push_back(p.field);
        const MotionDescriptor desc = build_descriptor(fields, pre, cfg);
        const PhaseSet phases = extract_phases(desc);
        const QcVerdict qc = detect_cutoff(desc.vnorm_raw_mm, cfg.cutoff_threshold);

        const auto stage_out = testutil::temp_dir("detect_small_stages");
        write_descriptor_csv(stage_out / "descriptor.csv", desc);
        write_phases_json(stage_out / "phases.json", phases);
        write_qc_json(stage_out / "qc.json", qc);

        CHECK(slurp(out / "descriptor.csv") == slurp(stage_out / "descriptor.csv"));
        CHECK(slurp(out / "phases.json") == slurp(stage_out / "phases.json"));
        CHECK(slurp(out / "qc.json") == slurp(stage_out / "qc.json"));
    }
}

TEST_CASE("focus strategy plumbing") {
    const auto dir = testutil::temp_dir("focus_plumbing");
    RunConfig cfg = small_run(dir);
    const Volume4D raw = load_input(cfg);
    auto [pre, reports] = preprocess(raw, cfg);

    SUBCASE("volume center") {
        cfg.focus = FocusStrategy::vol;
        const FocusPoint fp = resolve_focus(pre, cfg);
        CHECK(fp.coord[0] == doctest::Approx((pre.spatial.z - 1) / 2.0));
    }
    SUBCASE("septum midpoint from landmarks") {
        cfg.focus = FocusStrategy::sept;
        cfg.have_rvips = true;
        cfg.rvip_ant = {4.0, 10.0, 12.0};
        cfg.rvip_inf = {6.0, 14.0, 20.0};
        const FocusPoint fp = resolve_focus(pre, cfg);
        CHECK(fp.coord == std::array<double, 3>{5.0, 12.0, 16.0});
    }
    SUBCASE("lv centroid from a mask file") {
        Mask3 mask(pre.spatial, 0);
        mask(5, 16, 16) = 1;
        mask(7, 18, 18) = 1;
        RawJsonArray arr;
        arr.shape = {pre.spatial.z, pre.spatial.y, pre.spatial.x};
        arr.data.assign(mask.data.begin(), mask.data.end());
        save_raw_json(dir / "lv.json", arr);

        cfg.focus = FocusStrategy::lv;
        cfg.lv_mask_path = (dir / "lv.json").string();
        const FocusPoint fp = resolve_focus(pre, cfg);
        CHECK(fp.coord == std::array<double, 3>{6.0, 17.0, 17.0});
    }
    SUBCASE("mse focus stays near the phantom center") {
        cfg.focus = FocusStrategy::mse;
        const FocusPoint fp = resolve_focus(pre, cfg);
        CHECK(std::fabs(fp.coord[1] - (pre.spatial.y - 1) / 2.0) < 2.0);
    }
}

TEST_CASE("unmasked reduction flag averages over the whole grid") {
    const auto dir = testutil::temp_dir("unmasked_flag");
    RunConfig cfg = small_run(dir);
    cfg.unmasked = true;
    const DetectResult res = run_detect(cfg);
    CHECK(res.descriptor.mask_quantile == 0.0);
    std::size_t kept = 0;
    for (auto v : res.mask.data) kept += v;
    CHECK(kept == res.mask.data.size());
    CHECK(res.phases.ordered());
}

TEST_CASE("detection is independent of the starting phase, end to end") {
    // An offset phantom contains the same frames cyclically relabeled, so
    // registration, reduction and extraction all commute with the shift and
    // the detected phases move by exactly the offset.
    const int k = 6;
    const auto out_a = testutil::temp_dir("offset_base");
    const auto out_b = testutil::temp_dir("offset_shifted");
    RunConfig base = small_run(out_a);
    RunConfig shifted = small_run(out_b);
    shifted.phantom.phase_offset = k;

    const DetectResult res_a = run_detect(base);
    const DetectResult res_b = run_detect(shifted);
    const int t_len = base.phantom.t_len;

    CHECK(res_b.phases.ed == (res_a.phases.ed + k) % t_len);
    CHECK(res_b.phases.ms == (res_a.phases.ms + k) % t_len);
    CHECK(res_b.phases.es == (res_a.phases.es + k) % t_len);
    CHECK(res_b.phases.pf == (res_a.phases.pf + k) % t_len);
    CHECK(res_b.phases.md == (res_a.phases.md + k) % t_len);

    // the magnitude curve is the rolled original, bit for bit
    for (int t = 0; t < t_len; ++t)
        CHECK(res_b.descriptor.vnorm_raw_mm[(t + k) % t_len] ==
              res_a.descriptor.vnorm_raw_mm[t]);
}

TEST_CASE("repeat-to-40 path maps phases back to the original base") {
    const auto out = testutil::temp_dir("detect_repeat");
    RunConfig cfg = small_run(out);
    cfg.repeat_to = 20;

    const DetectResult res = run_detect(cfg);
    CHECK(res.phases.t_len == 20);
    CHECK(res.phases_original.t_len == cfg.phantom.t_len);
    CHECK(res.phases_original.ed < cfg.phantom.t_len);
    CHECK(res.repeat_report.has_value());
}
