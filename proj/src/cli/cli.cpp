#include "pgs/cli/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pgs/camera/camera.hpp"
#include "pgs/camera/colmap.hpp"
#include "pgs/gs/gs_ply.hpp"
#include "pgs/metrics/metrics.hpp"
#include "pgs/plenoptic/cloud.hpp"
#include "pgs/plenoptic/ply.hpp"
#include "pgs/render/render.hpp"
#include "pgs/train/trainer.hpp"

namespace pgs::cli {
namespace {

namespace fs = std::filesystem;

// CLI11 speaks INI/TOML out of the box; our config contract is a single JSON
// object, with nested objects addressing subcommands:
//   { "transcode": { "iters": 500, "freeze-positions": true } }
// Command-line flags take precedence over file values (CLI11 default).
class JsonConfig : public CLI::Config {
  public:
    std::string to_config(const CLI::App *, bool, bool, std::string) const override {
        return "{}\n";  // write-out is not part of the contract
    }

    std::vector<CLI::ConfigItem> from_config(std::istream &input) const override {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(input);
        } catch (const nlohmann::json::parse_error &e) {
            throw CLI::FileError(std::string("config is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw CLI::FileError("config root must be a JSON object");
        std::vector<CLI::ConfigItem> items;
        walk(j, {}, items);
        return items;
    }

  private:
    static std::string scalar(const nlohmann::json &v) {
        if (v.is_string()) return v.get<std::string>();
        return v.dump();  // numbers and bools keep their JSON spelling
    }

    static void walk(const nlohmann::json &j, std::vector<std::string> parents,
                     std::vector<CLI::ConfigItem> &items) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            const nlohmann::json &v = it.value();
            if (v.is_object()) {
                std::vector<std::string> deeper = parents;
                deeper.push_back(it.key());
                walk(v, deeper, items);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = it.key();
            if (v.is_array())
                for (const nlohmann::json &e : v) item.inputs.push_back(scalar(e));
            else
                item.inputs.push_back(scalar(v));
            items.push_back(std::move(item));
        }
    }
};

Vec3 to_vec3(const std::vector<double> &v) { return {v[0], v[1], v[2]}; }

SurfaceSampleMode parse_surface_mode(const std::string &s) {
    if (s == "vertices") return SurfaceSampleMode::vertices;
    if (s == "faces") return SurfaceSampleMode::face_centers;
    return SurfaceSampleMode::both;
}

PlenopticPointCloud load_cloud(const std::string &path, const std::string &surface_mode) {
    const PlenopticMesh mesh = ply::read_plenoptic_file(path);
    return surface_samples(mesh, parse_surface_mode(surface_mode), 1.0, 0);
}

// ---- shared option bundles -------------------------------------------------

struct RigOpts {
    int n_cameras = 24;
    double radius = 2.8;
    std::vector<double> center{0.0, 0.0, 0.0};
    int width = 128;
    int height = 128;
    double focal = 0.0;  // 0 = auto (1.1 * width)
};

void add_rig_opts(CLI::App *cmd, RigOpts &r) {
    cmd->add_option("--n-cameras", r.n_cameras, "number of rig viewpoints");
    cmd->add_option("--rig-radius", r.radius, "rig sphere radius (world units)");
    cmd->add_option("--center", r.center, "rig center x y z")->expected(3);
    cmd->add_option("--width", r.width, "image width in px");
    cmd->add_option("--height", r.height, "image height in px");
    cmd->add_option("--focal", r.focal, "focal length in px (default: 1.1 * width)");
}

CameraIntrinsics make_intrinsics(const RigOpts &r) {
    CameraIntrinsics intr;
    intr.width = r.width;
    intr.height = r.height;
    intr.fx = intr.fy = r.focal > 0.0 ? r.focal : 1.1 * r.width;
    intr.cx = r.width / 2.0;
    intr.cy = r.height / 2.0;
    intr.validate();
    return intr;
}

CameraSet make_rig(const RigOpts &r) {
    return generate_spherical_rig(r.n_cameras, to_vec3(r.center), r.radius, make_intrinsics(r));
}

struct ViewOpts {
    std::vector<double> background{0.0, 0.0, 0.0};
    double sharpness = 10.0;
    double point_radius = 1.5;
};

void add_view_opts(CLI::App *cmd, ViewOpts &v) {
    cmd->add_option("--background", v.background, "background color r g b")->expected(3);
    cmd->add_option("--sharpness", v.sharpness, "view-alignment sharpness exponent");
    cmd->add_option("--point-radius", v.point_radius, "point splat radius in px");
}

RenderConfig make_render_config(const ViewOpts &v) {
    RenderConfig rc;
    rc.background = to_vec3(v.background);
    rc.sharpness_n = v.sharpness;
    rc.point_radius_px = v.point_radius;
    rc.validate();
    return rc;
}

void add_surface_mode(CLI::App *cmd, std::string &mode) {
    cmd->add_option("--surface-mode", mode, "mesh point extraction: vertices|faces|both")
        ->check(CLI::IsMember({"vertices", "faces", "both"}));
}

void add_train_opts(CLI::App *cmd, TrainConfig &cfg) {
    cmd->add_option("--iters", cfg.iterations, "training iterations");
    cmd->add_option("--lr-position", cfg.lr_position, "position learning rate (0 freezes)");
    cmd->add_option("--lr-scale", cfg.lr_scale, "scale learning rate");
    cmd->add_option("--lr-rotation", cfg.lr_rotation, "rotation learning rate");
    cmd->add_option("--lr-opacity", cfg.lr_opacity, "opacity learning rate");
    cmd->add_option("--lr-sh", cfg.lr_sh, "SH coefficient learning rate");
    cmd->add_option("--loss-lambda", cfg.loss_lambda, "D-SSIM weight in the loss");
    cmd->add_flag("--densify,!--no-densify", cfg.densify, "adaptive density control");
    cmd->add_option("--densify-interval", cfg.densify_interval, "iterations between densify passes");
    cmd->add_option("--densify-grad-threshold", cfg.densify_grad_threshold,
                    "mean positional gradient that triggers clone/split");
    cmd->add_option("--prune-opacity", cfg.prune_opacity_threshold, "prune below this opacity");
    cmd->add_option("--split-scale", cfg.split_scale_threshold,
                    "world-space scale separating clone from split");
}

// ---- subcommand payloads -----------------------------------------------------

struct SynthOpts {
    std::string out;
    std::string shape = "sphere";
    size_t n_points = 2000;
    int n_views = 6;
    double capture_radius = 3.0;
    std::vector<double> base_color{0.6, 0.45, 0.35};
    double specular = 0.0;
    double shininess = 10.0;
    uint64_t seed = 0;
};

int run_synth(const SynthOpts &o) {
    SynthMaterial mat;
    mat.base_color = to_vec3(o.base_color);
    mat.specular_strength = o.specular;
    mat.shininess = o.shininess;

    // Capture viewpoints reuse the renderer's rig so both sides of the
    // pipeline agree on where the colors came from.
    CameraIntrinsics probe;
    probe.fx = probe.fy = 64.0;
    probe.cx = probe.cy = 32.0;
    probe.width = probe.height = 64;
    const CameraSet rig = generate_spherical_rig(o.n_views, {0, 0, 0}, o.capture_radius, probe);
    std::vector<Vec3> captures;
    captures.reserve(rig.cameras.size());
    for (const Camera &cam : rig.cameras) captures.push_back(cam.pose.position);

    const SynthShape shape = o.shape == "cube" ? SynthShape::cube : SynthShape::sphere;
    const PlenopticPointCloud cloud = synth_plenoptic(shape, o.n_points, captures, mat, o.seed);
    ply::write_plenoptic_file(o.out, cloud);
    std::cout << "wrote " << o.out << " (" << cloud.size() << " points, " << cloud.n_views
              << " views)\n";
    return 0;
}

struct RenderViewsOpts {
    std::string input;
    std::string surface_mode = "vertices";
    std::string out;
    RigOpts rig;
    ViewOpts view;
};

int run_render_views(const RenderViewsOpts &o) {
    const PlenopticPointCloud cloud = load_cloud(o.input, o.surface_mode);
    const CameraSet rig = make_rig(o.rig);
    render_dataset(cloud, rig, make_render_config(o.view), o.out);
    std::cout << "wrote " << rig.cameras.size() << " views + colmap model under " << o.out << "\n";
    return 0;
}

struct ExportColmapOpts {
    std::string input;
    std::string surface_mode = "vertices";
    std::string out;
    RigOpts rig;
};

int run_export_colmap(const ExportColmapOpts &o) {
    const PlenopticPointCloud cloud = load_cloud(o.input, o.surface_mode);
    colmap::export_model(make_rig(o.rig), cloud, o.out);
    std::cout << "wrote colmap text model under " << o.out << "\n";
    return 0;
}

struct InitOpts {
    std::string out;
    std::string kind = "custom";
    std::string input;        // custom
    std::string surface_mode = "vertices";
    std::string colmap_dir;   // colmap
    bool freeze = false;
    double keep_fraction = 1.0;
    size_t n_random = 1000;
    std::vector<double> box_min{-1.0, -1.0, -1.0};
    std::vector<double> box_max{1.0, 1.0, 1.0};
    uint64_t seed = 0;
    int sh_degree = 3;
};

InitStrategy make_strategy(const InitOpts &o) {
    if (o.kind == "custom") {
        if (o.input.empty())
            throw std::invalid_argument("init: --init custom needs --input <plenoptic ply>");
        return InitStrategy::custom_from_cloud(load_cloud(o.input, o.surface_mode), o.freeze,
                                               o.keep_fraction, o.seed);
    }
    if (o.kind == "colmap") {
        if (o.colmap_dir.empty())
            throw std::invalid_argument("init: --init colmap needs --colmap-dir <model dir>");
        return InitStrategy::from_colmap(o.colmap_dir);
    }
    return InitStrategy::random_sparse(o.n_random, to_vec3(o.box_min), to_vec3(o.box_max), o.seed);
}

int run_init(const InitOpts &o) {
    TrainConfig cfg;
    cfg.sh_degree = o.sh_degree;
    cfg.validate();
    const GaussianModel model = initialize(make_strategy(o), cfg);
    gs_ply::write_file(o.out, model);
    std::cout << "wrote " << o.out << " (" << model.size() << " splats, degree "
              << model.sh_degree << ")\n";
    return 0;
}

struct TrainOpts {
    std::string dataset;
    std::string init_model;
    std::string out_model;
    std::string out_loss;
    bool freeze = false;
    TrainConfig cfg;
};

int run_train(const TrainOpts &o) {
    o.cfg.validate();  // reject a bad config before touching the filesystem
    const TrainData data = load_train_data(o.dataset);
    GaussianModel model = gs_ply::read_file(o.init_model);
    model.frozen_positions = o.freeze;
    TrainConfig cfg = o.cfg;
    cfg.sh_degree = model.sh_degree;  // degree was fixed at init time
    const TrainResult result = train(std::move(model), data, cfg);
    gs_ply::write_file(o.out_model, result.model);
    if (!o.out_loss.empty()) write_loss_csv(o.out_loss, result.log);
    const double final_loss = result.log.empty() ? 0.0 : result.log.back().loss;
    std::cout << "wrote " << o.out_model << " (" << result.model.size() << " splats, "
              << cfg.iterations << " iters, final loss " << final_loss << ")\n";
    return 0;
}

struct EvalOpts {
    std::string model;
    std::string input;
    std::string surface_mode = "vertices";
    std::string dataset;
    std::string out;  // empty = stdout
};

int run_eval(const EvalOpts &o) {
    const GaussianModel model = gs_ply::read_file(o.model);
    const PlenopticPointCloud cloud = load_cloud(o.input, o.surface_mode);
    const TrainData data = load_train_data(o.dataset);
    if (data.views.empty()) throw std::runtime_error("eval: dataset has no views");

    double psnr_sum = 0.0, ssim_sum = 0.0;
    bool psnr_saturated = false;
    RenderCache cache;
    for (const TrainView &view : data.views) {
        const Image rendered = forward_render(model, view.camera.intrinsics,
                                              view.camera.extrinsics, data.background, cache);
        const ImageMetrics im = image_metrics(rendered, view.image);
        if (std::isfinite(im.psnr_db))
            psnr_sum += im.psnr_db;
        else
            psnr_saturated = true;  // identical images; the mean is unbounded
        ssim_sum += im.ssim;
    }
    const double n = static_cast<double>(data.views.size());
    const SurfaceDistanceStats sd = surface_distance_stats(model, cloud);
    const SizeReport sz = size_report(model, cloud);

    nlohmann::json j;
    if (psnr_saturated)
        j["psnr_db"] = nullptr;  // +inf has no JSON spelling
    else
        j["psnr_db"] = psnr_sum / n;
    j["ssim"] = ssim_sum / n;
    j["surface_p95"] = sd.p95;
    j["splat_count"] = sz.splat_count;
    j["gs_bytes"] = sz.gs_bytes;
    j["pc_bytes"] = sz.plenoptic_bytes;

    if (o.out.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::ofstream out(o.out);
        if (!out) throw std::runtime_error("eval: cannot write " + o.out);
        out << j.dump(2) << "\n";
        std::cout << "wrote " << o.out << "\n";
    }
    return 0;
}

struct TranscodeOpts {
    std::string input;
    std::string surface_mode = "vertices";
    std::string out;
    RigOpts rig;
    ViewOpts view;
    std::string init_kind = "custom";
    bool freeze = false;
    double keep_fraction = 1.0;
    size_t n_random = 1000;
    std::vector<double> box_min{-1.0, -1.0, -1.0};
    std::vector<double> box_max{1.0, 1.0, 1.0};
    int sh_degree = 3;
    TrainConfig cfg;
};

// The full pipeline is exactly the staged subcommands run back to back over
// the same files, so a transcode run and a by-hand staged run cannot drift
// apart.
int run_transcode(const TranscodeOpts &o) {
    TrainConfig probe = o.cfg;
    probe.sh_degree = o.sh_degree;
    probe.validate();  // reject a bad config before stage one runs

    const fs::path out(o.out);
    const std::string views_dir = (out / "views").string();

    RenderViewsOpts rv;
    rv.input = o.input;
    rv.surface_mode = o.surface_mode;
    rv.out = views_dir;
    rv.rig = o.rig;
    rv.view = o.view;
    run_render_views(rv);

    InitOpts init;
    init.out = (out / "init.ply").string();
    init.kind = o.init_kind;
    init.input = o.input;
    init.surface_mode = o.surface_mode;
    init.colmap_dir = (fs::path(views_dir) / "colmap").string();
    init.freeze = o.freeze;
    init.keep_fraction = o.keep_fraction;
    init.n_random = o.n_random;
    init.box_min = o.box_min;
    init.box_max = o.box_max;
    init.seed = o.cfg.seed;
    init.sh_degree = o.sh_degree;
    run_init(init);

    TrainOpts tr;
    tr.dataset = views_dir;
    tr.init_model = init.out;
    tr.out_model = (out / "model.ply").string();
    tr.out_loss = (out / "loss.csv").string();
    tr.freeze = o.freeze;
    tr.cfg = o.cfg;
    run_train(tr);

    EvalOpts ev;
    ev.model = tr.out_model;
    ev.input = o.input;
    ev.surface_mode = o.surface_mode;
    ev.dataset = views_dir;
    ev.out = (out / "metrics.json").string();
    run_eval(ev);
    return 0;
}

}  // namespace

int run(int argc, const char *const *argv) {
    CLI::App app{"plenoptic point clouds / meshes -> 3D gaussian splat models"};
    app.require_subcommand(1);
    // One config file may cover several subcommands; entries for other
    // subcommands are not errors.
    app.allow_config_extras(CLI::config_extras_mode::ignore_all);
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON config file; command-line flags take precedence");
    // Let `pgs <sub> --config f.json` reach the app-level --config option.
    app.fallthrough();

    SynthOpts so;
    CLI::App *c_synth = app.add_subcommand("synth", "generate a synthetic plenoptic cloud");
    c_synth->add_option("--out", so.out, "output plenoptic PLY")->required();
    c_synth->add_option("--shape", so.shape, "sphere|cube")
        ->check(CLI::IsMember({"sphere", "cube"}));
    c_synth->add_option("--n-points", so.n_points, "surface point count");
    c_synth->add_option("--n-views", so.n_views, "capture viewpoint count");
    c_synth->add_option("--capture-radius", so.capture_radius, "capture rig radius");
    c_synth->add_option("--base-color", so.base_color, "diffuse base color r g b")->expected(3);
    c_synth->add_option("--specular", so.specular, "specular lobe strength in [0,1]");
    c_synth->add_option("--shininess", so.shininess, "specular exponent");
    c_synth->add_option("--seed", so.seed, "sampling seed");

    RenderViewsOpts rvo;
    CLI::App *c_render = app.add_subcommand(
        "render-views", "render the cloud from a spherical rig into a training dataset");
    c_render->add_option("--input", rvo.input, "plenoptic PLY")->required();
    add_surface_mode(c_render, rvo.surface_mode);
    c_render->add_option("--out", rvo.out, "dataset directory")->required();
    add_rig_opts(c_render, rvo.rig);
    add_view_opts(c_render, rvo.view);

    ExportColmapOpts eco;
    CLI::App *c_colmap =
        app.add_subcommand("export-colmap", "write the rig + cloud as a COLMAP text model");
    c_colmap->add_option("--input", eco.input, "plenoptic PLY")->required();
    add_surface_mode(c_colmap, eco.surface_mode);
    c_colmap->add_option("--out", eco.out, "colmap model directory")->required();
    add_rig_opts(c_colmap, eco.rig);

    InitOpts io;
    CLI::App *c_init = app.add_subcommand("init", "build an initial splat model");
    c_init->add_option("--out", io.out, "output 3DGS PLY")->required();
    c_init->add_option("--init", io.kind, "custom|colmap|random")
        ->check(CLI::IsMember({"custom", "colmap", "random"}));
    c_init->add_option("--input", io.input, "plenoptic PLY (custom init)");
    add_surface_mode(c_init, io.surface_mode);
    c_init->add_option("--colmap-dir", io.colmap_dir, "COLMAP model dir (colmap init)");
    c_init->add_flag("--freeze-positions", io.freeze, "pin splat centers to the input points");
    c_init->add_option("--keep-fraction", io.keep_fraction, "random subset of input points (0,1]");
    c_init->add_option("--n-random", io.n_random, "splat count (random init)");
    c_init->add_option("--box-min", io.box_min, "sampling box min x y z (random init)")
        ->expected(3);
    c_init->add_option("--box-max", io.box_max, "sampling box max x y z (random init)")
        ->expected(3);
    c_init->add_option("--seed", io.seed, "subset / sampling seed");
    c_init->add_option("--sh-degree", io.sh_degree, "spherical harmonics degree 0..3");

    TrainOpts to;
    CLI::App *c_train = app.add_subcommand("train", "optimize a splat model against a dataset");
    c_train->add_option("--dataset", to.dataset, "dataset directory from render-views")
        ->required();
    c_train->add_option("--init-model", to.init_model, "initial 3DGS PLY")->required();
    c_train->add_option("--out-model", to.out_model, "output 3DGS PLY")->required();
    c_train->add_option("--out-loss", to.out_loss, "per-iteration loss CSV");
    c_train->add_flag("--freeze-positions", to.freeze, "keep splat centers fixed");
    c_train->add_option("--seed", to.cfg.seed, "view sampling seed");
    add_train_opts(c_train, to.cfg);

    EvalOpts eo;
    CLI::App *c_eval = app.add_subcommand("eval", "score a model against a dataset + reference");
    c_eval->add_option("--model", eo.model, "3DGS PLY")->required();
    c_eval->add_option("--input", eo.input, "reference plenoptic PLY")->required();
    add_surface_mode(c_eval, eo.surface_mode);
    c_eval->add_option("--dataset", eo.dataset, "dataset directory")->required();
    c_eval->add_option("--out", eo.out, "metrics JSON (default: stdout)");

    TranscodeOpts tco;
    CLI::App *c_transcode =
        app.add_subcommand("transcode", "render-views + init + train + eval, end to end");
    c_transcode->add_option("--input", tco.input, "plenoptic PLY")->required();
    add_surface_mode(c_transcode, tco.surface_mode);
    c_transcode->add_option("--out", tco.out, "run directory")->required();
    add_rig_opts(c_transcode, tco.rig);
    add_view_opts(c_transcode, tco.view);
    c_transcode->add_option("--init", tco.init_kind, "custom|colmap|random")
        ->check(CLI::IsMember({"custom", "colmap", "random"}));
    c_transcode->add_flag("--freeze-positions", tco.freeze, "pin splat centers to input points");
    c_transcode->add_option("--keep-fraction", tco.keep_fraction,
                            "random subset of input points (0,1]");
    c_transcode->add_option("--n-random", tco.n_random, "splat count (random init)");
    c_transcode->add_option("--box-min", tco.box_min, "sampling box min x y z (random init)")
        ->expected(3);
    c_transcode->add_option("--box-max", tco.box_max, "sampling box max x y z (random init)")
        ->expected(3);
    c_transcode->add_option("--sh-degree", tco.sh_degree, "spherical harmonics degree 0..3");
    c_transcode->add_option("--seed", tco.cfg.seed, "subset + view sampling seed");
    add_train_opts(c_transcode, tco.cfg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        std::cerr << "pgs: " << e.what() << "\n\n";
        const std::vector<CLI::App *> subs = app.get_subcommands();
        std::cerr << (subs.empty() ? app.help() : subs.front()->help());
        return 2;
    }

    try {
        if (c_synth->parsed()) return run_synth(so);
        if (c_render->parsed()) return run_render_views(rvo);
        if (c_colmap->parsed()) return run_export_colmap(eco);
        if (c_init->parsed()) return run_init(io);
        if (c_train->parsed()) return run_train(to);
        if (c_eval->parsed()) return run_eval(eo);
        if (c_transcode->parsed()) return run_transcode(tco);
    } catch (const std::invalid_argument &e) {
        std::cerr << "pgs: invalid configuration: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "pgs: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace pgs::cli
