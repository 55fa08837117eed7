/*
 * sfs — drives the reconstruction pipeline stage by stage, leaving every
 * intermediate as a plain file in the output directory:
 *
 *   render       scene           -> image.pgm, truth.csv
 *   detect       image           -> points.json
 *   graph        image           -> points.json, graph.dot
 *   solve        image [anchors] -> points.json, graph.dot, report.json
 *   reconstruct  image [anchors] -> surface.csv, surface.obj, metrics.json
 *                                   (reads report.json from the output dir)
 *   roundtrip    scene [anchors] -> all of the above in one run
 *
 * Later stages recompute the cheap early stages from the image instead of
 * parsing them back, so the only cross-stage file contract is report.json.
 * All outputs are byte-deterministic for identical inputs and flags.
 *
 * Exit codes: 0 success, 2 bad input, 3 degenerate image (no singular
 * points), 4 infeasible configuration, 5 unresolved ambiguity, 1 anything
 * unexpected.
 */

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sfs/anchors.hpp"
#include "sfs/config_graph.hpp"
#include "sfs/forward_model.hpp"
#include "sfs/image_io.hpp"
#include "sfs/reconstruct.hpp"
#include "sfs/report_json.hpp"
#include "sfs/singular_points.hpp"
#include "sfs/solver.hpp"

namespace {

using namespace sfs;

struct Options {
    std::string scene;
    std::string image;
    std::string anchors;
    std::string out = ".";
    double eps_sing = 0.02;
    double min_sep = 5.0;
    double cycle_tol = -1.0;   // <0: 10% of mean edge weight
    double accept_tol = -1.0;  // <0: 25% of mean class edge weight
    int candidate = -1;        // <0: solver's choice / anchor-resolved
};

std::string join(const std::string& dir, const char* name) {
    return (std::filesystem::path(dir) / name).string();
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw bad_input_error("cannot create output directory '" + dir + "'");
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw bad_input_error("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw bad_input_error("short write to '" + path + "'");
}

/* Everything solve-side stages share: image, detection, graph, and the
 * decomposition.  Built from the image and flags alone so each subcommand
 * can run standalone. */
struct SolveContext {
    IrradianceImage img;
    DetectionResult det;
    ConfigGraph g;
    Decomposition dec;
};

SolveContext make_context(const Options& opt) {
    SolveContext ctx;
    ctx.img = read_pgm(opt.image);
    ctx.det = detect_singular_points(ctx.img, opt.eps_sing, opt.min_sep);
    ctx.g = build_graph(ctx.img, ctx.det, opt.eps_sing);
    ctx.dec = decompose(ctx.g);
    return ctx;
}

// integrate_heights covers one connected component; sweep the roots in id
// order so disconnected graphs get a full (componentwise-relative) map.
std::map<int, double> full_heights(const ConfigGraph& g, const Configuration& cfg,
                                   double cycle_tol) {
    std::map<int, double> z;
    for (size_t v = 0; v < g.vertices.size(); ++v) {
        if (z.count((int)v)) continue;
        const HeightAssignment part = integrate_heights(g, cfg, (int)v, 0.0, cycle_tol);
        z.insert(part.z.begin(), part.z.end());
    }
    return z;
}

int cmd_render(const Options& opt) {
    const SceneKind kind = parse_scene_kind(opt.scene);
    const GridSpec grid = scene_default_grid(kind);
    const HeightField truth = make_surface(kind, {}, grid);
    const IrradianceImage img = render_lambertian(truth, 1.0);

    ensure_out_dir(opt.out);
    write_height_csv(join(opt.out, "truth.csv"), truth);
    write_pgm(join(opt.out, "image.pgm"), img);
    std::printf("rendered scene %s (%dx%d) -> %s, %s\n", opt.scene.c_str(), grid.width,
                grid.height, join(opt.out, "image.pgm").c_str(),
                join(opt.out, "truth.csv").c_str());
    return 0;
}

int cmd_detect(const Options& opt) {
    const IrradianceImage img = read_pgm(opt.image);
    const DetectionResult det = detect_singular_points(img, opt.eps_sing, opt.min_sep);

    ensure_out_dir(opt.out);
    write_json_file(join(opt.out, "points.json"), points_to_json(det.points));
    std::printf("detected %zu singular points -> %s\n", det.points.size(),
                join(opt.out, "points.json").c_str());
    return 0;
}

int cmd_graph(const Options& opt) {
    const SolveContext ctx = make_context(opt);

    ensure_out_dir(opt.out);
    write_json_file(join(opt.out, "points.json"), points_to_json(ctx.det.points));
    write_text(join(opt.out, "graph.dot"), export_dot(ctx.g));
    std::printf("graph: %zu vertices, %zu edges (%zu free edges, %zu free parts) -> %s\n",
                ctx.g.vertices.size(), ctx.g.edges.size(), ctx.dec.free_edges.size(),
                ctx.dec.free_parts.size(), join(opt.out, "graph.dot").c_str());
    return 0;
}

int cmd_solve(const Options& opt) {
    const SolveContext ctx = make_context(opt);
    SolverReport rep = solve_configuration(ctx.g, ctx.dec, opt.cycle_tol);

    std::vector<char> anchor_mask;
    if (!opt.anchors.empty()) {
        const std::vector<BCAnchor> anchors = load_anchors(opt.anchors, ctx.img.grid);
        const ConfigGraph aug = augment_graph(ctx.g, ctx.dec, anchors, ctx.img);
        rep.chosen = resolve_ambiguity(aug, rep, anchors, opt.accept_tol);
        anchor_mask.assign(aug.vertices.size(), 0);
        for (size_t v = ctx.g.vertices.size(); v < aug.vertices.size(); ++v) anchor_mask[v] = 1;

        ensure_out_dir(opt.out);
        write_text(join(opt.out, "graph.dot"), export_dot(aug, &rep.chosen, &anchor_mask));
    } else {
        ensure_out_dir(opt.out);
        write_text(join(opt.out, "graph.dot"), export_dot(ctx.g, &rep.chosen));
    }
    write_json_file(join(opt.out, "points.json"), points_to_json(ctx.det.points));
    write_json_file(join(opt.out, "report.json"), report_to_json(rep));
    std::printf("solved: %zu ambiguity classes%s -> %s\n", rep.classes.size(),
                opt.anchors.empty() ? " left open" : " resolved by anchors",
                join(opt.out, "report.json").c_str());
    return 0;
}

int cmd_reconstruct(const Options& opt) {
    const SolveContext ctx = make_context(opt);
    const SolverReport rep = report_from_json(read_json_file(join(opt.out, "report.json")));
    if (rep.chosen.sign.size() != ctx.g.edges.size())
        throw bad_input_error(
            "report.json does not match this image's graph; re-run solve with the same flags");

    if (!opt.anchors.empty() && opt.candidate >= 0)
        throw bad_input_error("--candidate forces one candidate; drop it or drop --anchors");

    ReconstructionResult rec;
    nlohmann::json metrics;
    if (!opt.anchors.empty()) {
        const std::vector<BCAnchor> anchors = load_anchors(opt.anchors, ctx.img.grid);
        const ConfigGraph aug = augment_graph(ctx.g, ctx.dec, anchors, ctx.img);
        std::map<int, double> pinned;
        const Configuration resolved =
            resolve_ambiguity(aug, rep, anchors, opt.accept_tol, &pinned);
        HeightAssignment heights;
        heights.z = std::move(pinned);
        const int n0 = (int)ctx.g.vertices.size();
        for (size_t k = 0; k < anchors.size(); ++k)
            heights.z[n0 + (int)k] = anchors[k].depth;
        rec = reconstruct_surface(ctx.img, aug, resolved, heights);
        metrics["candidate"] = "anchored";
    } else {
        const size_t want = opt.candidate < 0 ? 0 : (size_t)opt.candidate;
        const std::vector<Configuration> cands = enumerate_candidates(rep, want + 1);
        if (want >= cands.size())
            throw bad_input_error("candidate index " + std::to_string(want) +
                                  " is out of range (" + std::to_string(cands.size()) +
                                  " candidates)");
        const Configuration& cand = cands[want];
        HeightAssignment heights;
        heights.z = full_heights(ctx.g, cand, opt.cycle_tol);
        rec = reconstruct_surface(ctx.img, ctx.g, cand, heights);
        metrics["candidate"] = (std::int64_t)want;
    }

    metrics["render_residual"] = round_sig6(rec.image_residual);
    metrics["filled_pixels"] = rec.filled_pixels;
    metrics["negated"] = rec.negated;

    // --scene supplies ground truth for error metrics: a synthetic scene is
    // regenerated on the image's grid; "csv" reads truth.csv from the output
    // directory (what render leaves behind)
    if (!opt.scene.empty()) {
        const SceneKind kind = parse_scene_kind(opt.scene);
        const HeightField truth = kind == SceneKind::csv
                                      ? read_height_csv(join(opt.out, "truth.csv"))
                                      : make_surface(kind, {}, ctx.img.grid);
        if (!(truth.grid == ctx.img.grid))
            throw bad_input_error("truth surface grid does not match the image");
        double lo = truth.z[0], hi = truth.z[0];
        for (double v : truth.z) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double rmse = depth_rmse(rec.surface, truth);
        metrics["depth_rmse"] = round_sig6(rmse);
        metrics["depth_range"] = round_sig6(hi - lo);
        if (hi > lo) metrics["depth_rmse_rel"] = round_sig6(rmse / (hi - lo));
    }

    ensure_out_dir(opt.out);
    write_height_csv(join(opt.out, "surface.csv"), rec.surface);
    export_obj(rec.surface, join(opt.out, "surface.obj"));
    write_json_file(join(opt.out, "metrics.json"), metrics);
    std::printf("reconstructed: residual %s -> %s, %s, %s\n",
                format_g6(rec.image_residual).c_str(), join(opt.out, "surface.csv").c_str(),
                join(opt.out, "surface.obj").c_str(), join(opt.out, "metrics.json").c_str());
    return 0;
}

int cmd_roundtrip(Options opt) {
    int rc = cmd_render(opt);
    if (rc) return rc;
    opt.image = join(opt.out, "image.pgm");
    rc = cmd_solve(opt);
    if (rc) return rc;
    if (opt.scene != "csv") opt.scene = "csv";  // compare against the truth just rendered
    return cmd_reconstruct(opt);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"shape-from-shading pipeline: singular points, configuration solving,"
                 " anchored eikonal reconstruction"};
    app.require_subcommand(1);

    Options opt;
    auto add_detect_flags = [&](CLI::App* sub) {
        sub->add_option("--eps-sing", opt.eps_sing,
                        "relative brightness band treated as singular (default 0.02)");
        sub->add_option("--min-sep", opt.min_sep,
                        "minimum pixel separation between singular points (default 5)");
    };
    auto add_out_flag = [&](CLI::App* sub) {
        sub->add_option("--out", opt.out, "output directory (default .)");
    };

    CLI::App* render = app.add_subcommand("render", "render a synthetic scene to PGM + truth CSV");
    render->add_option("--scene", opt.scene, "scene name: " + scene_names())->required();
    add_out_flag(render);

    CLI::App* detect = app.add_subcommand("detect", "detect singular points in an image");
    detect->add_option("--image", opt.image, "input PGM image")->required();
    add_detect_flags(detect);
    add_out_flag(detect);

    CLI::App* graph = app.add_subcommand("graph", "build the singular-point graph");
    graph->add_option("--image", opt.image, "input PGM image")->required();
    add_detect_flags(graph);
    add_out_flag(graph);

    CLI::App* solve = app.add_subcommand("solve", "solve the configuration; anchors resolve it");
    solve->add_option("--image", opt.image, "input PGM image")->required();
    solve->add_option("--anchors", opt.anchors, "anchors JSON file");
    solve->add_option("--cycle-tol", opt.cycle_tol,
                      "cycle residual budget (default 10% of mean edge weight)");
    solve->add_option("--accept-tol", opt.accept_tol,
                      "anchor discrepancy budget (default 25% of mean class edge weight)");
    add_detect_flags(solve);
    add_out_flag(solve);

    CLI::App* rec = app.add_subcommand(
        "reconstruct", "reconstruct the surface from the image and the solve report");
    rec->add_option("--image", opt.image, "input PGM image")->required();
    rec->add_option("--anchors", opt.anchors, "anchors JSON file");
    rec->add_option("--candidate", opt.candidate, "force candidate configuration by index");
    rec->add_option("--scene", opt.scene,
                    "ground truth for metrics: scene name, or csv for <out>/truth.csv");
    rec->add_option("--cycle-tol", opt.cycle_tol,
                    "cycle residual budget (default 10% of mean edge weight)");
    rec->add_option("--accept-tol", opt.accept_tol,
                    "anchor discrepancy budget (default 25% of mean class edge weight)");
    add_detect_flags(rec);
    add_out_flag(rec);

    CLI::App* rt = app.add_subcommand("roundtrip", "render, solve and reconstruct in one run");
    rt->add_option("--scene", opt.scene, "scene name: " + scene_names())->required();
    rt->add_option("--anchors", opt.anchors, "anchors JSON file");
    rt->add_option("--candidate", opt.candidate, "force candidate configuration by index");
    rt->add_option("--cycle-tol", opt.cycle_tol,
                   "cycle residual budget (default 10% of mean edge weight)");
    rt->add_option("--accept-tol", opt.accept_tol,
                   "anchor discrepancy budget (default 25% of mean class edge weight)");
    add_detect_flags(rt);
    add_out_flag(rt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // malformed command line is bad input
    }

    try {
        if (render->parsed()) return cmd_render(opt);
        if (detect->parsed()) return cmd_detect(opt);
        if (graph->parsed()) return cmd_graph(opt);
        if (solve->parsed()) return cmd_solve(opt);
        if (rec->parsed()) return cmd_reconstruct(opt);
        if (rt->parsed()) return cmd_roundtrip(opt);
    } catch (const bad_input_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const degenerate_image_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const infeasible_configuration_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const unresolved_ambiguity_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 5;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 1;
    }
    return 0;
}
