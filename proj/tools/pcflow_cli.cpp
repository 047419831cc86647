// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line surface: synth, train, infer, eval, gradcheck, ablate,
// bench. Exit codes: 0 success, 1 usage/config error, 2 runtime failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pcflow/ablate.hpp"
#include "pcflow/checkpoint.hpp"
#include "pcflow/config.hpp"
#include "pcflow/error.hpp"
#include "pcflow/gradcheck.hpp"
#include "pcflow/io.hpp"
#include "pcflow/metrics.hpp"
#include "pcflow/synth.hpp"
#include "pcflow/train.hpp"

namespace fs = std::filesystem;
using namespace pcflow;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;
};

RunConfig load_run_config(const GlobalArgs& ga, bool required = true) {
    RunConfig cfg;
    if (!ga.config_path.empty()) {
        cfg = load_config(ga.config_path);
    } else if (required) {
        throw ConfigError("missing --config");
    }
    if (ga.seed) {
        // One seed drives everything: parameters, data, and noise.
        cfg.train.seed = *ga.seed;
        cfg.data.spec.seed = *ga.seed;
    }
    cfg.validate();
    return cfg;
}

int cmd_synth(const GlobalArgs& ga, bool binary) {
    RunConfig cfg = load_run_config(ga);
    if (cfg.data.kind != DataConfig::Kind::kSynthetic) {
        throw ConfigError("synth: config data.kind must be 'synthetic'");
    }
    if (ga.out.empty()) throw ConfigError("synth: missing --out directory");
    const harness::SynthPair pair = harness::synth_pair(cfg.data.spec);
    fs::create_directories(ga.out);
    const std::string ext = binary ? ".bin" : ".txt";
    const auto write = binary ? io::write_rows3_binary : io::write_rows3_text;
    write((fs::path(ga.out) / ("P" + ext)).string(), pair.p.positions);
    write((fs::path(ga.out) / ("Q" + ext)).string(), pair.q.positions);
    write((fs::path(ga.out) / ("gt" + ext)).string(), pair.gt.vectors);
    std::cout << "wrote " << pair.p.size() << " points to " << ga.out << "/{P,Q,gt}" << ext
              << "\n";
    return 0;
}

int cmd_train(const GlobalArgs& ga, bool fresh, bool verbose) {
    RunConfig cfg = load_run_config(ga);
    if (ga.out.empty()) throw ConfigError("train: missing --out directory");
    if (cfg.loss.mode == LossConfig::Mode::kSupervised &&
        cfg.data.kind == DataConfig::Kind::kFiles && cfg.data.gt_file.empty()) {
        throw ConfigError("train: supervised loss requires a gt file in the data section");
    }
    const auto pairs = harness::make_training_data(cfg);
    harness::TrainOptions opts;
    opts.out_dir = ga.out;
    opts.resume = !fresh;
    opts.verbose = verbose;
    const harness::TrainResult res = harness::train(cfg, pairs, opts);
    if (!res.log.empty()) {
        std::cout << "trained steps " << res.start_step << ".." << cfg.train.steps << ", loss "
                  << res.log.front().loss << " -> " << res.log.back().loss << "\n";
    } else {
        std::cout << "nothing to do (already at step " << res.start_step << ")\n";
    }
    std::cout << "checkpoint: " << harness::checkpoint_path(ga.out, cfg.train.steps) << "\n";
    return 0;
}

int cmd_infer(const GlobalArgs& ga, const std::string& ckpt, const std::string& p_file,
              const std::string& q_file, const std::string& out_file, bool binary) {
    RunConfig cfg = load_run_config(ga);
    Rng rng(cfg.train.seed, 1);
    net::NetworkParams params = net::init_params(cfg.network, rng);
    io::load_network_params(params, io::load_checkpoint(ckpt));
    const geom::PointCloud p = geom::make_cloud(io::read_rows3(p_file));
    const geom::PointCloud q = geom::make_cloud(io::read_rows3(q_file));
    const geom::SceneFlow flow = harness::infer(params, p, q);
    (binary ? io::write_rows3_binary : io::write_rows3_text)(out_file, flow.vectors);
    std::cout << "wrote " << flow.size() << " flow vectors to " << out_file << "\n";
    return 0;
}

int cmd_eval(const std::string& pred_file, const std::string& gt_file) {
    const geom::SceneFlow pred{io::read_rows3(pred_file)};
    const geom::SceneFlow gt{io::read_rows3(gt_file)};
    const harness::FlowMetrics m = harness::evaluate(pred, gt);
    std::printf("epe3d        %.6g\n", m.epe3d);
    std::printf("acc_strict   %.6g   (EPE<0.05 or rel<5%%; convention)\n", m.acc_strict);
    std::printf("acc_relaxed  %.6g   (EPE<0.1 or rel<10%%; convention)\n", m.acc_relaxed);
    std::printf("outlier      %.6g   (EPE>0.3 or rel>10%%; convention)\n", m.outlier);
    return 0;
}

int cmd_gradcheck(const GlobalArgs& ga, std::int64_t n_seeds, bool corrupt) {
    if (corrupt) {
        // Negative control: a broken matmul adjoint must make the suite fail.
        ad::testing::set_adjoint_corruption(ad::Op::kMatmul, 1.02);
    }
    const std::uint64_t seed = ga.seed.value_or(1);
    const auto rows = harness::run_gradcheck(seed, n_seeds);
    std::cout << harness::format_gradcheck(rows);
    ad::testing::clear_adjoint_corruption();
    return harness::gradcheck_passed(rows) ? 0 : 2;
}

int cmd_ablate(const GlobalArgs& ga) {
    const RunConfig cfg = load_run_config(ga);
    const harness::AblationReport report = harness::ablate(cfg);
    std::cout << harness::format_ablation(report);
    // Hard requirement: the full-feature row must not be worse than the
    // featureless row (with slack); the middle ordering is reported only.
    if (report.rows[2].epe3d > report.rows[0].epe3d * 1.10) return 2;
    return 0;
}

int cmd_bench(const GlobalArgs& ga, std::int64_t n_points) {
    RunConfig cfg = load_run_config(ga, /*required=*/false);
    if (cfg.data.kind != DataConfig::Kind::kSynthetic) {
        throw ConfigError("bench: config data.kind must be 'synthetic'");
    }
    if (n_points > 0) cfg.data.spec.n_points = n_points;
    cfg.data.spec.validate(cfg.network.min_points());
    const harness::SynthPair pair = harness::synth_pair(cfg.data.spec);
    Rng rng(cfg.train.seed, 1);
    const net::NetworkParams params = net::init_params(cfg.network, rng);
    const net::ComponentTimings t = net::component_timings(pair.p, pair.q, params);
    std::printf("component        time_ms\n");
    for (const auto& [name, ms] : t.rows()) std::printf("%-16s %.3f\n", name.c_str(), ms);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scene flow on point clouds: learnable cost volume, coarse-to-fine pyramid, "
                 "supervised and self-supervised training"};
    app.require_subcommand(1);

    GlobalArgs ga;
    std::uint64_t seed_value = 0;
    app.add_option("--config", ga.config_path, "JSON run configuration")->expected(1);
    auto* seed_opt = app.add_option("--seed", seed_value, "Override every seed in the config");
    app.add_option("--out", ga.out, "Output directory or file");
    app.fallthrough();

    bool binary = false;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic pair (P, Q, gt)");
    synth->add_flag("--binary", binary, "Write binary files instead of text");

    bool fresh = false, verbose = false;
    auto* train = app.add_subcommand("train", "Train on the configured data");
    train->add_flag("--fresh", fresh, "Ignore existing checkpoints instead of resuming");
    train->add_flag("--verbose", verbose, "Per-step progress on stderr");

    std::string ckpt, p_file, q_file, pred_file, gt_file;
    auto* infer = app.add_subcommand("infer", "Predict full-resolution flow for a pair");
    infer->add_option("--ckpt", ckpt, "Checkpoint file")->required();
    infer->add_option("--p", p_file, "First point cloud")->required();
    infer->add_option("--q", q_file, "Second point cloud")->required();
    infer->add_flag("--binary", binary, "Write a binary flow file");

    auto* eval = app.add_subcommand("eval", "Compare a predicted flow file against ground truth");
    eval->add_option("--pred", pred_file, "Predicted flow file")->required();
    eval->add_option("--gt", gt_file, "Ground-truth flow file")->required();

    std::int64_t n_seeds = 20;
    bool corrupt = false;
    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every component");
    gradcheck->add_option("--seeds", n_seeds, "Random instances per component");
    gradcheck->add_flag("--corrupt", corrupt, "Corrupt one adjoint (negative control)");

    auto* ablate = app.add_subcommand("ablate", "Coarser-feature ablation (3 configurations)");

    std::int64_t bench_n = 0;
    auto* bench = app.add_subcommand("bench", "Per-component forward timings");
    bench->add_option("--n", bench_n, "Point count override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }
    if (seed_opt->count() > 0) ga.seed = seed_value;

    try {
        if (synth->parsed()) return cmd_synth(ga, binary);
        if (train->parsed()) return cmd_train(ga, fresh, verbose);
        if (infer->parsed()) {
            if (ga.out.empty()) throw ConfigError("infer: missing --out flow file");
            return cmd_infer(ga, ckpt, p_file, q_file, ga.out, binary);
        }
        if (eval->parsed()) return cmd_eval(pred_file, gt_file);
        if (gradcheck->parsed()) return cmd_gradcheck(ga, n_seeds, corrupt);
        if (ablate->parsed()) return cmd_ablate(ga);
        if (bench->parsed()) return cmd_bench(ga, bench_n);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
