// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0

#include "pcflow/train.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>

#include "pcflow/checkpoint.hpp"
#include "pcflow/error.hpp"
#include "pcflow/metrics.hpp"

namespace pcflow::harness {

namespace fs = std::filesystem;

std::vector<TrainPair> make_training_data(const RunConfig& cfg) {
    std::vector<TrainPair> pairs;
    if (cfg.data.kind == DataConfig::Kind::kSynthetic) {
        for (std::int64_t i = 0; i < cfg.data.num_pairs; ++i) {
            SynthSpec spec = cfg.data.spec;
            spec.seed = cfg.data.spec.seed + static_cast<std::uint64_t>(i);
            SynthPair sp = synth_pair(spec);
            pairs.push_back({std::move(sp.p), std::move(sp.q), std::move(sp.gt)});
        }
    } else {
        TrainPair pair;
        pair.p = geom::make_cloud(io::read_rows3(cfg.data.p_file));
        pair.q = geom::make_cloud(io::read_rows3(cfg.data.q_file));
        if (!cfg.data.gt_file.empty()) {
            geom::SceneFlow gt{io::read_rows3(cfg.data.gt_file)};
            if (gt.size() != pair.p.size()) {
                throw ValueError("training data: gt rows (" + std::to_string(gt.size()) +
                                 ") do not match P (" + std::to_string(pair.p.size()) + ")");
            }
            pair.gt = std::move(gt);
        }
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

std::string checkpoint_path(const std::string& out_dir, std::int64_t step) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "checkpoint_%08lld.bin", static_cast<long long>(step));
    return (fs::path(out_dir) / buf).string();
}

std::optional<std::pair<std::string, std::int64_t>> latest_checkpoint(const std::string& out_dir) {
    if (!fs::is_directory(out_dir)) return std::nullopt;
    std::optional<std::pair<std::string, std::int64_t>> best;
    for (const auto& entry : fs::directory_iterator(out_dir)) {
        const std::string name = entry.path().filename().string();
        long long step = 0;
        if (std::sscanf(name.c_str(), "checkpoint_%08lld.bin", &step) == 1) {
            if (!best || step > best->second) best = {entry.path().string(), step};
        }
    }
    return best;
}

namespace {

void save_state(const std::string& out_dir, std::int64_t step, net::NetworkParams& params,
                const AdamState& adam) {
    auto slots = net::param_list(params);
    std::vector<std::pair<std::string, const ad::Tensor*>> entries;
    entries.reserve(slots.size() * 3 + 1);
    for (auto& [name, t] : slots) entries.emplace_back(name, t);
    for (std::size_t i = 0; i < slots.size(); ++i) {
        entries.emplace_back("opt.m." + slots[i].first, &adam.m[i]);
        entries.emplace_back("opt.v." + slots[i].first, &adam.v[i]);
    }
    const ad::Tensor tstep = ad::Tensor::scalar_value(static_cast<double>(adam.t));
    entries.emplace_back("opt.step", &tstep);
    io::save_checkpoint(checkpoint_path(out_dir, step), entries);
}

void load_state(const std::string& path, net::NetworkParams& params, AdamState& adam) {
    const auto entries = io::load_checkpoint(path);
    io::load_network_params(params, entries);
    auto slots = net::param_list(params);
    std::map<std::string, const ad::Tensor*> by_name;
    for (const auto& [name, t] : entries) by_name[name] = &t;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        auto im = by_name.find("opt.m." + slots[i].first);
        auto iv = by_name.find("opt.v." + slots[i].first);
        if (im == by_name.end() || iv == by_name.end()) {
            throw IoError("checkpoint '" + path + "': missing optimizer state for '" +
                          slots[i].first + "'");
        }
        adam.m[i] = im->second->detached();
        adam.v[i] = iv->second->detached();
    }
    auto is = by_name.find("opt.step");
    if (is == by_name.end()) throw IoError("checkpoint '" + path + "': missing opt.step");
    adam.t = static_cast<std::int64_t>(is->second->scalar());
}

} // namespace

geom::SceneFlow infer(const net::NetworkParams& params, const geom::PointCloud& p,
                      const geom::PointCloud& q) {
    ad::Graph g;
    net::NetworkParams attached = net::attach(g, params);
    net::ForwardResult fw = net::forward(g, p, q, attached);
    return geom::SceneFlow{fw.flows.flows[0].detached()};
}

TrainResult train(const RunConfig& cfg, const std::vector<TrainPair>& pairs,
                  const TrainOptions& opts) {
    cfg.validate();
    if (pairs.empty()) throw ValueError("train: no training pairs");
    const bool supervised = cfg.loss.mode == LossConfig::Mode::kSupervised;
    if (supervised) {
        for (const auto& pr : pairs) {
            if (!pr.gt) throw ValueError("train: supervised loss requires ground-truth flow");
        }
    }

    Rng rng(cfg.train.seed, /*stream=*/1);
    TrainResult res;
    res.params = net::init_params(cfg.network, rng);
    auto slots = net::param_list(res.params);

    AdamState adam;
    adam.m.reserve(slots.size());
    adam.v.reserve(slots.size());
    for (auto& [name, t] : slots) {
        adam.m.emplace_back(t->shape);
        adam.v.emplace_back(t->shape);
    }

    std::int64_t start_step = 0;
    if (!opts.out_dir.empty()) {
        fs::create_directories(opts.out_dir);
        if (opts.resume) {
            if (auto latest = latest_checkpoint(opts.out_dir)) {
                load_state(latest->first, res.params, adam);
                start_step = latest->second;
            }
        }
    }
    res.start_step = start_step;

    std::vector<io::LossLogRow> unflushed;
    auto flush = [&](std::int64_t step) {
        if (opts.out_dir.empty()) return;
        save_state(opts.out_dir, step, res.params, adam);
        io::append_loss_log((fs::path(opts.out_dir) / "loss_log.csv").string(), unflushed);
        unflushed.clear();
    };

    for (std::int64_t step = start_step; step < cfg.train.steps; ++step) {
        const TrainPair& pair = pairs[static_cast<std::size_t>(step) % pairs.size()];

        ad::Graph g;
        net::NetworkParams attached = net::attach(g, res.params);
        net::ForwardResult fw = net::forward(g, pair.p, pair.q, attached);

        ad::Tensor loss_t;
        if (supervised) {
            const std::vector<ad::Tensor> gt_levels =
                net::subsample_to_levels(fw.pyr_p, pair.gt->vectors);
            loss_t = loss::supervised_loss(g, fw.flows, gt_levels, cfg.loss.weights.alpha);
        } else {
            loss_t = loss::self_supervised_loss(g, fw, cfg.loss.weights, cfg.network.k_loss,
                                                cfg.loss.k_inter);
        }
        const double loss = loss_t.scalar();
        if (std::isnan(loss)) {
            const auto report = g.first_nan();
            throw Error("train: NaN loss at step " + std::to_string(step) +
                        (report ? "; first NaN produced in component '" + report->scope + "' (op " +
                                      report->op + ")"
                                : ""));
        }

        double epe = std::numeric_limits<double>::quiet_NaN();
        if (pair.gt) {
            epe = evaluate(geom::SceneFlow{fw.flows.flows[0].detached()}, *pair.gt).epe3d;
        }
        res.log.push_back({step, loss, epe});
        unflushed.push_back(res.log.back());
        if (opts.verbose) {
            std::cerr << "step " << step << " loss " << loss << " epe " << epe << "\n";
        }

        const ad::Gradients grads = g.backward(loss_t);
        const auto attached_slots = net::param_list(attached);

        // Adam update, bias-corrected, fixed parameter order.
        adam.t += 1;
        const double bc1 = 1.0 - std::pow(adam.beta1, static_cast<double>(adam.t));
        const double bc2 = 1.0 - std::pow(adam.beta2, static_cast<double>(adam.t));
        for (std::size_t i = 0; i < slots.size(); ++i) {
            const ad::Tensor& grad = grads.at(*attached_slots[i].second);
            ad::Tensor& m = adam.m[i];
            ad::Tensor& v = adam.v[i];
            ad::Tensor& p = *slots[i].second;
            for (std::int64_t e = 0; e < p.numel(); ++e) {
                const double gi = grad.data[static_cast<std::size_t>(e)];
                m.data[static_cast<std::size_t>(e)] =
                    adam.beta1 * m.data[static_cast<std::size_t>(e)] + (1.0 - adam.beta1) * gi;
                v.data[static_cast<std::size_t>(e)] =
                    adam.beta2 * v.data[static_cast<std::size_t>(e)] + (1.0 - adam.beta2) * gi * gi;
                const double mh = m.data[static_cast<std::size_t>(e)] / bc1;
                const double vh = v.data[static_cast<std::size_t>(e)] / bc2;
                p.data[static_cast<std::size_t>(e)] -= cfg.train.lr * mh / (std::sqrt(vh) + adam.eps);
            }
        }

        if ((step + 1) % cfg.train.checkpoint_every == 0 || step + 1 == cfg.train.steps) {
            flush(step + 1);
        }
    }
    return res;
}

} // namespace pcflow::harness
