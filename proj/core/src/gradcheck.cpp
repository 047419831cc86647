// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0

#include "pcflow/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pcflow/costvolume.hpp"
#include "pcflow/error.hpp"
#include "pcflow/geom.hpp"
#include "pcflow/losses.hpp"
#include "pcflow/mlp.hpp"
#include "pcflow/network.hpp"
#include "pcflow/ops.hpp"
#include "pcflow/pointconv.hpp"
#include "pcflow/synth.hpp"

namespace pcflow::harness {

using ad::Graph;
using ad::Tensor;

double fd_max_rel_err(const std::vector<Tensor*>& vars, const LossBuilder& build, double step,
                      std::int64_t max_elems_per_var, std::uint64_t subsample_seed) {
    Graph g;
    std::vector<Tensor> attached_store;
    attached_store.reserve(vars.size());
    for (auto* v : vars) attached_store.push_back(g.leaf(*v));
    std::vector<Tensor*> attached;
    attached.reserve(vars.size());
    for (auto& t : attached_store) attached.push_back(&t);
    const Tensor root = build(g, attached);
    const ad::Gradients grads = g.backward(root);

    auto eval = [&]() {
        Graph g2;
        std::vector<Tensor> store;
        store.reserve(vars.size());
        for (auto* v : vars) store.push_back(g2.leaf(*v));
        std::vector<Tensor*> ptrs;
        ptrs.reserve(vars.size());
        for (auto& t : store) ptrs.push_back(&t);
        return build(g2, ptrs).scalar();
    };

    Rng rng(subsample_seed, /*stream=*/99);
    double max_err = 0.0;
    for (std::size_t vi = 0; vi < vars.size(); ++vi) {
        Tensor* v = vars[vi];
        const Tensor& analytic = grads.at(attached_store[vi]);
        std::vector<std::int64_t> elems(static_cast<std::size_t>(v->numel()));
        std::iota(elems.begin(), elems.end(), 0);
        if (max_elems_per_var >= 0 && max_elems_per_var < v->numel()) {
            for (std::int64_t i = 0; i < max_elems_per_var; ++i) {
                const std::int64_t j = i + rng.index(static_cast<std::int64_t>(elems.size()) - i);
                std::swap(elems[static_cast<std::size_t>(i)], elems[static_cast<std::size_t>(j)]);
            }
            elems.resize(static_cast<std::size_t>(max_elems_per_var));
        }
        for (const std::int64_t e : elems) {
            const double save = v->data[static_cast<std::size_t>(e)];
            v->data[static_cast<std::size_t>(e)] = save + step;
            const double fp = eval();
            v->data[static_cast<std::size_t>(e)] = save - step;
            const double fm = eval();
            v->data[static_cast<std::size_t>(e)] = save;
            const double fd = (fp - fm) / (2.0 * step);
            const double an = analytic.data[static_cast<std::size_t>(e)];
            const double err = std::abs(an - fd) / std::max({1.0, std::abs(an), std::abs(fd)});
            max_err = std::max(max_err, err);
        }
    }
    return max_err;
}

namespace {

Tensor random_tensor(ad::Shape shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = scale * rng.uniform(-1.0, 1.0);
    return t;
}

// Fixed random projection turning an arbitrary output into a scalar that
// exercises the whole Jacobian.
Tensor projection_like(const ad::Shape& shape, Rng& rng) { return random_tensor(shape, rng); }

double check_elementwise(std::uint64_t seed) {
    Rng rng(seed);
    Tensor a = random_tensor({3, 4}, rng);
    Tensor b = random_tensor({3, 4}, rng);
    Tensor c = random_tensor({3, 4}, rng);
    std::vector<Tensor*> vars{&a, &b, &c};
    auto build = [](Graph& g, const std::vector<Tensor*>& at) {
        const Tensor prod = ad::mul(g, ad::add(g, *at[0], *at[1]), ad::sub(g, *at[0], *at[2]));
        const Tensor path2 = ad::sqrt_elem(
            g, ad::add_scalar(g, ad::square(g, ad::leaky_relu(g, ad::scalar_mul(g, *at[1], 1.3), 0.1)),
                              0.5));
        return ad::add(g, ad::add(g, ad::sum_all(g, prod), ad::sum_all(g, path2)),
                       ad::mean_all(g, *at[2]));
    };
    return fd_max_rel_err(vars, build, 1e-5, -1, seed);
}

double check_matmul(std::uint64_t seed) {
    Rng rng(seed);
    Tensor a = random_tensor({3, 4}, rng);
    Tensor b = random_tensor({4, 5}, rng);
    Tensor d = random_tensor({5, 4}, rng);
    Tensor e = random_tensor({4, 3}, rng);
    std::vector<Tensor*> vars{&a, &b, &d, &e};
    auto build = [](Graph& g, const std::vector<Tensor*>& at) {
        const Tensor m1 = ad::matmul(g, *at[0], *at[1], false, false);
        const Tensor m2 = ad::matmul(g, *at[0], *at[2], false, true);
        const Tensor m3 = ad::matmul(g, *at[3], *at[1], true, false);
        const Tensor m4 = ad::matmul(g, *at[3], *at[2], true, true);
        return ad::sum_all(g, ad::mul(g, ad::add(g, m1, m2), ad::add(g, m3, m4)));
    };
    return fd_max_rel_err(vars, build, 1e-5, -1, seed);
}

double check_reduce_gather(std::uint64_t seed) {
    Rng rng(seed);
    Tensor x = random_tensor({6, 3}, rng);
    Tensor bias = random_tensor({3}, rng);
    std::vector<std::int64_t> gidx;
    for (int i = 0; i < 8; ++i) gidx.push_back(rng.index(6));
    std::vector<std::int64_t> sidx;
    for (int i = 0; i < 8; ++i) sidx.push_back(rng.index(5));
    std::vector<Tensor*> vars{&x, &bias};
    auto build = [gidx, sidx](Graph& g, const std::vector<Tensor*>& at) {
        const Tensor gathered = ad::gather_rows(g, *at[0], gidx);
        const Tensor scattered = ad::scatter_add_rows(g, gathered, sidx, 5);
        const Tensor biased = ad::add_bias(g, scattered, *at[1]);
        const Tensor cc = ad::concat_cols(g, {scattered, biased});
        const ad::MinRowsOut mins = ad::min_rows(g, cc);
        return ad::add(g, ad::add(g, ad::sum_all(g, cc), ad::sum_all(g, mins.values)),
                       ad::sum_all(g, ad::row_sum(g, biased)));
    };
    return fd_max_rel_err(vars, build, 1e-5, -1, seed);
}

double check_pairwise_grouped(std::uint64_t seed) {
    Rng rng(seed);
    Tensor a = random_tensor({6, 3}, rng);
    Tensor b = random_tensor({5, 3}, rng);
    Tensor c = random_tensor({6, 2}, rng);
    Tensor d = random_tensor({6, 4}, rng);
    const Tensor r1 = projection_like({6, 5}, rng);
    const Tensor r2 = projection_like({2, 8}, rng);
    std::vector<Tensor*> vars{&a, &b, &c, &d};
    auto build = [r1, r2](Graph& g, const std::vector<Tensor*>& at) {
        const Tensor pd = ad::pairwise_sqdist(g, *at[0], *at[1]);
        const Tensor go = ad::grouped_outer_sum(g, *at[2], *at[3], 3);
        return ad::add(g, ad::sum_all(g, ad::mul(g, pd, r1)), ad::sum_all(g, ad::mul(g, go, r2)));
    };
    return fd_max_rel_err(vars, build, 1e-5, -1, seed);
}

double check_idw(std::uint64_t seed) {
    Rng rng(seed);
    Tensor fine = random_tensor({5, 3}, rng);
    Tensor coarse = random_tensor({7, 3}, rng);
    Tensor values = random_tensor({7, 2}, rng);
    const Tensor r = projection_like({5, 2}, rng);
    std::vector<Tensor*> vars{&fine, &coarse, &values};
    auto build = [r](Graph& g, const std::vector<Tensor*>& at) {
        const geom::PointCloud fc{at[0]->detached()};
        const geom::PointCloud cc{at[1]->detached()};
        const geom::NeighborIndex nbrs = geom::knn(fc, cc, 3);
        const Tensor out = ad::idw_interpolate(g, *at[0], *at[1], *at[2], nbrs.flat(), 3,
                                               geom::kIdwEps, geom::kIdwSnapEps);
        return ad::sum_all(g, ad::mul(g, out, r));
    };
    return fd_max_rel_err(vars, build, 1e-5, -1, seed);
}

double check_mlp(std::uint64_t seed) {
    Rng rng(seed);
    Tensor x = random_tensor({6, 3}, rng);
    ad::MlpParams mlp = ad::make_mlp({3, 5, 4, 2}, rng);
    const Tensor r = projection_like({6, 2}, rng);
    std::vector<Tensor*> vars{&x};
    for (auto& l : mlp.layers) {
        vars.push_back(&l.w);
        vars.push_back(&l.b);
    }
    auto build = [mlp, r](Graph& g, const std::vector<Tensor*>& at) {
        ad::MlpParams m2 = mlp;
        std::size_t vi = 1;
        for (auto& l : m2.layers) {
            l.w = *at[vi++];
            l.b = *at[vi++];
        }
        return ad::sum_all(g, ad::mul(g, ad::mlp_forward(g, m2, *at[0]), r));
    };
    return fd_max_rel_err(vars, build, 1e-5, -1, seed);
}

double check_per_point_linear(std::uint64_t seed) {
    Rng rng(seed);
    Tensor x = random_tensor({6, 4}, rng);
    ad::MlpLayer layer = ad::make_layer(3, 4, rng);
    for (auto& v : layer.b.data) v = rng.uniform(-0.5, 0.5);
    const Tensor r = projection_like({6, 3}, rng);
    std::vector<Tensor*> vars{&x, &layer.w, &layer.b};
    auto build = [r](Graph& g, const std::vector<Tensor*>& at) {
        const ad::MlpLayer l2{*at[1], *at[2]};
        return ad::sum_all(g, ad::mul(g, pconv::per_point_linear(g, *at[0], l2, 0.1), r));
    };
    return fd_max_rel_err(vars, build, 1e-5, -1, seed);
}

double check_pointconv(std::uint64_t seed) {
    Rng rng(seed);
    const Tensor src_pos = random_tensor({10, 3}, rng);
    const Tensor ctr_pos = random_tensor({4, 3}, rng);
    Tensor feats = random_tensor({10, 5}, rng);
    pconv::PointConvParams params = pconv::make_pointconv(5, 3, 6, {4}, rng);
    params.k = 3;
    const geom::NeighborIndex nbrs =
        geom::knn(geom::PointCloud{ctr_pos.detached()}, geom::PointCloud{src_pos.detached()}, 3);
    const Tensor r = projection_like({4, 6}, rng);
    std::vector<Tensor*> vars{&feats, &params.projection.w, &params.projection.b};
    for (auto& l : params.weight_net.layers) {
        vars.push_back(&l.w);
        vars.push_back(&l.b);
    }
    auto build = [params, nbrs, src_pos, ctr_pos, r](Graph& g, const std::vector<Tensor*>& at) {
        pconv::PointConvParams p2 = params;
        p2.projection.w = *at[1];
        p2.projection.b = *at[2];
        std::size_t vi = 3;
        for (auto& l : p2.weight_net.layers) {
            l.w = *at[vi++];
            l.b = *at[vi++];
        }
        const pconv::FeatureCloud src{src_pos, *at[0]};
        const pconv::FeatureCloud out = pconv::pointconv(g, ctr_pos, src, nbrs, p2);
        return ad::sum_all(g, ad::mul(g, out.features, r));
    };
    return fd_max_rel_err(vars, build, 1e-5, -1, seed);
}

double check_matching_cost(std::uint64_t seed) {
    Rng rng(seed);
    Tensor pf = random_tensor({8, 4}, rng);
    Tensor qf = random_tensor({8, 4}, rng);
    Tensor pp = random_tensor({8, 3}, rng);
    Tensor qp = random_tensor({8, 3}, rng);
    ad::MlpParams mlp = ad::make_mlp({11, 6, 5}, rng);
    const Tensor r = projection_like({8, 5}, rng);
    std::vector<Tensor*> vars{&pf, &qf, &pp, &qp};
    for (auto& l : mlp.layers) {
        vars.push_back(&l.w);
        vars.push_back(&l.b);
    }
    auto build = [mlp, r](Graph& g, const std::vector<Tensor*>& at) {
        ad::MlpParams m2 = mlp;
        std::size_t vi = 4;
        for (auto& l : m2.layers) {
            l.w = *at[vi++];
            l.b = *at[vi++];
        }
        const Tensor out = cost::matching_cost(g, *at[0], *at[1], *at[2], *at[3], m2);
        return ad::sum_all(g, ad::mul(g, out, r));
    };
    return fd_max_rel_err(vars, build, 1e-5, -1, seed);
}

double check_cost_volume(std::uint64_t seed) {
    Rng rng(seed);
    const Tensor q_pos = random_tensor({14, 3}, rng);
    Tensor p_pos = random_tensor({12, 3}, rng);
    Tensor p_feats = random_tensor({12, 4}, rng);
    Tensor q_feats = random_tensor({14, 4}, rng);
    cost::CostVolumeParams params = cost::make_cost_volume(4, 5, {6}, {4}, 3, rng);
    const Tensor r = projection_like({12, 5}, rng);
    std::vector<Tensor*> vars{&p_feats, &q_feats, &p_pos, &params.cost_mlp.layers[0].w,
                              &params.wp_net.layers[0].w, &params.wq_net.layers[0].w};
    auto build = [params, q_pos, r](Graph& g, const std::vector<Tensor*>& at) {
        cost::CostVolumeParams p2 = params;
        p2.cost_mlp.layers[0].w = *at[3];
        p2.wp_net.layers[0].w = *at[4];
        p2.wq_net.layers[0].w = *at[5];
        const pconv::FeatureCloud P{*at[2], *at[0]};
        const pconv::FeatureCloud Q{q_pos, *at[1]};
        const cost::CostVolume cv = cost::cost_volume(g, P, Q, p2);
        return ad::sum_all(g, ad::mul(g, cv.values, r));
    };
    return fd_max_rel_err(vars, build, 1e-5, -1, seed);
}

double check_supervised(std::uint64_t seed) {
    Rng rng(seed);
    Tensor pred0 = random_tensor({6, 3}, rng);
    Tensor pred1 = random_tensor({3, 3}, rng);
    const Tensor gt0 = random_tensor({6, 3}, rng);
    const Tensor gt1 = random_tensor({3, 3}, rng);
    const std::vector<double> alpha{0.3, 0.7};
    std::vector<Tensor*> vars{&pred0, &pred1};
    auto build = [gt0, gt1, alpha](Graph& g, const std::vector<Tensor*>& at) {
        net::FlowPyramid fp;
        fp.flows = {*at[0], *at[1]};
        return loss::supervised_loss(g, fp, {gt0, gt1}, alpha);
    };
    return fd_max_rel_err(vars, build, 1e-5, -1, seed);
}

double check_chamfer(std::uint64_t seed) {
    Rng rng(seed);
    Tensor warped = random_tensor({5, 3}, rng);
    Tensor target = random_tensor({7, 3}, rng);
    std::vector<Tensor*> vars{&warped, &target};
    auto build = [](Graph& g, const std::vector<Tensor*>& at) {
        return loss::chamfer_loss(g, *at[0], *at[1]);
    };
    return fd_max_rel_err(vars, build, 1e-5, -1, seed);
}

double check_smoothness(std::uint64_t seed) {
    Rng rng(seed);
    const Tensor pos = random_tensor({8, 3}, rng);
    Tensor flow = random_tensor({8, 3}, rng);
    const geom::NeighborIndex nbrs = geom::knn_excluding_self(geom::PointCloud{pos.detached()}, 3);
    std::vector<Tensor*> vars{&flow};
    auto build = [nbrs](Graph& g, const std::vector<Tensor*>& at) {
        return loss::smoothness_loss(g, *at[0], nbrs);
    };
    return fd_max_rel_err(vars, build, 1e-5, -1, seed);
}

double check_laplacian_reg(std::uint64_t seed) {
    Rng rng(seed);
    Tensor warped = random_tensor({10, 3}, rng);
    Tensor q_pos = random_tensor({12, 3}, rng);
    std::vector<Tensor*> vars{&warped};
    auto build = [q_pos](Graph& g, const std::vector<Tensor*>& at) {
        const geom::PointCloud q = geom::make_cloud(q_pos.detached());
        return loss::laplacian_reg(g, *at[0], q, 3, 2);
    };
    return fd_max_rel_err(vars, build, 1e-5, -1, seed);
}

struct TinyNet {
    net::NetworkConfig cfg;
    net::NetworkParams params;
    geom::PointCloud p;
    geom::PointCloud q;
};

TinyNet make_tiny_net(std::uint64_t seed) {
    TinyNet t;
    t.cfg.levels = 3;
    t.cfg.widths = {6, 8};
    t.cfg.cv_dim = {6, 6};
    t.cfg.k_cv = 4;
    t.cfg.k_conv = 4;
    t.cfg.k_up = 2;
    t.cfg.k_loss = 3;
    t.cfg.weightnet_out = 4;
    t.cfg.weightnet_hidden = {4};
    t.cfg.cost_hidden = {6};
    t.cfg.w_hidden = {4};
    t.cfg.pred_conv_widths = {8};
    t.cfg.head_hidden = {6, 5};
    Rng rng(seed, /*stream=*/3);
    t.params = net::init_params(t.cfg, rng);
    // A zeroed head would detach everything below it; use small random
    // head weights instead so gradients flow end to end.
    for (auto& lp : t.params.levels) {
        lp.head.layers.back() = ad::make_layer(3, t.cfg.head_hidden.back(), rng);
        for (auto& v : lp.head.layers.back().w.data) v *= 0.3;
    }
    // Self-neighbor direction rows are exactly zero, so zero biases would
    // park hidden pre-activations on the rectifier kink; jitter them off it
    // to sample a non-degenerate point.
    for (auto& [name, tensor] : net::param_list(t.params)) {
        if (name.ends_with(".b")) {
            for (auto& v : tensor->data) v += rng.uniform(0.05, 0.2) * (rng.uniform() < 0.5 ? -1 : 1);
        }
    }
    SynthSpec spec;
    spec.n_points = 24;
    spec.seed = seed;
    spec.translation = {0.05, -0.03, 0.02};
    SynthPair pair = synth_pair(spec);
    t.p = std::move(pair.p);
    t.q = std::move(pair.q);
    return t;
}

double check_network_end_to_end(std::uint64_t seed, bool self_supervised) {
    TinyNet t = make_tiny_net(seed);
    auto slots = net::param_list(t.params);
    Rng pick(seed, /*stream=*/5);
    std::vector<std::size_t> chosen;
    while (chosen.size() < 3) {
        const auto i = static_cast<std::size_t>(pick.index(static_cast<std::int64_t>(slots.size())));
        if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) chosen.push_back(i);
    }
    std::vector<Tensor*> vars;
    for (auto i : chosen) vars.push_back(slots[i].second);
    loss::LossWeights weights;
    weights.alpha = {0.1, 0.2, 0.4};
    auto build = [&t, &chosen, self_supervised, weights](Graph& g,
                                                         const std::vector<Tensor*>& at) {
        net::NetworkParams p2 = t.params;
        auto slots2 = net::param_list(p2);
        for (std::size_t i = 0; i < chosen.size(); ++i) *slots2[chosen[i]].second = *at[i];
        const net::NetworkParams attached = net::attach(g, p2);
        const net::ForwardResult fw = net::forward(g, t.p, t.q, attached);
        if (self_supervised) {
            return loss::self_supervised_loss(g, fw, weights, t.cfg.k_loss, 2);
        }
        return ad::sum_all(g, fw.flows.flows[0]);
    };
    return fd_max_rel_err(vars, build, 1e-5, 3, seed);
}

} // namespace

std::vector<GradCheckRow> run_gradcheck(std::uint64_t seed, std::int64_t n_seeds) {
    struct Component {
        const char* name;
        double tol;
        double (*fn)(std::uint64_t);
    };
    static const auto check_full_forward = [](std::uint64_t s) {
        return check_network_end_to_end(s, false);
    };
    static const auto check_self_supervised = [](std::uint64_t s) {
        return check_network_end_to_end(s, true);
    };
    const std::vector<Component> components{
        {"primitives.elementwise", 1e-4, &check_elementwise},
        {"primitives.matmul", 1e-4, &check_matmul},
        {"primitives.reduce_gather", 1e-4, &check_reduce_gather},
        {"primitives.pairwise_grouped", 1e-4, &check_pairwise_grouped},
        {"primitives.idw", 1e-4, &check_idw},
        {"mlp", 1e-4, &check_mlp},
        {"per_point_linear", 1e-4, &check_per_point_linear},
        {"pointconv", 1e-4, &check_pointconv},
        {"matching_cost", 1e-4, &check_matching_cost},
        {"cost_volume", 1e-4, &check_cost_volume},
        {"supervised_loss", 1e-4, &check_supervised},
        {"chamfer_loss", 1e-4, &check_chamfer},
        {"smoothness_loss", 1e-4, &check_smoothness},
        {"laplacian_reg", 1e-4, &check_laplacian_reg},
        {"self_supervised_loss", 1e-3, check_self_supervised},
        {"full_forward", 1e-3, check_full_forward},
    };
    std::vector<GradCheckRow> rows;
    rows.reserve(components.size());
    for (const auto& comp : components) {
        GradCheckRow row;
        row.component = comp.name;
        row.tol = comp.tol;
        row.seeds = n_seeds;
        for (std::int64_t s = 0; s < n_seeds; ++s) {
            row.max_rel_err = std::max(row.max_rel_err, comp.fn(seed + static_cast<std::uint64_t>(s)));
        }
        row.pass = row.max_rel_err < row.tol;
        rows.push_back(std::move(row));
    }
    return rows;
}

bool gradcheck_passed(const std::vector<GradCheckRow>& rows) {
    for (const auto& r : rows) {
        if (!r.pass) return false;
    }
    return !rows.empty();
}

std::string format_gradcheck(const std::vector<GradCheckRow>& rows) {
    std::ostringstream os;
    os << "component                     max_rel_err   tol      seeds  status\n";
    for (const auto& r : rows) {
        os << r.component;
        for (std::size_t i = r.component.size(); i < 30; ++i) os << ' ';
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%-13.3e %-8.0e %-6lld %s\n", r.max_rel_err, r.tol,
                      static_cast<long long>(r.seeds), r.pass ? "pass" : "FAIL");
        os << buf;
    }
    return os.str();
}

} // namespace pcflow::harness
