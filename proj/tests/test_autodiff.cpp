// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "pcflow/error.hpp"
#include "pcflow/gradcheck.hpp"
#include "pcflow/graph.hpp"
#include "pcflow/losses.hpp"
#include "pcflow/mlp.hpp"
#include "pcflow/ops.hpp"
#include "pcflow/random.hpp"

#include "oracles.hpp"

using namespace pcflow;
using ad::Graph;
using ad::Tensor;

TEST_SUITE_BEGIN("autodiff");

TEST_CASE("add computes componentwise sums") {
    Graph g;
    const Tensor out = ad::add(g, Tensor({2}, {1, 2}), Tensor({2}, {3, 4}));
    CHECK(out.data == std::vector<double>{4, 6});
}

TEST_CASE("matmul by the identity returns the vector") {
    Graph g;
    const Tensor eye({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    const Tensor v({3, 1}, {2.5, -1.0, 7.0});
    const Tensor out = ad::matmul(g, eye, v);
    CHECK(out.data == v.data);
}

TEST_CASE("concat on the last axis adds widths") {
    Graph g;
    const Tensor a = Tensor::zeros({2, 3});
    const Tensor b = Tensor::zeros({2, 5});
    const Tensor out = ad::concat_cols(g, {a, b});
    CHECK(out.shape == ad::Shape{2, 8});
}

TEST_CASE("shape mismatch errors name the primitive and both shapes") {
    Graph g;
    try {
        ad::add(g, Tensor::zeros({2, 3}), Tensor::zeros({3, 2}));
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("add") != std::string::npos);
        CHECK(msg.find("(2,3)") != std::string::npos);
        CHECK(msg.find("(3,2)") != std::string::npos);
    }
}

TEST_CASE("square root of a negative input is an error") {
    Graph g;
    CHECK_THROWS_AS(ad::sqrt_elem(g, Tensor({2}, {4.0, -1.0})), ValueError);
}

TEST_CASE("backward of sum(x*x) is 2x") {
    Graph g;
    const Tensor x = g.leaf(Tensor({3}, {1, 2, 3}));
    const Tensor root = ad::sum_all(g, ad::mul(g, x, x));
    const ad::Gradients grads = g.backward(root);
    CHECK(grads.at(x).data == std::vector<double>{2, 4, 6});
}

TEST_CASE("inputs unreachable from the root get exact zero gradients") {
    Graph g;
    const Tensor x = g.leaf(Tensor({4}, {1, 2, 3, 4}));
    const Tensor c = g.leaf(Tensor::scalar_value(5.0));
    const Tensor root = ad::sum_all(g, ad::square(g, c));
    const ad::Gradients grads = g.backward(root);
    CHECK(grads.at(x).data == std::vector<double>{0, 0, 0, 0});
    CHECK(grads.at(c).data[0] == doctest::Approx(10.0));
}

TEST_CASE("backward requires a scalar root") {
    Graph g;
    const Tensor x = g.leaf(Tensor({2, 2}, {1, 2, 3, 4}));
    const Tensor y = ad::square(g, x);
    CHECK_THROWS_AS((void)g.backward(y), Error);
}

TEST_CASE("gradient linearity: grad(a*f + b*g) == a*grad(f) + b*grad(g)") {
    Rng rng(7);
    Tensor x = Tensor::zeros({5});
    for (auto& v : x.data) v = rng.uniform(-2, 2);
    const double a = 1.7, b = -0.4;

    auto grad_of = [&](auto&& fn) {
        Graph g;
        const Tensor xt = g.leaf(x);
        return g.backward(fn(g, xt)).at(xt).data;
    };
    auto f = [](Graph& g, const Tensor& t) { return ad::sum_all(g, ad::square(g, t)); };
    auto h = [](Graph& g, const Tensor& t) {
        return ad::sum_all(g, ad::sqrt_elem(g, ad::add_scalar(g, ad::square(g, t), 1.0)));
    };
    auto combined = [&](Graph& g, const Tensor& t) {
        return ad::add(g, ad::scalar_mul(g, f(g, t), a), ad::scalar_mul(g, h(g, t), b));
    };

    const auto gf = grad_of(f), gh = grad_of(h), gc = grad_of(combined);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(gc[i] == doctest::Approx(a * gf[i] + b * gh[i]).epsilon(1e-12));
    }
}

TEST_CASE("min-rows ties route the gradient to the lowest index") {
    Graph g;
    const Tensor x = g.leaf(Tensor({1, 3}, {2.0, 1.5, 1.5}));
    const ad::MinRowsOut out = ad::min_rows(g, x);
    CHECK(out.argmin == std::vector<std::int64_t>{1});
    const ad::Gradients grads = g.backward(ad::sum_all(g, out.values));
    CHECK(grads.at(x).data == std::vector<double>{0, 1, 0});
}

TEST_CASE("every primitive matches central finite differences") {
    // The per-primitive component rows of the shared gradient checker.
    for (const char* comp : {"primitives.elementwise", "primitives.matmul",
                             "primitives.reduce_gather", "primitives.pairwise_grouped",
                             "primitives.idw"}) {
        CAPTURE(comp);
    }
    const auto rows = harness::run_gradcheck(/*seed=*/11, /*n_seeds=*/5);
    for (const auto& row : rows) {
        if (row.component.rfind("primitives.", 0) == 0) {
            CAPTURE(row.component);
            CHECK(row.max_rel_err < row.tol);
        }
    }
}

TEST_CASE("chamfer loss of a random 5-point pair matches finite differences") {
    Rng rng(3);
    Tensor a({5, 3});
    Tensor b({5, 3});
    for (auto& v : a.data) v = rng.uniform(-1, 1);
    for (auto& v : b.data) v = rng.uniform(-1, 1);
    std::vector<Tensor*> vars{&a, &b};
    const double err = harness::fd_max_rel_err(
        vars,
        [](Graph& g, const std::vector<Tensor*>& at) {
            return loss::chamfer_loss(g, *at[0], *at[1]);
        },
        1e-5);
    CHECK(err < 1e-4);
}

TEST_CASE("mlp: identity layer passes the input through") {
    Graph g;
    ad::MlpParams p;
    p.layers.push_back({Tensor({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1}), Tensor::zeros({3})});
    const Tensor x({2, 3}, {0.5, -1.5, 2.0, 3.0, 0.0, -0.25});
    CHECK(ad::mlp_forward(g, p, x).data == x.data);
}

TEST_CASE("mlp: zero weights give row-constant bias output") {
    Graph g;
    ad::MlpParams p;
    p.layers.push_back({Tensor::zeros({2, 3}), Tensor({2}, {0.7, -0.3})});
    const Tensor x({3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    const Tensor out = ad::mlp_forward(g, p, x);
    for (std::int64_t i = 0; i < 3; ++i) {
        CHECK(out.at(i, 0) == 0.7);
        CHECK(out.at(i, 1) == -0.3);
    }
}

TEST_CASE("mlp: width mismatch is an error") {
    Graph g;
    Rng rng(1);
    const ad::MlpParams p = ad::make_mlp({4, 3}, rng);
    CHECK_THROWS_AS(ad::mlp_forward(g, p, Tensor::zeros({2, 5})), ShapeError);
}

TEST_CASE("mlp forward agrees with the plain-loop oracle") {
    Rng rng(5);
    const ad::MlpParams p = ad::make_mlp({3, 6, 4}, rng);
    Graph g;
    Tensor x({2, 3});
    for (auto& v : x.data) v = rng.uniform(-1, 1);
    const Tensor out = ad::mlp_forward(g, p, x);
    for (std::int64_t r = 0; r < 2; ++r) {
        const std::vector<double> row{x.at(r, 0), x.at(r, 1), x.at(r, 2)};
        const auto expect = oracles::mlp_eval_oracle(p, row);
        for (std::int64_t c = 0; c < 4; ++c) {
            CHECK(out.at(r, c) == doctest::Approx(expect[static_cast<std::size_t>(c)]).epsilon(1e-12));
        }
    }
}

TEST_CASE("random 2-layer mlp gradient matches finite differences") {
    Rng rng(9);
    ad::MlpParams p = ad::make_mlp({3, 5, 2}, rng);
    Tensor x({4, 3});
    for (auto& v : x.data) v = rng.uniform(-1, 1);
    Tensor r({4, 2});
    for (auto& v : r.data) v = rng.uniform(-1, 1);
    std::vector<Tensor*> vars{&x};
    for (auto& l : p.layers) {
        vars.push_back(&l.w);
        vars.push_back(&l.b);
    }
    const double err = harness::fd_max_rel_err(
        vars,
        [p, r](Graph& g, const std::vector<Tensor*>& at) {
            ad::MlpParams p2 = p;
            std::size_t vi = 1;
            for (auto& l : p2.layers) {
                l.w = *at[vi++];
                l.b = *at[vi++];
            }
            return ad::sum_all(g, ad::mul(g, ad::mlp_forward(g, p2, *at[0]), r));
        },
        1e-5);
    CHECK(err < 1e-4);
}

TEST_CASE("corrupted adjoint is caught by the finite-difference checker") {
    ad::testing::set_adjoint_corruption(ad::Op::kMatmul, 1.05);
    Rng rng(2);
    ad::MlpParams p = ad::make_mlp({3, 4, 2}, rng);
    Tensor x({3, 3});
    for (auto& v : x.data) v = rng.uniform(-1, 1);
    std::vector<Tensor*> vars{&p.layers[0].w};
    const double err = harness::fd_max_rel_err(
        vars,
        [p, x](Graph& g, const std::vector<Tensor*>& at) {
            ad::MlpParams p2 = p;
            p2.layers[0].w = *at[0];
            return ad::sum_all(g, ad::mlp_forward(g, p2, x));
        },
        1e-5);
    ad::testing::clear_adjoint_corruption();
    CHECK(err > 1e-4);
}

TEST_CASE("a tensor attached to one graph cannot be used in another") {
    Graph g1, g2;
    const Tensor x = g1.leaf(Tensor({2}, {1, 2}));
    CHECK_THROWS_AS(ad::square(g2, x), Error);
}

TEST_SUITE_END();
