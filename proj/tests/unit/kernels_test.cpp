#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "connsim/nn/kernels.hpp"
#include "connsim/rng.hpp"

using namespace connsim;
using namespace connsim::nn;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal(0.0, 1.0);
    return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void expect_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "index " << i;
}

/// Central difference of L = <g, f(x)> against the analytic gradient.
void check_gradient(std::vector<double>& x, const std::vector<double>& analytic,
                    const std::function<double()>& loss) {
    const double h = 1e-4;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + h;
        const double up = loss();
        x[i] = saved - h;
        const double down = loss();
        x[i] = saved;
        const double numeric = (up - down) / (2 * h);
        const double scale = std::max({1.0, std::abs(numeric), std::abs(analytic[i])});
        EXPECT_LE(std::abs(numeric - analytic[i]) / scale, 1e-4) << "index " << i;
    }
}

}  // namespace

TEST(Edge2Edge, HandExample) {
    const CrossShape s{2, 1, 1};
    const std::vector<double> a{0, 1, 1, 0}, r{1, 0}, c{0, 1}, b{0};
    std::vector<double> out(4);
    edge2edge_forward(s, a, r, c, b, out);
    EXPECT_EQ(out, (std::vector<double>{1, 0, 2, 1}));
    reference::edge2edge_forward(s, a, r, c, b, out);
    EXPECT_EQ(out, (std::vector<double>{1, 0, 2, 1}));
}

TEST(Edge2Edge, BiasOnly) {
    const CrossShape s{3, 2, 1};
    Rng rng(1);
    const auto a = random_vec(18, rng);
    const std::vector<double> zero(6, 0.0), b{5};
    std::vector<double> out(9);
    edge2edge_forward(s, a, zero, zero, b, out);
    for (double v : out) EXPECT_EQ(v, 5.0);
}

TEST(Edge2Node, HandExample) {
    const CrossShape s{2, 1, 1};
    const std::vector<double> a{0, 1, 1, 0}, w{1, 1}, b{0};
    std::vector<double> out(2);
    edge2node_forward(s, a, w, b, out);
    EXPECT_EQ(out, (std::vector<double>{1, 1}));
    const std::vector<double> zw{0, 0}, bias{3};
    edge2node_forward(s, a, zw, bias, out);
    EXPECT_EQ(out, (std::vector<double>{3, 3}));
}

TEST(Edge2Node, Linearity) {
    const CrossShape s{4, 2, 3};
    Rng rng(2);
    auto a = random_vec(32, rng);
    const auto w = random_vec(24, rng), b = random_vec(3, rng);
    std::vector<double> o1(12), o2(12);
    edge2node_forward(s, a, w, b, o1);
    for (auto& x : a) x *= 2;
    edge2node_forward(s, a, w, b, o2);
    for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(o2[i] - b[i / 4], 2 * (o1[i] - b[i / 4]), 1e-12);
}

TEST(Kernels, ParallelMatchesReference) {
    Rng rng(3);
    for (std::size_t q : {2u, 5u, 17u}) {
        const CrossShape s{q, 3, 4};
        const auto in = random_vec(s.in_ch * q * q, rng);
        const auto row = random_vec(s.filters * s.in_ch * q, rng);
        const auto col = random_vec(s.filters * s.in_ch * q, rng);
        const auto bias = random_vec(s.filters, rng);
        const auto d_out = random_vec(s.filters * q * q, rng);
        std::vector<double> o1(s.filters * q * q), o2(o1.size());
        edge2edge_forward(s, in, row, col, bias, o1);
        reference::edge2edge_forward(s, in, row, col, bias, o2);
        expect_close(o1, o2, 1e-12);

        std::vector<double> dr1(row.size()), dc1(col.size()), db1(4), di1(in.size());
        auto dr2 = dr1, dc2 = dc1, db2 = db1, di2 = di1;
        edge2edge_backward(s, in, row, col, d_out, dr1, dc1, db1, di1);
        reference::edge2edge_backward(s, in, row, col, d_out, dr2, dc2, db2, di2);
        expect_close(dr1, dr2, 1e-10);
        expect_close(dc1, dc2, 1e-10);
        expect_close(db1, db2, 1e-10);
        expect_close(di1, di2, 1e-10);

        const auto w = random_vec(s.filters * s.in_ch * q, rng);
        const auto dn = random_vec(s.filters * q, rng);
        std::vector<double> n1(s.filters * q), n2(n1.size());
        edge2node_forward(s, in, w, bias, n1);
        reference::edge2node_forward(s, in, w, bias, n2);
        expect_close(n1, n2, 1e-12);
        std::vector<double> dw1(w.size()), dnb1(4), dni1(in.size());
        auto dw2 = dw1, dnb2 = dnb1, dni2 = dni1;
        edge2node_backward(s, in, w, dn, dw1, dnb1, dni1);
        reference::edge2node_backward(s, in, w, dn, dw2, dnb2, dni2);
        expect_close(dw1, dw2, 1e-10);
        expect_close(dnb1, dnb2, 1e-10);
        expect_close(dni1, dni2, 1e-10);

        const DenseShape d{q * 3, 7};
        const auto x = random_vec(d.inputs, rng);
        const auto W = random_vec(d.inputs * d.outputs, rng);
        const auto db = random_vec(d.outputs, rng), g = random_vec(d.outputs, rng);
        std::vector<double> y1(7), y2(7);
        dense_forward(d, x, W, db, y1);
        reference::dense_forward(d, x, W, db, y2);
        expect_close(y1, y2, 1e-12);
        std::vector<double> dW1(W.size()), ddb1(7), dx1(x.size());
        auto dW2 = dW1, ddb2 = ddb1, dx2 = dx1;
        dense_backward(d, x, W, g, dW1, ddb1, dx1);
        reference::dense_backward(d, x, W, g, dW2, ddb2, dx2);
        expect_close(dW1, dW2, 1e-10);
        expect_close(ddb1, ddb2, 1e-12);
        expect_close(dx1, dx2, 1e-10);
    }
}

TEST(Kernels, BackwardAccumulates) {
    const DenseShape d{3, 2};
    const std::vector<double> x{1, 2, 3}, W(6, 1.0), g{1, 1};
    std::vector<double> dW(6, 1.0), db(2, 1.0), dx;
    dense_backward(d, x, W, g, dW, db, dx);
    EXPECT_EQ(dW, (std::vector<double>{2, 3, 4, 2, 3, 4}));
    EXPECT_EQ(db, (std::vector<double>{2, 2}));
}

TEST(GradientCheck, Edge2EdgeLayer) {
    Rng rng(4);
    const CrossShape s{5, 2, 3};
    auto in = random_vec(50, rng), row = random_vec(30, rng), col = random_vec(30, rng),
         bias = random_vec(3, rng);
    const auto g = random_vec(75, rng);
    std::vector<double> out(75);
    auto loss = [&] {
        edge2edge_forward(s, in, row, col, bias, out);
        return dot(g, out);
    };
    std::vector<double> dr(30), dc(30), db(3), di(50);
    edge2edge_backward(s, in, row, col, g, dr, dc, db, di);
    check_gradient(in, di, loss);
    check_gradient(row, dr, loss);
    check_gradient(col, dc, loss);
    check_gradient(bias, db, loss);
}

TEST(GradientCheck, Edge2NodeLayer) {
    Rng rng(5);
    const CrossShape s{6, 3, 2};
    auto in = random_vec(108, rng), w = random_vec(36, rng), bias = random_vec(2, rng);
    const auto g = random_vec(12, rng);
    std::vector<double> out(12);
    auto loss = [&] {
        edge2node_forward(s, in, w, bias, out);
        return dot(g, out);
    };
    std::vector<double> dw(36), db(2), di(108);
    edge2node_backward(s, in, w, g, dw, db, di);
    check_gradient(in, di, loss);
    check_gradient(w, dw, loss);
    check_gradient(bias, db, loss);
}

TEST(GradientCheck, DenseLayer) {
    Rng rng(6);
    const DenseShape d{8, 5};
    auto x = random_vec(8, rng), W = random_vec(40, rng), b = random_vec(5, rng);
    const auto g = random_vec(5, rng);
    std::vector<double> y(5);
    auto loss = [&] {
        dense_forward(d, x, W, b, y);
        return dot(g, y);
    };
    std::vector<double> dW(40), db(5), dx(8);
    dense_backward(d, x, W, g, dW, db, dx);
    check_gradient(x, dx, loss);
    check_gradient(W, dW, loss);
    check_gradient(b, db, loss);
}
