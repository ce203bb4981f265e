#include "connsim/nn/kernels.hpp"

#include <algorithm>
#include <vector>

#include "connsim/errors.hpp"

namespace connsim::nn {

namespace {

inline double dot(const double* a, const double* b, std::size_t n) {
    double acc[8] = {};
    std::size_t k = 0;
    for (; k + 8 <= n; k += 8) {
        for (std::size_t l = 0; l < 8; ++l) acc[l] += a[k + l] * b[k + l];
    }
    double s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (; k < n; ++k) s += a[k] * b[k];
    return s;
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) y[k] += alpha * x[k];
}

void expect(bool ok, const char* what) {
    if (!ok) throw ContractViolation(what);
}

void check_cross(const CrossShape& s, std::size_t in, std::size_t filt, std::size_t bias,
                 std::size_t out, std::size_t out_per_filter) {
    const std::size_t q = s.nodes;
    expect(in == s.in_ch * q * q, "cross layer: input size mismatch");
    expect(filt == s.filters * s.in_ch * q, "cross layer: filter size mismatch");
    expect(bias == s.filters, "cross layer: bias size mismatch");
    expect(out == s.filters * out_per_filter, "cross layer: output size mismatch");
}

std::ptrdiff_t signed_size(std::size_t n) { return static_cast<std::ptrdiff_t>(n); }

}  // namespace

void edge2edge_forward(const CrossShape& s, std::span<const double> in, std::span<const double> row,
                       std::span<const double> col, std::span<const double> bias,
                       std::span<double> out) {
    const std::size_t q = s.nodes;
    const std::size_t C = s.in_ch;
    check_cross(s, in.size(), row.size(), bias.size(), out.size(), q * q);
    expect(col.size() == row.size(), "edge2edge: column filter size mismatch");

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t fs = 0; fs < signed_size(s.filters); ++fs) {
        const auto f = static_cast<std::size_t>(fs);
        std::vector<double> r(q, 0.0);
        std::vector<double> c(q, 0.0);
        for (std::size_t ch = 0; ch < C; ++ch) {
            const double* x = in.data() + ch * q * q;
            const double* rf = row.data() + (f * C + ch) * q;
            const double* cf = col.data() + (f * C + ch) * q;
            for (std::size_t i = 0; i < q; ++i) r[i] += dot(rf, x + i * q, q);
            for (std::size_t k = 0; k < q; ++k) axpy(cf[k], x + k * q, c.data(), q);
        }
        double* o = out.data() + f * q * q;
        for (std::size_t i = 0; i < q; ++i) {
            const double base = r[i] + bias[f];
            for (std::size_t j = 0; j < q; ++j) o[i * q + j] = base + c[j];
        }
    }
}

void edge2edge_backward(const CrossShape& s, std::span<const double> in,
                        std::span<const double> row, std::span<const double> col,
                        std::span<const double> d_out, std::span<double> d_row,
                        std::span<double> d_col, std::span<double> d_bias,
                        std::span<double> d_in) {
    const std::size_t q = s.nodes;
    const std::size_t C = s.in_ch;
    const std::size_t F = s.filters;
    check_cross(s, in.size(), row.size(), d_bias.empty() ? F : d_bias.size(), d_out.size(), q * q);
    const bool params = !d_row.empty();
    expect(!params || (d_row.size() == row.size() && d_col.size() == col.size()),
           "edge2edge: gradient size mismatch");

    // Row and column marginals of the output gradient.
    std::vector<double> dr(F * q, 0.0);
    std::vector<double> dc(F * q, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t fs = 0; fs < signed_size(F); ++fs) {
        const auto f = static_cast<std::size_t>(fs);
        const double* g = d_out.data() + f * q * q;
        double* drf = dr.data() + f * q;
        double* dcf = dc.data() + f * q;
        double total = 0.0;
        for (std::size_t i = 0; i < q; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < q; ++j) acc += g[i * q + j];
            drf[i] = acc;
            total += acc;
            axpy(1.0, g + i * q, dcf, q);
        }
        if (!params) continue;
        d_bias[f] += total;
        for (std::size_t ch = 0; ch < C; ++ch) {
            const double* x = in.data() + ch * q * q;
            double* grf = d_row.data() + (f * C + ch) * q;
            double* gcf = d_col.data() + (f * C + ch) * q;
            for (std::size_t i = 0; i < q; ++i) axpy(drf[i], x + i * q, grf, q);
            for (std::size_t k = 0; k < q; ++k) gcf[k] += dot(dcf, x + k * q, q);
        }
    }

    if (d_in.empty()) return;
    expect(d_in.size() == in.size(), "edge2edge: input gradient size mismatch");
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t cs = 0; cs < signed_size(C); ++cs) {
        const auto ch = static_cast<std::size_t>(cs);
        double* gx = d_in.data() + ch * q * q;
        for (std::size_t f = 0; f < F; ++f) {
            const double* rf = row.data() + (f * C + ch) * q;
            const double* cf = col.data() + (f * C + ch) * q;
            const double* drf = dr.data() + f * q;
            const double* dcf = dc.data() + f * q;
            for (std::size_t i = 0; i < q; ++i) {
                axpy(drf[i], rf, gx + i * q, q);  // row part: cell (i, k)
                axpy(cf[i], dcf, gx + i * q, q);  // column part: cell (k=i, j)
            }
        }
    }
}

void edge2node_forward(const CrossShape& s, std::span<const double> in,
                       std::span<const double> weight, std::span<const double> bias,
                       std::span<double> out) {
    const std::size_t q = s.nodes;
    const std::size_t C = s.in_ch;
    check_cross(s, in.size(), weight.size(), bias.size(), out.size(), q);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t fs = 0; fs < signed_size(s.filters); ++fs) {
        const auto f = static_cast<std::size_t>(fs);
        double* o = out.data() + f * q;
        std::fill(o, o + q, bias[f]);
        for (std::size_t ch = 0; ch < C; ++ch) {
            const double* x = in.data() + ch * q * q;
            const double* w = weight.data() + (f * C + ch) * q;
            for (std::size_t i = 0; i < q; ++i) o[i] += dot(w, x + i * q, q);
        }
    }
}

void edge2node_backward(const CrossShape& s, std::span<const double> in,
                        std::span<const double> weight, std::span<const double> d_out,
                        std::span<double> d_weight, std::span<double> d_bias,
                        std::span<double> d_in) {
    const std::size_t q = s.nodes;
    const std::size_t C = s.in_ch;
    const std::size_t F = s.filters;
    check_cross(s, in.size(), weight.size(), d_bias.empty() ? F : d_bias.size(), d_out.size(), q);
    expect(d_weight.empty() || d_weight.size() == weight.size(),
           "edge2node: gradient size mismatch");
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t fs = 0; fs < signed_size(d_weight.empty() ? 0 : F); ++fs) {
        const auto f = static_cast<std::size_t>(fs);
        const double* g = d_out.data() + f * q;
        for (std::size_t i = 0; i < q; ++i) d_bias[f] += g[i];
        for (std::size_t ch = 0; ch < C; ++ch) {
            const double* x = in.data() + ch * q * q;
            double* gw = d_weight.data() + (f * C + ch) * q;
            for (std::size_t i = 0; i < q; ++i) axpy(g[i], x + i * q, gw, q);
        }
    }
    if (d_in.empty()) return;
    expect(d_in.size() == in.size(), "edge2node: input gradient size mismatch");
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t cs = 0; cs < signed_size(C); ++cs) {
        const auto ch = static_cast<std::size_t>(cs);
        double* gx = d_in.data() + ch * q * q;
        for (std::size_t f = 0; f < F; ++f) {
            const double* w = weight.data() + (f * C + ch) * q;
            const double* g = d_out.data() + f * q;
            for (std::size_t i = 0; i < q; ++i) axpy(g[i], w, gx + i * q, q);
        }
    }
}

void dense_forward(const DenseShape& s, std::span<const double> in, std::span<const double> weight,
                   std::span<const double> bias, std::span<double> out) {
    expect(in.size() == s.inputs && weight.size() == s.inputs * s.outputs &&
               bias.size() == s.outputs && out.size() == s.outputs,
           "dense: size mismatch");
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t os = 0; os < signed_size(s.outputs); ++os) {
        const auto o = static_cast<std::size_t>(os);
        out[o] = bias[o] + dot(weight.data() + o * s.inputs, in.data(), s.inputs);
    }
}

void dense_backward(const DenseShape& s, std::span<const double> in,
                    std::span<const double> weight, std::span<const double> d_out,
                    std::span<double> d_weight, std::span<double> d_bias, std::span<double> d_in) {
    expect(in.size() == s.inputs && weight.size() == s.inputs * s.outputs &&
               d_out.size() == s.outputs &&
               (d_weight.empty() || (d_weight.size() == weight.size() && d_bias.size() == s.outputs)),
           "dense: size mismatch");
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t os = 0; os < signed_size(d_weight.empty() ? 0 : s.outputs); ++os) {
        const auto o = static_cast<std::size_t>(os);
        d_bias[o] += d_out[o];
        axpy(d_out[o], in.data(), d_weight.data() + o * s.inputs, s.inputs);
    }
    if (d_in.empty()) return;
    expect(d_in.size() == s.inputs, "dense: input gradient size mismatch");
    constexpr std::size_t kBlock = 256;
    const std::size_t blocks = (s.inputs + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t bs = 0; bs < signed_size(blocks); ++bs) {
        const std::size_t lo = static_cast<std::size_t>(bs) * kBlock;
        const std::size_t n = std::min(kBlock, s.inputs - lo);
        for (std::size_t o = 0; o < s.outputs; ++o) {
            axpy(d_out[o], weight.data() + o * s.inputs + lo, d_in.data() + lo, n);
        }
    }
}

namespace reference {

void edge2edge_forward(const CrossShape& s, std::span<const double> in, std::span<const double> row,
                       std::span<const double> col, std::span<const double> bias,
                       std::span<double> out) {
    const std::size_t q = s.nodes;
    const std::size_t C = s.in_ch;
    check_cross(s, in.size(), row.size(), bias.size(), out.size(), q * q);
    for (std::size_t f = 0; f < s.filters; ++f) {
        for (std::size_t i = 0; i < q; ++i) {
            for (std::size_t j = 0; j < q; ++j) {
                double v = bias[f];
                for (std::size_t c = 0; c < C; ++c) {
                    for (std::size_t k = 0; k < q; ++k) {
                        v += row[(f * C + c) * q + k] * in[(c * q + i) * q + k];
                        v += col[(f * C + c) * q + k] * in[(c * q + k) * q + j];
                    }
                }
                out[(f * q + i) * q + j] = v;
            }
        }
    }
}

void edge2edge_backward(const CrossShape& s, std::span<const double> in,
                        std::span<const double> row, std::span<const double> col,
                        std::span<const double> d_out, std::span<double> d_row,
                        std::span<double> d_col, std::span<double> d_bias,
                        std::span<double> d_in) {
    const std::size_t q = s.nodes;
    const std::size_t C = s.in_ch;
    check_cross(s, in.size(), row.size(), d_bias.size(), d_out.size(), q * q);
    for (std::size_t f = 0; f < s.filters; ++f) {
        for (std::size_t i = 0; i < q; ++i) {
            for (std::size_t j = 0; j < q; ++j) {
                const double g = d_out[(f * q + i) * q + j];
                d_bias[f] += g;
                for (std::size_t c = 0; c < C; ++c) {
                    for (std::size_t k = 0; k < q; ++k) {
                        d_row[(f * C + c) * q + k] += g * in[(c * q + i) * q + k];
                        d_col[(f * C + c) * q + k] += g * in[(c * q + k) * q + j];
                        if (!d_in.empty()) {
                            d_in[(c * q + i) * q + k] += g * row[(f * C + c) * q + k];
                            d_in[(c * q + k) * q + j] += g * col[(f * C + c) * q + k];
                        }
                    }
                }
            }
        }
    }
}

void edge2node_forward(const CrossShape& s, std::span<const double> in,
                       std::span<const double> weight, std::span<const double> bias,
                       std::span<double> out) {
    const std::size_t q = s.nodes;
    const std::size_t C = s.in_ch;
    check_cross(s, in.size(), weight.size(), bias.size(), out.size(), q);
    for (std::size_t f = 0; f < s.filters; ++f) {
        for (std::size_t i = 0; i < q; ++i) {
            double v = bias[f];
            for (std::size_t c = 0; c < C; ++c) {
                for (std::size_t j = 0; j < q; ++j) {
                    v += weight[(f * C + c) * q + j] * in[(c * q + i) * q + j];
                }
            }
            out[f * q + i] = v;
        }
    }
}

void edge2node_backward(const CrossShape& s, std::span<const double> in,
                        std::span<const double> weight, std::span<const double> d_out,
                        std::span<double> d_weight, std::span<double> d_bias,
                        std::span<double> d_in) {
    const std::size_t q = s.nodes;
    const std::size_t C = s.in_ch;
    check_cross(s, in.size(), weight.size(), d_bias.size(), d_out.size(), q);
    for (std::size_t f = 0; f < s.filters; ++f) {
        for (std::size_t i = 0; i < q; ++i) {
            const double g = d_out[f * q + i];
            d_bias[f] += g;
            for (std::size_t c = 0; c < C; ++c) {
                for (std::size_t j = 0; j < q; ++j) {
                    d_weight[(f * C + c) * q + j] += g * in[(c * q + i) * q + j];
                    if (!d_in.empty()) d_in[(c * q + i) * q + j] += g * weight[(f * C + c) * q + j];
                }
            }
        }
    }
}

void dense_forward(const DenseShape& s, std::span<const double> in, std::span<const double> weight,
                   std::span<const double> bias, std::span<double> out) {
    for (std::size_t o = 0; o < s.outputs; ++o) {
        double v = bias[o];
        for (std::size_t i = 0; i < s.inputs; ++i) v += weight[o * s.inputs + i] * in[i];
        out[o] = v;
    }
}

void dense_backward(const DenseShape& s, std::span<const double> in,
                    std::span<const double> weight, std::span<const double> d_out,
                    std::span<double> d_weight, std::span<double> d_bias, std::span<double> d_in) {
    for (std::size_t o = 0; o < s.outputs; ++o) {
        d_bias[o] += d_out[o];
        for (std::size_t i = 0; i < s.inputs; ++i) {
            d_weight[o * s.inputs + i] += d_out[o] * in[i];
            if (!d_in.empty()) d_in[i] += d_out[o] * weight[o * s.inputs + i];
        }
    }
}

}  // namespace reference

}  // namespace connsim::nn
