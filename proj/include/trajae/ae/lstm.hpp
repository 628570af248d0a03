#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "trajae/error.hpp"
#include "trajae/rng.hpp"

namespace trajae::ae {

/// Dense row-major matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// Gate order inside LstmParams: forget, input, block input, output.
enum Gate : std::size_t { GateF = 0, GateI = 1, GateZ = 2, GateO = 3 };

inline constexpr std::size_t weight_count(std::size_t n_in, std::size_t n_out) noexcept
{
    return 4 * ((n_in + 1) * n_out + n_out * n_out);
}

/// Weights of one LSTM cell: per gate an input matrix W (n_out x n_in), a
/// recurrent matrix U (n_out x n_out) and a bias (n_out).
struct LstmParams {
    std::size_t n_in = 0;
    std::size_t n_out = 0;
    std::array<Matrix, 4> W;
    std::array<Matrix, 4> U;
    std::array<std::vector<double>, 4> b;

    LstmParams() = default;
    LstmParams(std::size_t in, std::size_t out) : n_in(in), n_out(out)
    {
        if (in == 0 || out == 0)
            fail(Errc::config, "LSTM dimensions must be positive");
        for (std::size_t g = 0; g < 4; ++g) {
            W[g] = Matrix(out, in);
            U[g] = Matrix(out, out);
            b[g].assign(out, 0.0);
        }
    }

    std::size_t param_count() const noexcept
    {
        std::size_t n = 0;
        for (std::size_t g = 0; g < 4; ++g)
            n += W[g].data.size() + U[g].data.size() + b[g].size();
        return n;
    }

    template <typename F>
    void for_each_tensor(F&& f) { visit(*this, f); }
    template <typename F>
    void for_each_tensor(F&& f) const { visit(*this, f); }

    /// Fan-based uniform init, +-sqrt(6 / (fan_in + fan_out)) per matrix;
    /// biases zero.
    void init_uniform(Rng& rng)
    {
        const double lim_w = std::sqrt(6.0 / static_cast<double>(n_in + n_out));
        const double lim_u = std::sqrt(6.0 / static_cast<double>(n_out + n_out));
        for (std::size_t g = 0; g < 4; ++g) {
            for (auto& v : W[g].data)
                v = rng.uniform(-lim_w, lim_w);
            for (auto& v : U[g].data)
                v = rng.uniform(-lim_u, lim_u);
            std::fill(b[g].begin(), b[g].end(), 0.0);
        }
    }

    friend bool operator==(const LstmParams&, const LstmParams&) = default;

private:
    template <typename Self, typename F>
    static void visit(Self& self, F& f)
    {
        for (std::size_t g = 0; g < 4; ++g) {
            f(self.W[g].data);
            f(self.U[g].data);
            f(self.b[g]);
        }
    }
};

inline double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

/// Activations of a sequence run, kept for the backward pass. Row t of
/// h and c holds the state *after* step t; the initial state is zero.
struct LstmTrace {
    std::size_t steps = 0;
    std::size_t n_in = 0;
    std::size_t n_out = 0;
    std::vector<double> x;              // steps x n_in
    std::array<std::vector<double>, 4> gate; // steps x n_out, post-activation
    std::vector<double> c;              // steps x n_out
    std::vector<double> tc;             // tanh(c)
    std::vector<double> h;              // steps x n_out

    std::span<const double> h_at(std::size_t t) const { return {h.data() + t * n_out, n_out}; }
};

namespace detail {

inline void step_into(const LstmParams& p, const double* x, const double* h_prev,
                      const double* c_prev, double* gates[4], double* c, double* tc, double* h)
{
    const std::size_t no = p.n_out;
    const std::size_t ni = p.n_in;
    for (std::size_t g = 0; g < 4; ++g) {
        const double* W = p.W[g].data.data();
        const double* U = p.U[g].data.data();
        const double* b = p.b[g].data();
        double* out = gates[g];
        for (std::size_t r = 0; r < no; ++r) {
            double a = b[r];
            const double* wr = W + r * ni;
            for (std::size_t k = 0; k < ni; ++k)
                a += wr[k] * x[k];
            const double* ur = U + r * no;
            for (std::size_t k = 0; k < no; ++k)
                a += ur[k] * h_prev[k];
            out[r] = g == GateZ ? std::tanh(a) : sigmoid(a);
        }
    }
    for (std::size_t r = 0; r < no; ++r) {
        c[r] = c_prev[r] * gates[GateF][r] + gates[GateZ][r] * gates[GateI][r];
        tc[r] = std::tanh(c[r]);
        h[r] = gates[GateO][r] * tc[r];
    }
}

} // namespace detail

struct LstmState {
    std::vector<double> h;
    std::vector<double> c;
};

/// One cell update:
///   f, i, o = sigmoid(W x + U h_prev + b), z = tanh(W_z x + U_z h_prev + b_z)
///   c = c_prev * f + z * i,  h = o * tanh(c)
inline LstmState lstm_step(const LstmParams& p, std::span<const double> x,
                           std::span<const double> h_prev, std::span<const double> c_prev)
{
    if (x.size() != p.n_in || h_prev.size() != p.n_out || c_prev.size() != p.n_out)
        fail(Errc::dimension_mismatch, "lstm_step input shapes do not match the cell");
    std::array<std::vector<double>, 4> g;
    double* gp[4];
    for (std::size_t k = 0; k < 4; ++k) {
        g[k].resize(p.n_out);
        gp[k] = g[k].data();
    }
    LstmState s{std::vector<double>(p.n_out), std::vector<double>(p.n_out)};
    std::vector<double> tc(p.n_out);
    detail::step_into(p, x.data(), h_prev.data(), c_prev.data(), gp, s.c.data(), tc.data(),
                      s.h.data());
    return s;
}

/// Runs the cell over `steps` inputs (row-major, steps x n_in) from a zero
/// state, filling `tr`.
inline void lstm_forward(const LstmParams& p, std::span<const double> xs, std::size_t steps,
                         LstmTrace& tr)
{
    if (xs.size() != steps * p.n_in)
        fail(Errc::dimension_mismatch, "lstm_forward input has wrong size");
    const std::size_t no = p.n_out;
    tr.steps = steps;
    tr.n_in = p.n_in;
    tr.n_out = no;
    tr.x.assign(xs.begin(), xs.end());
    for (auto& g : tr.gate)
        g.resize(steps * no);
    tr.c.resize(steps * no);
    tr.tc.resize(steps * no);
    tr.h.resize(steps * no);
    const std::vector<double> zero(no, 0.0);
    for (std::size_t t = 0; t < steps; ++t) {
        const double* hp = t == 0 ? zero.data() : tr.h.data() + (t - 1) * no;
        const double* cp = t == 0 ? zero.data() : tr.c.data() + (t - 1) * no;
        double* gp[4];
        for (std::size_t g = 0; g < 4; ++g)
            gp[g] = tr.gate[g].data() + t * no;
        detail::step_into(p, tr.x.data() + t * p.n_in, hp, cp, gp, tr.c.data() + t * no,
                          tr.tc.data() + t * no, tr.h.data() + t * no);
    }
}

/// Backpropagation through time. `dh` (steps x n_out) is the loss gradient
/// arriving at each step's output h. Accumulates into `grad` and writes the
/// gradient with respect to each input row into `dx` (steps x n_in).
inline void lstm_backward(const LstmParams& p, const LstmTrace& tr, std::span<const double> dh,
                          LstmParams& grad, std::vector<double>& dx)
{
    const std::size_t no = p.n_out;
    const std::size_t ni = p.n_in;
    const std::size_t steps = tr.steps;
    dx.assign(steps * ni, 0.0);
    std::vector<double> dh_next(no, 0.0);
    std::vector<double> dc_next(no, 0.0);
    std::array<std::vector<double>, 4> da;
    for (auto& v : da)
        v.resize(no);

    for (std::size_t tt = steps; tt-- > 0;) {
        const double* f = tr.gate[GateF].data() + tt * no;
        const double* i = tr.gate[GateI].data() + tt * no;
        const double* z = tr.gate[GateZ].data() + tt * no;
        const double* o = tr.gate[GateO].data() + tt * no;
        const double* tc = tr.tc.data() + tt * no;
        const double* c_prev = tt == 0 ? nullptr : tr.c.data() + (tt - 1) * no;
        const double* h_prev = tt == 0 ? nullptr : tr.h.data() + (tt - 1) * no;
        const double* x = tr.x.data() + tt * ni;

        for (std::size_t r = 0; r < no; ++r) {
            const double dhr = dh[tt * no + r] + dh_next[r];
            const double dc = dc_next[r] + dhr * o[r] * (1.0 - tc[r] * tc[r]);
            const double cp = c_prev ? c_prev[r] : 0.0;
            da[GateO][r] = dhr * tc[r] * o[r] * (1.0 - o[r]);
            da[GateF][r] = dc * cp * f[r] * (1.0 - f[r]);
            da[GateI][r] = dc * z[r] * i[r] * (1.0 - i[r]);
            da[GateZ][r] = dc * i[r] * (1.0 - z[r] * z[r]);
            dc_next[r] = dc * f[r];
        }

        std::fill(dh_next.begin(), dh_next.end(), 0.0);
        double* dxt = dx.data() + tt * ni;
        for (std::size_t g = 0; g < 4; ++g) {
            const double* a = da[g].data();
            double* gW = grad.W[g].data.data();
            double* gU = grad.U[g].data.data();
            double* gb = grad.b[g].data();
            const double* W = p.W[g].data.data();
            const double* U = p.U[g].data.data();
            for (std::size_t r = 0; r < no; ++r) {
                const double ar = a[r];
                if (ar == 0.0)
                    continue;
                gb[r] += ar;
                double* gwr = gW + r * ni;
                const double* wr = W + r * ni;
                for (std::size_t k = 0; k < ni; ++k) {
                    gwr[k] += ar * x[k];
                    dxt[k] += wr[k] * ar;
                }
                if (h_prev) {
                    double* gur = gU + r * no;
                    const double* ur = U + r * no;
                    for (std::size_t k = 0; k < no; ++k) {
                        gur[k] += ar * h_prev[k];
                        dh_next[k] += ur[k] * ar;
                    }
                }
            }
        }
    }
}

} // namespace trajae::ae
