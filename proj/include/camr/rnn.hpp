#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "camr/common.hpp"

namespace camr {

// Single bidirectional tanh recurrent layer. The output at each position is
// the forward state concatenated with the backward state (dimension 2H).
struct BiRnn {
    Eigen::MatrixXd w_fwd, u_fwd;  // H x d, H x H
    Eigen::MatrixXd w_bwd, u_bwd;
    Eigen::VectorXd b_fwd, b_bwd;  // H

    int hidden() const { return static_cast<int>(w_fwd.rows()); }
    int input_dim() const { return static_cast<int>(w_fwd.cols()); }
    int output_dim() const { return 2 * hidden(); }

    static BiRnn zeros(int input_dim, int hidden) {
        BiRnn r;
        r.w_fwd = Eigen::MatrixXd::Zero(hidden, input_dim);
        r.u_fwd = Eigen::MatrixXd::Zero(hidden, hidden);
        r.w_bwd = Eigen::MatrixXd::Zero(hidden, input_dim);
        r.u_bwd = Eigen::MatrixXd::Zero(hidden, hidden);
        r.b_fwd = Eigen::VectorXd::Zero(hidden);
        r.b_bwd = Eigen::VectorXd::Zero(hidden);
        return r;
    }

    static BiRnn random(int input_dim, int hidden, uint64_t seed, double scale = 0.1) {
        BiRnn r = zeros(input_dim, hidden);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> dist(-scale, scale);
        for (Eigen::MatrixXd* m : {&r.w_fwd, &r.u_fwd, &r.w_bwd, &r.u_bwd})
            for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = dist(rng);
        for (Eigen::VectorXd* v : {&r.b_fwd, &r.b_bwd})
            for (Eigen::Index i = 0; i < v->size(); ++i) v->data()[i] = dist(rng);
        return r;
    }
};

struct BiRnnStates {
    std::vector<Eigen::VectorXd> fwd;  // f_1..f_N
    std::vector<Eigen::VectorXd> bwd;  // b_1..b_N
};

inline BiRnnStates birnn_states(const BiRnn& r, const std::vector<Eigen::VectorXd>& xs) {
    const size_t n = xs.size();
    const int h = r.hidden();
    BiRnnStates st;
    st.fwd.resize(n);
    st.bwd.resize(n);
    Eigen::VectorXd prev = Eigen::VectorXd::Zero(h);
    for (size_t t = 0; t < n; ++t) {
        st.fwd[t] = (r.w_fwd * xs[t] + r.u_fwd * prev + r.b_fwd).array().tanh();
        prev = st.fwd[t];
    }
    Eigen::VectorXd next = Eigen::VectorXd::Zero(h);
    for (size_t t = n; t-- > 0;) {
        st.bwd[t] = (r.w_bwd * xs[t] + r.u_bwd * next + r.b_bwd).array().tanh();
        next = st.bwd[t];
    }
    return st;
}

inline std::vector<Eigen::VectorXd> birnn_forward(const BiRnn& r,
                                                  const std::vector<Eigen::VectorXd>& xs) {
    BiRnnStates st = birnn_states(r, xs);
    std::vector<Eigen::VectorXd> out(xs.size());
    for (size_t t = 0; t < xs.size(); ++t) {
        out[t].resize(r.output_dim());
        out[t] << st.fwd[t], st.bwd[t];
    }
    return out;
}

struct BiRnnGrad {
    Eigen::MatrixXd w_fwd, u_fwd, w_bwd, u_bwd;
    Eigen::VectorXd b_fwd, b_bwd;

    static BiRnnGrad zeros(const BiRnn& r) {
        BiRnnGrad g;
        g.w_fwd = Eigen::MatrixXd::Zero(r.hidden(), r.input_dim());
        g.u_fwd = Eigen::MatrixXd::Zero(r.hidden(), r.hidden());
        g.w_bwd = Eigen::MatrixXd::Zero(r.hidden(), r.input_dim());
        g.u_bwd = Eigen::MatrixXd::Zero(r.hidden(), r.hidden());
        g.b_fwd = Eigen::VectorXd::Zero(r.hidden());
        g.b_bwd = Eigen::VectorXd::Zero(r.hidden());
        return g;
    }
};

// Backpropagation through time. d_out[t] is dL/d(output_t) with the forward
// half in the top rows; gradients accumulate into `grad`.
inline void birnn_backward(const BiRnn& r, const std::vector<Eigen::VectorXd>& xs,
                           const BiRnnStates& st, const std::vector<Eigen::VectorXd>& d_out,
                           BiRnnGrad& grad) {
    const size_t n = xs.size();
    const int h = r.hidden();
    // forward chain: dependencies run t-1 -> t, so walk backwards
    Eigen::VectorXd carry = Eigen::VectorXd::Zero(h);
    for (size_t t = n; t-- > 0;) {
        Eigen::VectorXd df = d_out[t].head(h) + carry;
        Eigen::VectorXd da = df.array() * (1.0 - st.fwd[t].array().square());
        grad.w_fwd += da * xs[t].transpose();
        if (t > 0) grad.u_fwd += da * st.fwd[t - 1].transpose();
        grad.b_fwd += da;
        carry = r.u_fwd.transpose() * da;
    }
    // backward chain: dependencies run t+1 -> t, so walk forwards
    carry.setZero();
    for (size_t t = 0; t < n; ++t) {
        Eigen::VectorXd db = d_out[t].tail(h) + carry;
        Eigen::VectorXd da = db.array() * (1.0 - st.bwd[t].array().square());
        grad.w_bwd += da * xs[t].transpose();
        if (t + 1 < n) grad.u_bwd += da * st.bwd[t + 1].transpose();
        grad.b_bwd += da;
        carry = r.u_bwd.transpose() * da;
    }
}

}  // namespace camr
