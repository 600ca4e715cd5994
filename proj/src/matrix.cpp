#include "scanqa/matrix.hpp"

namespace scanqa {

void matmul(const Mat& x, const Mat& w, Mat& out, bool accumulate) {
    if (x.cols != w.rows) throw ShapeError("matmul: inner dimensions disagree");
    if (out.rows != x.rows || out.cols != w.cols) out = Mat(x.rows, w.cols);
    if (!accumulate) out.zero();
    for (int i = 0; i < x.rows; ++i) {
        const double* xi = x.row(i);
        double* oi = out.row(i);
        for (int k = 0; k < x.cols; ++k) {
            const double v = xi[k];
            if (v == 0.0) continue;
            const double* wk = w.row(k);
            for (int j = 0; j < w.cols; ++j) oi[j] += v * wk[j];
        }
    }
}

void matmul_nt(const Mat& x, const Mat& w, Mat& out, bool accumulate) {
    if (x.cols != w.cols) throw ShapeError("matmul_nt: inner dimensions disagree");
    if (out.rows != x.rows || out.cols != w.rows) out = Mat(x.rows, w.rows);
    if (!accumulate) out.zero();
    for (int i = 0; i < x.rows; ++i) {
        const double* xi = x.row(i);
        double* oi = out.row(i);
        for (int j = 0; j < w.rows; ++j) {
            const double* wj = w.row(j);
            double s = 0.0;
            for (int k = 0; k < x.cols; ++k) s += xi[k] * wj[k];
            oi[j] += s;
        }
    }
}

void matmul_tn(const Mat& x, const Mat& w, Mat& out, bool accumulate) {
    if (x.rows != w.rows) throw ShapeError("matmul_tn: inner dimensions disagree");
    if (out.rows != x.cols || out.cols != w.cols) out = Mat(x.cols, w.cols);
    if (!accumulate) out.zero();
    for (int k = 0; k < x.rows; ++k) {
        const double* xk = x.row(k);
        const double* wk = w.row(k);
        for (int i = 0; i < x.cols; ++i) {
            const double v = xk[i];
            if (v == 0.0) continue;
            double* oi = out.row(i);
            for (int j = 0; j < w.cols; ++j) oi[j] += v * wk[j];
        }
    }
}

void fill_normal(Mat& m, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    for (auto& v : m.a) v = dist(rng);
}

}  // namespace scanqa
