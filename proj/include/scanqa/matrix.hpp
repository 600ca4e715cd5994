#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "scanqa/common.hpp"

namespace scanqa {

// Dense row-major double matrix. Vectors are 1xC or Rx1 as convenient.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

    size_t size() const { return a.size(); }
    void zero() { std::fill(a.begin(), a.end(), 0.0); }

    double* row(int i) { return a.data() + static_cast<size_t>(i) * cols; }
    const double* row(int i) const { return a.data() + static_cast<size_t>(i) * cols; }
};

// out = x * w, shapes (RxK)*(KxC) -> (RxC). Accumulates when accumulate=true.
void matmul(const Mat& x, const Mat& w, Mat& out, bool accumulate = false);
// out = x * w^T, shapes (RxK)*(CxK)^T -> (RxC).
void matmul_nt(const Mat& x, const Mat& w, Mat& out, bool accumulate = false);
// out = x^T * w, shapes (KxR)^T*(KxC) -> (RxC).
void matmul_tn(const Mat& x, const Mat& w, Mat& out, bool accumulate = false);

void fill_normal(Mat& m, double stddev, std::mt19937_64& rng);

struct ParamRef {
    std::string name;
    Mat* value;
};

// Gradient buffers aligned with a fixed parameter enumeration order.
struct Gradients {
    std::vector<Mat> g;

    void init_like(const std::vector<ParamRef>& params) {
        g.clear();
        g.reserve(params.size());
        for (const auto& p : params) g.emplace_back(p.value->rows, p.value->cols);
    }
    void zero() {
        for (auto& m : g) m.zero();
    }
    void add(const Gradients& other) {
        for (size_t i = 0; i < g.size(); ++i)
            for (size_t j = 0; j < g[i].a.size(); ++j) g[i].a[j] += other.g[i].a[j];
    }
    void scale(double s) {
        for (auto& m : g)
            for (auto& v : m.a) v *= s;
    }
};

}  // namespace scanqa
