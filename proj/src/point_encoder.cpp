#include "scanqa/point_encoder.hpp"

#include <cmath>
#include <limits>

namespace scanqa {

PointSetEncoder::PointSetEncoder(int in, int hid, int out, uint64_t seed, double weight_std)
    : in_dim(in), hidden(hid), out_dim(out), w1(in, hid), b1(1, hid), w2(hid, out), b2(1, out) {
    std::mt19937_64 rng(seed);
    fill_normal(w1, weight_std / std::sqrt(static_cast<double>(in)), rng);
    fill_normal(b1, 0.1, rng);
    fill_normal(w2, weight_std / std::sqrt(static_cast<double>(hid)), rng);
    fill_normal(b2, 0.1, rng);
}

std::vector<double> PointSetEncoder::encode_point(const double* input) const {
    std::vector<double> h(static_cast<size_t>(hidden));
    for (int j = 0; j < hidden; ++j) {
        double s = b1(0, j);
        for (int i = 0; i < in_dim; ++i) s += input[i] * w1(i, j);
        h[static_cast<size_t>(j)] = std::tanh(s);
    }
    std::vector<double> out(static_cast<size_t>(out_dim));
    for (int j = 0; j < out_dim; ++j) {
        double s = b2(0, j);
        for (int i = 0; i < hidden; ++i) s += h[static_cast<size_t>(i)] * w2(i, j);
        out[static_cast<size_t>(j)] = std::tanh(s);
    }
    return out;
}

Mat PointSetEncoder::encode_pointwise(const Mat& inputs) const {
    if (inputs.cols != in_dim) throw ShapeError("PointSetEncoder: input width mismatch");
    Mat out(inputs.rows, out_dim);
    for (int r = 0; r < inputs.rows; ++r) {
        const auto f = encode_point(inputs.row(r));
        for (int j = 0; j < out_dim; ++j) out(r, j) = f[static_cast<size_t>(j)];
    }
    return out;
}

std::vector<double> PointSetEncoder::encode_set(const Mat& inputs) const {
    if (inputs.rows == 0) throw ParameterError("PointSetEncoder: empty point set");
    const Mat features = encode_pointwise(inputs);
    std::vector<double> pooled(static_cast<size_t>(out_dim), -std::numeric_limits<double>::infinity());
    for (int r = 0; r < features.rows; ++r)
        for (int j = 0; j < out_dim; ++j)
            pooled[static_cast<size_t>(j)] = std::max(pooled[static_cast<size_t>(j)], features(r, j));
    return pooled;
}

std::vector<ParamRef> PointSetEncoder::params() {
    return {{"w1", &w1}, {"b1", &b1}, {"w2", &w2}, {"b2", &b2}};
}

std::vector<double> geometry_features(const std::vector<std::array<double, 3>>& points,
                                      const PointSetEncoder& encoder) {
    if (points.empty()) throw ParameterError("geometry_features: empty point set");
    if (encoder.in_dim != 3) throw ShapeError("geometry_features: encoder expects 3-d input");
    double centroid[3] = {0.0, 0.0, 0.0};
    for (const auto& p : points)
        for (int ax = 0; ax < 3; ++ax) centroid[ax] += p[static_cast<size_t>(ax)];
    for (int ax = 0; ax < 3; ++ax) centroid[ax] /= static_cast<double>(points.size());

    Mat inputs(static_cast<int>(points.size()), 3);
    for (size_t r = 0; r < points.size(); ++r)
        for (int ax = 0; ax < 3; ++ax)
            inputs(static_cast<int>(r), ax) = points[r][static_cast<size_t>(ax)] - centroid[ax];
    return encoder.encode_set(inputs);
}

std::vector<double> max_pool_rows(const Mat& features, const std::vector<int>& indices) {
    if (indices.empty()) throw ParameterError("max_pool_rows: empty index set");
    std::vector<double> pooled(static_cast<size_t>(features.cols),
                               -std::numeric_limits<double>::infinity());
    for (int idx : indices)
        for (int j = 0; j < features.cols; ++j)
            pooled[static_cast<size_t>(j)] = std::max(pooled[static_cast<size_t>(j)], features(idx, j));
    return pooled;
}

std::vector<double> mean_pool_rows(const Mat& features) {
    if (features.rows == 0) throw ParameterError("mean_pool_rows: empty matrix");
    std::vector<double> pooled(static_cast<size_t>(features.cols), 0.0);
    for (int r = 0; r < features.rows; ++r)
        for (int j = 0; j < features.cols; ++j) pooled[static_cast<size_t>(j)] += features(r, j);
    for (auto& v : pooled) v /= static_cast<double>(features.rows);
    return pooled;
}

}  // namespace scanqa
