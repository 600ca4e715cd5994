#pragma once

#include <array>
#include <vector>

#include "scanqa/matrix.hpp"

namespace scanqa {

// Permutation-invariant point-set encoder: a per-point two-layer tanh map
// followed by max pooling. Parameters are drawn once from a seed and
// read-shared afterwards.
struct PointSetEncoder {
    int in_dim = 3;
    int hidden = 64;
    int out_dim = 64;
    Mat w1, b1;  // in_dim x hidden, 1 x hidden
    Mat w2, b2;  // hidden x out_dim, 1 x out_dim

    PointSetEncoder() = default;
    PointSetEncoder(int in, int hid, int out, uint64_t seed, double weight_std = 1.0);

    // Feature of one per-point input row.
    std::vector<double> encode_point(const double* input) const;

    // Per-point features for a whole set; rows align with input order.
    Mat encode_pointwise(const Mat& inputs) const;

    // Max pool of encode_pointwise over all rows.
    std::vector<double> encode_set(const Mat& inputs) const;

    std::vector<ParamRef> params();
};

// Permutation- and translation-invariant feature of a proposal's points:
// coordinates are centered on their centroid before encoding.
std::vector<double> geometry_features(const std::vector<std::array<double, 3>>& points,
                                      const PointSetEncoder& encoder);

// Max pool over rows of a feature matrix restricted to `indices`.
std::vector<double> max_pool_rows(const Mat& features, const std::vector<int>& indices);
// Mean over all rows.
std::vector<double> mean_pool_rows(const Mat& features);

}  // namespace scanqa
