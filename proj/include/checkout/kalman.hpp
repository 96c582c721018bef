#pragma once

#include <Eigen/Core>

#include "checkout/geometry.hpp"

namespace checkout {

using Vector4 = Eigen::Matrix<double, 4, 1>;
using Vector8 = Eigen::Matrix<double, 8, 1>;
using Matrix4 = Eigen::Matrix<double, 4, 4>;
using Matrix8 = Eigen::Matrix<double, 8, 8>;

/// Constant-velocity box state (cx, cy, a = w/h, h, and per-frame velocities).
struct KalmanState {
    Vector8 mean = Vector8::Zero();
    Matrix8 covariance = Matrix8::Identity();
};

struct KalmanNoise {
    double position_weight = 1.0 / 20.0;
    double velocity_weight = 1.0 / 160.0;
};

/// Box (x, y, w, h) to measurement (cx, cy, a, h).
Vector4 to_measurement(const BBox& box);
BBox to_bbox(const Vector8& mean);

/// Squared Mahalanobis 0.95 quantile for 4 degrees of freedom.
inline constexpr double kChi2Gate4 = 9.4877;

class KalmanFilter {
public:
    explicit KalmanFilter(KalmanNoise noise = {});

    KalmanState initiate(const BBox& box) const;
    KalmanState predict(const KalmanState& state) const;
    /// Throws NumericalError when the innovation covariance is not positive definite.
    KalmanState update(const KalmanState& state, const Vector4& measurement) const;

    /// Measurement-space mean and innovation covariance S = H P H^T + R.
    std::pair<Vector4, Matrix4> project(const KalmanState& state) const;
    double gating_distance(const KalmanState& state, const Vector4& measurement) const;

    const Matrix8& transition() const { return motion_; }
    const KalmanNoise& noise() const { return noise_; }

    // Noise models exposed so tests can rebuild the algebra independently.
    Matrix8 process_noise(const Vector8& mean) const;
    Matrix4 measurement_noise(const Vector8& mean) const;

private:
    KalmanNoise noise_;
    Matrix8 motion_;
};

}  // namespace checkout
