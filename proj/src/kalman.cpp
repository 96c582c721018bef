#include "checkout/kalman.hpp"

#include <Eigen/Cholesky>

#include "checkout/error.hpp"

namespace checkout {

Vector4 to_measurement(const BBox& box) {
    return Vector4(box.x + box.w / 2.0, box.y + box.h / 2.0, box.w / box.h, box.h);
}

BBox to_bbox(const Vector8& mean) {
    const double h = mean(3);
    const double w = mean(2) * h;
    return BBox{mean(0) - w / 2.0, mean(1) - h / 2.0, w, h};
}

KalmanFilter::KalmanFilter(KalmanNoise noise) : noise_(noise), motion_(Matrix8::Identity()) {
    for (int i = 0; i < 4; ++i) motion_(i, 4 + i) = 1.0;
}

KalmanState KalmanFilter::initiate(const BBox& box) const {
    const Vector4 z = to_measurement(box);
    KalmanState s;
    s.mean.head<4>() = z;
    s.mean.tail<4>().setZero();
    const double h = z(3);
    const double wp = noise_.position_weight;
    const double wv = noise_.velocity_weight;
    Vector8 std_dev;
    std_dev << 2 * wp * h, 2 * wp * h, 1e-2, 2 * wp * h, 10 * wv * h, 10 * wv * h, 1e-5, 10 * wv * h;
    s.covariance = std_dev.array().square().matrix().asDiagonal();
    return s;
}

Matrix8 KalmanFilter::process_noise(const Vector8& mean) const {
    const double h = mean(3);
    const double wp = noise_.position_weight;
    const double wv = noise_.velocity_weight;
    Vector8 std_dev;
    std_dev << wp * h, wp * h, 1e-2, wp * h, wv * h, wv * h, 1e-5, wv * h;
    return std_dev.array().square().matrix().asDiagonal();
}

Matrix4 KalmanFilter::measurement_noise(const Vector8& mean) const {
    const double h = mean(3);
    const double wp = noise_.position_weight;
    Vector4 std_dev(wp * h, wp * h, 1e-1, wp * h);
    return std_dev.array().square().matrix().asDiagonal();
}

KalmanState KalmanFilter::predict(const KalmanState& state) const {
    KalmanState out;
    out.mean = motion_ * state.mean;
    out.covariance = motion_ * state.covariance * motion_.transpose() + process_noise(state.mean);
    return out;
}

std::pair<Vector4, Matrix4> KalmanFilter::project(const KalmanState& state) const {
    const Vector4 mean = state.mean.head<4>();
    const Matrix4 cov = state.covariance.topLeftCorner<4, 4>() + measurement_noise(state.mean);
    return {mean, cov};
}

KalmanState KalmanFilter::update(const KalmanState& state, const Vector4& measurement) const {
    const auto [projected, innovation_cov] = project(state);
    const Eigen::LLT<Matrix4> llt(innovation_cov);
    if (llt.info() != Eigen::Success) throw NumericalError("kalman update: singular innovation covariance");

    // H = [I 0], so P H^T is the left 8x4 block of P.
    const Eigen::Matrix<double, 8, 4> pht = state.covariance.leftCols<4>();
    const Eigen::Matrix<double, 8, 4> gain = llt.solve(pht.transpose()).transpose();
    KalmanState out;
    out.mean = state.mean + gain * (measurement - projected);
    out.covariance = state.covariance - gain * innovation_cov * gain.transpose();
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
    return out;
}

double KalmanFilter::gating_distance(const KalmanState& state, const Vector4& measurement) const {
    const auto [projected, innovation_cov] = project(state);
    const Eigen::LLT<Matrix4> llt(innovation_cov);
    if (llt.info() != Eigen::Success) throw NumericalError("gating distance: singular innovation covariance");
    const Vector4 d = measurement - projected;
    const Vector4 z = llt.matrixL().solve(d);
    return z.squaredNorm();
}

}  // namespace checkout
