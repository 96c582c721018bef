#include <doctest.h>

#include <random>

#include <Eigen/Eigenvalues>

#include "checkout/error.hpp"
#include "checkout/kalman.hpp"
#include "oracles.hpp"

using namespace checkout;

namespace {

oracle::Mat to_mat(const Eigen::MatrixXd& m) {
    oracle::Mat out(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
    for (int i = 0; i < out.r; ++i)
        for (int j = 0; j < out.c; ++j) out(i, j) = m(i, j);
    return out;
}

double max_rel_diff(const Eigen::MatrixXd& a, const oracle::Mat& b) {
    double scale = 0.0, diff = 0.0;
    for (int i = 0; i < b.r; ++i)
        for (int j = 0; j < b.c; ++j) {
            scale = std::max(scale, std::abs(b(i, j)));
            diff = std::max(diff, std::abs(a(i, j) - b(i, j)));
        }
    return scale > 0 ? diff / scale : diff;
}

KalmanState random_state(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> pos(0, 500), vel(-5, 5), h(10, 200), a(0.3, 3);
    KalmanFilter kf;
    auto s = kf.initiate(BBox{pos(rng), pos(rng), a(rng) * 50, h(rng)});
    for (int i = 4; i < 8; ++i) s.mean(i) = vel(rng) * (i == 6 ? 0.001 : 1.0);
    // A few predict/update rounds to populate off-diagonal covariance.
    for (int k = 0; k < 3; ++k) {
        s = kf.predict(s);
        Vector4 z = s.mean.head<4>();
        z(0) += vel(rng);
        z(1) += vel(rng);
        s = kf.update(s, z);
    }
    return s;
}

}  // namespace

TEST_SUITE("kalman") {

TEST_CASE("initiate") {
    KalmanFilter kf;
    const auto s = kf.initiate(BBox{100, 200, 50, 40});
    Vector8 expected;
    expected << 125, 220, 1.25, 40, 0, 0, 0, 0;
    CHECK((s.mean - expected).norm() == 0.0);
    CHECK((s.covariance - s.covariance.transpose()).norm() == 0.0);
    CHECK(Eigen::SelfAdjointEigenSolver<Matrix8>(s.covariance).eigenvalues().minCoeff() > 0.0);
    const auto s2 = kf.initiate(BBox{100, 200, 50, 40});
    CHECK(s.covariance == s2.covariance);
    CHECK(to_bbox(s.mean) == BBox{100, 200, 50, 40});
}

TEST_CASE("predict") {
    KalmanFilter kf;
    auto s = kf.initiate(BBox{0, 0, 20, 20});
    const auto p = kf.predict(s);
    CHECK((p.mean - s.mean).norm() == 0.0);
    CHECK(p.covariance.trace() > s.covariance.trace());

    s.mean(0) = 10;
    s.mean(4) = 3;
    CHECK(kf.predict(s).mean(0) == 13.0);
}

TEST_CASE("predict and update match the dense reference") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> noise(-4, 4);
    KalmanFilter kf;
    oracle::KalmanReference ref;
    for (int t = 0; t < 50; ++t) {
        const auto s = random_state(rng);
        auto x = to_mat(s.mean);
        auto P = to_mat(s.covariance);
        const auto kp = kf.predict(s);
        ref.predict(x, P);
        CHECK(max_rel_diff(kp.mean, x) < 1e-9);
        CHECK(max_rel_diff(kp.covariance, P) < 1e-9);

        Vector4 z = kp.mean.head<4>();
        for (int i = 0; i < 4; ++i) z(i) += noise(rng) * (i == 2 ? 0.01 : 1.0);
        const double d2 = kf.gating_distance(kp, z);
        CHECK(std::abs(d2 - ref.mahalanobis(x, P, to_mat(z))) <= 1e-8 * std::max(1.0, d2));
        CHECK(d2 >= 0.0);

        const auto ku = kf.update(kp, z);
        ref.update(x, P, to_mat(z));
        CHECK(max_rel_diff(ku.mean, x) < 1e-9);
        CHECK(max_rel_diff(ku.covariance, P) < 1e-9);
    }
}

TEST_CASE("update at the predicted mean and repeated updates") {
    KalmanFilter kf;
    auto s = kf.predict(kf.initiate(BBox{10, 10, 30, 60}));
    const auto u = kf.update(s, s.mean.head<4>());
    CHECK((u.mean - s.mean).norm() < 1e-12);
    CHECK(kf.gating_distance(s, s.mean.head<4>()) == 0.0);

    const Vector4 target(80, 60, 0.5, 60);
    const double initial = (s.mean.head<4>() - target).norm();
    double prev = initial;
    for (int i = 0; i < 20; ++i) {
        s = kf.update(s, target);
        const double d = (s.mean.head<4>() - target).norm();
        CHECK(d <= prev + 1e-12);
        prev = d;
    }
    CHECK(prev < initial / 50.0);
}

TEST_CASE("degenerate innovation covariance") {
    KalmanFilter kf(KalmanNoise{0.0, 0.0});
    KalmanState s;
    s.mean << 10, 10, 1, 0, 0, 0, 0, 0;
    s.covariance.setZero();
    CHECK_THROWS_AS(kf.update(s, Vector4(10, 10, 1, 0)), NumericalError);
    CHECK_THROWS_AS(kf.gating_distance(s, Vector4(10, 10, 1, 0)), NumericalError);
}

}  // TEST_SUITE
