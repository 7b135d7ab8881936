#include <gtest/gtest.h>

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/owens_t.hpp>

#include "homux/bvn.hpp"

using namespace homux;

namespace {

// Oracle 1: Phi2(h,k;r) = Phi(h)Phi(k) + int_0^r phi2(h,k;t) dt (Plackett's identity).
double bvn_by_quadrature(double h, double k, double r) {
    auto density = [&](double t) {
        const double q = 1.0 - t * t;
        return std::exp(-(h * h - 2 * t * h * k + k * k) / (2 * q)) / (2 * M_PI * std::sqrt(q));
    };
    const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(density, 0.0, r, 15, 1e-14);
    return normal_cdf(h) * normal_cdf(k) + integral;
}

// Oracle 2: Owen's T representation.
double bvn_by_owens_t(double h, double k, double r) {
    using boost::math::owens_t;
    const double s = std::sqrt(1 - r * r);
    auto t = [&](double x, double y) {
        if (x == 0.0) return y >= 0 ? 0.25 : -0.25; // limit of T(0, a) sign handling below
        return owens_t(x, (y - r * x) / (x * s));
    };
    if (h == 0.0 || k == 0.0) return bvn_by_quadrature(h, k, r);
    const double beta = (h * k < 0 || (h * k == 0 && h + k < 0)) ? 0.5 : 0.0;
    return 0.5 * (normal_cdf(h) + normal_cdf(k)) - t(h, k) - t(k, h) - beta;
}

} // namespace

TEST(BivariateNormal, MatchesIndependentOraclesAcrossCorrelationRegimes) {
    const double hs[] = {-2.5, -1.1, -0.3, 0.4, 1.7};
    const double rs[] = {-0.97, -0.8, -0.5, -0.1, 0.0, 0.2, 0.6, 0.9, 0.95, 0.995};
    for (double h : hs)
        for (double k : hs)
            for (double r : rs) {
                const double got = bvn_cdf(h, k, r);
                EXPECT_NEAR(got, bvn_by_owens_t(h, k, r), 1e-7) << h << " " << k << " " << r;
                EXPECT_NEAR(got, bvn_by_quadrature(h, k, r), 1e-7) << h << " " << k << " " << r;
            }
}

TEST(BivariateNormal, LimitsAndIndependence) {
    const double inf = std::numeric_limits<double>::infinity();
    EXPECT_EQ(bvn_cdf(-inf, 0.3, 0.5), 0.0);
    EXPECT_NEAR(bvn_cdf(inf, 0.3, 0.5), normal_cdf(0.3), 1e-15);
    EXPECT_NEAR(bvn_cdf(0.0, 0.0, 0.0), 0.25, 1e-15);
    EXPECT_NEAR(bvn_cdf(0.0, 0.0, 0.5), 0.25 + std::asin(0.5) / (2 * M_PI), 1e-12);
    EXPECT_NEAR(bvn_rectangle(-inf, inf, -inf, inf, 0.7), 1.0, 1e-12);
}
