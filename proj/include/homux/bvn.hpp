#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "homux/info.hpp"

namespace homux {

// Bivariate normal probabilities by Drezner-Wesolowsky quadrature in Genz's
// refinement (Gauss-Legendre with 6/12/20 nodes depending on |r|).

/// P(X > h, Y > k) for standard bivariate normal with correlation r.
inline double bvn_upper(double h, double k, double r) {
    static constexpr std::array<std::array<double, 10>, 3> w{{
        {0.1713244923791705, 0.3607615730481384, 0.4679139345726904},
        {0.04717533638651177, 0.1069393259953183, 0.1600783285433464, 0.2031674267230659,
         0.2334925365383547, 0.2491470458134029},
        {0.01761400713915212, 0.04060142980038694, 0.06267204833410906, 0.08327674157670475,
         0.1019301198172404, 0.1181945319615184, 0.1316886384491766, 0.1420961093183821,
         0.1491729864726037, 0.1527533871307259},
    }};
    static constexpr std::array<std::array<double, 10>, 3> x{{
        {-0.9324695142031522, -0.6612093864662647, -0.2386191860831970},
        {-0.9815606342467191, -0.9041172563704750, -0.7699026741943050, -0.5873179542866171,
         -0.3678314989981802, -0.1252334085114692},
        {-0.9931285991850949, -0.9639719272779138, -0.9122344282513259, -0.8391169718222188,
         -0.7463319064601508, -0.6360536807265150, -0.5108670019508271, -0.3737060887154196,
         -0.2277858511416451, -0.07652652113349733},
    }};
    constexpr double two_pi = 2.0 * std::numbers::pi;

    int ng = 2, lg = 10;
    if (std::abs(r) < 0.3) {
        ng = 0;
        lg = 3;
    } else if (std::abs(r) < 0.75) {
        ng = 1;
        lg = 6;
    }

    double hk = h * k;
    double bvn = 0.0;
    if (std::abs(r) < 0.925) {
        const double hs = (h * h + k * k) / 2.0;
        const double asr = std::asin(r);
        for (int i = 0; i < lg; ++i) {
            double sn = std::sin(asr * (x[ng][i] + 1.0) / 2.0);
            bvn += w[ng][i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
            sn = std::sin(asr * (-x[ng][i] + 1.0) / 2.0);
            bvn += w[ng][i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
        }
        return bvn * asr / (2.0 * two_pi) + normal_cdf(-h) * normal_cdf(-k);
    }

    if (r < 0) {
        k = -k;
        hk = -hk;
    }
    if (std::abs(r) < 1.0) {
        const double as = (1.0 - r) * (1.0 + r);
        double a = std::sqrt(as);
        const double bs = (h - k) * (h - k);
        const double c = (4.0 - hk) / 8.0;
        const double d = (12.0 - hk) / 16.0;
        bvn = a * std::exp(-(bs / as + hk) / 2.0) *
              (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
        if (hk > -160.0) {
            const double b = std::sqrt(bs);
            bvn -= std::exp(-hk / 2.0) * std::sqrt(two_pi) * normal_cdf(-b / a) * b *
                   (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a /= 2.0;
        for (int i = 0; i < lg; ++i) {
            double xs = (a * (x[ng][i] + 1.0)) * (a * (x[ng][i] + 1.0));
            double rs = std::sqrt(1.0 - xs);
            bvn += a * w[ng][i] *
                   (std::exp(-bs / (2.0 * xs) - hk / (1.0 + rs)) / rs -
                    std::exp(-(bs / xs + hk) / 2.0) * (1.0 + c * xs * (1.0 + d * xs)));
            xs = as * (-x[ng][i] + 1.0) * (-x[ng][i] + 1.0) / 4.0;
            rs = std::sqrt(1.0 - xs);
            bvn += a * w[ng][i] * std::exp(-(bs / xs + hk) / 2.0) *
                   (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs - (1.0 + c * xs * (1.0 + d * xs)));
        }
        bvn = -bvn / two_pi;
    }
    if (r > 0) return bvn + normal_cdf(-std::max(h, k));
    return -bvn + std::max(0.0, normal_cdf(-h) - normal_cdf(-k));
}

/// P(X <= h, Y <= k); infinite limits allowed.
inline double bvn_cdf(double h, double k, double r) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (h == -inf || k == -inf) return 0.0;
    if (h == inf) return k == inf ? 1.0 : normal_cdf(k);
    if (k == inf) return normal_cdf(h);
    return std::clamp(bvn_upper(-h, -k, r), 0.0, 1.0);
}

/// P(h0 < X <= h1, k0 < Y <= k1).
inline double bvn_rectangle(double h0, double h1, double k0, double k1, double r) {
    const double p = bvn_cdf(h1, k1, r) - bvn_cdf(h0, k1, r) - bvn_cdf(h1, k0, r) + bvn_cdf(h0, k0, r);
    return std::max(p, 0.0);
}

} // namespace homux
