#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "trajae/error.hpp"
#include "trajae/geo.hpp"
#include "trajae/trajectory.hpp"

namespace trajae::ae {

/// MSE                 mean squared componentwise error on normalized values
/// RescaledEuclidean   mean 3-D Euclidean distance after denormalizing both
/// EquirectPlusTimeSq  mean of (equirectangular meters + squared time error)
///                     after denormalizing; GeoTemporal data only
enum class LossKind { MSE, RescaledEuclidean, EquirectPlusTimeSq };

inline const char* to_string(LossKind k) noexcept
{
    switch (k) {
    case LossKind::MSE: return "mse";
    case LossKind::RescaledEuclidean: return "rescaled_euclidean";
    case LossKind::EquirectPlusTimeSq: return "equirect_time_sq";
    }
    return "?";
}

inline LossKind loss_kind_from_string(const std::string& s)
{
    if (s == "mse")
        return LossKind::MSE;
    if (s == "rescaled_euclidean")
        return LossKind::RescaledEuclidean;
    if (s == "equirect_time_sq")
        return LossKind::EquirectPlusTimeSq;
    fail(Errc::config, "unknown loss '" + s + "'");
}

/// Loss of one sequence; when `grad` is non-null it receives dLoss/dpred
/// with respect to the normalized prediction.
inline double sequence_loss(const std::vector<Triple>& pred, const std::vector<Triple>& target,
                            const NormParams& params, LossKind kind,
                            std::vector<Triple>* grad = nullptr, const SpherePlanet& planet = {})
{
    if (pred.size() != target.size() || pred.empty())
        fail(Errc::dimension_mismatch, "loss needs equally sized, non-empty sequences");
    const double n = static_cast<double>(pred.size());
    if (grad)
        grad->assign(pred.size(), Triple{});
    double total = 0.0;

    switch (kind) {
    case LossKind::MSE:
        for (std::size_t t = 0; t < pred.size(); ++t)
            for (std::size_t d = 0; d < 3; ++d) {
                const double e = pred[t][d] - target[t][d];
                total += e * e;
                if (grad)
                    (*grad)[t][d] = 2.0 * e / (3.0 * n);
            }
        return total / (3.0 * n);

    case LossKind::RescaledEuclidean:
        for (std::size_t t = 0; t < pred.size(); ++t) {
            Triple e{};
            double sq = 0.0;
            for (std::size_t d = 0; d < 3; ++d) {
                e[d] = (pred[t][d] - target[t][d]) * params.scale[d];
                sq += e[d] * e[d];
            }
            const double dist = std::sqrt(sq);
            total += dist;
            if (grad && dist > 0.0)
                for (std::size_t d = 0; d < 3; ++d)
                    (*grad)[t][d] = e[d] / dist * params.scale[d] / n;
        }
        return total / n;

    case LossKind::EquirectPlusTimeSq: {
        constexpr double k = std::numbers::pi / 180.0;
        for (std::size_t t = 0; t < pred.size(); ++t) {
            // differences taken before adding the offsets, which for unix
            // timestamps would swamp them
            const Triple e{(pred[t][0] - target[t][0]) * params.scale[0],
                           (pred[t][1] - target[t][1]) * params.scale[1],
                           (pred[t][2] - target[t][2]) * params.scale[2]};
            const double lat_p = pred[t][1] * params.scale[1] + params.offset[1];
            const double lat_q = target[t][1] * params.scale[1] + params.offset[1];
            const double dlon = k * e[0];
            const double dlat = k * e[1];
            const double mid = k * (lat_p + lat_q) / 2;
            const double x = dlon * std::cos(mid);
            const double y = dlat;
            const double root = std::sqrt(x * x + y * y);
            const double spatial = planet.radius * root;
            const double et = e[2];
            total += spatial + et * et;
            if (grad) {
                double g_lon = 0.0;
                double g_lat = 0.0;
                if (root > 0.0) {
                    g_lon = planet.radius / root * x * std::cos(mid) * k;
                    g_lat = planet.radius / root * (x * dlon * -std::sin(mid) * k / 2 + y * k);
                }
                (*grad)[t][0] = g_lon * params.scale[0] / n;
                (*grad)[t][1] = g_lat * params.scale[1] / n;
                (*grad)[t][2] = 2.0 * et * params.scale[2] / n;
            }
        }
        return total / n;
    }
    }
    return total;
}

/// Loss value without the gradient.
inline double loss(const std::vector<Triple>& pred, const std::vector<Triple>& target,
                   const NormParams& params, LossKind kind, const SpherePlanet& planet = {})
{
    return sequence_loss(pred, target, params, kind, nullptr, planet);
}

} // namespace trajae::ae
