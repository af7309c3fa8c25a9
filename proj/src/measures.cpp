#include "stucoco/measures.hpp"

#include <cmath>

#include "stucoco/errors.hpp"

namespace stucoco {

std::string_view to_string(MeasureTag tag) {
    switch (tag) {
        case MeasureTag::P_STAR: return "P_STAR";
        case MeasureTag::P_T: return "P_T";
        case MeasureTag::P_S: return "P_S";
    }
    return "?";
}

MeasureDrifts drifts_under(MeasureTag tag, const ModelParams& p) {
    const double s2 = p.sigma * p.sigma;
    switch (tag) {
        case MeasureTag::P_STAR:
        case MeasureTag::P_T:
            return {tag, p.r - 0.5 * s2, (p.a - 0.5) * s2};
        case MeasureTag::P_S:
            return {tag, p.r + 0.5 * s2, (p.a - 0.5 + p.rho) * s2};
    }
    throw DomainError("drifts_under: unknown measure");
}

double rn_weight(MeasureTag tag, std::span<const double> stock_path, const ModelParams& p) {
    if (stock_path.size() < 2) throw DomainError("rn_weight: path needs at least two points");
    for (double s : stock_path)
        if (!(s > 0.0)) throw DomainError("rn_weight: non-positive stock value");
    switch (tag) {
        case MeasureTag::P_T:
            return 1.0;
        case MeasureTag::P_S: {
            const double s2 = p.sigma * p.sigma;
            const double w_T =
                (std::log(stock_path.back() / stock_path.front()) - (p.r - 0.5 * s2) * p.T) / p.sigma;
            return std::exp(p.sigma * w_T - 0.5 * s2 * p.T);
        }
        case MeasureTag::P_STAR:
            break;
    }
    throw DomainError("rn_weight: measure must be P_T or P_S");
}

}  // namespace stucoco
