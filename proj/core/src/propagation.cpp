#include "radiomap/propagation.hpp"

#include <stdexcept>

namespace radiomap {

void PathLossParams::validate(int expected_classes) const {
    if (values.size() % 2 != 0 || values.size() < 2)
        throw std::invalid_argument("path-loss parameters must hold slope/intercept pairs");
    if (expected_classes >= 0 && classes() != expected_classes)
        throw std::invalid_argument("path-loss parameter count does not match class count");
}

PathLossParams PathLossParams::zeros(int classes) {
    PathLossParams p;
    p.values.assign(2 * static_cast<std::size_t>(classes + 1), 0.0);
    return p;
}

double deterministic_gain(const Link& link, const PathLossParams& theta,
                          const ObstacleMap& map, const SoftFilter& filter) {
    theta.validate(map.classes());
    const double d = log_distance(link);
    const std::vector<double> s = soft_likelihood(link, map, filter, map.grid());
    double g = 0.0;
    for (int k = 0; k <= map.classes(); ++k)
        g += s[static_cast<std::size_t>(k)] * theta.path_loss(k, d);
    return g;
}

}  // namespace radiomap
