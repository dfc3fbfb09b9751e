#include "greenrec/sustainability.hpp"

#include <cmath>

namespace greenrec {

void EmissionModel::validate() const {
    if (!(energy_per_run_kwh > 0 && tuning_configs > 0 && intensity_g_per_kwh > 0 &&
          scale_factor > 0))
        throw ConfigError("emission model constants must be strictly positive");
}

double co2e_savings_kg(double relative_runtime, const EmissionModel& model) {
    model.validate();
    if (!(relative_runtime >= 0.0 && relative_runtime <= 1.0))
        throw ConfigError("relative runtime must lie in [0, 1]");
    return (1.0 - relative_runtime) * model.energy_per_run_kwh * model.tuning_configs *
           model.intensity_g_per_kwh * model.scale_factor / 1000.0;
}

RuntimeProfile build_runtime_profile(std::span<const MetricRecord> records) {
    std::map<double, std::pair<double, std::size_t>> sums;
    for (const auto& r : records) {
        auto& s = sums[r.portion];
        s.first += r.runtime_s;
        ++s.second;
    }
    RuntimeProfile profile;
    for (const auto& [p, s] : sums)
        profile.mean_runtime_s[p] = s.first / static_cast<double>(s.second);
    auto base = profile.mean_runtime_s.find(1.0);
    if (base == profile.mean_runtime_s.end())
        throw ConfigError("runtime profile needs records at portion 1.0");
    if (!(base->second > 0)) throw ConfigError("baseline runtime is zero");
    for (const auto& [p, mean] : profile.mean_runtime_s)
        profile.relative_runtime[p] = p == 1.0 ? 1.0 : mean / base->second;
    return profile;
}

}  // namespace greenrec
