#ifndef GREENREC_SUSTAINABILITY_HPP_
#define GREENREC_SUSTAINABILITY_HPP_

#include <chrono>
#include <map>
#include <span>

#include "greenrec/evaluation.hpp"

namespace greenrec {

/// Linear runtime -> energy -> CO2e model. Savings for a run that takes a
/// fraction `f` of the full-data runtime are
///   (1 - f) * energy_per_run_kwh * tuning_configs * intensity_g_per_kwh
///           * scale_factor / 1000   [kg CO2e].
struct EmissionModel {
    double energy_per_run_kwh = 0.51;
    double tuning_configs = 10;
    double intensity_g_per_kwh = 481;
    double scale_factor = 40;  // prototyping, debugging and reruns

    void validate() const;
};

double co2e_savings_kg(double relative_runtime, const EmissionModel& model = {});

struct RuntimeProfile {
    std::map<double, double> mean_runtime_s;    // portion -> mean seconds
    std::map<double, double> relative_runtime;  // portion -> fraction of portion 1.0
};

/// Mean runtime per portion over all given records (each record weighs the
/// same) and its ratio to the portion-1.0 mean.
RuntimeProfile build_runtime_profile(std::span<const MetricRecord> records);

/// Monotonic wall-clock timer.
class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    void restart() { start_ = std::chrono::steady_clock::now(); }
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace greenrec

#endif  // GREENREC_SUSTAINABILITY_HPP_
