#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mlif {

// Firing times (ms) of independent replicates, each measured from a reset.
// A censored entry records the observation window end with no spike seen.
struct ISISample {
    std::vector<double> times;
    std::vector<bool> censored;
    std::string model_tag;
    std::uint64_t seed = 0;

    std::size_t size() const { return times.size(); }
    std::size_t uncensored_count() const;
    std::vector<double> uncensored_times() const;
    double mean_uncensored() const;
};

// CSV with header `replicate,firing_time_ms,censored`.
void write_isi_csv(std::ostream& out, const ISISample& sample);
ISISample read_isi_csv(std::istream& in);

}  // namespace mlif
