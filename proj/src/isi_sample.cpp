#include "mlif/isi_sample.hpp"

#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mlif/errors.hpp"

namespace mlif {

std::size_t ISISample::uncensored_count() const {
    std::size_t n = 0;
    for (bool c : censored) n += c ? 0 : 1;
    return n;
}

std::vector<double> ISISample::uncensored_times() const {
    std::vector<double> out;
    out.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i)
        if (!censored[i]) out.push_back(times[i]);
    return out;
}

double ISISample::mean_uncensored() const {
    const auto t = uncensored_times();
    if (t.empty()) throw DegenerateData("no uncensored firing times");
    return std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(t.size());
}

void write_isi_csv(std::ostream& out, const ISISample& sample) {
    out << "replicate,firing_time_ms,censored\n";
    char buf[64];
    for (std::size_t i = 0; i < sample.times.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", sample.times[i]);
        out << i << ',' << buf << ',' << (sample.censored[i] ? 1 : 0) << '\n';
    }
}

ISISample read_isi_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("replicate,firing_time_ms,censored", 0) != 0)
        throw ParseError("ISI CSV must start with header 'replicate,firing_time_ms,censored'");
    ISISample s;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string idx, t, c;
        if (!std::getline(row, idx, ',') || !std::getline(row, t, ',') || !std::getline(row, c))
            throw ParseError("malformed ISI CSV row: " + line);
        try {
            s.times.push_back(std::stod(t));
            s.censored.push_back(std::stoi(c) != 0);
        } catch (const std::exception&) {
            throw ParseError("malformed ISI CSV row: " + line);
        }
    }
    return s;
}

}  // namespace mlif
