#pragma once

#include <vector>

#include "radiomap/geometry.hpp"

namespace radiomap {

/// One RSS measurement: a link and the received signal strength in dB.
struct Measurement {
    Link link;
    double rss = 0.0;
};

/// Measurement collection with an optional per-record trace cache.
struct Dataset {
    std::vector<Measurement> records;
    std::vector<LinkTrace> traces;  // parallel to records once computed

    std::size_t size() const { return records.size(); }
    bool has_traces() const { return traces.size() == records.size(); }
    void compute_traces(const GridSpec& grid);
};

}  // namespace radiomap
