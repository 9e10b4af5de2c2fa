#include "radiomap/dataset.hpp"

namespace radiomap {

void Dataset::compute_traces(const GridSpec& grid) {
    traces.clear();
    traces.reserve(records.size());
    for (const Measurement& m : records) traces.push_back(trace_link(m.link, grid));
}

}  // namespace radiomap
