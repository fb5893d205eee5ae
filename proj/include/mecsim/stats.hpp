#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "mecsim/time.hpp"

namespace mecsim {

struct StatLabels {
    std::string app;
    std::string host;
    std::string service;
    std::string ue;
};

struct StatRecord {
    SimTime time;
    double value = 0.0;
    StatLabels labels;
};

// Per-stream time series, written out as one CSV per stream plus an
// empirical-CDF file for streams marked as response-time streams.
class StatsCollector {
public:
    void record(const std::string& stream, SimTime t, double value,
                StatLabels labels = {});
    void mark_response_stream(const std::string& stream) { response_streams_.insert(stream); }

    const std::vector<StatRecord>& rows(const std::string& stream) const;
    std::vector<double> values(const std::string& stream) const;
    std::vector<std::string> stream_names() const;
    bool has_stream(const std::string& stream) const { return streams_.count(stream) > 0; }

    // Writes <stream>.csv (time,value,app,host,service,ue) and, for response
    // streams, <stream>_cdf.csv (value,quantile ascending).
    void write_csv_dir(const std::string& dir) const;

private:
    std::map<std::string, std::vector<StatRecord>> streams_;
    std::set<std::string> response_streams_;
};

// Ordered log of named milestones, used by the built-in experiments to
// assert message sequences.
class Timeline {
public:
    void record(SimTime t, const std::string& step, const std::string& subject = {});

    struct Entry {
        SimTime t;
        std::string step;
        std::string subject;
    };

    const std::vector<Entry>& entries() const { return entries_; }
    std::vector<std::string> steps_for(const std::string& subject) const;
    void clear() { entries_.clear(); }

private:
    std::vector<Entry> entries_;
};

} // namespace mecsim
