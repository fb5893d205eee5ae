#include "mecsim/stats.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

namespace mecsim {

void StatsCollector::record(const std::string& stream, SimTime t, double value,
                            StatLabels labels) {
    streams_[stream].push_back(StatRecord{t, value, std::move(labels)});
}

const std::vector<StatRecord>& StatsCollector::rows(const std::string& stream) const {
    static const std::vector<StatRecord> empty;
    auto it = streams_.find(stream);
    return it == streams_.end() ? empty : it->second;
}

std::vector<double> StatsCollector::values(const std::string& stream) const {
    std::vector<double> out;
    for (const StatRecord& r : rows(stream)) out.push_back(r.value);
    return out;
}

std::vector<std::string> StatsCollector::stream_names() const {
    std::vector<std::string> out;
    for (const auto& [name, rows] : streams_) out.push_back(name);
    return out;
}

void StatsCollector::write_csv_dir(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& [name, rows] : streams_) {
        const std::string path = dir + "/" + name + ".csv";
        std::FILE* f = std::fopen(path.c_str(), "wb");
        if (!f) throw std::runtime_error("cannot write " + path);
        std::fprintf(f, "time,value,app,host,service,ue\n");
        for (const StatRecord& r : rows) {
            std::fprintf(f, "%.6f,%.9g,%s,%s,%s,%s\n", r.time.seconds(), r.value,
                         r.labels.app.c_str(), r.labels.host.c_str(),
                         r.labels.service.c_str(), r.labels.ue.c_str());
        }
        std::fclose(f);

        if (!response_streams_.count(name) || rows.empty()) continue;
        std::vector<double> sorted;
        for (const StatRecord& r : rows) sorted.push_back(r.value);
        std::sort(sorted.begin(), sorted.end());
        const std::string cdf_path = dir + "/" + name + "_cdf.csv";
        std::FILE* g = std::fopen(cdf_path.c_str(), "wb");
        if (!g) throw std::runtime_error("cannot write " + cdf_path);
        std::fprintf(g, "value,quantile\n");
        const double n = static_cast<double>(sorted.size());
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            std::fprintf(g, "%.9g,%.9g\n", sorted[i], static_cast<double>(i + 1) / n);
        }
        std::fclose(g);
    }
}

void Timeline::record(SimTime t, const std::string& step, const std::string& subject) {
    entries_.push_back(Entry{t, step, subject});
}

std::vector<std::string> Timeline::steps_for(const std::string& subject) const {
    std::vector<std::string> out;
    for (const Entry& e : entries_) {
        if (subject.empty() || e.subject == subject) out.push_back(e.step);
    }
    return out;
}

} // namespace mecsim
