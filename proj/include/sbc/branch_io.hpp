#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sbc/continuation.hpp"

namespace sbc {

inline constexpr const char* kVerdictDelimiter = "---verdict---";

struct BranchRecord {
    double s = 0.0;
    std::vector<double> coords;
    int index_minus = 0;
    int index_zero = 0;
    int index_plus = 0;
    double residual = 0.0;
    double moment_error = 0.0;
    double arclength = 0.0;
};

namespace detail {

inline std::string format17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// One JSON object per line, one line per branch point.
inline void write_branch_jsonl(std::ostream& os, const Branch& branch) {
    for (const auto& p : branch.points) {
        nlohmann::json j;
        j["s"] = p.s;
        j["coords"] = std::vector<double>(p.q.coords().data(),
                                          p.q.coords().data() + p.q.coords().size());
        j["index_minus"] = p.indices.minus;
        j["index_zero"] = p.indices.zero;
        j["index_plus"] = p.indices.plus;
        j["residual"] = p.residual_norm;
        j["moment_error"] = p.moment_error;
        j["arclength"] = p.arclength;
        os << j.dump() << '\n';
    }
}

inline void write_branch_jsonl(const std::string& path, const Branch& branch) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    write_branch_jsonl(os, branch);
}

/// Plotting CSV: header s,x1,y1,...,xn,yn; 17 significant digits; LF endings.
inline void write_branch_csv(std::ostream& os, const Branch& branch) {
    if (branch.points.empty()) {
        os << "s\n";
        return;
    }
    const std::size_t n = branch.points.front().q.n();
    os << "s";
    for (std::size_t i = 1; i <= n; ++i) os << ",x" << i << ",y" << i;
    os << "\n";
    for (const auto& p : branch.points) {
        os << detail::format17(p.s);
        for (std::size_t i = 0; i < n; ++i)
            os << ',' << detail::format17(p.q.x(i)) << ',' << detail::format17(p.q.y(i));
        os << "\n";
    }
}

inline void write_branch_csv(const std::string& path, const Branch& branch) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    write_branch_csv(os, branch);
}

inline std::vector<BranchRecord> read_branch_jsonl(std::istream& is) {
    std::vector<BranchRecord> records;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const nlohmann::json j = nlohmann::json::parse(line);
        BranchRecord r;
        r.s = j.at("s").get<double>();
        r.coords = j.at("coords").get<std::vector<double>>();
        r.index_minus = j.at("index_minus").get<int>();
        r.index_zero = j.at("index_zero").get<int>();
        r.index_plus = j.at("index_plus").get<int>();
        r.residual = j.at("residual").get<double>();
        r.moment_error = j.at("moment_error").get<double>();
        r.arclength = j.at("arclength").get<double>();
        records.push_back(std::move(r));
    }
    return records;
}

inline std::vector<BranchRecord> read_branch_jsonl(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_branch_jsonl(is);
}

}  // namespace sbc
