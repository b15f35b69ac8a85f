#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cgb/config.hpp"
#include "cgb/environment.hpp"
#include "cgb/errors.hpp"

namespace cgb {

// Plain comma-separated table with a mandatory header row.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw CsvError("missing column '" + name + "'");
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double csv_double(const std::string& s) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw CsvError("not a number: '" + s + "'");
    return v;
}

inline std::int64_t csv_int(const std::string& s) {
    std::int64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw CsvError("not an integer: '" + s + "'");
    return v;
}

inline std::uint64_t csv_uint(const std::string& s) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw CsvError("not an unsigned integer: '" + s + "'");
    return v;
}

}  // namespace detail

inline CsvTable parse_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (!have_header) {
            t.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != t.header.size())
            throw CsvError("row has " + std::to_string(cells.size()) + " cells, header has " + std::to_string(t.header.size()));
        t.rows.push_back(std::move(cells));
    }
    if (!have_header) throw CsvError("empty CSV");
    return t;
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open '" + path + "'");
    return parse_csv(in);
}

inline void write_csv(std::ostream& out, const CsvTable& t) {
    const auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
        out << '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
}

inline void write_csv(const std::string& path, const CsvTable& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    write_csv(out, t);
}

inline CsvTable trace_table(const RegretTrace& tr) {
    using detail::format_double;
    CsvTable t{{"algorithm", "trial", "seed", "t", "action", "y", "c", "instant_regret", "cum_regret"}, {}};
    t.rows.reserve(tr.rows.size());
    const std::string trial = std::to_string(tr.trial), seed = std::to_string(tr.seed);
    for (const auto& r : tr.rows)
        t.rows.push_back({tr.algorithm, trial, seed, std::to_string(r.t), std::to_string(r.action), format_double(r.y),
                          format_double(r.c), format_double(r.instant_regret), format_double(r.cum_regret)});
    return t;
}

inline RegretTrace read_trace(const CsvTable& t) {
    const auto ct = t.column("t"), ca = t.column("action"), cy = t.column("y"), cc = t.column("c"),
               ci = t.column("instant_regret"), cr = t.column("cum_regret");
    const auto cal = t.column("algorithm"), ctr = t.column("trial"), cse = t.column("seed");
    RegretTrace tr;
    for (const auto& r : t.rows) {
        if (tr.rows.empty()) {
            tr.algorithm = r[cal];
            tr.trial = static_cast<int>(detail::csv_int(r[ctr]));
            tr.seed = detail::csv_uint(r[cse]);
        }
        tr.rows.push_back({detail::csv_int(r[ct]), static_cast<std::size_t>(detail::csv_int(r[ca])), detail::csv_double(r[cy]),
                           detail::csv_double(r[cc]), detail::csv_double(r[ci]), detail::csv_double(r[cr])});
    }
    return tr;
}

inline CsvTable aggregate_table(const std::vector<AggregateRow>& rows) {
    using detail::format_double;
    CsvTable t{{"t", "mean_cum_regret", "std_cum_regret"}, {}};
    for (const auto& r : rows) t.rows.push_back({std::to_string(r.t), format_double(r.mean_cum_regret), format_double(r.std_cum_regret)});
    return t;
}

inline std::vector<AggregateRow> read_aggregate(const CsvTable& t) {
    const auto ct = t.column("t"), cm = t.column("mean_cum_regret"), cs = t.column("std_cum_regret");
    std::vector<AggregateRow> rows;
    for (const auto& r : t.rows) rows.push_back({detail::csv_int(r[ct]), detail::csv_double(r[cm]), detail::csv_double(r[cs])});
    if (rows.empty()) throw CsvError("aggregate CSV has no data rows");
    return rows;
}

inline CsvTable epochs_table(const std::vector<RegretTrace>& traces) {
    CsvTable t{{"algorithm", "trial", "h", "t_start", "active_size", "support_size", "epoch_len"}, {}};
    for (const auto& tr : traces)
        for (const auto& m : tr.epoch_marks)
            t.rows.push_back({tr.algorithm, std::to_string(tr.trial), std::to_string(m.h), std::to_string(m.t_start), std::to_string(m.active_size),
                              std::to_string(m.support_size), std::to_string(m.epoch_len)});
    return t;
}

struct EpochMarkRow {
    std::string algorithm;
    int trial = 0;
    EpochMark mark;
};

inline std::vector<EpochMarkRow> read_epochs(const CsvTable& t) {
    const auto ck = t.column("trial"), ch = t.column("h"), cs = t.column("t_start"), ca = t.column("active_size"),
               cp = t.column("support_size"), cl = t.column("epoch_len");
    std::vector<EpochMarkRow> rows;
    for (const auto& r : t.rows)
        rows.push_back({r[t.column("algorithm")], static_cast<int>(detail::csv_int(r[ck])),
                        {static_cast<int>(detail::csv_int(r[ch])), detail::csv_int(r[cs]), static_cast<std::size_t>(detail::csv_int(r[ca])),
                         static_cast<std::size_t>(detail::csv_int(r[cp])), detail::csv_int(r[cl])}});
    return rows;
}

}  // namespace cgb
