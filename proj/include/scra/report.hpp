#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "scra/errors.hpp"
#include "scra/evaluation.hpp"
#include "scra/serialization.hpp"

namespace scra {

namespace report_detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path.string());
    return out;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

} // namespace report_detail

// Writes results.csv and results.json (one row per table) and, when per-item
// records are given, records.jsonl next to them.
inline void emit_report(const std::vector<ResultsTable>& tables,
                        const std::vector<EvalRecord>& records, const std::string& out_dir) {
    if (tables.empty()) throw validation_error("no results to report");
    std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw io_error("cannot create output dir " + out_dir + ": " + ec.message());

    {
        auto csv = report_detail::open_out(dir / "results.csv");
        csv << "config_id,dataset,split,n_items,mean_accuracy\n";
        for (const auto& t : tables)
            csv << report_detail::csv_escape(t.config_id) << "," << t.dataset << "," << t.split
                << "," << t.n_items << "," << format_accuracy(t.mean_accuracy) << "\n";
        if (!csv) throw io_error("failed writing results.csv");
    }
    {
        auto js = report_detail::open_out(dir / "results.json");
        json j = json::array();
        for (const auto& t : tables) j.push_back(t);
        js << j.dump(2) << "\n";
        if (!js) throw io_error("failed writing results.json");
    }
    if (!records.empty()) write_records_jsonl(records, (dir / "records.jsonl").string());
}

// Sweep series CSV with the columns a plotting tool needs: x, dataset,
// accuracy.
inline void emit_sweep_series(const std::vector<SweepPoint>& series, const std::string& param,
                              const std::string& out_dir) {
    if (series.empty()) throw validation_error("no sweep points to report");
    std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw io_error("cannot create output dir " + out_dir + ": " + ec.message());
    auto csv = report_detail::open_out(dir / ("sweep_" + param + ".csv"));
    csv << "x,dataset,accuracy\n";
    for (const auto& p : series)
        csv << p.x << "," << p.dataset << "," << format_accuracy(p.accuracy) << "\n";
    if (!csv) throw io_error("failed writing sweep series");
}

} // namespace scra
