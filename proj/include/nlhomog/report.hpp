#pragma once

#include <cstdint>
#include <fstream>
#include <iosfwd>
#include <string>
#include <vector>

#include "nlhomog/config.hpp"

namespace nlhomog {

enum class Subcommand { cell, gamma, extend, degenerate, kernel_info };

Subcommand subcommand_from_string(const std::string& name);
std::string to_string(Subcommand s);

// Shortest decimal text that round-trips a double ("{:.17g}").
std::string format_number(double x);

// Comma-separated file with a header row and a trailing "# config_hash=..."
// line, LF endings.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header, std::uint64_t config_hash);
    ~CsvWriter();
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    void row(const std::vector<std::string>& cells);
    void close();

private:
    std::ofstream out_;
    std::size_t columns_;
    std::uint64_t hash_;
    bool closed_ = false;
};

struct ReportRow {
    std::string id;
    std::string parameters;
    double measured = 0.0;
    double tolerance = 0.0;
    bool pass = true;
};

struct RunResult {
    std::vector<ReportRow> checks;
    std::vector<std::string> files;
    int exit_code() const;
};

// Runs one subcommand and writes its CSVs plus <subcommand>_checks.csv into
// out_dir. Human-readable progress goes to `log`.
RunResult run(Subcommand sub, const RunConfig& cfg, const std::string& out_dir, std::ostream& log);

}  // namespace nlhomog
