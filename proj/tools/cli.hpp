#pragma once

#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace minimaxcdf::cli {

enum ExitCode : int { ok = 0, usage = 2, divergence = 3, io = 4 };

// A grid of t values with named series evaluated on it.
class PlotTable {
public:
    explicit PlotTable(std::vector<double> grid) : grid_(std::move(grid)) {}

    void add(const std::string& name, std::vector<double> values);
    const std::vector<double>& grid() const noexcept { return grid_; }
    const std::vector<std::pair<std::string, std::vector<double>>>& columns() const noexcept { return columns_; }
    const std::vector<double>& column(const std::string& name) const;
    void write_csv(std::ostream& out) const;

private:
    std::vector<double> grid_;
    std::vector<std::pair<std::string, std::vector<double>>> columns_;
};

// points equally spaced over [min - 0.5 IQR, max + 0.5 IQR].
std::vector<double> default_grid(const std::vector<double>& data, int points);

// Runs one command line (without the program name). Output goes to out,
// diagnostics to err; the return value is the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace minimaxcdf::cli
