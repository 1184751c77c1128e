#include "bsde/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "bsde/errors.hpp"
#include "bsde/planner.hpp"

namespace bsde {

std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw PreconditionError("cannot open '" + path + "' for writing");
    return out;
}

void write_row(std::ofstream& out, const std::vector<double>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out << ',';
        out << format_full(row[c]);
    }
    out << '\n';
}

}  // namespace

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out = open_out(path);
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c) out << ',';
        out << header[c];
    }
    out << '\n';
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw PreconditionError("csv row width disagrees with the header");
        write_row(out, row);
    }
}

void write_solution_csv(const std::string& path, const DiscreteSolution& sol, double K, double C) {
    std::vector<std::string> header;
    header.push_back("t");
    for (int c = 0; c < sol.d; ++c) header.push_back("y_mean_" + std::to_string(c + 1));
    for (int c = 0; c < sol.d; ++c) header.push_back("y_std_" + std::to_string(c + 1));
    header.push_back("z_abs_mean");
    header.push_back("z_abs_max");
    header.push_back("sqrt_rho_bound");

    std::vector<std::vector<double>> rows;
    for (int i = sol.first_node; i <= sol.last_node; ++i) {
        std::vector<double> row;
        row.push_back(sol.grid.node(i));
        auto block = sol.y_block(i);
        for (int c = 0; c < sol.d; ++c) row.push_back(block.col(c).mean());
        for (int c = 0; c < sol.d; ++c) {
            double mean = block.col(c).mean();
            double var = (block.col(c).array() - mean).square().sum() /
                         std::max(1, sol.n_paths - 1);
            row.push_back(std::sqrt(var));
        }
        int step = std::min(i, sol.last_node - 1);
        double mean_abs = 0.0;
        for (int p = 0; p < sol.n_paths; ++p) mean_abs += sol.z_at(p, step).norm();
        row.push_back(mean_abs / sol.n_paths);
        row.push_back(sol.z_abs_max[static_cast<std::size_t>(step)]);
        row.push_back(std::sqrt(rho(sol.grid.horizon - sol.grid.node(i), K, C)));
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

void write_weights_csv(const std::string& path, const GirsanovWeights& weights) {
    std::vector<std::vector<double>> rows;
    rows.reserve(static_cast<std::size_t>(weights.weight.size()));
    for (Eigen::Index p = 0; p < weights.weight.size(); ++p)
        rows.push_back({static_cast<double>(p), weights.weight(p), weights.log_weight(p)});
    write_csv(path, {"path", "weight", "log_weight"}, rows);
}

void write_reflected_csv(const std::string& path, const TimeGrid& grid, const ReflectedPath& rp) {
    int m = static_cast<int>(rp.values.cols());
    std::vector<std::string> header;
    header.push_back("t");
    for (int c = 0; c < m; ++c) header.push_back("x_" + std::to_string(c + 1));
    for (int c = 0; c < m; ++c) header.push_back("regulator_" + std::to_string(c + 1));
    header.push_back("variation");

    std::vector<std::vector<double>> rows;
    for (int i = 0; i < static_cast<int>(rp.values.rows()); ++i) {
        std::vector<double> row;
        row.push_back(grid.node(i));
        for (int c = 0; c < m; ++c) row.push_back(rp.values(i, c));
        for (int c = 0; c < m; ++c) row.push_back(rp.regulator(i, c));
        row.push_back(rp.variation(i));
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

}  // namespace bsde
