#include "attnlab/matrix_io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace attnlab {

namespace {

std::vector<double> parse_row(const std::string& line, const std::string& name, size_t lineno) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            size_t pos = 0;
            const double v = std::stod(cell, &pos);
            while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
            if (pos != cell.size()) throw std::invalid_argument("trailing junk");
            row.push_back(v);
        } catch (const std::exception&) {
            throw IoError(name + ":" + std::to_string(lineno) + ": cannot parse value '" + cell + "'");
        }
    }
    return row;
}

}  // namespace

Matrix read_matrix(std::istream& in, const std::string& name) {
    std::vector<std::vector<double>> rows;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos) continue;
        if (line[start] == '#') continue;
        rows.push_back(parse_row(line, name, lineno));
        if (rows.back().size() != rows.front().size()) {
            throw IoError(name + ":" + std::to_string(lineno) + ": ragged row (expected " +
                          std::to_string(rows.front().size()) + " values, got " +
                          std::to_string(rows.back().size()) + ")");
        }
    }
    if (rows.empty()) throw IoError(name + ": no matrix rows found");
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (size_t i = 0; i < rows.size(); ++i) {
        for (size_t j = 0; j < rows[i].size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    require_finite(m, name.c_str());
    return m;
}

Matrix read_matrix_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open matrix file: " + path.string());
    return read_matrix(in, path.string());
}

void write_matrix(std::ostream& out, const Matrix& m) {
    out << std::setprecision(17);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << m(i, j);
        }
        out << '\n';
    }
}

void write_matrix_file(const std::filesystem::path& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open matrix file for writing: " + path.string());
    write_matrix(out, m);
}

}  // namespace attnlab
