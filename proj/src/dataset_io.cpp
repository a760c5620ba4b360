#include "dems/dataset_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "dems/errors.hpp"

namespace dems {

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& token) {
    double value = 0.0;
    const char* first = token.data();
    const char* last = first + token.size();
    if (first != last && *first == '+') {
        ++first;
    }
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc() || res.ptr != last) {
        throw ValidationError("not a number: '" + token + "'");
    }
    return value;
}

namespace {

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

void put_row(std::ostream& os, const Matrix& m, Eigen::Index row) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        os << ',' << format_double(m(row, j));
    }
}

void put_header(std::ostream& os, char prefix, Eigen::Index count) {
    for (Eigen::Index j = 0; j < count; ++j) {
        os << ',' << prefix << (j + 1);
    }
}

// Column index ranges of each prefix group in a dataset header.
struct Layout {
    std::vector<int> y, v, x, w, z;
};

Layout parse_header(const std::vector<std::string>& cols) {
    require(!cols.empty() && cols[0] == "t", "dataset csv: first column must be 't'");
    Layout layout;
    for (std::size_t c = 1; c < cols.size(); ++c) {
        const std::string& name = cols[c];
        require(name.size() >= 2, "dataset csv: bad column name '" + name + "'");
        std::vector<int>* group = nullptr;
        switch (name[0]) {
        case 'y': group = &layout.y; break;
        case 'v': group = &layout.v; break;
        case 'x': group = &layout.x; break;
        case 'w': group = &layout.w; break;
        case 'z': group = &layout.z; break;
        default: throw ValidationError("dataset csv: unknown column '" + name + "'");
        }
        const std::string digits = name.substr(1);
        int index = 0;
        const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), index);
        require(res.ec == std::errc() && res.ptr == digits.data() + digits.size(),
                "dataset csv: bad column name '" + name + "'");
        require(index == static_cast<int>(group->size()) + 1,
                "dataset csv: columns of '" + name.substr(0, 1) + "' must be numbered 1..k in order");
        group->push_back(static_cast<int>(c));
    }
    require(!layout.y.empty(), "dataset csv: no output columns");
    require(layout.w.empty() || layout.w.size() == layout.x.size(),
            "dataset csv: w columns must match x columns");
    require(layout.z.empty() || layout.z.size() == layout.y.size(),
            "dataset csv: z columns must match y columns");
    return layout;
}

Matrix gather(const std::vector<std::vector<double>>& rows, const std::vector<int>& cols) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][static_cast<std::size_t>(cols[j])];
        }
    }
    return m;
}

} // namespace

void write_dataset_csv(std::ostream& os, const Dataset& data) {
    data.validate();
    os << 't';
    put_header(os, 'y', data.y.cols());
    put_header(os, 'v', data.v.cols());
    if (data.x) put_header(os, 'x', data.x->cols());
    if (data.w) put_header(os, 'w', data.w->cols());
    if (data.z) put_header(os, 'z', data.z->cols());
    os << '\n';
    for (Eigen::Index k = 0; k < data.size(); ++k) {
        os << format_double(data.times(k));
        put_row(os, data.y, k);
        put_row(os, data.v, k);
        if (data.x) put_row(os, *data.x, k);
        if (data.w) put_row(os, *data.w, k);
        if (data.z) put_row(os, *data.z, k);
        os << '\n';
    }
}

Dataset read_dataset_csv(std::istream& is) {
    std::string line;
    std::size_t line_no = 0;
    std::optional<Layout> layout;
    std::size_t width = 0;
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line[0] == '#') {
            continue;
        }
        const auto cells = split_row(line);
        if (!layout) {
            layout = parse_header(cells);
            width = cells.size();
            continue;
        }
        if (cells.size() != width) {
            throw ValidationError("dataset csv line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(width) + " fields, got " + std::to_string(cells.size()));
        }
        std::vector<double> row(width);
        for (std::size_t c = 0; c < width; ++c) {
            try {
                row[c] = parse_double(cells[c]);
            } catch (const ValidationError& e) {
                throw ValidationError("dataset csv line " + std::to_string(line_no) + ": " + e.what());
            }
        }
        rows.push_back(std::move(row));
    }
    require(layout.has_value(), "dataset csv: missing header");
    require(rows.size() >= 2, "dataset csv: need at least two samples");

    Dataset data;
    data.times = gather(rows, {0}).col(0);
    data.dt = (data.times(data.size() - 1) - data.times(0)) / static_cast<double>(data.size() - 1);
    data.y = gather(rows, layout->y);
    data.v = gather(rows, layout->v);
    if (data.v.cols() == 0) {
        data.v = Matrix::Zero(data.size(), 0);
    }
    if (!layout->x.empty()) data.x = gather(rows, layout->x);
    if (!layout->w.empty()) data.w = gather(rows, layout->w);
    if (!layout->z.empty()) data.z = gather(rows, layout->z);
    data.validate();
    return data;
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
    std::ostringstream os;
    write_dataset_csv(os, data);
    write_text_file(path, os.str());
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open dataset '" + path.string() + "'");
    }
    return read_dataset_csv(in);
}

void write_records_csv(std::ostream& os, const std::vector<BenchmarkRecord>& records,
                       bool with_s_assumed) {
    os << "scenario,method,s_real,seed,p,sse,runtime_s";
    if (with_s_assumed) {
        os << ",s_assumed";
    }
    os << '\n';
    for (const auto& r : records) {
        os << r.scenario << ',' << r.method << ',' << format_double(r.s_real) << ',' << r.seed << ','
           << r.p << ',' << format_double(r.sse) << ',' << format_double(r.runtime_s);
        if (with_s_assumed) {
            os << ',';
            if (r.s_assumed) {
                os << format_double(*r.s_assumed);
            }
        }
        os << '\n';
    }
}

void write_estimates_csv(std::ostream& os, const Vector& times, const TrialResult& result) {
    const Eigen::Index count = result.estimates.rows();
    require(times.size() == count, "estimates csv: time and estimate lengths differ");
    const bool with_s = static_cast<Eigen::Index>(result.s_traj.size()) == count;
    const bool with_F = static_cast<Eigen::Index>(result.F_traj.size()) == count;
    os << 't';
    put_header(os, 'x', result.estimates.cols());
    if (with_s) os << ",s";
    if (with_F) os << ",F";
    os << '\n';
    for (Eigen::Index k = 0; k < count; ++k) {
        os << format_double(times(k));
        put_row(os, result.estimates, k);
        if (with_s) os << ',' << format_double(result.s_traj[static_cast<std::size_t>(k)]);
        if (with_F) os << ',' << format_double(result.F_traj[static_cast<std::size_t>(k)]);
        os << '\n';
    }
}

void write_landscape_csv(std::ostream& os, const std::vector<LandscapeCurve>& curves) {
    os << "t_eval,s,F\n";
    for (const auto& c : curves) {
        for (std::size_t i = 0; i < c.s.size(); ++i) {
            os << format_double(c.t_eval) << ',' << format_double(c.s[i]) << ',' << format_double(c.F[i])
               << '\n';
        }
    }
}

void write_quadrant_csv(std::ostream& os, std::size_t sample_count, const QuadrantResult& result) {
    os << "samples,q1,q2,q3,q4,on_axis\n";
    os << sample_count;
    for (auto c : result.counts) {
        os << ',' << c;
    }
    os << ',' << result.on_axis << '\n';
}

void write_quadrant_samples_csv(std::ostream& os, const QuadrantResult& result) {
    os << "s,first,second\n";
    for (const auto& q : result.samples) {
        os << format_double(q.s) << ',' << format_double(q.first) << ',' << format_double(q.second) << '\n';
    }
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    out << text;
    if (!out) {
        throw std::runtime_error("write failed for '" + path.string() + "'");
    }
}

} // namespace dems
