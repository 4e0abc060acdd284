#include "trendlab/panel.hpp"

#include "trendlab/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

namespace trendlab {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else if (c != '\r') {
            cell.push_back(c);
        }
    }
    cells.push_back(std::move(cell));
    return cells;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& text, double& out) {
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

}  // namespace

Date parse_iso_date(const std::string& text) {
    // strict YYYY-MM-DD
    const auto bad = [&] { return DataError("invalid ISO date '" + text + "'"); };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    const char* s = text.data();
    if (std::from_chars(s, s + 4, y).ptr != s + 4) throw bad();
    if (std::from_chars(s + 5, s + 7, m).ptr != s + 7) throw bad();
    if (std::from_chars(s + 8, s + 10, d).ptr != s + 10) throw bad();
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                          std::chrono::day{d}};
    if (!ymd.ok()) throw bad();
    return Date{ymd};
}

std::string format_iso_date(Date d) {
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

std::vector<Date> business_dates(Date start, std::size_t count) {
    std::vector<Date> out;
    out.reserve(count);
    Date d = start;
    while (out.size() < count) {
        const std::chrono::weekday wd{d};
        if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) out.push_back(d);
        d += std::chrono::days{1};
    }
    return out;
}

void ReturnsPanel::validate_and_index() {
    const auto T = returns.rows();
    const auto N = returns.cols();
    if (static_cast<std::ptrdiff_t>(dates.size()) != T)
        throw DataError("panel has " + std::to_string(dates.size()) + " dates but " +
                        std::to_string(T) + " rows");
    if (static_cast<std::ptrdiff_t>(instruments.size()) != N)
        throw DataError("panel has " + std::to_string(instruments.size()) +
                        " instrument names but " + std::to_string(N) + " columns");
    if (N < 1) throw DataError("panel has no instruments");
    for (std::size_t t = 1; t < dates.size(); ++t) {
        if (dates[t] == dates[t - 1])
            throw DataError("duplicate date " + format_iso_date(dates[t]));
        if (dates[t] < dates[t - 1])
            throw DataError("dates not increasing at " + format_iso_date(dates[t]));
    }
    active.assign(static_cast<std::size_t>(N), ActiveRange{});
    for (Eigen::Index j = 0; j < N; ++j) {
        Eigen::Index first = -1;
        Eigen::Index last = -1;
        for (Eigen::Index t = 0; t < T; ++t) {
            const double v = returns(t, j);
            if (std::isnan(v)) continue;
            if (!std::isfinite(v))
                throw DataError("non-finite return for " + instruments[j] + " on " +
                                format_iso_date(dates[t]));
            if (first < 0) first = t;
            last = t;
        }
        if (first < 0) {
            active[j] = ActiveRange{0, 0};
            continue;
        }
        for (Eigen::Index t = first; t <= last; ++t)
            if (std::isnan(returns(t, j)))
                throw DataError("missing return for " + instruments[j] + " on " +
                                format_iso_date(dates[t]) + " inside its active range");
        active[j] = ActiveRange{first, last + 1};
    }
}

ReturnsPanel ReturnsPanel::select(const std::vector<std::ptrdiff_t>& columns) const {
    ReturnsPanel out;
    out.dates = dates;
    out.returns.resize(returns.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t k = 0; k < columns.size(); ++k) {
        const auto c = columns[k];
        if (c < 0 || c >= returns.cols())
            throw ParameterError("column index " + std::to_string(c) + " out of range");
        out.returns.col(static_cast<Eigen::Index>(k)) = returns.col(c);
        out.instruments.push_back(instruments[static_cast<std::size_t>(c)]);
        if (!active.empty()) out.active.push_back(active[static_cast<std::size_t>(c)]);
    }
    if (active.empty()) out.validate_and_index();
    return out;
}

ReturnsPanel make_panel(const Eigen::MatrixXd& returns, Date start) {
    ReturnsPanel p;
    p.returns = returns;
    p.dates = business_dates(start, static_cast<std::size_t>(returns.rows()));
    for (Eigen::Index j = 0; j < returns.cols(); ++j) {
        char buf[24];
        std::snprintf(buf, sizeof buf, "A%03ld", static_cast<long>(j));
        p.instruments.emplace_back(buf);
    }
    p.validate_and_index();
    return p;
}

ReturnsPanel ingest_csv(std::istream& in, const std::string& source_name) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(source_name + ": empty file");
    auto header = split_csv_line(line);
    if (header.empty() || trim(header[0]) != "date")
        throw DataError(source_name + ": header must start with 'date'");
    if (header.size() < 2) throw DataError(source_name + ": no instrument columns");

    ReturnsPanel p;
    for (std::size_t j = 1; j < header.size(); ++j) p.instruments.push_back(trim(header[j]));

    std::vector<double> values;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw DataError(source_name + ": row " + std::to_string(row) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()));
        Date d;
        try {
            d = parse_iso_date(trim(cells[0]));
        } catch (const DataError& e) {
            throw DataError(source_name + ": row " + std::to_string(row) + ", column date: " +
                            e.what());
        }
        if (!p.dates.empty() && d == p.dates.back())
            throw DataError(source_name + ": duplicate date " + format_iso_date(d) + " at row " +
                            std::to_string(row));
        if (!p.dates.empty() && d < p.dates.back())
            throw DataError(source_name + ": non-monotone date " + format_iso_date(d) +
                            " at row " + std::to_string(row));
        p.dates.push_back(d);
        for (std::size_t j = 1; j < cells.size(); ++j) {
            const std::string cell = trim(cells[j]);
            double v = std::numeric_limits<double>::quiet_NaN();
            if (!cell.empty() && !parse_double(cell, v))
                throw DataError(source_name + ": unparseable cell '" + cell + "' at row " +
                                std::to_string(row) + ", column " + p.instruments[j - 1]);
            values.push_back(v);
        }
    }
    const auto T = static_cast<Eigen::Index>(p.dates.size());
    const auto N = static_cast<Eigen::Index>(p.instruments.size());
    p.returns.resize(T, N);
    for (Eigen::Index t = 0; t < T; ++t)
        for (Eigen::Index j = 0; j < N; ++j)
            p.returns(t, j) = values[static_cast<std::size_t>(t * N + j)];
    p.validate_and_index();
    return p;
}

ReturnsPanel ingest_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file " + path.string());
    return ingest_csv(in, path.string());
}

void write_csv(const ReturnsPanel& panel, std::ostream& out) {
    out << "date";
    for (const auto& name : panel.instruments) out << ',' << name;
    out << '\n';
    for (Eigen::Index t = 0; t < panel.returns.rows(); ++t) {
        out << format_iso_date(panel.dates[static_cast<std::size_t>(t)]);
        for (Eigen::Index j = 0; j < panel.returns.cols(); ++j) {
            out << ',';
            const double v = panel.returns(t, j);
            if (!std::isnan(v)) out << format_double(v);
        }
        out << '\n';
    }
}

void write_csv(const ReturnsPanel& panel, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    write_csv(panel, out);
}

void write_matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& names,
                      const std::filesystem::path& path) {
    if (m.rows() != m.cols() || static_cast<std::size_t>(m.rows()) != names.size())
        throw ParameterError("matrix CSV needs a square matrix and one name per row");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "instrument";
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out << names[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << format_double(m(i, j));
        out << '\n';
    }
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path,
                                std::vector<std::string>* names) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open matrix file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
    auto header = split_csv_line(line);
    const std::size_t n = header.size() - 1;
    if (n == 0) throw DataError(path.string() + ": no columns");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    std::vector<std::string> row_names;
    std::size_t i = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != n + 1 || i >= n)
            throw DataError(path.string() + ": matrix is not square at row " +
                            std::to_string(i + 2));
        row_names.push_back(trim(cells[0]));
        for (std::size_t j = 0; j < n; ++j) {
            double v = 0.0;
            if (!parse_double(trim(cells[j + 1]), v))
                throw DataError(path.string() + ": unparseable cell at row " +
                                std::to_string(i + 2) + ", column " + std::to_string(j + 2));
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
        ++i;
    }
    if (i != n) throw DataError(path.string() + ": expected " + std::to_string(n) + " rows");
    if (names) {
        names->clear();
        for (std::size_t j = 1; j < header.size(); ++j) names->push_back(trim(header[j]));
    }
    return m;
}

}  // namespace trendlab
