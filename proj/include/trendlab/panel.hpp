#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace trendlab {

using Date = std::chrono::sys_days;

/// Inclusive-exclusive row range [first, last) where an instrument has data.
struct ActiveRange {
    std::ptrdiff_t first = 0;
    std::ptrdiff_t last = 0;
    bool contains(std::ptrdiff_t t) const noexcept { return t >= first && t < last; }
    std::ptrdiff_t length() const noexcept { return last - first; }
};

/// Date-indexed matrix of daily simple returns, one column per instrument.
/// Cells outside an instrument's active range are NaN.
struct ReturnsPanel {
    std::vector<Date> dates;
    std::vector<std::string> instruments;
    Eigen::MatrixXd returns;  // rows = dates, cols = instruments
    std::vector<ActiveRange> active;

    std::ptrdiff_t n_days() const noexcept { return returns.rows(); }
    std::ptrdiff_t n_assets() const noexcept { return returns.cols(); }

    /// Recompute active ranges from NaN layout and check the panel invariants
    /// (ordered unique dates, no gaps inside an active range, finite values).
    void validate_and_index();

    /// Sub-panel made of the given columns, in the given order.
    ReturnsPanel select(const std::vector<std::ptrdiff_t>& columns) const;
};

/// Build a fully-active panel from a returns matrix, with business dates
/// starting at `start` and generated names "A000", "A001", ...
ReturnsPanel make_panel(const Eigen::MatrixXd& returns, Date start);

/// Monday-to-Friday calendar starting at the first business day >= start.
std::vector<Date> business_dates(Date start, std::size_t count);

Date parse_iso_date(const std::string& text);
std::string format_iso_date(Date d);

/// Shortest round-trip decimal representation.
std::string format_double(double x);

/// Read `date,<instrument>,...` CSV. Empty cells mark an inactive instrument.
ReturnsPanel ingest_csv(const std::filesystem::path& path);
ReturnsPanel ingest_csv(std::istream& in, const std::string& source_name = "<stream>");

void write_csv(const ReturnsPanel& panel, const std::filesystem::path& path);
void write_csv(const ReturnsPanel& panel, std::ostream& out);

/// Square matrix CSV with an instrument-name header row and name column.
void write_matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& names,
                      const std::filesystem::path& path);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path,
                                std::vector<std::string>* names = nullptr);

/// Start date used for simulated panels when none is given.
inline constexpr std::chrono::year_month_day kDefaultStartDate{
    std::chrono::year{1990}, std::chrono::month{5}, std::chrono::day{29}};

}  // namespace trendlab
