#include "sympulse/output.hpp"

#include <fmt/format.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <system_error>

#include <unistd.h>

namespace sympulse {

std::string format_double(double value) { return fmt::format("{:.17g}", value); }

namespace {

void append_header(std::string& out, const std::vector<std::string>& header) {
  for (const auto& line : header) {
    out += "# ";
    out += line;
    out += '\n';
  }
}

}  // namespace

std::string trajectory_csv(const TrajectoryRecord& record, const std::vector<std::string>& header) {
  std::string out;
  append_header(out, header);
  const auto n = record.states.cols();
  out += "step,t";
  for (Eigen::Index i = 0; i < n; ++i) out += fmt::format(",y{}", i + 1);
  out += ",H_err";
  for (const auto& name : record.invariant_names) out += "," + name + "_err";
  out += ",alpha_star,g_evals,stage_iters\n";
  for (std::size_t k = 0; k < record.times.size(); ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    out += fmt::format("{},{}", k, format_double(record.times[k]));
    for (Eigen::Index i = 0; i < n; ++i) out += "," + format_double(record.states(row, i));
    out += "," + format_double(record.energy_error[k]);
    for (Eigen::Index i = 0; i < record.invariant_errors.cols(); ++i) {
      out += "," + format_double(record.invariant_errors(row, i));
    }
    out += fmt::format(",{},{},{}\n", format_double(record.alpha_trace[k]), record.g_evals[k],
                       record.stage_iterations[k]);
  }
  return out;
}

std::string convergence_csv(const std::vector<ConvergenceRow>& rows, const std::vector<std::string>& header) {
  std::string out;
  append_header(out, header);
  out += "h,e_h,order,delta_h,delta_scaled\n";
  for (const auto& row : rows) {
    out += fmt::format("{},{},{},{},{}\n", format_double(row.h), format_double(row.e_h),
                       row.order ? format_double(*row.order) : std::string(), format_double(row.delta_h),
                       format_double(row.delta_scaled));
  }
  return out;
}

std::string level_grid_csv(const LevelGrid& grid, const std::vector<std::string>& header) {
  std::string out;
  append_header(out, header);
  out += "h,alpha,g\n";
  for (std::size_t j = 0; j < grid.h_values.size(); ++j) {
    for (std::size_t i = 0; i < grid.alpha_values.size(); ++i) {
      const double g = grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      out += fmt::format("{},{},{}\n", format_double(grid.h_values[j]), format_double(grid.alpha_values[i]),
                         std::isnan(g) ? std::string("nan") : format_double(g));
    }
  }
  return out;
}

std::string tableau_csv(const ButcherTableau& tableau, const std::vector<std::string>& header) {
  std::string out;
  append_header(out, header);
  const int s = tableau.stages();
  out += "row,c,b";
  for (int j = 0; j < s; ++j) out += fmt::format(",A{}", j + 1);
  out += '\n';
  for (int i = 0; i < s; ++i) {
    out += fmt::format("{},{},{}", i + 1, format_double(tableau.c()[i]), format_double(tableau.b()[i]));
    for (int j = 0; j < s; ++j) out += "," + format_double(tableau.A(i, j));
    out += '\n';
  }
  return out;
}

std::string tableau_json(const ButcherTableau& tableau) {
  const int s = tableau.stages();
  auto vec = [&](const Vector& v) {
    std::string r = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) r += (i ? ", " : "") + format_double(v[i]);
    return r + "]";
  };
  std::string entries = "[";
  bool first = true;
  for (const auto& e : tableau.perturbation.entries()) {
    entries += fmt::format("{}{{\"index\": {}, \"alpha\": {}}}", first ? "" : ", ", e.index, format_double(e.value));
    first = false;
  }
  entries += "]";
  std::string a = "[";
  for (int i = 0; i < s; ++i) {
    a += (i ? ",\n    " : "\n    ") + vec(tableau.A.row(i).transpose());
  }
  a += "\n  ]";
  return fmt::format(
      "{{\n  \"stages\": {},\n  \"order\": {},\n  \"perturbation\": {},\n  \"c\": {},\n  \"b\": {},\n  \"A\": {}\n}}\n",
      s, tableau.order, entries, vec(tableau.c()), vec(tableau.b()), a);
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += fmt::format(".tmp.{}", static_cast<long>(::getpid()));
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::system_error(errno, std::generic_category(), "cannot open " + tmp.string());
    f << content;
    f.flush();
    if (!f) throw std::system_error(errno, std::generic_category(), "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::system_error(ec, "cannot rename into " + target.string());
  }
}

}  // namespace sympulse
