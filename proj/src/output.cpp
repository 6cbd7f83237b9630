#include "biogds/output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace biogds {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

std::string order_field(double v) { return std::isnan(v) ? std::string() : format_double(v); }

}  // namespace

void write_error_report_csv(const ErrorReport& report, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "level,h,dt,err_p_l2,err_q_l2,err_p_h1,err_q_h1,"
         "order_p_l2,order_q_l2,order_p_h1,order_q_h1\n";
  for (const LevelRecord& r : report.levels) {
    out << r.level << ',' << format_double(r.h) << ',' << format_double(r.dt) << ','
        << format_double(r.err_p_l2) << ',' << format_double(r.err_q_l2) << ','
        << format_double(r.err_p_h1) << ',' << format_double(r.err_q_h1) << ','
        << order_field(r.order_p_l2) << ',' << order_field(r.order_q_l2) << ','
        << order_field(r.order_p_h1) << ',' << order_field(r.order_q_h1) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_loglog_data(const ErrorReport& report, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "# h err_p_l2 err_q_l2 err_p_h1 err_q_h1\n";
  for (const LevelRecord& r : report.levels)
    out << format_double(r.h) << ' ' << format_double(r.err_p_l2) << ' '
        << format_double(r.err_q_l2) << ' ' << format_double(r.err_p_h1) << ' '
        << format_double(r.err_q_h1) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

void write_gnuplot_script(const std::vector<std::string>& data_files, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "set logscale xy\n"
      << "set xlabel 'h'\n"
      << "set ylabel 'error'\n"
      << "set key left top\n"
      << "plot \\\n";
  for (std::size_t i = 0; i < data_files.size(); ++i) {
    const std::string& f = data_files[i];
    out << "  '" << f << "' using 1:2 with linespoints title '" << f << " p L2', \\\n"
        << "  '" << f << "' using 1:4 with linespoints title '" << f << " p H1'"
        << (i + 1 < data_files.size() ? ", \\\n" : ",\\\n");
  }
  out << "  x w l dt 2 t 'order 1'\n";
  if (!out) throw IoError("write failed: " + path);
}

void write_picard_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "step,t,iterations,final_residual,contraction_ok,feasibility_slack,complementarity\n";
  for (std::size_t n = 0; n < traj.reports.size(); ++n) {
    const PicardReport& r = traj.reports[n];
    out << (n + 1) << ',' << format_double(traj.grid.knots[n + 1]) << ',' << r.iterations << ','
        << format_double(r.final_residual) << ',' << (r.contraction_ok ? 1 : 0) << ','
        << format_double(traj.feasibility[n]) << ',' << format_double(traj.complementarity[n])
        << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_diagnostics_csv(const EstimateDiagnostics& diag, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "step,t,s_p,s_q,s_dtp,s_dtq,w_a,w_b,m_d,r0_p,r0_q\n";
  for (std::size_t n = 0; n < diag.steps.size(); ++n) {
    const StepDiagnostics& d = diag.steps[n];
    out << (n + 1) << ',' << format_double(d.t) << ',' << format_double(d.s_p) << ','
        << format_double(d.s_q) << ',' << format_double(d.s_dtp) << ','
        << format_double(d.s_dtq) << ',' << format_double(d.w_a) << ',' << format_double(d.w_b)
        << ',' << format_double(d.m_d) << ',' << format_double(diag.r0_p) << ','
        << format_double(diag.r0_q) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_quality_csv(const std::vector<QualityReport>& rows,
                       const std::vector<std::string>& s_names,
                       const std::vector<std::string>& w_names, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "level,h,c_d";
  for (const auto& n : s_names) out << ",s_" << n;
  for (const auto& n : w_names) out << ",w_" << n;
  out << '\n';
  for (const QualityReport& r : rows) {
    out << r.level << ',' << format_double(r.h) << ',' << format_double(r.coercivity);
    for (double v : r.s_values) out << ',' << format_double(v);
    for (double v : r.w_values) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_vtk_field(const GradientDiscretisation& gd, const std::vector<double>& values,
                     const std::string& field_name, double time, const std::string& path) {
  const Visualization viz = gd.visualization();
  std::ofstream out = open_out(path);
  out << "# vtk DataFile Version 3.0\n"
      << field_name << " t=" << format_double(time) << "\n"
      << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << viz.points.size() << " double\n";
  for (const Point2& p : viz.points)
    out << format_double(p.x) << ' ' << format_double(p.y) << " 0\n";
  std::size_t list_len = 0;
  for (const auto& c : viz.cells) list_len += c.size() + 1;
  out << "CELLS " << viz.cells.size() << ' ' << list_len << '\n';
  for (const auto& c : viz.cells) {
    out << c.size();
    for (int v : c) out << ' ' << v;
    out << '\n';
  }
  out << "CELL_TYPES " << viz.cells.size() << '\n';
  for (const auto& c : viz.cells) out << (c.size() == 3 ? 5 : 7) << '\n';
  if (viz.point_data) {
    out << "POINT_DATA " << viz.points.size() << '\n';
  } else {
    out << "CELL_DATA " << viz.cells.size() << '\n';
  }
  out << "SCALARS " << field_name << " double 1\nLOOKUP_TABLE default\n";
  for (int dof : viz.data_dof) out << format_double(values[dof]) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

std::string file_hash_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot hash missing file: " + path);
  std::uint64_t h = 1469598103934665603ULL;
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (!in) break;
  }
  char hex[20];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

void Manifest::add(const std::string& path) { files_.push_back(path); }

void Manifest::write(const std::string& path) const {
  std::ofstream out = open_out(path);
  for (const std::string& f : files_) out << file_hash_hex(f) << "  " << f << '\n';
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace biogds
