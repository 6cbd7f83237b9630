// File emission: CSV tables, legacy-ASCII VTK fields, gnuplot artifacts, and
// the run manifest with content hashes. All numbers print with %.17g so that
// reruns are byte-identical.
#ifndef BIOGDS_OUTPUT_HPP
#define BIOGDS_OUTPUT_HPP

#include <string>
#include <vector>

#include "biogds/gdm.hpp"
#include "biogds/model.hpp"
#include "biogds/verify.hpp"

namespace biogds {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string format_double(double v);

void write_error_report_csv(const ErrorReport& report, const std::string& path);
// Log-log ready columns: h and the four error norms.
void write_loglog_data(const ErrorReport& report, const std::string& path);
void write_gnuplot_script(const std::vector<std::string>& data_files, const std::string& path);

void write_picard_csv(const Trajectory& traj, const std::string& path);
void write_diagnostics_csv(const EstimateDiagnostics& diag, const std::string& path);

void write_quality_csv(const std::vector<QualityReport>& rows,
                       const std::vector<std::string>& s_names,
                       const std::vector<std::string>& w_names, const std::string& path);

// One scalar field on the scheme's natural layout (cell data for piecewise
// constants, point data for nodal reconstructions).
void write_vtk_field(const GradientDiscretisation& gd, const std::vector<double>& values,
                     const std::string& field_name, double time, const std::string& path);

std::string file_hash_hex(const std::string& path);  // FNV-1a over the bytes

class Manifest {
 public:
  void add(const std::string& path);
  void write(const std::string& path) const;

 private:
  std::vector<std::string> files_;
};

}  // namespace biogds

#endif
