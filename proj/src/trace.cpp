#include "nlostrack/trace.hpp"

#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>

#include "nlostrack/csv.hpp"

namespace nlostrack::io {

namespace {

void header_paths(std::ostream& os, const char* prefix, int L) {
  for (int l = 1; l <= L; ++l) os << ',' << prefix << l;
}

}  // namespace

void write_step_records_csv(std::ostream& os, std::span<const pipeline::StepRecord> records,
                            int num_paths) {
  const int L = num_paths;
  os << "t,true_x,true_y,true_gamma,coarse_x,coarse_y,coarse_gamma,coarse_status,"
        "est_x,est_y,est_gamma";
  header_paths(os, "psi_phi", L);
  header_paths(os, "psi_theta", L);
  header_paths(os, "aod_sqerr", L);
  header_paths(os, "aoa_sqerr", L);
  os << ",nis,nis_threshold,triggered,reacquired,epoch_id,epoch_boundary,pos_error";
  for (int i = 1; i <= 7; ++i) os << ",s_hat" << i;
  os << ",nees\n";

  for (const auto& r : records) {
    os << r.t << ',' << format_double(r.true_x) << ',' << format_double(r.true_y) << ','
       << format_double(r.true_gamma) << ',' << format_double(r.coarse_x) << ','
       << format_double(r.coarse_y) << ',' << format_double(r.coarse_gamma) << ','
       << r.coarse_status << ',' << format_double(r.est_x) << ',' << format_double(r.est_y)
       << ',' << format_double(r.est_gamma);
    for (int l = 0; l < L; ++l) os << ',' << format_double(r.psi_hat(l));
    for (int l = 0; l < L; ++l) os << ',' << format_double(r.psi_hat(L + l));
    for (int l = 0; l < L; ++l) os << ',' << format_double(r.aod_sq_err[static_cast<std::size_t>(l)]);
    for (int l = 0; l < L; ++l) os << ',' << format_double(r.aoa_sq_err[static_cast<std::size_t>(l)]);
    os << ',' << format_double(r.nis) << ',' << format_double(r.nis_threshold) << ','
       << (r.triggered ? 1 : 0) << ',' << (r.reacquired ? 1 : 0) << ',' << r.epoch_id << ','
       << (r.epoch_boundary ? 1 : 0) << ',' << format_double(r.pos_error);
    for (int i = 0; i < 7; ++i) os << ',' << format_double(r.s_hat(i));
    os << ',' << format_double(r.nees) << "\n";
  }
}

std::vector<pipeline::StepRecord> read_step_records_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("step trace: missing header");
  const auto header = split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;

  int L = 0;
  while (col.count("psi_phi" + std::to_string(L + 1))) ++L;
  if (L == 0) throw std::runtime_error("step trace: no path columns");

  auto need = [&](const std::string& name) {
    const auto it = col.find(name);
    if (it == col.end()) throw std::runtime_error("step trace: missing column " + name);
    return it->second;
  };

  std::vector<pipeline::StepRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) throw std::runtime_error("step trace: ragged row");
    pipeline::StepRecord r;
    r.t = static_cast<int>(parse_double(f[need("t")]));
    r.true_x = parse_double(f[need("true_x")]);
    r.true_y = parse_double(f[need("true_y")]);
    r.true_gamma = parse_double(f[need("true_gamma")]);
    r.coarse_x = parse_double(f[need("coarse_x")]);
    r.coarse_y = parse_double(f[need("coarse_y")]);
    r.coarse_gamma = parse_double(f[need("coarse_gamma")]);
    r.coarse_status = static_cast<int>(parse_double(f[need("coarse_status")]));
    r.est_x = parse_double(f[need("est_x")]);
    r.est_y = parse_double(f[need("est_y")]);
    r.est_gamma = parse_double(f[need("est_gamma")]);
    r.psi_hat.resize(2 * L);
    r.aod_sq_err.resize(static_cast<std::size_t>(L));
    r.aoa_sq_err.resize(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l) {
      r.psi_hat(l) = parse_double(f[need("psi_phi" + std::to_string(l + 1))]);
      r.psi_hat(L + l) = parse_double(f[need("psi_theta" + std::to_string(l + 1))]);
      r.aod_sq_err[static_cast<std::size_t>(l)] =
          parse_double(f[need("aod_sqerr" + std::to_string(l + 1))]);
      r.aoa_sq_err[static_cast<std::size_t>(l)] =
          parse_double(f[need("aoa_sqerr" + std::to_string(l + 1))]);
    }
    r.nis = parse_double(f[need("nis")]);
    r.nis_threshold = parse_double(f[need("nis_threshold")]);
    r.triggered = parse_double(f[need("triggered")]) != 0.0;
    r.reacquired = parse_double(f[need("reacquired")]) != 0.0;
    r.epoch_id = static_cast<int>(parse_double(f[need("epoch_id")]));
    r.epoch_boundary = parse_double(f[need("epoch_boundary")]) != 0.0;
    r.pos_error = parse_double(f[need("pos_error")]);
    for (int i = 0; i < 7; ++i)
      r.s_hat(i) = parse_double(f[need("s_hat" + std::to_string(i + 1))]);
    r.nees = parse_double(f[need("nees")]);
    out.push_back(std::move(r));
  }
  return out;
}

void write_channel_trace_csv(std::ostream& os, std::span<const pipeline::StepRecord> records,
                             int num_paths) {
  const int L = num_paths;
  os << "t";
  header_paths(os, "psi_phi", L);
  header_paths(os, "psi_theta", L);
  header_paths(os, "aod_sqerr", L);
  header_paths(os, "aoa_sqerr", L);
  os << ",nis,nis_threshold,triggered,epoch_id\n";
  for (const auto& r : records) {
    os << r.t;
    for (int l = 0; l < 2 * L; ++l) os << ',' << format_double(r.psi_hat(l));
    for (int l = 0; l < L; ++l) os << ',' << format_double(r.aod_sq_err[static_cast<std::size_t>(l)]);
    for (int l = 0; l < L; ++l) os << ',' << format_double(r.aoa_sq_err[static_cast<std::size_t>(l)]);
    os << ',' << format_double(r.nis) << ',' << format_double(r.nis_threshold) << ','
       << (r.triggered ? 1 : 0) << ',' << r.epoch_id << "\n";
  }
}

void write_position_trace_csv(std::ostream& os, std::span<const pipeline::StepRecord> records) {
  os << "t";
  for (int i = 1; i <= 7; ++i) os << ",s_hat" << i;
  os << ",pos_error,gamma_error,nees\n";
  for (const auto& r : records) {
    os << r.t;
    for (int i = 0; i < 7; ++i) os << ',' << format_double(r.s_hat(i));
    os << ',' << format_double(r.pos_error) << ','
       << format_double(wrap_pi(r.est_gamma - r.true_gamma)) << ',' << format_double(r.nees)
       << "\n";
  }
}

}  // namespace nlostrack::io
