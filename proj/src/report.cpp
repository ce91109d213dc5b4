#include "defect/report.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

#include <json.hpp>

namespace defect {

std::string report_to_json(const DistanceReport& rep) {
  if (rep.iterates.empty()) throw SchemaError("report has no iterates");
  nlohmann::json j;
  j["mode"] = rep.mode.name();
  j["delta"] = rep.delta;
  j["tol"] = rep.tol;
  j["eps_delta_star"] = rep.eps_delta_star;
  j["eps_zero_star"] = rep.eps_zero_star;
  j["gamma"] = rep.gamma;
  j["converged"] = rep.converged;
  j["tracked_lambda"] = {rep.tracked_lambda.real(), rep.tracked_lambda.imag()};
  j["coalescing_lambdas"] = {
      {rep.coalescing_lambdas[0].real(), rep.coalescing_lambdas[0].imag()},
      {rep.coalescing_lambdas[1].real(), rep.coalescing_lambdas[1].imag()}};
  nlohmann::json its = nlohmann::json::array();
  for (const auto& it : rep.iterates) {
    its.push_back({{"k", it.k},
                   {"eps", it.epsilon},
                   {"r", it.r},
                   {"coalesced", it.coalesced},
                   {"used_bisection", it.used_bisection}});
  }
  j["iterates"] = std::move(its);
  j["diagnostics"] = {{"rr_prime_ratio", rep.puiseux.ratio},
                      {"c_abs", rep.puiseux.c_abs},
                      {"res_stationarity", rep.stationarity.res_prop},
                      {"re_s_norm", rep.stationarity.re_s_norm},
                      {"b_norm", rep.stationarity.b_norm},
                      {"mu", rep.stationarity.mu}};
  j["wall_time_s"] = rep.wall_time_s;
  return j.dump(2);
}

void write_report(const DistanceReport& rep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(path + ": cannot open for writing");
  out << report_to_json(rep) << '\n';
  if (!out) throw Error(path + ": write failed");
}

void write_iterate_csv(const DistanceReport& rep, std::ostream& out) {
  out << "k,eps,r\n";
  char buf[80];
  for (const auto& it : rep.iterates) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", it.k, it.epsilon, it.r);
    out << buf;
  }
}

void write_iterate_table(const DistanceReport& rep, std::ostream& out) {
  out << "  k   eps_k                  r(eps_k)\n";
  char buf[96];
  for (const auto& it : rep.iterates) {
    if (it.coalesced)
      std::snprintf(buf, sizeof buf, "%3d   %.15f   < tol\n", it.k, it.epsilon);
    else
      std::snprintf(buf, sizeof buf, "%3d   %.15f   %.15f\n", it.k, it.epsilon, it.r);
    out << buf;
  }
}

void write_sigma_min_grid(const CMatrix& A, double re0, double re1, double im0, double im1,
                          int nx, int ny, std::ostream& out,
                          const std::vector<double>& levels) {
  if (nx < 2 || ny < 2) throw Error("sigma_min grid needs at least 2 points per axis");
  if (!levels.empty()) {
    out << "# levels:";
    for (double l : levels) out << ' ' << l;
    out << '\n';
  }
  out << "re,im,sigma_min\n";
  const Eigen::Index n = A.rows();
  char buf[96];
  for (int iy = 0; iy < ny; ++iy) {
    double im = im0 + (im1 - im0) * iy / (ny - 1);
    for (int ix = 0; ix < nx; ++ix) {
      double re = re0 + (re1 - re0) * ix / (nx - 1);
      CMatrix shifted = A - Complex(re, im) * CMatrix::Identity(n, n);
      Eigen::JacobiSVD<CMatrix> svd(shifted);
      double smin = svd.singularValues()(n - 1);
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", re, im, smin);
      out << buf;
    }
  }
}

}  // namespace defect
