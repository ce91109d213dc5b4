#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "defect/gallery.hpp"
#include "defect/init.hpp"
#include "defect/matrix_market.hpp"
#include "defect/outer.hpp"
#include "defect/report.hpp"
#include "defect/util.hpp"

namespace {

using namespace defect;

struct LoadedMatrix {
  CMatrix A;
  Mask mask;
  std::string desc;
};

CMatrix json_dense(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!j.is_array() || j.empty()) throw ParseError(path + ": expected a 2-D array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  CMatrix a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ParseError(path + ": ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& e = row[static_cast<size_t>(c)];
      if (e.is_number())
        a(i, c) = Complex(e.get<double>(), 0.0);
      else if (e.is_array() && e.size() == 2)
        a(i, c) = Complex(e[0].get<double>(), e[1].get<double>());
      else
        throw ParseError(path + ": entries must be numbers or [re, im] pairs");
    }
  }
  return a;
}

LoadedMatrix load_matrix(const std::string& spec) {
  if (spec.rfind("real:", 0) == 0) {
    LoadedMatrix m = load_matrix(spec.substr(5));
    m.A = complexify(m.A.real());
    m.desc = "Re(" + m.desc + ")";
    return m;
  }
  if (spec.rfind("grcar:", 0) == 0) {
    int n = std::stoi(spec.substr(6));
    LoadedMatrix m;
    m.A = complexify(grcar(n));
    m.mask = nonzero_pattern(m.A);
    m.desc = "grcar(" + std::to_string(n) + ")";
    return m;
  }
  if (spec == "example1") {
    LoadedMatrix m;
    m.A = example1();
    m.mask = nonzero_pattern(m.A);
    m.desc = "example1";
    return m;
  }
  if (spec.rfind("json:", 0) == 0 || spec.size() > 5 && spec.substr(spec.size() - 5) == ".json") {
    std::string path = spec.rfind("json:", 0) == 0 ? spec.substr(5) : spec;
    LoadedMatrix m;
    m.A = json_dense(path);
    m.mask = nonzero_pattern(m.A);
    m.desc = path;
    return m;
  }
  MatrixMarketData mm = read_matrix_market(spec);
  return {mm.matrix, mm.mask, spec};
}

Complex parse_complex(const std::string& s) {
  std::istringstream is(s);
  double re = 0, im = 0;
  char comma = 0;
  if (!(is >> re)) throw ParseError("bad complex literal: " + s);
  if (is >> comma) {
    if (comma != ',' || !(is >> im)) throw ParseError("bad complex literal: " + s);
  }
  return {re, im};
}

std::vector<double> parse_csv_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distance of a matrix with distinct eigenvalues to the nearest defective matrix"};

  std::string matrix_spec, mode_name = "complex", target_str, json_out, iterate_csv, trace_path;
  std::string psgrid, psout = "-";
  double delta = 1e-3, tol = 1e-6, eps0 = -1, eps_lo = 0, eps_hi = -1;
  double sigma = 1.4, theta = 0.8;
  int max_outer = 50, max_inner = 20000, jobs = 1;
  std::uint64_t seed = 20240901u;
  bool auto_target = false, use_smw = false, no_solve = false, quiet = false;

  app.add_option("--matrix", matrix_spec,
                 "matrix source: grcar:N | example1 | file.mtx | json:file | real:<source>")
      ->required();
  app.add_option("--mode", mode_name, "complex | real | pattern-complex | pattern-real")
      ->check(CLI::IsMember({"complex", "real", "pattern-complex", "pattern-real"}));
  app.add_option("--delta", delta, "target level for r(eps) (default 1e-3)");
  app.add_option("--tol", tol, "outer stopping tolerance (default 1e-6)");
  app.add_option("--eps0", eps0, "starting perturbation size (default: candidate score)");
  app.add_option("--eps-lo", eps_lo, "lower bracket (default 0)");
  app.add_option("--eps-hi", eps_hi, "upper bracket (default: a-priori bound)");
  app.add_option("--target", target_str, "starting eigenvalue 're,im'");
  app.add_flag("--auto-target", auto_target, "pick the starting eigenvalue from the disk model");
  app.add_option("--sigma", sigma, "inner stepsize ratio (default 1.4)");
  app.add_option("--theta", theta, "weighted-bisection factor (default 0.8)");
  app.add_option("--max-outer", max_outer, "outer iteration cap (default 50)");
  app.add_option("--max-inner-steps", max_inner, "inner step cap per flow (default 20000)");
  app.add_option("--jobs", jobs, "parallel solves over the best candidate pairs");
  app.add_option("--seed", seed, "seed for randomized fallbacks");
  app.add_flag("--smw", use_smw, "apply the group inverse through the SMW identity");
  app.add_option("--json-out", json_out, "write the JSON report here");
  app.add_option("--iterate-table", iterate_csv, "write the k,eps,r CSV here");
  app.add_option("--trace", trace_path, "write the per-step inner-flow CSV here");
  app.add_option("--pseudospectrum-grid", psgrid,
                 "emit sigma_min(A - zI) samples: re0,re1,im0,im1,nx,ny[,levels...]");
  app.add_option("--pseudospectrum-out", psout, "grid CSV destination (default stdout)");
  app.add_flag("--no-solve", no_solve, "skip the solve (grid emission only)");
  app.add_flag("--quiet", quiet, "suppress the iterate table on stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    LoadedMatrix lm = load_matrix(matrix_spec);
    StructureMode mode = StructureMode::parse(mode_name, lm.mask);
    if (mode.real() && !is_real(lm.A))
      throw Error("real mode requires a real matrix (use real:<source> to take the real part)");

    if (!psgrid.empty()) {
      std::vector<double> g = parse_csv_doubles(psgrid);
      if (g.size() < 6) throw ParseError("--pseudospectrum-grid needs re0,re1,im0,im1,nx,ny");
      std::vector<double> levels(g.begin() + 6, g.end());
      std::ofstream fout;
      std::ostream* out = &std::cout;
      if (psout != "-") {
        fout.open(psout);
        if (!fout) throw Error(psout + ": cannot open for writing");
        out = &fout;
      }
      write_sigma_min_grid(lm.A, g[0], g[1], g[2], g[3], static_cast<int>(g[4]),
                           static_cast<int>(g[5]), *out, levels);
    }
    if (no_solve) return 0;

    OuterOptions opts;
    opts.delta = delta;
    opts.tol = tol;
    opts.eps0 = eps0;
    opts.eps_lo = eps_lo;
    opts.eps_hi = eps_hi;
    opts.theta = theta;
    opts.max_outer = max_outer;
    opts.use_smw = use_smw;
    opts.seed = seed;
    opts.flow.sigma = sigma;
    opts.flow.max_steps = max_inner;

    std::ofstream trace_file;
    if (!trace_path.empty() && jobs <= 1) {
      trace_file.open(trace_path);
      if (!trace_file) throw Error(trace_path + ": cannot open for writing");
      opts.flow.trace = &trace_file;
    }

    // starting eigenvalue: explicit target, or the faster-growing member of
    // the best candidate pair
    std::vector<EigenTriple> triples = eig_pairs(lm.A);
    std::vector<CoalescenceCandidate> cands = ranked_candidates(triples, mode);
    std::vector<Complex> targets;
    if (!target_str.empty() && !auto_target) {
      targets.push_back(parse_complex(target_str));
    } else {
      int want = std::max(1, jobs);
      for (const auto& c : cands) {
        if (static_cast<int>(targets.size()) >= want) break;
        targets.push_back(c.p_j >= c.p_k ? c.lambda_j : c.lambda_k);
      }
      logf(LogLevel::Info, "candidate pair: (%g%+gi, %g%+gi), z0 = %g%+gi, score %g",
           cands[0].lambda_j.real(), cands[0].lambda_j.imag(), cands[0].lambda_k.real(),
           cands[0].lambda_k.imag(), cands[0].z0.real(), cands[0].z0.imag(), cands[0].score);
    }

    std::vector<DistanceReport> reports;
    std::vector<std::string> failures;
    if (targets.size() == 1) {
      reports.push_back(solve_distance(lm.A, mode, opts, targets[0]));
    } else {
      std::vector<std::future<DistanceReport>> futs;
      for (Complex t : targets)
        futs.push_back(std::async(std::launch::async, [&, t] {
          return solve_distance(lm.A, mode, opts, t);
        }));
      for (auto& f : futs) {
        try {
          reports.push_back(f.get());
        } catch (const Error& e) {
          failures.emplace_back(e.what());
        }
      }
      if (reports.empty())
        throw Error("all candidate solves failed: " + (failures.empty() ? "" : failures[0]));
      std::sort(reports.begin(), reports.end(), [](const auto& a, const auto& b) {
        return a.eps_delta_star < b.eps_delta_star;
      });
    }
    const DistanceReport& best = reports.front();

    if (!quiet) {
      std::cout << "matrix: " << lm.desc << "  mode: " << mode.name() << "\n";
      write_iterate_table(best, std::cout);
      std::cout.precision(15);
      std::cout << "eps_delta_star = " << best.eps_delta_star
                << "\neps_zero_star  = " << best.eps_zero_star << "\ngamma          = " << best.gamma
                << "\ncoalescing eigenvalues: (" << best.coalescing_lambdas[0].real() << ","
                << best.coalescing_lambdas[0].imag() << ") ("
                << best.coalescing_lambdas[1].real() << "," << best.coalescing_lambdas[1].imag()
                << ")\n";
    }
    if (!json_out.empty()) {
      if (reports.size() == 1) {
        write_report(best, json_out);
      } else {
        nlohmann::json j = nlohmann::json::parse(report_to_json(best));
        nlohmann::json alts = nlohmann::json::array();
        for (size_t i = 1; i < reports.size(); ++i)
          alts.push_back({{"eps_delta_star", reports[i].eps_delta_star},
                          {"tracked_lambda",
                           {reports[i].tracked_lambda.real(), reports[i].tracked_lambda.imag()}},
                          {"converged", reports[i].converged}});
        j["alternates"] = std::move(alts);
        std::ofstream out(json_out);
        if (!out) throw Error(json_out + ": cannot open for writing");
        out << j.dump(2) << '\n';
      }
    }
    if (!iterate_csv.empty()) {
      std::ofstream out(iterate_csv);
      if (!out) throw Error(iterate_csv + ": cannot open for writing");
      write_iterate_csv(best, out);
    }
    return 0;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 2;
  }
}
