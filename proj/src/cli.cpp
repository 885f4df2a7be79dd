#include "tsfn/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string_view>

#include "CLI11.hpp"
#include "json.hpp"

#include "tsfn/dataio.hpp"
#include "tsfn/linalg.hpp"
#include "tsfn/matrix.hpp"
#include "tsfn/objectives.hpp"
#include "tsfn/optimizer.hpp"
#include "tsfn/qsim.hpp"
#include "tsfn/rmt.hpp"
#include "tsfn/rng.hpp"
#include "tsfn/rsvd.hpp"

namespace tsfn::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

CLI::Option* last_wins(CLI::Option* option) {
  option->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  return option;
}

// pulls --config out of args and prepends the JSON object's entries as
// --key=value tokens, so explicitly passed flags parse later and win
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size())
        throw CLI::ValidationError("--config", "missing path");
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                 args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (!path) return args;

  std::ifstream in(*path);
  if (!in) throw std::runtime_error("cannot open config " + *path);
  json cfg = json::parse(in);
  if (!cfg.is_object())
    throw std::runtime_error("config must be a JSON object: " + *path);

  std::vector<std::string> out;
  for (const auto& [key, value] : cfg.items()) {
    if (value.is_boolean()) {
      if (value.get<bool>()) out.push_back("--" + key);
    } else if (value.is_string()) {
      out.push_back("--" + key + "=" + value.get<std::string>());
    } else if (value.is_array()) {
      std::string list;
      for (const auto& item : value) {
        if (!list.empty()) list += ',';
        list += item.is_string() ? item.get<std::string>() : item.dump();
      }
      out.push_back("--" + key + "=" + list);
    } else {
      out.push_back("--" + key + "=" + value.dump());
    }
  }
  out.insert(out.end(), args.begin(), args.end());
  return out;
}

int parse_or_usage(CLI::App& app, const std::vector<std::string>& args,
                   const std::function<int()>& body) {
  try {
    std::vector<std::string> expanded = expand_config(args);
    std::vector<const char*> argv;
    argv.reserve(expanded.size() + 1);
    argv.push_back("tsfn");
    for (const auto& a : expanded) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
    return body();
  } catch (const CLI::CallForHelp&) {
    std::fputs(app.help().c_str(), stdout);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    std::fputs(app.help().c_str(), stderr);
    return kExitUsage;
  }
}

fs::path resolve_out_dir(const std::string& flag_value) {
  std::string dir = flag_value;
  if (dir.empty()) {
    const char* env = std::getenv("TSFN_OUT_DIR");
    if (env != nullptr && *env != '\0') dir = env;
  }
  if (dir.empty()) dir = ".";
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

void write_atomic(const fs::path& target, const std::string& content) {
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string invocation_header(const std::string& sub,
                              const std::vector<std::string>& args,
                              std::uint64_t seed) {
  std::string line = "# tsfn " + sub;
  for (const auto& a : args) {
    line += ' ';
    line += a;
  }
  line += " seed=" + std::to_string(seed) + "\n";
  return line;
}

Vec parse_number_list(const std::string& text, const std::string& flag) {
  Vec out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    std::size_t stop = end == std::string::npos ? text.size() : end;
    std::string_view cell(text.data() + start, stop - start);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
      throw CLI::ValidationError(flag, "expected a comma-separated number list");
    out.push_back(v);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  if (out.empty())
    throw CLI::ValidationError(flag, "expected a comma-separated number list");
  return out;
}

double cosine(const Vec& a, const Vec& b) {
  double na = vec_norm(a), nb = vec_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return vec_dot(a, b) / (na * nb);
}

}  // namespace

int cmd_optimize(const std::vector<std::string>& args) {
  CLI::App app{"run an optimizer and write the trajectory"};
  app.name("tsfn optimize");
  std::string objective, method, x0_text, lambdas_text = "1,-1", out_flag;
  std::size_t n = 2, max_iter = 1000, top_k = 0;
  double eta = 1e-3, grad_tol = 1e-8, threshold = 0.0, step_scale = 1.0;
  std::uint64_t seed = 0;

  last_wins(app.add_option("--objective", objective, "rosenbrock or morse")
                ->required());
  last_wins(app.add_option("--method", method, "gd, newton, sfn, or tsfn")
                ->required());
  last_wins(app.add_option("--n", n, "rosenbrock dimension"));
  auto* opt_threshold = last_wins(
      app.add_option("--threshold", threshold, "tsfn |lambda| cutoff"));
  auto* opt_top_k =
      last_wins(app.add_option("--top-k", top_k, "tsfn retained count"));
  last_wins(app.add_option("--eta", eta, "gd step size"));
  last_wins(app.add_option("--max-iter", max_iter, "iteration cap"));
  last_wins(app.add_option("--grad-tol", grad_tol, "convergence tolerance"));
  last_wins(app.add_option("--x0", x0_text, "comma-separated start point"));
  last_wins(app.add_option("--lambdas", lambdas_text,
                           "morse eigenvalues, comma-separated"));
  last_wins(app.add_option("--step-scale", step_scale, "step multiplier"));
  last_wins(app.add_option("--seed", seed, "recorded run seed"));
  last_wins(app.add_option("--out-dir", out_flag,
                           "output directory, TSFN_OUT_DIR by default"));

  return parse_or_usage(app, args, [&]() -> int {
    std::unique_ptr<obj::Objective> target;
    if (objective == "rosenbrock") {
      target = obj::rosenbrock(n);
    } else if (objective == "morse") {
      Vec lambdas = parse_number_list(lambdas_text, "--lambdas");
      target = obj::morse_quadratic(lambdas,
                                    Matrix::identity(lambdas.size()),
                                    Vec(lambdas.size(), 0.0));
    } else {
      throw CLI::ValidationError("--objective",
                                 "unknown objective " + objective);
    }

    opt::OptimizerConfig cfg;
    cfg.eta = eta;
    cfg.max_iter = max_iter;
    cfg.grad_tol = grad_tol;
    cfg.step_scale = step_scale;
    cfg.seed = seed;
    if (method == "gd") {
      cfg.method = opt::Method::gd;
    } else if (method == "newton") {
      cfg.method = opt::Method::newton;
    } else if (method == "sfn") {
      cfg.method = opt::Method::sfn;
    } else if (method == "tsfn") {
      cfg.method = opt::Method::tsfn;
      if ((opt_threshold->count() > 0) == (opt_top_k->count() > 0))
        throw CLI::ValidationError(
            "--threshold", "tsfn needs exactly one of --threshold, --top-k");
      if (opt_threshold->count() > 0)
        cfg.threshold = threshold;
      else
        cfg.top_k = top_k;
    } else {
      throw CLI::ValidationError("--method", "unknown method " + method);
    }

    Vec x0(target->dim(), 0.0);
    if (!x0_text.empty()) {
      x0 = parse_number_list(x0_text, "--x0");
      if (x0.size() != target->dim())
        throw CLI::ValidationError("--x0", "dimension mismatch");
    }

    auto traj = opt::run(*target, cfg, x0);

    std::string csv = invocation_header("optimize", args, seed);
    csv += "iter,value,grad_norm,step_norm,k_used,kappa_eff\n";
    for (std::size_t i = 0; i < traj.iterates.size(); ++i) {
      csv += std::to_string(i) + ',' + num(traj.values[i]) + ',' +
             num(traj.grad_norms[i]) + ',';
      if (i == 0) {
        csv += "0,0,0\n";
      } else {
        csv += num(traj.step_norms[i - 1]) + ',' +
               std::to_string(traj.k_used[i - 1]) + ',' +
               num(traj.kappa_eff[i - 1]) + '\n';
      }
    }
    write_atomic(resolve_out_dir(out_flag) / "trajectory.csv", csv);

    const char* status = traj.status == opt::RunStatus::converged
                             ? "converged"
                             : traj.status == opt::RunStatus::max_iterations
                                   ? "max_iterations"
                                   : "diverged";
    std::printf("status=%s iterations=%zu final_value=%s final_grad_norm=%s\n",
                status, traj.steps(), num(traj.values.back()).c_str(),
                num(traj.grad_norms.back()).c_str());
    std::string coords;
    for (double x : traj.iterates.back()) {
      if (!coords.empty()) coords += ',';
      coords += num(x);
    }
    std::printf("x_final=%s\n", coords.c_str());

    if (traj.status == opt::RunStatus::converged) return kExitOk;
    if (traj.status == opt::RunStatus::max_iterations) return kExitMaxIter;
    return kExitDiverged;
  });
}

int cmd_mp(const std::vector<std::string>& args) {
  CLI::App app{"sample Wishart spectra against the Marchenko-Pastur law"};
  app.name("tsfn mp");
  std::size_t m = 0, n = 0, samples = 1000, bins = 50;
  double sigma2 = 1.0;
  std::uint64_t seed = 1;
  std::string out_flag;

  last_wins(app.add_option("--m", m, "matrix rows")->required());
  last_wins(app.add_option("--n", n, "sample count per matrix")->required());
  last_wins(app.add_option("--samples", samples, "number of matrix draws"));
  last_wins(app.add_option("--bins", bins, "histogram bin count"));
  last_wins(app.add_option("--sigma2", sigma2, "entry variance"));
  last_wins(app.add_option("--seed", seed, "base seed"));
  last_wins(app.add_option("--out-dir", out_flag,
                           "output directory, TSFN_OUT_DIR by default"));

  return parse_or_usage(app, args, [&]() -> int {
    if (m == 0 || n == 0)
      throw CLI::ValidationError("--m", "dimensions must be >= 1");
    if (bins == 0) throw CLI::ValidationError("--bins", "need at least 1 bin");

    rmt::MPModel model(static_cast<double>(m) / static_cast<double>(n),
                       sigma2);
    std::vector<double> pool;
    pool.reserve(m * samples);
    for (std::size_t s = 0; s < samples; ++s) {
      auto w = rmt::sample_wishart(m, n, std::sqrt(sigma2), seed + s);
      auto eig = linalg::sym_eig(w);
      pool.insert(pool.end(), eig.eigenvalues.begin(), eig.eigenvalues.end());
    }

    std::string header = invocation_header("mp", args, seed);

    std::string density = header + "lambda,density\n";
    const std::size_t grid = 512;
    for (std::size_t i = 0; i <= grid; ++i) {
      double lam = model.c_minus + (model.c_plus - model.c_minus) *
                                       static_cast<double>(i) /
                                       static_cast<double>(grid);
      density += num(lam) + ',' + num(rmt::mp_density(lam, model)) + '\n';
    }
    fs::path dir = resolve_out_dir(out_flag);
    write_atomic(dir / "mp_density.csv", density);

    std::string hist = header + "bin_center,count,density\n";
    if (!pool.empty()) {
      auto [lo_it, hi_it] = std::minmax_element(pool.begin(), pool.end());
      double lo = *lo_it, hi = *hi_it;
      double width = (hi - lo) / static_cast<double>(bins);
      if (width <= 0.0) width = 1.0;
      std::vector<std::size_t> counts(bins, 0);
      for (double v : pool) {
        auto b = static_cast<std::size_t>((v - lo) / width);
        if (b >= bins) b = bins - 1;
        ++counts[b];
      }
      double total = static_cast<double>(pool.size());
      for (std::size_t b = 0; b < bins; ++b) {
        double center = lo + (static_cast<double>(b) + 0.5) * width;
        hist += num(center) + ',' + std::to_string(counts[b]) + ',' +
                num(static_cast<double>(counts[b]) / (total * width)) + '\n';
      }
    }
    write_atomic(dir / "mp_histogram.csv", hist);

    std::printf("edges=%s,%s\n", num(model.c_minus).c_str(),
                num(model.c_plus).c_str());
    if (!pool.empty())
      std::printf("ks=%s\n", num(rmt::ks_distance(pool, model)).c_str());
    return kExitOk;
  });
}

int cmd_qverify(const std::vector<std::string>& args) {
  CLI::App app{"compare the hybrid pipeline against the classical step"};
  app.name("tsfn qverify");
  std::size_t instances = 20, n = 16, shots = 0, threshold_rank = 4;
  std::vector<std::size_t> pe_bits = {12};
  std::string mode_text = "oracle", out_flag;
  std::uint64_t seed = 1;

  last_wins(app.add_option("--instances", instances, "instance count"));
  last_wins(app.add_option("--n", n, "matrix dimension"));
  last_wins(app.add_option("--pe-bits", pe_bits,
                           "phase register widths, comma-separated")
                ->delimiter(','));
  last_wins(app.add_option("--shots", shots, "readout shots, 0 = exact"));
  last_wins(app.add_option("--threshold-rank", threshold_rank,
                           "truncation keeps |lambda| >= the k-th largest"));
  last_wins(
      app.add_option("--mode", mode_text, "oracle or circuit")
          ->check(CLI::IsMember({"oracle", "circuit"})));
  last_wins(app.add_option("--seed", seed, "base seed"));
  last_wins(app.add_option("--out-dir", out_flag,
                           "output directory, TSFN_OUT_DIR by default"));

  return parse_or_usage(app, args, [&]() -> int {
    qsim::Mode mode =
        mode_text == "circuit" ? qsim::Mode::circuit : qsim::Mode::oracle;
    if (mode == qsim::Mode::oracle && n > 2048)
      throw CLI::ValidationError("--n", "oracle mode caps n at 2048");
    if (mode == qsim::Mode::circuit && n > 16)
      throw CLI::ValidationError("--n", "circuit mode caps n at 16");
    if (n < 2) throw CLI::ValidationError("--n", "need n >= 2");
    if (threshold_rank == 0 || threshold_rank > n)
      throw CLI::ValidationError("--threshold-rank", "must lie in [1, n]");
    if (instances == 0)
      throw CLI::ValidationError("--instances", "need at least 1 instance");
    if (pe_bits.empty())
      throw CLI::ValidationError("--pe-bits", "need at least one width");

    std::string csv = invocation_header("qverify", args, seed);
    csv += "stage,k,p_success,pe_bits,fidelity_to_classical\n";
    double min_cosine = 1.0;
    std::size_t signs_matched = 0, signs_total = 0;
    double mode_gap = 0.0;

    for (std::size_t i = 0; i < instances; ++i) {
      std::uint64_t inst_seed = seed + i;
      Rng rng(inst_seed);
      SymmetricMatrix h =
          SymmetricMatrix::from_symmetrized(Matrix::gaussian(n, n, rng));
      Vec grad(n);
      for (auto& g : grad) g = rng.next_gaussian();

      auto eig = linalg::sym_eig(h);
      double threshold = std::fabs(eig.eigenvalues[threshold_rank - 1]);

      qsim::PipelineConfig pc;
      pc.threshold = threshold;
      pc.shots = shots;
      pc.mode = mode;

      auto classical =
          linalg::abs_pinv_truncated(h, threshold).first.apply(grad);

      for (std::size_t pe : pe_bits) {
        pc.pe_bits = pe;
        auto res = qsim::hybrid_step(h, grad, pc, inst_seed);
        double cos = cosine(res.direction, classical);
        min_cosine = std::min(min_cosine, cos);
        csv += std::to_string(i) + ',' +
               std::to_string(res.diagnostics.k) + ',' +
               num(res.diagnostics.p_success) + ',' + std::to_string(pe) +
               ',' + num(cos) + '\n';

        if (shots > 0) {
          qsim::PipelineConfig exact_pc = pc;
          exact_pc.shots = 0;
          auto exact = qsim::hybrid_step(h, grad, exact_pc, inst_seed);
          for (std::size_t j = 0; j < n; ++j) {
            if (std::fabs(exact.direction[j]) < 1e-12) continue;
            if (!res.diagnostics.sign_uncertain.empty() &&
                res.diagnostics.sign_uncertain[j] != 0)
              continue;
            ++signs_total;
            if ((res.direction[j] > 0.0) == (exact.direction[j] > 0.0))
              ++signs_matched;
          }
        }
        if (mode == qsim::Mode::circuit) {
          qsim::PipelineConfig oracle_pc = pc;
          oracle_pc.mode = qsim::Mode::oracle;
          auto oracle = qsim::hybrid_step(h, grad, oracle_pc, inst_seed);
          for (std::size_t j = 0; j < n; ++j)
            mode_gap = std::max(
                mode_gap, std::fabs(res.direction[j] - oracle.direction[j]));
        }
      }
    }
    write_atomic(resolve_out_dir(out_flag) / "qverify.csv", csv);

    std::printf("min_cosine=%s\n", num(min_cosine).c_str());
    if (shots > 0)
      std::printf("sign_agreement=%zu/%zu\n", signs_matched, signs_total);
    if (mode == qsim::Mode::circuit)
      std::printf("mode_agreement=%s\n", num(mode_gap).c_str());
    return kExitOk;
  });
}

int cmd_rsvd(const std::vector<std::string>& args) {
  CLI::App app{"check sampling-based svd error bounds on a seeded matrix"};
  app.name("tsfn rsvd");
  std::size_t m = 0, n = 0, k = 5, trials = 50, c_flag = 0;
  double eps = 0.5, beta = 1.0, delta = 0.1;
  std::uint64_t seed = 2;
  std::string out_flag;

  last_wins(app.add_option("--m", m, "matrix rows")->required());
  last_wins(app.add_option("--n", n, "matrix columns")->required());
  last_wins(app.add_option("--k", k, "target rank"));
  last_wins(app.add_option("--eps", eps, "requested error parameter"));
  last_wins(app.add_option("--trials", trials, "trial count"));
  last_wins(app.add_option("--beta", beta, "sampling floor coefficient"));
  last_wins(app.add_option("--delta", delta, "failure probability"));
  last_wins(app.add_option("--c", c_flag,
                           "sampled columns, 0 derives from eps and clamps"));
  last_wins(app.add_option("--seed", seed, "data and trial base seed"));
  last_wins(app.add_option("--out-dir", out_flag,
                           "output directory, TSFN_OUT_DIR by default"));

  return parse_or_usage(app, args, [&]() -> int {
    if (eps <= 0.0) throw CLI::ValidationError("--eps", "must be > 0");
    double eta = rsvd::eta_coefficient(beta, delta);
    std::size_t c = c_flag;
    if (c == 0) {
      double granted =
          std::ceil(4.0 * static_cast<double>(k) * eta * eta / (beta * eps * eps));
      c = static_cast<std::size_t>(granted);
      c = std::min(c, n);
      c = std::max(c, k);
    }

    Rng rng(seed);
    Matrix a = Matrix::gaussian(m, n, rng);
    rsvd::RsvdConfig cfg;
    cfg.c = c;
    cfg.k = k;
    cfg.beta = beta;
    cfg.delta = delta;
    cfg.seed = seed + 1000;
    auto report = rsvd::verify_bounds(a, cfg, trials);

    std::string csv = invocation_header("rsvd", args, seed);
    csv += "bound,epsilon,rhs,mean_err_sq,std_error,pass_rate,mean_within_2se\n";
    auto row = [&](const char* name, const rsvd::BoundCheck& b) {
      csv += std::string(name) + ',' + num(b.epsilon) + ',' + num(b.rhs) +
             ',' + num(b.mean_err_sq) + ',' + num(b.std_error) + ',' +
             num(b.pass_rate) + ',' + (b.mean_within_2se ? "1" : "0") + '\n';
      std::printf("%-28s eps=%-10s pass_rate=%-8s mean_within_2se=%d\n", name,
                  num(b.epsilon).c_str(), num(b.pass_rate).c_str(),
                  int(b.mean_within_2se));
    };
    std::printf("eta=%s c=%zu trials=%zu\n", num(report.eta).c_str(), c,
                trials);
    row("frobenius_expectation", report.fro_expectation);
    row("frobenius_high_probability", report.fro_high_probability);
    row("spectral_expectation", report.spec_expectation);
    row("spectral_high_probability", report.spec_high_probability);
    write_atomic(resolve_out_dir(out_flag) / "rsvd_bounds.csv", csv);
    return kExitOk;
  });
}

int cmd_pca(const std::vector<std::string>& args) {
  CLI::App app{"variance-explained analysis with an optional outlier report"};
  app.name("tsfn pca");
  std::string input, synthetic, widths_text, out_flag;
  bool header = false;
  long long target_col = -1;
  std::uint64_t seed = 1;

  auto* opt_input =
      last_wins(app.add_option("--input", input, "CSV file to analyze"));
  auto* opt_synth = last_wins(app.add_option(
      "--synthetic", synthetic,
      "generate data, e.g. rank=3,spike=25,dim=50,n=500"));
  app.add_flag("--header", header, "input file has a header row");
  last_wins(app.add_option("--target-col", target_col,
                           "0-based target column in the input file"));
  last_wins(app.add_option("--widths", widths_text,
                           "full MLP layer chain for the outlier report"));
  last_wins(app.add_option("--seed", seed, "generation and training seed"));
  last_wins(app.add_option("--out-dir", out_flag,
                           "output directory, TSFN_OUT_DIR by default"));
  opt_input->excludes(opt_synth);

  return parse_or_usage(app, args, [&]() -> int {
    dataio::Dataset ds;
    if (!synthetic.empty()) {
      std::size_t rank = 0, dim = 10, n_samples = 100;
      double spike = 1.0;
      std::size_t start = 0;
      while (start <= synthetic.size()) {
        std::size_t end = synthetic.find(',', start);
        std::size_t stop = end == std::string::npos ? synthetic.size() : end;
        std::string item = synthetic.substr(start, stop - start);
        std::size_t eq = item.find('=');
        if (eq == std::string::npos)
          throw CLI::ValidationError("--synthetic",
                                     "expected key=value entries");
        std::string key = item.substr(0, eq), value = item.substr(eq + 1);
        try {
          if (key == "rank")
            rank = std::stoul(value);
          else if (key == "spike")
            spike = std::stod(value);
          else if (key == "dim")
            dim = std::stoul(value);
          else if (key == "n")
            n_samples = std::stoul(value);
          else
            throw CLI::ValidationError("--synthetic", "unknown key " + key);
        } catch (const std::logic_error&) {
          throw CLI::ValidationError("--synthetic", "bad value for " + key);
        }
        if (end == std::string::npos) break;
        start = end + 1;
      }
      ds = dataio::from_objective_data(
          obj::synthetic_correlated_data(n_samples, dim, rank, spike, seed));
    } else if (!input.empty()) {
      std::optional<std::size_t> target;
      if (target_col >= 0) target = static_cast<std::size_t>(target_col);
      ds = dataio::load_csv(input, header, target);
    } else {
      throw CLI::ValidationError("--input",
                                 "need either --input or --synthetic");
    }

    auto ve = dataio::variance_explained(ds);
    if (ve.degenerate)
      std::fprintf(stderr, "warning: zero-variance data, n90 undefined\n");

    std::string curve = invocation_header("pca", args, seed);
    curve += "index,eigenvalue,cumulative\n";
    for (std::size_t i = 0; i < ve.eigenvalues.size(); ++i)
      curve += std::to_string(i) + ',' + num(ve.eigenvalues[i]) + ',' +
               num(ve.cumulative[i]) + '\n';
    fs::path dir = resolve_out_dir(out_flag);
    write_atomic(dir / "pca_curve.csv", curve);
    std::printf("n90=%zu\n", ve.n90);

    if (!widths_text.empty()) {
      Vec raw = parse_number_list(widths_text, "--widths");
      std::vector<std::size_t> widths;
      for (double w : raw) {
        if (w < 1.0 || w != std::floor(w))
          throw CLI::ValidationError("--widths", "widths must be integers >= 1");
        widths.push_back(static_cast<std::size_t>(w));
      }
      auto report = dataio::outlier_vs_pca_report(ds, widths, seed);
      std::string widths_joined;
      for (std::size_t w : widths) {
        if (!widths_joined.empty()) widths_joined += 'x';
        widths_joined += std::to_string(w);
      }
      std::string rep = invocation_header("pca", args, seed);
      rep += "n90,n_outliers,widths,seed\n";
      rep += std::to_string(report.n90) + ',' +
             std::to_string(report.n_outliers) + ',' + widths_joined + ',' +
             std::to_string(seed) + '\n';
      write_atomic(dir / "pca_report.csv", rep);
      std::printf("n_outliers=%zu difference=%lld\n", report.n_outliers,
                  report.difference);
    }
    return kExitOk;
  });
}

int dispatch(int argc, const char* const* argv) {
  static const char* kUsage =
      "usage: tsfn <command> [flags]\n"
      "commands:\n"
      "  optimize  run an optimizer and write the trajectory\n"
      "  mp        sample Wishart spectra against the Marchenko-Pastur law\n"
      "  qverify   compare the hybrid pipeline against the classical step\n"
      "  rsvd      check sampling-based svd error bounds\n"
      "  pca       variance-explained analysis and outlier report\n"
      "run tsfn <command> --help for the command's flags\n";

  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty()) {
    std::fputs(kUsage, stderr);
    return kExitUsage;
  }
  std::string sub = args.front();
  std::vector<std::string> rest(args.begin() + 1, args.end());
  if (sub == "--help" || sub == "-h" || sub == "help") {
    std::fputs(kUsage, stdout);
    return kExitOk;
  }
  try {
    if (sub == "optimize") return cmd_optimize(rest);
    if (sub == "mp") return cmd_mp(rest);
    if (sub == "qverify") return cmd_qverify(rest);
    if (sub == "rsvd") return cmd_rsvd(rest);
    if (sub == "pca") return cmd_pca(rest);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  std::fprintf(stderr, "unknown command '%s'\n%s", sub.c_str(), kUsage);
  return kExitUsage;
}

}  // namespace tsfn::cli
