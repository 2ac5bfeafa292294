// Command-line front end: training, attacks, experiment tables and sweeps.
// Every output file is a pure function of the flags, so repeated runs are
// byte-identical; timings go to stderr only.

#include "cvxnn/attacks.hpp"
#include "cvxnn/datasets.hpp"
#include "cvxnn/experiments.hpp"
#include "cvxnn/serialization.hpp"
#include "cvxnn/trainer.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace cvxnn;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string out_dir;
  fs::path resolve(const std::string& name) const {
    std::string dir = out_dir;
    if (dir.empty()) {
      const char* env = std::getenv("CVXNN_OUTPUT_DIR");
      dir = env ? env : ".";
    }
    fs::create_directories(dir);
    return fs::path(dir) / name;
  }
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  std::cerr << "wrote " << path.string() << '\n';
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct SpecFlags {
  ExperimentSpec spec;
  std::string method = "alg2";
  std::string norm = "inf";
  std::string solver = "ipm";

  void add(CLI::App* app) {
    app->add_option("--dataset", spec.dataset, "toy1d, toy2d, staircase, random2d or csv")->capture_default_str();
    app->add_option("--csv", spec.csv_path, "CSV path when --dataset csv");
    app->add_option("--label", spec.label_col, "label column of the CSV")->capture_default_str();
    app->add_option("--train-frac", spec.train_frac, "training fraction of the CSV rows")->capture_default_str();
    app->add_flag("!--no-standardize", spec.standardize, "skip z-scoring");
    app->add_option("--bias", spec.bias, "-1 auto (generated data only), 0 off, 1 on")->capture_default_str();
    app->add_flag("--freeze-bias", spec.freeze_bias, "keep the bias column out of the perturbation");
    app->add_option("--method", method, "alg1, alg2, gd_std, gd_fgsm or gd_pgd")->capture_default_str();
    app->add_option("--loss", spec.loss, "hinge or squared (default: by task)");
    app->add_option("--beta", spec.beta, "regularization strength")->capture_default_str();
    app->add_option("--eps", spec.eps, "perturbation radius")->capture_default_str();
    app->add_option("--norm", norm, "perturbation ball: 1, 2 or inf")->capture_default_str();
    app->add_option("--ps", spec.P_s, "distinct activation patterns")->capture_default_str();
    app->add_option("--pa", spec.P_a, "directions for adversarial sampling (0: ceil(2 P_s / S))")->capture_default_str();
    app->add_option("--S", spec.S, "perturbation samples per direction")->capture_default_str();
    app->add_option("--gd-width", spec.gd_width, "GD hidden width (0: 2 P_s)")->capture_default_str();
    app->add_option("--gd-epochs", spec.gd.epochs, "GD epochs")->capture_default_str();
    app->add_option("--gd-lr", spec.gd.lr, "GD step size")->capture_default_str();
    app->add_option("--gd-batch", spec.gd.batch, "GD batch size (0: full)")->capture_default_str();
    app->add_option("--attack-steps", spec.attack_steps, "PGD iterations")->capture_default_str();
    app->add_option("--repeats", spec.repeats, "independent runs")->capture_default_str();
    app->add_option("--seed", spec.seed, "master seed")->capture_default_str();
    app->add_option("--workers", spec.workers, "concurrent runs")->capture_default_str();
    app->add_option("--solver", solver, "ipm or admm")->capture_default_str();
    app->add_option("--max-iter", spec.solver.max_iter, "solver iteration cap")->capture_default_str();
    app->add_flag("--verbose", spec.solver.verbose, "print solver progress to stderr");
  }

  ExperimentSpec resolve() {
    spec.method = method_from_string(method);
    spec.norm = norm_from_string(norm);
    if (solver == "admm") {
      spec.solver.algorithm = SolverAlgorithm::operator_splitting;
    } else if (solver != "ipm") {
      throw InvalidArgument("unknown solver: " + solver);
    }
    spec.validate();
    return spec;
  }
};

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convex and adversarial training of two-layer ReLU networks"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--out-dir", common.out_dir, "output directory (default: $CVXNN_OUTPUT_DIR or .)");

  // train
  auto* train = app.add_subcommand("train", "train one model (alg1 standard, alg2 robust) and write model.json");
  SpecFlags train_flags;
  train_flags.add(train);
  bool emit_program = false;
  train->add_flag("--emit-program", emit_program, "also write the conic program as program.json");

  // attack
  auto* attack = app.add_subcommand("attack", "attack a dataset against a saved model");
  SpecFlags attack_flags;
  attack_flags.add(attack);
  std::string model_path;
  std::string attack_kind = "pgd";
  attack->add_option("--model", model_path, "model JSON from train")->required();
  attack->add_option("--kind", attack_kind, "fgsm or pgd")->capture_default_str();

  // table
  auto* table = app.add_subcommand("table", "repeated runs of one method with clean/FGSM/PGD metrics");
  SpecFlags table_flags;
  table_flags.add(table);

  // ps-sweep
  auto* ps = app.add_subcommand("ps-sweep", "standard-training objective versus pattern count");
  Index ps_n = 40, ps_d = 2;
  std::string ps_list = "4,8,16,32,64,128,256,512,1024,2048";
  int ps_repeats = 15, ps_workers = 1;
  std::uint64_t ps_seed = 0;
  double ps_beta = 1e-4;
  ps->add_option("--n", ps_n, "samples")->capture_default_str();
  ps->add_option("--d", ps_d, "dimension")->capture_default_str();
  ps->add_option("--ps-list", ps_list, "ascending pattern counts")->capture_default_str();
  ps->add_option("--repeats", ps_repeats, "sampling seeds per count")->capture_default_str();
  ps->add_option("--seed", ps_seed, "master seed")->capture_default_str();
  ps->add_option("--beta", ps_beta, "regularization strength")->capture_default_str();
  ps->add_option("--workers", ps_workers, "concurrent solves")->capture_default_str();

  // eps-sweep
  auto* eps = app.add_subcommand("eps-sweep", "staircase regression: robust versus standard test MSE");
  EpsSweepSpec eps_spec;
  std::string eps_list = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
  eps->add_option("--eps-list", eps_list, "radii")->capture_default_str();
  eps->add_option("--trials", eps_spec.trials, "trials per radius")->capture_default_str();
  eps->add_option("--standard-trials", eps_spec.standard_trials, "standard-training trials")->capture_default_str();
  eps->add_option("--beta", eps_spec.beta, "regularization strength")->capture_default_str();
  eps->add_option("--ps", eps_spec.P_s, "distinct activation patterns")->capture_default_str();
  eps->add_option("--S", eps_spec.S, "perturbation samples per direction")->capture_default_str();
  eps->add_flag("--freeze-bias", eps_spec.freeze_bias, "keep the bias column out of the perturbation");
  eps->add_option("--seed", eps_spec.seed, "master seed")->capture_default_str();
  eps->add_option("--workers", eps_spec.workers, "concurrent solves")->capture_default_str();

  // grid
  auto* grid = app.add_subcommand("grid", "prediction grid of a saved model over a box");
  std::string grid_model, grid_lo = "-2,-2", grid_hi = "2,2";
  Index grid_res = 101;
  bool grid_bias = true;
  bool grid_regression = false;
  grid->add_option("--model", grid_model, "model JSON from train")->required();
  grid->add_option("--lo", grid_lo, "lower corner")->capture_default_str();
  grid->add_option("--hi", grid_hi, "upper corner")->capture_default_str();
  grid->add_option("--resolution", grid_res, "points per axis")->capture_default_str();
  grid->add_flag("!--no-bias", grid_bias, "the model was trained without a bias column");
  grid->add_flag("--regression", grid_regression, "emit raw outputs instead of labels");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "clean, split and standardize a CSV; or write the masses stand-in");
  CsvOptions csv;
  csv.label_col = "Severity";
  std::string ingest_path, standin_path;
  bool no_standardize = false;
  std::string solve_program;
  ingest->add_option("--csv", ingest_path, "input CSV");
  ingest->add_option("--label", csv.label_col, "label column")->capture_default_str();
  ingest->add_option("--train-frac", csv.train_frac, "training fraction")->capture_default_str();
  ingest->add_option("--seed", csv.seed, "shuffle seed")->capture_default_str();
  ingest->add_flag("--no-standardize", no_standardize, "skip z-scoring");
  ingest->add_option("--write-standin", standin_path, "write the synthetic masses table to this path");
  ingest->add_option("--solve", solve_program, "solve a program JSON and write solution.json");

  CLI11_PARSE(app, argc, argv);
  const auto start = std::chrono::steady_clock::now();
  try {
    if (*train) {
      ExperimentSpec spec = train_flags.resolve();
      const DataSplit split = load_experiment_data(spec);
      const LossKind loss = spec.loss.empty()
                                ? (split.train.task == TaskKind::binary ? LossKind::hinge() : LossKind::squared())
                                : loss_from_string(spec.loss);
      const SamplerConfig sampler = sampler_config(spec, spec.seed);
      const RobustSpec robust = robust_spec(split.train, spec.eps, spec.norm, spec.freeze_bias);
      TrainedModel model;
      if (spec.method == Method::alg1) {
        model = train_standard(split.train, spec.beta, sampler, loss, spec.solver);
      } else if (spec.method == Method::alg2) {
        model = train_adversarial(split.train, spec.beta, robust, sampler, loss, spec.solver);
      } else {
        throw InvalidArgument("train supports alg1 and alg2; use table for GD baselines");
      }
      write_file(common.resolve("model.json"), model_to_json(model));
      if (emit_program) {
        const PatternSet patterns = spec.method == Method::alg1 ? sample_standard(split.train.X, sampler)
                                                                : sample_adversarial(split.train.X, sampler);
        const ConicProgram program =
            spec.method == Method::alg1 ? build_standard(split.train, patterns.patterns, spec.beta, loss)
                                        : build_program(split.train, patterns.patterns, spec.beta, loss, robust);
        write_file(common.resolve("program.json"), program_to_json(program));
        write_file(common.resolve("patterns.json"), pattern_set_to_json(patterns));
      }
      std::cout << "objective " << model.convex.objective << " status " << to_string(model.meta.status)
                << " width " << model.meta.m_star << '\n';
    } else if (*attack) {
      ExperimentSpec spec = attack_flags.resolve();
      const DataSplit split = load_experiment_data(spec);
      const Dataset& data = split.test ? *split.test : split.train;
      const TrainedModel model = model_from_json(read_file(model_path));
      AttackConfig cfg;
      cfg.eps = spec.eps;
      cfg.steps = spec.attack_steps;
      if (spec.freeze_bias && data.bias_appended) {
        cfg.perturbed.assign(static_cast<std::size_t>(data.d()), true);
        cfg.perturbed.back() = false;
      }
      const AttackKind kind = attack_kind == "fgsm" ? AttackKind::fgsm : AttackKind::pgd;
      if (attack_kind != "fgsm" && attack_kind != "pgd") throw InvalidArgument("unknown attack: " + attack_kind);
      const Matrix attacked = attack_dataset(model.weights, data, cfg, model.meta.loss, kind);
      std::ostringstream out;
      write_attacked_csv(out, attacked, data.y);
      write_file(common.resolve("attacked_" + attack_kind + ".csv"), out.str());
    } else if (*table) {
      const TableReport report = run_table(table_flags.resolve());
      std::ostringstream csv_out;
      write_table_csv(csv_out, report);
      write_file(common.resolve("table.csv"), csv_out.str());
      write_file(common.resolve("table.json"), table_to_json(report));
      std::cout << csv_out.str();
    } else if (*ps) {
      std::vector<Index> list;
      for (double v : parse_list(ps_list)) list.push_back(static_cast<Index>(v));
      const Dataset data = random_classification(ps_n, ps_d, ps_seed);
      const auto curve = run_ps_sweep(data, ps_beta, list, ps_repeats, ps_seed, {}, ps_workers);
      std::ostringstream out;
      write_ps_csv(out, curve);
      write_file(common.resolve("ps_sweep.csv"), out.str());
      std::cout << out.str();
    } else if (*eps) {
      eps_spec.eps_list = parse_list(eps_list);
      const EpsCurve curve = run_eps_sweep_regression(eps_spec);
      std::ostringstream out;
      write_eps_csv(out, curve);
      write_file(common.resolve("eps_sweep.csv"), out.str());
      std::cout << out.str();
    } else if (*grid) {
      const TrainedModel model = model_from_json(read_file(grid_model));
      const auto lo = parse_list(grid_lo);
      const auto hi = parse_list(grid_hi);
      std::ostringstream out;
      export_decision_grid(out, model.weights, lo, hi, grid_res, grid_bias, !grid_regression);
      write_file(common.resolve("grid.csv"), out.str());
    } else if (*ingest) {
      if (!standin_path.empty()) {
        std::ofstream out(standin_path, std::ios::binary);
        write_masses_standin(out);
        std::cerr << "wrote " << standin_path << '\n';
      }
      if (!ingest_path.empty()) {
        csv.standardize = !no_standardize;
        const DataSplit split = ingest_csv(ingest_path, csv);
        std::ostringstream tr;
        write_dataset_csv(tr, split.train);
        write_file(common.resolve("train.csv"), tr.str());
        if (split.test) {
          std::ostringstream te;
          write_dataset_csv(te, *split.test);
          write_file(common.resolve("test.csv"), te.str());
        }
        std::cout << "train " << split.train.n() << " x " << split.train.d() << ", test "
                  << (split.test ? split.test->n() : 0) << '\n';
      }
      if (!solve_program.empty()) {
        const SolveResult r = solve(program_from_json_string(read_file(solve_program)));
        write_file(common.resolve("solution.json"), solve_result_to_json(r));
        std::cout << "status " << to_string(r.status) << " objective " << r.objective << '\n';
      }
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cerr << "elapsed " << secs << " s\n";
  return 0;
}
