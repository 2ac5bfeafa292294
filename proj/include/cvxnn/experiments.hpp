#pragma once

#include "cvxnn/baseline_gd.hpp"
#include "cvxnn/datasets.hpp"
#include "cvxnn/patterns.hpp"
#include "cvxnn/program_builder.hpp"
#include "cvxnn/solver.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cvxnn {

enum class Method { alg1, alg2, gd_std, gd_fgsm, gd_pgd };

std::string to_string(Method method);
Method method_from_string(const std::string& name);

struct ExperimentSpec {
  /// toy1d, toy2d, staircase, random2d or csv
  std::string dataset = "toy2d";
  std::string csv_path;
  std::string label_col = "Severity";
  double train_frac = 0.7;
  bool standardize = true;
  /// -1: append a bias column for generated datasets only; 0: never; 1: always.
  int bias = -1;
  bool freeze_bias = false;

  Method method = Method::alg2;
  /// Empty picks hinge for binary data and squared for regression.
  std::string loss;
  double beta = 1e-4;
  double eps = 0.08;
  PerturbationNorm norm = PerturbationNorm::linf;

  Index P_s = 360;
  /// 0 means ceil(2 P_s / S).
  Index P_a = 0;
  Index S = 4;
  GdConfig gd{};
  /// GD width; 0 means 2 P_s.
  Index gd_width = 0;
  int attack_steps = 40;

  int repeats = 1;
  std::uint64_t seed = 0;
  int workers = 1;
  SolveSettings solver{};

  void validate() const;
};

/// Seed for repeat r: a fixed hash of (seed, r).
std::uint64_t run_seed(std::uint64_t seed, std::uint64_t r);

/// Sampler settings implied by the spec for a given run seed.
SamplerConfig sampler_config(const ExperimentSpec& spec, std::uint64_t seed);

/// Training and evaluation data for a spec; the split depends on spec.seed only.
DataSplit load_experiment_data(const ExperimentSpec& spec);

/// n points with standard-normal features and random +/-1 labels.
Dataset random_classification(Index n, Index d, std::uint64_t seed);

struct RunRecord {
  std::uint64_t seed = 0;
  bool ok = true;
  bool degraded = false;
  std::string error;
  double objective = 0.0;
  double clean = 0.0;
  double fgsm = 0.0;
  double pgd = 0.0;
  Index width = 0;
};

struct ColumnStats {
  double mean = 0.0;
  double std = 0.0;
};

struct TableReport {
  ExperimentSpec spec;
  bool classification = true;
  std::vector<RunRecord> runs;
  /// Over runs that finished without error or degradation.
  ColumnStats objective, clean, fgsm, pgd;
  Index counted = 0;
};

TableReport run_table(const ExperimentSpec& spec);
void write_table_csv(std::ostream& out, const TableReport& report);
std::string table_to_json(const TableReport& report);

struct PsPoint {
  Index P_s = 0;
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
  double mean_patterns = 0.0;
};

/// Hinge-loss standard-training objective for each P_s, over `repeats` sampling seeds.
std::vector<PsPoint> run_ps_sweep(const Dataset& data, double beta, const std::vector<Index>& ps_list, int repeats,
                                  std::uint64_t seed, const SolveSettings& settings = {}, int workers = 1);
void write_ps_csv(std::ostream& out, const std::vector<PsPoint>& curve);

struct EpsSweepSpec {
  std::vector<double> eps_list = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  int trials = 10;
  int standard_trials = 100;
  double beta = 1e-4;
  Index P_s = 64;
  Index S = 4;
  bool freeze_bias = false;
  std::uint64_t seed = 0;
  int workers = 1;
  SolveSettings solver{};
};

struct EpsPoint {
  double eps = 0.0;
  double mean_mse = 0.0;
  double std_mse = 0.0;
  int trials = 0;
};

struct EpsCurve {
  double standard_mse = 0.0;
  double standard_std = 0.0;
  int standard_trials = 0;
  std::vector<EpsPoint> points;
};

/// Staircase regression: squared-loss adversarial training per eps against a standard
/// baseline, each trial on fresh train/test draws.
EpsCurve run_eps_sweep_regression(const EpsSweepSpec& spec);
void write_eps_csv(std::ostream& out, const EpsCurve& curve);

/// Rows "x0[,x1],value" over a regular grid; `lo`/`hi` per input coordinate, bias
/// column (if any) excluded from the bounds and appended internally.
void export_decision_grid(std::ostream& out, const NetworkWeights& weights, const std::vector<double>& lo,
                          const std::vector<double>& hi, Index resolution, bool bias_appended, bool classification);

}  // namespace cvxnn
