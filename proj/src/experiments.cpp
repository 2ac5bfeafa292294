#include "cvxnn/experiments.hpp"

#include "cvxnn/attacks.hpp"
#include "cvxnn/random.hpp"
#include "cvxnn/trainer.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <thread>

namespace cvxnn {

using nlohmann::json;

std::string to_string(Method method) {
  switch (method) {
    case Method::alg1: return "alg1";
    case Method::alg2: return "alg2";
    case Method::gd_std: return "gd_std";
    case Method::gd_fgsm: return "gd_fgsm";
    case Method::gd_pgd: return "gd_pgd";
  }
  return "alg1";
}

Method method_from_string(const std::string& name) {
  for (Method m : {Method::alg1, Method::alg2, Method::gd_std, Method::gd_fgsm, Method::gd_pgd}) {
    if (to_string(m) == name) return m;
  }
  throw InvalidArgument("unknown method: " + name + " (expected alg1, alg2, gd_std, gd_fgsm or gd_pgd)");
}

void ExperimentSpec::validate() const {
  if (repeats < 1) throw InvalidArgument("repeats must be >= 1");
  if (workers < 1) throw InvalidArgument("workers must be >= 1");
  if (dataset == "csv") {
    if (csv_path.empty()) throw InvalidArgument("csv dataset needs a path");
    if (!std::filesystem::exists(csv_path)) throw InvalidArgument("CSV file not found: " + csv_path);
  } else if (dataset != "toy1d" && dataset != "toy2d" && dataset != "staircase" && dataset != "random2d") {
    throw InvalidArgument("unknown dataset: " + dataset);
  }
  if (!(beta > 0.0)) throw InvalidArgument("beta must be > 0");
  if (!(eps >= 0.0)) throw InvalidArgument("eps must be >= 0");
  if (P_s < 1 || S < 1 || P_a < 0) throw InvalidArgument("sampler sizes must be positive");
  if (!loss.empty()) loss_from_string(loss);
  solver.validate();
}

std::uint64_t run_seed(std::uint64_t seed, std::uint64_t r) {
  return splitmix64(splitmix64(seed) ^ splitmix64(r + 0x5851f42d4c957f2dULL));
}

SamplerConfig sampler_config(const ExperimentSpec& spec, std::uint64_t seed) {
  SamplerConfig c;
  c.P_s = spec.P_s;
  c.S = spec.S;
  c.P_a = spec.P_a > 0 ? spec.P_a : (2 * spec.P_s + spec.S - 1) / spec.S;
  c.seed = seed;
  c.eps = spec.eps;
  return c;
}

Dataset random_classification(Index n, Index d, std::uint64_t seed) {
  Engine rng = StreamFactory(seed).stream({13});
  Matrix X(n, d);
  Vector y(n);
  for (Index k = 0; k < n; ++k) {
    for (Index j = 0; j < d; ++j) X(k, j) = standard_normal(rng);
    y(k) = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
  }
  return make_dataset(std::move(X), std::move(y), TaskKind::binary);
}

DataSplit load_experiment_data(const ExperimentSpec& spec) {
  DataSplit split;
  bool generated = true;
  if (spec.dataset == "csv") {
    CsvOptions o;
    o.label_col = spec.label_col;
    o.train_frac = spec.train_frac;
    o.standardize = spec.standardize;
    o.seed = spec.seed;
    o.task = !spec.loss.empty() && spec.loss == "squared" ? TaskKind::regression : TaskKind::binary;
    split = ingest_csv(spec.csv_path, o);
    generated = false;
  } else if (spec.dataset == "random2d") {
    split.train = random_classification(40, 2, spec.seed);
  } else {
    split = gen_toy(spec.dataset, spec.seed);
  }
  const bool bias = spec.bias == 1 || (spec.bias == -1 && generated);
  if (bias) {
    split.train = append_bias(split.train);
    if (split.test) split.test = append_bias(*split.test);
  }
  return split;
}

namespace {

// Runs body(i) for i in [0, count) on up to `workers` threads; results are written by
// index so the outcome never depends on scheduling.
template <typename Body>
void parallel_for(std::size_t count, int workers, Body body) {
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

LossKind resolve_loss(const ExperimentSpec& spec, const Dataset& data) {
  if (!spec.loss.empty()) return loss_from_string(spec.loss);
  return data.task == TaskKind::binary ? LossKind::hinge() : LossKind::squared();
}

AttackConfig attack_config(double eps, int steps, const Dataset& data, bool freeze_bias) {
  AttackConfig a;
  a.eps = eps;
  a.steps = steps;
  if (freeze_bias && data.bias_appended) {
    a.perturbed.assign(static_cast<std::size_t>(data.d()), true);
    a.perturbed.back() = false;
  }
  return a;
}

ColumnStats stats(const std::vector<double>& xs) {
  ColumnStats s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

RunRecord run_once(const ExperimentSpec& spec, const DataSplit& split, std::uint64_t seed) {
  RunRecord rec;
  rec.seed = seed;
  const Dataset& train = split.train;
  const Dataset& eval = split.test ? *split.test : split.train;
  const LossKind loss = resolve_loss(spec, train);
  const AttackConfig attack = attack_config(spec.eps, spec.attack_steps, train, spec.freeze_bias);
  NetworkWeights weights;
  try {
    switch (spec.method) {
      case Method::alg1:
      case Method::alg2: {
        const SamplerConfig sampler = sampler_config(spec, seed);
        const TrainedModel model =
            spec.method == Method::alg1
                ? train_standard(train, spec.beta, sampler, loss, spec.solver)
                : train_adversarial(train, spec.beta, robust_spec(train, spec.eps, spec.norm, spec.freeze_bias),
                                    sampler, loss, spec.solver);
        weights = model.weights;
        rec.objective = model.convex.objective;
        rec.degraded = model.meta.degraded;
        break;
      }
      case Method::gd_std:
      case Method::gd_fgsm:
      case Method::gd_pgd: {
        GdConfig gd = spec.gd;
        gd.m = spec.gd_width > 0 ? spec.gd_width : 2 * spec.P_s;
        gd.seed = seed;
        std::optional<Adversary> adversary;
        if (spec.method != Method::gd_std) {
          adversary = Adversary{spec.method == Method::gd_fgsm ? AttackKind::fgsm : AttackKind::pgd, attack};
        }
        weights = gd_train(train, spec.beta, loss, gd, adversary);
        Dataset attacked = train;
        if (adversary) attacked.X = attack_dataset(weights, train, attack, loss, adversary->kind);
        rec.objective = regularized_objective(weights, attacked, spec.beta, loss);
        break;
      }
    }
    const Evaluation e = evaluate(weights, eval, attack, loss);
    rec.clean = e.clean;
    rec.fgsm = e.fgsm;
    rec.pgd = e.pgd;
    rec.width = weights.width();
  } catch (const std::exception& ex) {
    rec.ok = false;
    rec.error = ex.what();
  }
  return rec;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json spec_json(const ExperimentSpec& s) {
  return {{"dataset", s.dataset},
          {"csv_path", s.csv_path},
          {"label_col", s.label_col},
          {"train_frac", s.train_frac},
          {"standardize", s.standardize},
          {"bias", s.bias},
          {"freeze_bias", s.freeze_bias},
          {"method", to_string(s.method)},
          {"loss", s.loss},
          {"beta", s.beta},
          {"eps", s.eps},
          {"norm", to_string(s.norm)},
          {"P_s", s.P_s},
          {"P_a", s.P_a},
          {"S", s.S},
          {"gd", {{"width", s.gd_width}, {"epochs", s.gd.epochs}, {"lr", s.gd.lr}, {"batch", s.gd.batch},
                  {"init_scale", s.gd.init_scale}}},
          {"attack_steps", s.attack_steps},
          {"repeats", s.repeats},
          {"seed", s.seed},
          {"solver", {{"tol_gap", s.solver.tol_gap}, {"tol_feas", s.solver.tol_feas},
                      {"max_iter", s.solver.max_iter},
                      {"algorithm", s.solver.algorithm == SolverAlgorithm::interior_point ? "interior_point"
                                                                                          : "operator_splitting"},
                      {"static_regularization", s.solver.static_regularization}}}};
}

}  // namespace

TableReport run_table(const ExperimentSpec& spec) {
  spec.validate();
  const DataSplit split = load_experiment_data(spec);
  TableReport report;
  report.spec = spec;
  report.classification = split.train.task == TaskKind::binary;
  report.runs.resize(static_cast<std::size_t>(spec.repeats));
  parallel_for(report.runs.size(), spec.workers,
               [&](std::size_t r) { report.runs[r] = run_once(spec, split, run_seed(spec.seed, r)); });
  std::vector<double> obj, clean, fgsm, pgd;
  for (const auto& run : report.runs) {
    if (!run.ok || run.degraded) continue;
    obj.push_back(run.objective);
    clean.push_back(run.clean);
    fgsm.push_back(run.fgsm);
    pgd.push_back(run.pgd);
  }
  report.counted = static_cast<Index>(obj.size());
  report.objective = stats(obj);
  report.clean = stats(clean);
  report.fgsm = stats(fgsm);
  report.pgd = stats(pgd);
  return report;
}

void write_table_csv(std::ostream& out, const TableReport& report) {
  const char* metric = report.classification ? "acc" : "mse";
  out << "row,seed,status,objective,clean_" << metric << ",fgsm_" << metric << ",pgd_" << metric << ",width\n";
  for (std::size_t r = 0; r < report.runs.size(); ++r) {
    const RunRecord& run = report.runs[r];
    const char* status = !run.ok ? "error" : run.degraded ? "degraded" : "ok";
    out << r << ',' << run.seed << ',' << status << ',' << fmt(run.objective) << ',' << fmt(run.clean) << ','
        << fmt(run.fgsm) << ',' << fmt(run.pgd) << ',' << run.width << '\n';
  }
  out << "mean,," << report.counted << ',' << fmt(report.objective.mean) << ',' << fmt(report.clean.mean) << ','
      << fmt(report.fgsm.mean) << ',' << fmt(report.pgd.mean) << ",\n";
  out << "std,," << report.counted << ',' << fmt(report.objective.std) << ',' << fmt(report.clean.std) << ','
      << fmt(report.fgsm.std) << ',' << fmt(report.pgd.std) << ",\n";
}

std::string table_to_json(const TableReport& report) {
  json runs = json::array();
  for (const auto& run : report.runs) {
    runs.push_back({{"seed", run.seed}, {"ok", run.ok}, {"degraded", run.degraded}, {"error", run.error},
                    {"objective", run.objective}, {"clean", run.clean}, {"fgsm", run.fgsm}, {"pgd", run.pgd},
                    {"width", run.width}});
  }
  auto col = [](const ColumnStats& s) { return json{{"mean", s.mean}, {"std", s.std}}; };
  json doc = {{"spec", spec_json(report.spec)},
              {"metric", report.classification ? "accuracy" : "mse"},
              {"runs", runs},
              {"counted", report.counted},
              {"summary",
               {{"objective", col(report.objective)},
                {"clean", col(report.clean)},
                {"fgsm", col(report.fgsm)},
                {"pgd", col(report.pgd)}}}};
  return doc.dump(1);
}

std::vector<PsPoint> run_ps_sweep(const Dataset& data, double beta, const std::vector<Index>& ps_list, int repeats,
                                  std::uint64_t seed, const SolveSettings& settings, int workers) {
  if (repeats < 1) throw InvalidArgument("repeats must be >= 1");
  for (std::size_t i = 1; i < ps_list.size(); ++i) {
    if (ps_list[i] <= ps_list[i - 1]) throw InvalidArgument("P_s list must be strictly ascending");
  }
  const auto reps = static_cast<std::size_t>(repeats);
  std::vector<double> objective(ps_list.size() * reps);
  std::vector<double> used(objective.size());
  parallel_for(objective.size(), workers, [&](std::size_t job) {
    SamplerConfig c;
    c.P_s = ps_list[job / reps];
    c.seed = run_seed(seed, job % reps);
    const TrainedModel m = train_standard(data, beta, c, LossKind::hinge(), settings);
    objective[job] = m.convex.objective;
    used[job] = static_cast<double>(m.meta.P_s_used);
  });
  std::vector<PsPoint> curve;
  for (std::size_t p = 0; p < ps_list.size(); ++p) {
    const std::vector<double> xs(objective.begin() + static_cast<std::ptrdiff_t>(p * reps),
                                 objective.begin() + static_cast<std::ptrdiff_t>((p + 1) * reps));
    PsPoint pt;
    pt.P_s = ps_list[p];
    const ColumnStats s = stats(xs);
    pt.mean = s.mean;
    pt.std = s.std;
    pt.min = *std::min_element(xs.begin(), xs.end());
    pt.max = *std::max_element(xs.begin(), xs.end());
    for (std::size_t r = 0; r < reps; ++r) pt.mean_patterns += used[p * reps + r] / static_cast<double>(reps);
    curve.push_back(pt);
  }
  return curve;
}

void write_ps_csv(std::ostream& out, const std::vector<PsPoint>& curve) {
  out << "P_s,mean,std,min,max,mean_patterns\n";
  for (const auto& p : curve) {
    out << p.P_s << ',' << fmt(p.mean) << ',' << fmt(p.std) << ',' << fmt(p.min) << ',' << fmt(p.max) << ','
        << fmt(p.mean_patterns) << '\n';
  }
}

namespace {

double staircase_trial(const EpsSweepSpec& spec, double eps, std::uint64_t seed) {
  DataSplit split = gen_toy("staircase", seed);
  const Dataset train = append_bias(split.train);
  const Dataset test = append_bias(*split.test);
  SamplerConfig c;
  c.P_s = spec.P_s;
  c.seed = seed;
  TrainedModel m;
  if (eps == 0.0) {
    m = train_standard(train, spec.beta, c, LossKind::squared(), spec.solver);
  } else {
    c.S = spec.S;
    c.P_a = (2 * spec.P_s + spec.S - 1) / spec.S;
    m = train_adversarial(train, spec.beta, robust_spec(train, eps, PerturbationNorm::linf, spec.freeze_bias), c,
                          LossKind::squared(), spec.solver);
  }
  if (m.meta.degraded) throw std::runtime_error("staircase trial did not reach an optimal certificate");
  const Vector pred = forward(m.weights, test.X);
  return (pred - test.y).squaredNorm() / static_cast<double>(test.n());
}

}  // namespace

EpsCurve run_eps_sweep_regression(const EpsSweepSpec& spec) {
  if (spec.trials < 1 || spec.standard_trials < 1) throw InvalidArgument("trial counts must be >= 1");
  const auto trials = static_cast<std::size_t>(spec.trials);
  const auto base = static_cast<std::size_t>(spec.standard_trials);
  // Jobs [0, base) are standard trials, then `trials` jobs per eps.
  std::vector<double> mse(base + trials * spec.eps_list.size());
  parallel_for(mse.size(), spec.workers, [&](std::size_t job) {
    if (job < base) {
      mse[job] = staircase_trial(spec, 0.0, run_seed(spec.seed, job));
      return;
    }
    const std::size_t e = (job - base) / trials;
    const std::size_t t = (job - base) % trials;
    mse[job] = staircase_trial(spec, spec.eps_list[e], run_seed(run_seed(spec.seed, 1000 + e), t));
  });
  EpsCurve curve;
  const ColumnStats s = stats(std::vector<double>(mse.begin(), mse.begin() + static_cast<std::ptrdiff_t>(base)));
  curve.standard_mse = s.mean;
  curve.standard_std = s.std;
  curve.standard_trials = spec.standard_trials;
  for (std::size_t e = 0; e < spec.eps_list.size(); ++e) {
    const auto first = mse.begin() + static_cast<std::ptrdiff_t>(base + e * trials);
    const ColumnStats es = stats(std::vector<double>(first, first + static_cast<std::ptrdiff_t>(trials)));
    curve.points.push_back(EpsPoint{spec.eps_list[e], es.mean, es.std, spec.trials});
  }
  return curve;
}

void write_eps_csv(std::ostream& out, const EpsCurve& curve) {
  out << "eps,adv_mse,adv_std,adv_trials,standard_mse,standard_std,standard_trials\n";
  for (const auto& p : curve.points) {
    out << fmt(p.eps) << ',' << fmt(p.mean_mse) << ',' << fmt(p.std_mse) << ',' << p.trials << ','
        << fmt(curve.standard_mse) << ',' << fmt(curve.standard_std) << ',' << curve.standard_trials << '\n';
  }
}

void export_decision_grid(std::ostream& out, const NetworkWeights& weights, const std::vector<double>& lo,
                          const std::vector<double>& hi, Index resolution, bool bias_appended, bool classification) {
  const auto dim = static_cast<Index>(lo.size());
  if (dim < 1 || dim > 2) throw InvalidArgument("decision grids support 1 or 2 input coordinates");
  if (hi.size() != lo.size()) throw DimensionError("grid bounds differ in length");
  if (resolution < 2) throw InvalidArgument("grid resolution must be >= 2");
  if (weights.dim() != dim + (bias_appended ? 1 : 0)) throw DimensionError("grid dimension does not match network");
  const Index rows = dim == 1 ? resolution : resolution * resolution;
  Matrix X(rows, weights.dim());
  for (Index r = 0; r < rows; ++r) {
    Index rest = r;
    for (Index j = 0; j < dim; ++j) {
      const double t = static_cast<double>(rest % resolution) / static_cast<double>(resolution - 1);
      rest /= resolution;
      X(r, j) = lo[static_cast<std::size_t>(j)] + t * (hi[static_cast<std::size_t>(j)] - lo[static_cast<std::size_t>(j)]);
    }
    if (bias_appended) X(r, dim) = 1.0;
  }
  const Vector pred = forward(weights, X);
  for (Index j = 0; j < dim; ++j) out << 'x' << j << ',';
  out << "value\n";
  for (Index r = 0; r < rows; ++r) {
    for (Index j = 0; j < dim; ++j) out << fmt(X(r, j)) << ',';
    out << fmt(classification ? predict_label(pred(r)) : pred(r)) << '\n';
  }
}

}  // namespace cvxnn
