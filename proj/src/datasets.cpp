#include "cvxnn/datasets.hpp"

#include "cvxnn/random.hpp"

#include <boost/random/discrete_distribution.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace cvxnn {

double staircase_target(double x) {
  const double step = std::floor(x - staircase_lo);
  return std::clamp(step, 0.0, 3.0) - 1.5;
}

namespace {

double random_sign(Engine& rng) { return uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0; }

Dataset staircase_sample(Engine& rng, Index n) {
  Matrix X(n, 1);
  Vector y(n);
  for (Index k = 0; k < n; ++k) {
    X(k, 0) = uniform(rng, staircase_lo, staircase_hi);
    y(k) = staircase_target(X(k, 0));
  }
  return make_dataset(std::move(X), std::move(y), TaskKind::regression);
}

}  // namespace

DataSplit gen_toy(const std::string& name, std::uint64_t seed) {
  const StreamFactory streams(seed);
  if (name == "toy1d") {
    Engine rng = streams.stream({10});
    Matrix X(15, 1);
    Vector y(15);
    for (Index k = 0; k < 15; ++k) {
      X(k, 0) = uniform(rng, -1.0, 1.0);
      y(k) = random_sign(rng);
    }
    return {make_dataset(std::move(X), std::move(y), TaskKind::binary), std::nullopt};
  }
  if (name == "toy2d") {
    Engine rng = streams.stream({11});
    Matrix X(34, 2);
    Vector y(34);
    for (Index k = 0; k < 34; ++k) {
      X(k, 0) = uniform(rng, -2.0, 2.0);
      X(k, 1) = uniform(rng, -2.0, 2.0);
      y(k) = X(k, 0) * X(k, 1) + 0.3 >= 0.0 ? 1.0 : -1.0;
      if (uniform(rng, 0.0, 1.0) < 0.1) y(k) = -y(k);
    }
    return {make_dataset(std::move(X), std::move(y), TaskKind::binary), std::nullopt};
  }
  if (name == "staircase") {
    Engine train_rng = streams.stream({12, 0});
    Engine test_rng = streams.stream({12, 1});
    Dataset train = staircase_sample(train_rng, 8);
    return {std::move(train), staircase_sample(test_rng, 100)};
  }
  throw InvalidArgument("unknown toy dataset: " + name + " (expected toy1d, toy2d or staircase)");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_field(const std::string& field, Index line_no) {
  if (field.empty() || field == "?" || field == "NA" || field == "NaN" || field == "nan") {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double value = 0.0;
  const char* begin = field.data();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    std::ostringstream msg;
    msg << "line " << line_no << ": cannot parse '" << field << "' as a number";
    throw InvalidArgument(msg.str());
  }
  return value;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;  // complete rows only
};

Table read_table(std::istream& in) {
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("CSV is empty");
  t.header = split_fields(line);
  Index line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != t.header.size()) {
      std::ostringstream msg;
      msg << "line " << line_no << ": expected " << t.header.size() << " fields, found " << fields.size();
      throw InvalidArgument(msg.str());
    }
    std::vector<double> row;
    bool complete = true;
    for (const auto& f : fields) {
      row.push_back(parse_field(f, line_no));
      complete = complete && std::isfinite(row.back());
    }
    if (complete) t.rows.push_back(std::move(row));
  }
  if (t.rows.empty()) throw InvalidArgument("CSV has no complete rows");
  return t;
}

Dataset to_dataset(const Table& t, const std::vector<std::size_t>& order, const std::string& label_col,
                   TaskKind task) {
  const auto it = std::find(t.header.begin(), t.header.end(), label_col);
  if (it == t.header.end()) throw InvalidArgument("label column '" + label_col + "' not in header");
  const auto label = static_cast<std::size_t>(it - t.header.begin());
  const auto n = static_cast<Index>(order.size());
  const auto d = static_cast<Index>(t.header.size()) - 1;
  if (d < 1) throw InvalidArgument("CSV needs at least one feature column");
  Matrix X(n, d);
  Vector y(n);
  for (Index k = 0; k < n; ++k) {
    const auto& row = t.rows[order[static_cast<std::size_t>(k)]];
    Index c = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j == label) {
        y(k) = row[j];
      } else {
        X(k, c++) = row[j];
      }
    }
  }
  if (task == TaskKind::binary) {
    std::vector<double> values;
    for (const auto& row : t.rows) values.push_back(row[label]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    if (values.size() > 2) throw InvalidArgument("label column '" + label_col + "' has more than two values");
    const double hi = values.back();
    if (values.size() == 2) {
      for (Index k = 0; k < n; ++k) y(k) = y(k) == hi ? 1.0 : -1.0;
    } else {
      // One observed value: keep its sign so a column of +1/-1 stays meaningful.
      for (Index k = 0; k < n; ++k) y(k) = hi > 0.0 ? 1.0 : -1.0;
    }
  }
  return Dataset{std::move(X), std::move(y), task, false};
}

Dataset subset(const Dataset& data, Index first, Index count) {
  return Dataset{data.X.middleRows(first, count), data.y.segment(first, count), data.task, data.bias_appended};
}

}  // namespace

DataSplit ingest_csv_stream(std::istream& in, const CsvOptions& options) {
  if (!(options.train_frac > 0.0 && options.train_frac <= 1.0)) {
    throw InvalidArgument("train_frac must lie in (0, 1]");
  }
  const Table t = read_table(in);
  std::vector<std::size_t> order(t.rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Engine rng = StreamFactory(options.seed).stream({4});
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
  const Dataset all = to_dataset(t, order, options.label_col, options.task);

  const auto n_train = std::clamp<Index>(static_cast<Index>(std::llround(options.train_frac * static_cast<double>(all.n()))),
                                         1, all.n());
  DataSplit out{subset(all, 0, n_train), std::nullopt};
  if (n_train < all.n()) out.test = subset(all, n_train, all.n() - n_train);

  if (options.standardize) {
    const Vector mean = out.train.X.colwise().mean();
    Vector scale = ((out.train.X.rowwise() - mean.transpose()).array().square().colwise().mean()).sqrt();
    for (Index j = 0; j < scale.size(); ++j) {
      if (scale(j) == 0.0) scale(j) = 1.0;
    }
    auto apply = [&](Dataset& d) {
      d.X = ((d.X.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array()).matrix();
    };
    apply(out.train);
    if (out.test) apply(*out.test);
  }
  out.train.validate();
  if (out.test) out.test->validate();
  return out;
}

DataSplit ingest_csv(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open CSV file: " + path);
  return ingest_csv_stream(in, options);
}

Dataset read_dataset_csv(std::istream& in, const std::string& label_col, TaskKind task) {
  const Table t = read_table(in);
  std::vector<std::size_t> order(t.rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Dataset out = to_dataset(t, order, label_col, task);
  out.validate();
  return out;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  for (Index j = 0; j < data.d(); ++j) out << 'x' << j << ',';
  out << "y\n";
  char buf[32];
  for (Index k = 0; k < data.n(); ++k) {
    for (Index j = 0; j < data.d(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", data.X(k, j));
      out << buf << ',';
    }
    std::snprintf(buf, sizeof buf, "%.17g", data.y(k));
    out << buf << '\n';
  }
}

void write_masses_standin(std::ostream& out, std::uint64_t seed) {
  constexpr int rows = 961;
  constexpr int incomplete = 131;
  Engine rng = StreamFactory(seed).stream({20});
  using Categorical = boost::random::discrete_distribution<int, double>;
  // Category weights per class (benign, malignant), loosely following the public
  // table's marginals: BI-RADS 2..5, shape 1..4, margin 1..5, density 1..4.
  const Categorical birads[2] = {Categorical({0.03, 0.06, 0.74, 0.17}), Categorical({0.0, 0.01, 0.34, 0.65})};
  const Categorical shape[2] = {Categorical({0.42, 0.34, 0.09, 0.15}), Categorical({0.07, 0.08, 0.20, 0.65})};
  const Categorical margin[2] = {Categorical({0.60, 0.03, 0.10, 0.17, 0.10}),
                                 Categorical({0.10, 0.02, 0.15, 0.38, 0.35})};
  const Categorical density({0.02, 0.07, 0.88, 0.03});
  // Relative missing counts per feature column in the public table.
  const Categorical missing_col({2.0, 5.0, 31.0, 48.0, 76.0});

  std::vector<std::vector<double>> table;
  for (int r = 0; r < rows; ++r) {
    const int y = uniform(rng, 0.0, 1.0) < 445.0 / 961.0 ? 1 : 0;
    const double age_mean = y ? 62.5 : 49.0;
    const double age = std::clamp(std::round(age_mean + 13.5 * standard_normal(rng)), 18.0, 96.0);
    table.push_back({static_cast<double>(birads[y](rng) + 2), age, static_cast<double>(shape[y](rng) + 1),
                     static_cast<double>(margin[y](rng) + 1), static_cast<double>(density(rng) + 1),
                     static_cast<double>(y)});
  }
  std::vector<int> order(rows);
  std::iota(order.begin(), order.end(), 0);
  for (int i = rows; i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % static_cast<unsigned>(i))]);
  for (int i = 0; i < incomplete; ++i) {
    table[static_cast<std::size_t>(order[i])][static_cast<std::size_t>(missing_col(rng))] =
        std::numeric_limits<double>::quiet_NaN();
  }

  out << "BI-RADS,Age,Shape,Margin,Density,Severity\n";
  for (const auto& row : table) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      if (std::isnan(row[j])) {
        out << '?';
      } else {
        out << static_cast<int>(row[j]);
      }
    }
    out << '\n';
  }
}

}  // namespace cvxnn
