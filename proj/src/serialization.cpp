#include "cvxnn/serialization.hpp"

#include <json.hpp>

namespace cvxnn {

using nlohmann::json;

namespace {

json triplets(const SparseMatrix& m) {
  json out = json::array();
  for (Index j = 0; j < m.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(m, j); it; ++it) out.push_back({it.row(), it.col(), it.value()});
  }
  return out;
}

json dense(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

SparseMatrix read_triplets(const json& j, Index rows, Index cols) {
  std::vector<Eigen::Triplet<double>> t;
  for (const auto& e : j) {
    const Index r = e.at(0).get<Index>();
    const Index c = e.at(1).get<Index>();
    if (r < 0 || r >= rows || c < 0 || c >= cols) throw InvalidArgument("program JSON: triplet index out of range");
    t.emplace_back(r, c, e.at(2).get<double>());
  }
  SparseMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

Vector read_dense(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

}  // namespace

std::string program_to_json(const ConicProgram& p) {
  json blocks = json::array();
  for (const auto& b : p.soc_blocks()) blocks.push_back({b.first_row, b.size});
  json layout = json::array();
  for (const auto& s : p.layout()) {
    layout.push_back({{"name", s.name}, {"group", s.group}, {"first", s.first}, {"size", s.size}});
  }
  json patterns = json::array();
  for (const auto& pat : p.patterns()) patterns.push_back(pat.mask);
  json doc = {{"var_count", p.var_count()},
              {"objective", {{"dense", dense(p.objective())}, {"offset", p.objective_offset()}}},
              {"nonneg",
               {{"rows", p.nonneg_rows()}, {"triplets", triplets(p.nonneg_matrix())}, {"offset", dense(p.nonneg_offset())}}},
              {"soc",
               {{"rows", p.soc_rows()},
                {"triplets", triplets(p.soc_matrix())},
                {"offset", dense(p.soc_offset())},
                {"blocks", blocks}}},
              {"layout", layout},
              {"patterns", patterns},
              {"data_dim", p.data_dim()}};
  return doc.dump();
}

ConicProgram program_from_json_string(const std::string& text) {
  const json doc = json::parse(text);
  ConicProgram p;
  p.var_count_ = doc.at("var_count").get<Index>();
  p.objective_ = read_dense(doc.at("objective").at("dense"));
  p.objective_offset_ = doc.at("objective").at("offset").get<double>();
  const json& nn = doc.at("nonneg");
  p.nonneg_offset_ = read_dense(nn.at("offset"));
  p.nonneg_matrix_ = read_triplets(nn.at("triplets"), nn.at("rows").get<Index>(), p.var_count_);
  const json& soc = doc.at("soc");
  p.soc_offset_ = read_dense(soc.at("offset"));
  p.soc_matrix_ = read_triplets(soc.at("triplets"), soc.at("rows").get<Index>(), p.var_count_);
  for (const auto& b : soc.at("blocks")) p.soc_blocks_.push_back(SocBlock{b.at(0).get<Index>(), b.at(1).get<Index>()});
  for (const auto& s : doc.at("layout")) {
    p.layout_.push_back(VariableSpan{s.at("name").get<std::string>(), s.at("group").get<Index>(),
                                     s.at("first").get<Index>(), s.at("size").get<Index>()});
  }
  for (const auto& m : doc.value("patterns", json::array())) {
    ActivationPattern pat;
    pat.mask = m.get<std::vector<std::uint8_t>>();
    p.patterns_.push_back(std::move(pat));
  }
  p.data_dim_ = doc.value("data_dim", Index{0});
  p.validate();
  return p;
}

std::string solve_result_to_json(const SolveResult& r) {
  json doc = {{"status", to_string(r.status)},
              {"objective", r.objective},
              {"gap", r.gap},
              {"max_violation", r.max_violation},
              {"iterations", r.iterations},
              {"primal", dense(r.primal)}};
  return doc.dump(1);
}

}  // namespace cvxnn
