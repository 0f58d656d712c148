#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wecfarm/error.hpp"
#include "wecfarm/surrogate.hpp"

namespace wecfarm {

using nlohmann::json;

namespace {

constexpr const char* kCommitteeSchema = "wecfarm.committee.v1";
constexpr const char* kDatasetSchema = "wecfarm.dataset.v1";

json vec_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mat_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd json_mat(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  require(static_cast<Eigen::Index>(data.size()) == rows * cols, ErrorKind::parse,
          "matrix data length does not match its shape");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  return m;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path);
  out << text;
  require(static_cast<bool>(out), ErrorKind::io, "failed writing " + path);
}

}  // namespace

std::string committee_to_json(const Committee& c) {
  json members = json::array();
  for (const auto& m : c.members) {
    json w = json::array(), b = json::array();
    for (const auto& x : m.weights()) w.push_back(mat_json(x));
    for (const auto& x : m.biases()) b.push_back(vec_json(x));
    members.push_back({{"weights", w}, {"biases", b}});
  }
  const auto& first = c.members.front();
  json j = {
      {"schema", kCommitteeSchema},
      {"target", map_name(c.target)},
      {"topology",
       {{"inputs", first.inputs()},
        {"hidden", first.hidden()},
        {"outputs", first.outputs()},
        {"activation", "tanh"}}},
      {"members", members},
      {"input_features", "log_R,log_slenderness,identity"},
      {"input_scaler", {{"offset", vec_json(c.input_scaler.offset)}, {"scale", vec_json(c.input_scaler.scale)}}},
      {"output_scaler", {{"offset", vec_json(c.output_scaler.offset)}, {"scale", vec_json(c.output_scaler.scale)}}},
      {"training",
       {{"epochs", c.config.sgd.epochs},
        {"learning_rate", c.config.sgd.learning_rate},
        {"momentum", c.config.sgd.momentum},
        {"batch", c.config.sgd.batch},
        {"members", c.config.members},
        {"bootstrap", c.config.bootstrap},
        {"min_samples", c.config.min_samples},
        {"seed", c.config.seed},
        {"samples", c.samples},
        {"rounds", c.rounds},
        {"member_mse", c.member_mse},
        {"zero_variance_outputs", c.zero_variance_outputs}}},
      {"design_space",
       {{"radius", {c.space.radius_min, c.space.radius_max}},
        {"slenderness", {c.space.slenderness_min, c.space.slenderness_max}},
        {"draft", {c.space.draft_min, c.space.draft_max}},
        {"clearance", c.space.clearance},
        {"separation_max", c.space.separation_max}}},
      {"environment",
       {{"water_depth", c.env.water_depth},
        {"gravity", c.env.gravity},
        {"water_density", c.env.water_density}}},
      {"frequencies", c.grid.values()},
  };
  return j.dump(1);
}

Committee committee_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("committee JSON: ") + e.what());
  }
  try {
    require(j.value("schema", "") == kCommitteeSchema, ErrorKind::parse,
            std::string("committee JSON lacks schema ") + kCommitteeSchema);
    require(j.value("input_features", "") == "log_R,log_slenderness,identity", ErrorKind::parse,
            "committee JSON has unsupported input_features");
    Committee c;
    c.target = map_from_name(j.at("target").get<std::string>());
    for (const auto& m : j.at("members")) {
      std::vector<Eigen::MatrixXd> w;
      std::vector<Eigen::VectorXd> b;
      for (const auto& x : m.at("weights")) w.push_back(json_mat(x));
      for (const auto& x : m.at("biases")) b.push_back(json_vec(x));
      c.members.emplace_back(std::move(w), std::move(b));
    }
    require(c.members.size() >= 3, ErrorKind::parse, "committee has fewer than 3 members");
    c.input_scaler = {json_vec(j.at("input_scaler").at("offset")),
                      json_vec(j.at("input_scaler").at("scale"))};
    c.output_scaler = {json_vec(j.at("output_scaler").at("offset")),
                       json_vec(j.at("output_scaler").at("scale"))};
    const auto& t = j.at("training");
    c.config.hidden = j.at("topology").at("hidden").get<std::vector<int>>();
    c.config.sgd.epochs = t.at("epochs");
    c.config.sgd.learning_rate = t.at("learning_rate");
    c.config.sgd.momentum = t.at("momentum");
    c.config.sgd.batch = t.at("batch");
    c.config.members = t.at("members");
    c.config.bootstrap = t.at("bootstrap");
    c.config.min_samples = t.at("min_samples");
    c.config.seed = t.at("seed");
    c.samples = t.at("samples");
    c.rounds = t.at("rounds");
    c.member_mse = t.at("member_mse").get<std::vector<double>>();
    c.zero_variance_outputs = t.at("zero_variance_outputs");
    const auto& s = j.at("design_space");
    c.space.radius_min = s.at("radius")[0];
    c.space.radius_max = s.at("radius")[1];
    c.space.slenderness_min = s.at("slenderness")[0];
    c.space.slenderness_max = s.at("slenderness")[1];
    c.space.draft_min = s.at("draft")[0];
    c.space.draft_max = s.at("draft")[1];
    c.space.clearance = s.at("clearance");
    c.space.separation_max = s.at("separation_max");
    const auto& e = j.at("environment");
    c.env.water_depth = e.at("water_depth");
    c.env.gravity = e.at("gravity");
    c.env.water_density = e.at("water_density");
    c.grid = FrequencyGrid(j.at("frequencies").get<std::vector<double>>());
    const int in = map_input_dim(c.target);
    for (const auto& m : c.members) {
      require(m.inputs() == in && m.outputs() == static_cast<int>(c.grid.size()),
              ErrorKind::parse, "committee member shape does not match its map");
    }
    require(c.input_scaler.offset.size() == in && c.input_scaler.scale.size() == in &&
                c.output_scaler.offset.size() == static_cast<Eigen::Index>(c.grid.size()) &&
                c.output_scaler.scale.size() == static_cast<Eigen::Index>(c.grid.size()),
            ErrorKind::parse, "committee scalers do not match its map");
    return c;
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("committee JSON: ") + e.what());
  }
}

void save_committee(const Committee& c, const std::string& path) {
  write_text(path, committee_to_json(c));
}

Committee load_committee(const std::string& path) {
  try {
    return committee_from_json(read_text(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::io) throw;
    throw Error(e.kind(), path + ": " + e.what());
  }
}

void save_committee_set(const CommitteeSet& set, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [id, c] : set)
    save_committee(*c, (std::filesystem::path(dir) / (std::string(map_name(id)) + ".committee.json")).string());
}

CommitteeSet load_committee_set(const std::string& dir) {
  CommitteeSet out;
  for (MapId id : kAllMaps) {
    const auto path = std::filesystem::path(dir) / (std::string(map_name(id)) + ".committee.json");
    if (!std::filesystem::exists(path)) continue;
    out.emplace(id, std::make_shared<const Committee>(load_committee(path.string())));
  }
  return out;
}

void save_dataset(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path);
  out.precision(17);
  out << "# schema: " << kDatasetSchema << " target=" << map_name(data.target) << "\n";
  const bool pair = is_pair_map(data.target);
  out << "R,slenderness";
  if (pair) out << ",separation,heading";
  for (Eigen::Index j = 0; j < data.outputs.cols(); ++j) out << ",y" << j;
  out << "\n";
  for (Eigen::Index r = 0; r < data.inputs.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.inputs.cols(); ++c) out << (c ? "," : "") << data.inputs(r, c);
    for (Eigen::Index c = 0; c < data.outputs.cols(); ++c) out << "," << data.outputs(r, c);
    out << "\n";
  }
  require(static_cast<bool>(out), ErrorKind::io, "failed writing " + path);
}

Dataset load_dataset(const std::string& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::getline(in, line);
  const std::string tag = std::string("# schema: ") + kDatasetSchema + " target=";
  require(line.rfind(tag, 0) == 0, ErrorKind::parse,
          path + ": line 1: expected '" + tag + "<map>'");
  Dataset d;
  d.target = map_from_name(line.substr(tag.size()));
  std::getline(in, line);
  const int in_dim = map_input_dim(d.target);
  std::size_t line_no = 2;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        require(used == cell.size(), ErrorKind::parse, "");
      } catch (...) {
        fail(ErrorKind::parse, path + ": line " + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
    }
    require(rows.empty() || row.size() == rows.front().size(), ErrorKind::parse,
            path + ": line " + std::to_string(line_no) + ": wrong column count");
    require(static_cast<int>(row.size()) > in_dim, ErrorKind::parse,
            path + ": line " + std::to_string(line_no) + ": too few columns");
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto nout = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()) - in_dim;
  d.inputs.resize(n, in_dim);
  d.outputs.resize(n, nout);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (int c = 0; c < in_dim; ++c) d.inputs(r, c) = rows[r][c];
    for (Eigen::Index c = 0; c < nout; ++c) d.outputs(r, c) = rows[r][in_dim + c];
  }
  return d;
}

}  // namespace wecfarm
