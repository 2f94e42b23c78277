#include "polyflow/jsonio.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace polyflow::io {

using nlohmann::json;

namespace {

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json vec_to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vec vec_from_json(const json& a) {
  Vec v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v(static_cast<int>(i)) = a[i].get<double>();
  return v;
}

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Mat mat_from_json(const json& rows) {
  const int nr = static_cast<int>(rows.size());
  const int nc = nr > 0 ? static_cast<int>(rows[0].size()) : 0;
  Mat m(nr, nc);
  for (int r = 0; r < nr; ++r)
    for (int c = 0; c < nc; ++c) m(r, c) = rows[static_cast<size_t>(r)][static_cast<size_t>(c)].get<double>();
  return m;
}

std::string origin_to_string(const pwl::RowOrigin& o) {
  switch (o.kind) {
    case pwl::RowKind::Neuron:
      return "neuron:" + std::to_string(o.layer) + ":" + std::to_string(o.neuron);
    case pwl::RowKind::Output:
      return "h<=0";
    case pwl::RowKind::Domain:
      return "domain:" + std::to_string(o.neuron);  // neuron slot holds the dimension
  }
  return "?";
}

pwl::RowOrigin origin_from_string(const std::string& s) {
  pwl::RowOrigin o;
  if (s.rfind("neuron:", 0) == 0) {
    o.kind = pwl::RowKind::Neuron;
    const auto rest = s.substr(7);
    const auto colon = rest.find(':');
    o.layer = std::stoi(rest.substr(0, colon));
    o.neuron = std::stoi(rest.substr(colon + 1));
  } else if (s.rfind("domain", 0) == 0) {
    o.kind = pwl::RowKind::Domain;
    const auto colon = s.find(':');
    if (colon != std::string::npos) o.neuron = std::stoi(s.substr(colon + 1));
  } else {
    o.kind = pwl::RowKind::Output;
  }
  return o;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

grid::RadialNetwork load_network(const std::string& path) {
  const json j = read_json(path);
  grid::RadialNetwork net;
  net.n_bus = static_cast<int>(j.at("buses").size());
  for (const auto& b : j.at("buses"))
    if (b.value("is_root", false)) net.root = b.at("index").get<int>();
  for (const auto& br : j.at("branches")) {
    grid::Branch branch;
    branch.from = br.at("from").get<int>();
    branch.to = br.at("to").get<int>();
    branch.r_pu = br.at("r_pu").get<double>();
    branch.x_pu = br.at("x_pu").get<double>();
    branch.s_max_pu = br.value("s_max_pu", 0.0);
    net.branches.push_back(branch);
  }
  net.root_voltage_pu = j.at("root_voltage_pu").get<double>();
  net.v_min_pu = j.at("v_min_pu").get<double>();
  net.v_max_pu = j.at("v_max_pu").get<double>();
  net.s_max_pu = j.at("s_max_pu").get<double>();
  net.base_mva = j.at("base_mva").get<double>();
  net.base_kv = j.at("base_kv").get<double>();
  return net;
}

void save_network(const grid::RadialNetwork& net, const std::string& path) {
  json j;
  json buses = json::array();
  for (int i = 0; i < net.n_bus; ++i) buses.push_back({{"index", i}, {"is_root", i == net.root}});
  j["buses"] = buses;
  json branches = json::array();
  for (const auto& b : net.branches) {
    json br = {{"from", b.from}, {"to", b.to}, {"r_pu", b.r_pu}, {"x_pu", b.x_pu}};
    if (b.s_max_pu > 0.0) br["s_max_pu"] = b.s_max_pu;
    branches.push_back(br);
  }
  j["branches"] = branches;
  j["root_voltage_pu"] = net.root_voltage_pu;
  j["v_min_pu"] = net.v_min_pu;
  j["v_max_pu"] = net.v_max_pu;
  j["s_max_pu"] = net.s_max_pu;
  j["base_mva"] = net.base_mva;
  j["base_kv"] = net.base_kv;
  write_json(path, j);
}

scen::Scenario load_scenario(const std::string& path) {
  const json j = read_json(path);
  scen::Scenario sc;
  for (const auto& b : j.at("buildings")) {
    scen::BuildingParams bp;
    bp.bus = b.at("bus").get<int>();
    bp.heat_capacity = b.at("heat_capacity_mwh_per_degc").get<double>();
    bp.heat_transfer = b.at("heat_transfer_mw_per_degc").get<double>();
    bp.cop = b.at("cop").get<double>();
    bp.power_factor = b.at("power_factor").get<double>();
    bp.theta_min = b.at("theta_min_degc").get<double>();
    bp.theta_max = b.at("theta_max_degc").get<double>();
    bp.p_hvac_max = b.at("p_hvac_max_mw").get<double>();
    bp.theta_init = b.value("theta_init_degc", 0.5 * (bp.theta_min + bp.theta_max));
    sc.buildings.push_back(bp);
  }
  const json& series = j.at("series");
  sc.series.theta_out = series.at("theta_out_degc").get<std::vector<double>>();
  sc.series.q_heat_mw = series.at("q_heat_mw").get<std::vector<double>>();
  for (const auto& l : series.at("loads")) {
    scen::LoadSeries ls;
    ls.bus = l.at("bus").get<int>();
    ls.p_d_pu = l.at("p_d_pu").get<std::vector<double>>();
    ls.q_d_pu = l.at("q_d_pu").get<std::vector<double>>();
    sc.series.loads.push_back(std::move(ls));
  }
  for (const auto& d : j.at("dgs")) {
    scen::DgSeries ds;
    ds.bus = d.at("bus").get<int>();
    ds.g_avail_pu = d.at("g_avail_pu").get<std::vector<double>>();
    sc.series.dgs.push_back(std::move(ds));
  }
  const json& tariffs = j.at("tariffs");
  sc.series.eta_buy = tariffs.at("eta_buy_per_mwh").get<std::vector<double>>();
  sc.series.eta_sell = tariffs.at("eta_sell_per_mwh").get<std::vector<double>>();
  sc.series.dt_hours = j.at("dt_hours").get<double>();
  const auto issues = sc.validate();
  if (!issues.empty()) throw std::runtime_error("scenario " + path + ": " + issues.front());
  return sc;
}

void save_scenario(const scen::Scenario& sc, const std::string& path) {
  json j;
  json buildings = json::array();
  for (const auto& b : sc.buildings)
    buildings.push_back({{"bus", b.bus},
                         {"heat_capacity_mwh_per_degc", b.heat_capacity},
                         {"heat_transfer_mw_per_degc", b.heat_transfer},
                         {"cop", b.cop},
                         {"power_factor", b.power_factor},
                         {"theta_min_degc", b.theta_min},
                         {"theta_max_degc", b.theta_max},
                         {"p_hvac_max_mw", b.p_hvac_max},
                         {"theta_init_degc", b.theta_init}});
  j["buildings"] = buildings;
  json loads = json::array();
  for (const auto& l : sc.series.loads)
    loads.push_back({{"bus", l.bus}, {"p_d_pu", l.p_d_pu}, {"q_d_pu", l.q_d_pu}});
  j["series"] = {{"theta_out_degc", sc.series.theta_out},
                 {"q_heat_mw", sc.series.q_heat_mw},
                 {"loads", loads}};
  json dgs = json::array();
  for (const auto& d : sc.series.dgs)
    dgs.push_back({{"bus", d.bus}, {"g_avail_pu", d.g_avail_pu}});
  j["dgs"] = dgs;
  j["tariffs"] = {{"eta_buy_per_mwh", sc.series.eta_buy},
                  {"eta_sell_per_mwh", sc.series.eta_sell}};
  j["dt_hours"] = sc.series.dt_hours;
  write_json(path, j);
}

nn::MlpParams load_mlp(const std::string& path) {
  const json j = read_json(path);
  nn::MlpParams p;
  for (const auto& layer : j.at("layers")) {
    if (layer.contains("w_out")) {
      p.w_out = vec_from_json(layer.at("w_out"));
      p.b_out = layer.at("b_out").get<double>();
    } else {
      p.w.push_back(mat_from_json(layer.at("w")));
      p.b.push_back(vec_from_json(layer.at("b")));
    }
  }
  p.scaler.shift = vec_from_json(j.at("input_scaler").at("shift"));
  p.scaler.scale = vec_from_json(j.at("input_scaler").at("scale"));
  if (j.contains("meta") && j.at("meta").contains("feature_names"))
    p.feature_names = j.at("meta").at("feature_names").get<std::vector<std::string>>();
  p.check_shapes();
  return p;
}

void save_mlp(const nn::MlpParams& p, const std::string& path) {
  json layers = json::array();
  for (size_t l = 0; l < p.w.size(); ++l)
    layers.push_back({{"w", mat_to_json(p.w[l])}, {"b", vec_to_json(p.b[l])}});
  layers.push_back({{"w_out", vec_to_json(p.w_out)}, {"b_out", p.b_out}});
  json j;
  j["layers"] = layers;
  j["input_scaler"] = {{"shift", vec_to_json(p.scaler.shift)},
                       {"scale", vec_to_json(p.scaler.scale)}};
  j["meta"] = {{"feature_names", p.feature_names}};
  write_json(path, j);
}

void save_dataset_csv(const std::vector<data::Sample>& samples, const std::string& path) {
  if (samples.empty()) throw std::invalid_argument("save_dataset_csv: empty dataset");
  std::ostringstream os;
  const int d = static_cast<int>(samples.front().x.size());
  for (int j = 0; j < d; ++j) os << "x_" << j << ",";
  os << "h,p_loss\n";
  for (const auto& s : samples) {
    for (int j = 0; j < d; ++j) os << format_double(s.x(j)) << ",";
    os << format_double(s.h) << "," << format_double(s.p_loss) << "\n";
  }
  write_text(path, os.str());
}

std::vector<data::Sample> load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty dataset file " + path);
  int d = 0;
  {
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) ++d;
    d -= 2;
  }
  if (d < 1) throw std::runtime_error("dataset header malformed in " + path);
  std::vector<data::Sample> samples;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    data::Sample s;
    s.x = Vec(d);
    for (int j = 0; j < d; ++j) {
      std::getline(row, cell, ',');
      s.x(j) = std::stod(cell);
    }
    std::getline(row, cell, ',');
    s.h = std::stod(cell);
    std::getline(row, cell, ',');
    s.p_loss = std::stod(cell);
    samples.push_back(std::move(s));
  }
  return samples;
}

data::DomainBox load_domain_box(const std::string& path) {
  const json j = read_json(path);
  data::DomainBox box;
  box.lo = vec_from_json(j.at("lo"));
  box.hi = vec_from_json(j.at("hi"));
  return box;
}

void save_domain_box(const data::DomainBox& box, const std::string& path) {
  write_json(path, {{"lo", vec_to_json(box.lo)}, {"hi", vec_to_json(box.hi)}});
}

std::vector<RegionRecord> load_regions(const std::string& path) {
  const json j = read_json(path);
  std::vector<RegionRecord> out;
  for (const auto& r : j) {
    RegionRecord rec;
    rec.pattern = r.at("pattern").get<std::string>();
    rec.poly.a = mat_from_json(r.at("A"));
    rec.poly.beta = vec_from_json(r.at("beta"));
    for (const auto& tag : r.at("provenance"))
      rec.poly.origins.push_back(origin_from_string(tag.get<std::string>()));
    rec.affine_w = vec_from_json(r.at("affine_w"));
    rec.affine_b = r.at("affine_b").get<double>();
    rec.sample_count = r.at("sample_count").get<long>();
    rec.rows_removed = r.value("rows_removed", -1);
    if (r.contains("witness")) rec.witness = vec_from_json(r.at("witness"));
    out.push_back(std::move(rec));
  }
  return out;
}

void save_regions(const std::vector<RegionRecord>& regions, const std::string& path) {
  json j = json::array();
  for (const auto& rec : regions) {
    json r;
    r["pattern"] = rec.pattern;
    r["A"] = mat_to_json(rec.poly.a);
    r["beta"] = vec_to_json(rec.poly.beta);
    json prov = json::array();
    for (const auto& o : rec.poly.origins) prov.push_back(origin_to_string(o));
    r["provenance"] = prov;
    r["affine_w"] = vec_to_json(rec.affine_w);
    r["affine_b"] = rec.affine_b;
    r["sample_count"] = rec.sample_count;
    if (rec.rows_removed >= 0) r["rows_removed"] = rec.rows_removed;
    if (rec.witness.size() > 0) r["witness"] = vec_to_json(rec.witness);
    j.push_back(r);
  }
  write_json(path, j);
}

void save_schedule_csv(const scen::Schedule& sched, const std::string& path) {
  std::ostringstream os;
  os << "step,kind,id,value\n";
  for (int t = 0; t < sched.p_hvac.rows(); ++t) {
    for (int i = 0; i < sched.p_hvac.cols(); ++i)
      os << t << ",hvac," << i << "," << format_double(sched.p_hvac(t, i)) << "\n";
    for (int g = 0; g < sched.curtail.cols(); ++g)
      os << t << ",dg," << g << "," << format_double(sched.curtail(t, g)) << "\n";
  }
  write_text(path, os.str());
}

scen::Schedule load_schedule_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);  // header
  struct Entry {
    int t;
    std::string kind;
    int id;
    double v;
  };
  std::vector<Entry> entries;
  int max_t = -1, max_hvac = -1, max_dg = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    Entry e;
    std::getline(row, cell, ',');
    e.t = std::stoi(cell);
    std::getline(row, e.kind, ',');
    std::getline(row, cell, ',');
    e.id = std::stoi(cell);
    std::getline(row, cell, ',');
    e.v = std::stod(cell);
    max_t = std::max(max_t, e.t);
    if (e.kind == "hvac") max_hvac = std::max(max_hvac, e.id);
    if (e.kind == "dg") max_dg = std::max(max_dg, e.id);
    entries.push_back(std::move(e));
  }
  scen::Schedule s;
  s.p_hvac = Mat::Zero(max_t + 1, max_hvac + 1);
  s.curtail = Mat::Zero(max_t + 1, max_dg + 1);
  for (const auto& e : entries) {
    if (e.kind == "hvac")
      s.p_hvac(e.t, e.id) = e.v;
    else
      s.curtail(e.t, e.id) = e.v;
  }
  return s;
}

}  // namespace polyflow::io
