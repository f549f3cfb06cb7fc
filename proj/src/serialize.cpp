#include "batchlr/serialize.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace batchlr {

using json = nlohmann::ordered_json;

namespace {

json vec_to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec vec_from_json(const json& a, const char* what) {
  if (!a.is_array()) throw io_error(std::string(what) + ": expected an array");
  Vec v(static_cast<int>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number())
      throw io_error(std::string(what) + ": expected numeric entries");
    v[static_cast<int>(i)] = a[i].get<double>();
  }
  return v;
}

}  // namespace

std::string dataset_to_json(const Dataset& ds) {
  json root;
  root["format"] = "batchlr-dataset-v1";
  json p;
  p["d"] = ds.params.d;
  p["n"] = ds.params.n;
  p["m"] = ds.params.m;
  p["alpha"] = ds.params.alpha;
  p["sigma"] = ds.params.sigma;
  p["R"] = ds.params.R;
  p["k"] = ds.params.k;
  p["seed"] = ds.params.seed;
  root["params"] = p;
  root["covariates"] = ds.cov.name();
  root["beta_star"] = vec_to_json(ds.beta_star);
  json batches = json::array();
  for (const Batch& b : ds.batches) {
    json jb;
    json rows = json::array();
    for (int i = 0; i < b.X.rows(); ++i)
      rows.push_back(vec_to_json(b.X.row(i).transpose()));
    jb["X"] = rows;
    jb["y"] = vec_to_json(b.y);
    batches.push_back(jb);
  }
  root["batches"] = batches;
  json prov = json::array();
  for (const Provenance& pv : ds.provenance) {
    json jp;
    jp["origin"] = pv.origin == BatchOrigin::Inlier ? "inlier" : "outlier";
    jp["detail"] = pv.detail;
    prov.push_back(jp);
  }
  root["provenance"] = prov;
  return root.dump(2);
}

Dataset dataset_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw io_error(std::string("dataset parse: ") + e.what());
  }
  if (!root.is_object() || root.value("format", "") != "batchlr-dataset-v1")
    throw io_error("dataset parse: missing format tag batchlr-dataset-v1");

  Dataset ds;
  const json& p = root.at("params");
  ds.params.d = p.at("d").get<int>();
  ds.params.n = p.at("n").get<int>();
  ds.params.m = p.at("m").get<int>();
  ds.params.alpha = p.at("alpha").get<double>();
  ds.params.sigma = p.at("sigma").get<double>();
  ds.params.R = p.at("R").get<double>();
  ds.params.k = p.at("k").get<int>();
  ds.params.seed = p.at("seed").get<uint64_t>();
  ds.cov = CovariateModel::parse(root.at("covariates").get<std::string>());
  ds.beta_star = vec_from_json(root.at("beta_star"), "beta_star");
  for (const json& jb : root.at("batches")) {
    const json& rows = jb.at("X");
    Batch b;
    b.X.resize(static_cast<int>(rows.size()), ds.params.d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      Vec r = vec_from_json(rows[i], "batch row");
      if (r.size() != ds.params.d)
        throw io_error("dataset parse: batch row dimension mismatch");
      b.X.row(static_cast<int>(i)) = r.transpose();
    }
    b.y = vec_from_json(jb.at("y"), "batch labels");
    if (b.y.size() != b.X.rows())
      throw io_error("dataset parse: label count mismatch");
    ds.batches.push_back(std::move(b));
  }
  for (const json& jp : root.at("provenance")) {
    Provenance pv;
    const std::string origin = jp.at("origin").get<std::string>();
    if (origin == "inlier")
      pv.origin = BatchOrigin::Inlier;
    else if (origin == "outlier")
      pv.origin = BatchOrigin::Outlier;
    else
      throw io_error("dataset parse: unknown provenance origin " + origin);
    pv.detail = jp.value("detail", "");
    ds.provenance.push_back(std::move(pv));
  }
  if (ds.provenance.size() != ds.batches.size())
    throw io_error("dataset parse: provenance length mismatch");
  return ds;
}

std::string candidates_to_json(const std::vector<Vec>& candidates) {
  json a = json::array();
  for (const Vec& c : candidates) a.push_back(vec_to_json(c));
  return a.dump(2);
}

std::vector<Vec> candidates_from_json(const std::string& text) {
  json a;
  try {
    a = json::parse(text);
  } catch (const json::exception& e) {
    throw io_error(std::string("candidates parse: ") + e.what());
  }
  if (!a.is_array()) throw io_error("candidates parse: expected a JSON array");
  std::vector<Vec> out;
  for (const json& c : a) out.push_back(vec_from_json(c, "candidate"));
  return out;
}

std::string format_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw io_error("read failed: " + path);
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open for writing: " + path);
  out << text;
  out.flush();
  if (!out) throw io_error("write failed: " + path);
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace batchlr
