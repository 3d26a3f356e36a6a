#include "semilab/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace semilab {

using nlohmann::json;

namespace {

void allow_only(const json &obj, const std::string &where, std::initializer_list<const char *> keys) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> ok(keys.begin(), keys.end());
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError(where + ": unknown key \"" + it.key() + "\"");
}

double get_number(const json &v, const std::string &where) {
  if (!v.is_number()) throw ConfigError(where + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(where + ": not finite");
  return d;
}

int get_int(const json &v, const std::string &where) {
  if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
  return v.get<int>();
}

std::vector<double> get_numbers(const json &v, const std::string &where) {
  if (!v.is_array()) throw ConfigError(where + ": expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_number(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Point get_point(const json &v, int dim, const std::string &where) {
  const auto xs = get_numbers(v, where);
  if (static_cast<int>(xs.size()) != dim) throw ConfigError(where + ": expected " + std::to_string(dim) + " coordinates");
  return {xs[0], dim == 2 ? xs[1] : 0.0};
}

json point_json(const Point &p, int dim) {
  if (dim == 1) return json::array({p[0]});
  return json::array({p[0], p[1]});
}

void parse_thresholds(const json &t, Thresholds &th) {
  allow_only(t, "thresholds",
             {"C_ball", "margin", "ratio_cap", "split_min", "split_fraction", "ball_factor", "nodal_samples",
              "doubling_factor", "doubling_centers", "tunneling_radii", "fbi_C0", "low_fraction"});
  auto num = [&](const char *k, double &dst) {
    if (t.contains(k)) dst = get_number(t[k], std::string("thresholds.") + k);
  };
  num("C_ball", th.C_ball);
  num("margin", th.margin);
  num("ratio_cap", th.ratio_cap);
  num("split_min", th.split_min);
  num("split_fraction", th.split_fraction);
  num("ball_factor", th.ball_factor);
  num("doubling_factor", th.doubling_factor);
  num("fbi_C0", th.fbi_C0);
  num("low_fraction", th.low_fraction);
  if (t.contains("nodal_samples")) {
    const int s = get_int(t["nodal_samples"], "thresholds.nodal_samples");
    if (s < 1) throw ConfigError("thresholds.nodal_samples: must be >= 1");
    th.nodal_samples = static_cast<std::size_t>(s);
  }
  if (t.contains("doubling_centers")) {
    th.doubling_centers = get_int(t["doubling_centers"], "thresholds.doubling_centers");
    if (th.doubling_centers < 1) throw ConfigError("thresholds.doubling_centers: must be >= 1");
  }
  if (t.contains("tunneling_radii")) th.tunneling_radii = get_numbers(t["tunneling_radii"], "thresholds.tunneling_radii");
  if (!(th.C_ball > 0 && th.ball_factor > 0 && th.doubling_factor > 0 && th.fbi_C0 > 0))
    throw ConfigError("thresholds: radius factors and C0 must be > 0");
  if (!(th.low_fraction > 0 && th.low_fraction < 1)) throw ConfigError("thresholds.low_fraction: must be in (0, 1)");
  for (double r : th.tunneling_radii)
    if (!(r > 0 && r < 0.25)) throw ConfigError("thresholds.tunneling_radii: need 0 < r < 1/4");
}

} // namespace

ExperimentConfig parse_config(const std::string &text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error &e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  allow_only(j, "config",
             {"spec_version", "dim", "grid", "h_list", "potential", "energy_target", "eigencount", "tasks",
              "output_dir", "seed", "render_levels", "growth_t", "carleman", "thresholds"});
  ExperimentConfig c;
  if (j.contains("spec_version")) {
    c.spec_version = get_int(j["spec_version"], "spec_version");
    if (c.spec_version != 1) throw ConfigError("spec_version: only version 1 is understood");
  }
  for (const char *k : {"dim", "h_list", "potential", "energy_target", "tasks"})
    if (!j.contains(k)) throw ConfigError(std::string("config: missing required key \"") + k + "\"");

  c.dim = get_int(j["dim"], "dim");
  if (c.dim != 1 && c.dim != 2) throw ConfigError("dim: must be 1 or 2");

  if (j.contains("grid")) {
    const auto &g = j["grid"];
    if (g.is_string()) {
      if (g.get<std::string>() != "auto") throw ConfigError("grid: expected \"auto\" or a power of two");
    } else {
      const int n = get_int(g, "grid");
      if (n < 16 || !is_pow2(n)) throw ConfigError("grid: must be a power of two >= 16");
      c.grid = n;
    }
  }

  c.h_list = get_numbers(j["h_list"], "h_list");
  if (c.h_list.empty()) throw ConfigError("h_list: empty");
  for (std::size_t i = 0; i < c.h_list.size(); ++i) {
    if (!(c.h_list[i] > 0)) throw ConfigError("h_list: entries must be > 0");
    if (i > 0 && !(c.h_list[i] < c.h_list[i - 1])) throw ConfigError("h_list: must be strictly decreasing");
  }

  const auto &pot = j["potential"];
  allow_only(pot, "potential", {"bumps", "periodization_radius"});
  if (pot.contains("periodization_radius"))
    c.potential.periodization_radius = get_int(pot["periodization_radius"], "potential.periodization_radius");
  if (pot.contains("bumps")) {
    if (!pot["bumps"].is_array()) throw ConfigError("potential.bumps: expected an array");
    for (std::size_t i = 0; i < pot["bumps"].size(); ++i) {
      const auto &b = pot["bumps"][i];
      const std::string w = "potential.bumps[" + std::to_string(i) + "]";
      allow_only(b, w, {"amplitude", "width", "center"});
      for (const char *k : {"amplitude", "width", "center"})
        if (!b.contains(k)) throw ConfigError(w + ": missing \"" + k + "\"");
      Bump bump;
      bump.amplitude = get_number(b["amplitude"], w + ".amplitude");
      bump.width = get_number(b["width"], w + ".width");
      bump.center = get_point(b["center"], c.dim, w + ".center");
      c.potential.bumps.push_back(bump);
    }
  }
  try {
    validate(c.potential, c.dim);
  } catch (const Error &e) {
    throw ConfigError(std::string("potential: ") + e.what());
  }

  c.energy_target = get_number(j["energy_target"], "energy_target");
  if (j.contains("eigencount")) {
    c.eigencount = get_int(j["eigencount"], "eigencount");
    if (c.eigencount < 1) throw ConfigError("eigencount: must be >= 1");
  }

  if (!j["tasks"].is_array() || j["tasks"].empty()) throw ConfigError("tasks: expected a nonempty array");
  for (const auto &t : j["tasks"]) {
    if (!t.is_string()) throw ConfigError("tasks: entries must be strings");
    const auto name = t.get<std::string>();
    if (std::find(kTaskNames.begin(), kTaskNames.end(), name) == kTaskNames.end())
      throw ConfigError("tasks: unknown task \"" + name + "\"");
    if (std::find(c.tasks.begin(), c.tasks.end(), name) != c.tasks.end())
      throw ConfigError("tasks: \"" + name + "\" listed twice");
    c.tasks.push_back(name);
  }

  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) throw ConfigError("output_dir: expected a string");
    c.output_dir = j["output_dir"].get<std::string>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("seed: expected a nonnegative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("render_levels")) {
    c.render_levels = get_int(j["render_levels"], "render_levels");
    if (c.render_levels < 2) throw ConfigError("render_levels: must be >= 2");
  }
  if (j.contains("growth_t")) {
    c.growth_t = get_numbers(j["growth_t"], "growth_t");
    for (double t : c.growth_t)
      if (t < 0) throw ConfigError("growth_t: entries must be >= 0");
  }
  if (j.contains("carleman")) {
    const auto &cj = j["carleman"];
    allow_only(cj, "carleman", {"tau", "A", "r_inner", "R_outer", "center", "mu_list"});
    auto &w = c.carleman.weight;
    w.dim = c.dim;
    if (cj.contains("tau")) w.tau = get_number(cj["tau"], "carleman.tau");
    if (cj.contains("A")) w.A = get_number(cj["A"], "carleman.A");
    if (cj.contains("r_inner")) w.r_inner = get_number(cj["r_inner"], "carleman.r_inner");
    if (cj.contains("R_outer")) w.R_outer = get_number(cj["R_outer"], "carleman.R_outer");
    if (cj.contains("center")) w.center = get_point(cj["center"], c.dim, "carleman.center");
    if (cj.contains("mu_list")) c.carleman.mu_list = get_numbers(cj["mu_list"], "carleman.mu_list");
  }
  c.carleman.weight.dim = c.dim;
  try {
    CarlemanWeight probe = c.carleman.weight;
    for (double mu : c.carleman.mu_list) {
      probe.mu = mu;
      validate(probe);
    }
  } catch (const Error &e) {
    throw ConfigError(std::string("carleman: ") + e.what());
  }
  if (j.contains("thresholds")) parse_thresholds(j["thresholds"], c.thresholds);
  return c;
}

std::string config_to_json(const ExperimentConfig &c, int indent) {
  json j;
  j["spec_version"] = c.spec_version;
  j["dim"] = c.dim;
  j["grid"] = c.grid ? json(*c.grid) : json("auto");
  j["h_list"] = c.h_list;
  json bumps = json::array();
  for (const auto &b : c.potential.bumps)
    bumps.push_back({{"amplitude", b.amplitude}, {"width", b.width}, {"center", point_json(b.center, c.dim)}});
  j["potential"] = {{"bumps", bumps}, {"periodization_radius", c.potential.periodization_radius}};
  j["energy_target"] = c.energy_target;
  j["eigencount"] = c.eigencount;
  j["tasks"] = c.tasks;
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  j["render_levels"] = c.render_levels;
  j["growth_t"] = c.growth_t;
  const auto &w = c.carleman.weight;
  j["carleman"] = {{"tau", w.tau},         {"A", w.A},
                   {"r_inner", w.r_inner}, {"R_outer", w.R_outer},
                   {"center", point_json(w.center, c.dim)}, {"mu_list", c.carleman.mu_list}};
  const auto &t = c.thresholds;
  j["thresholds"] = {{"C_ball", t.C_ball},
                     {"margin", t.margin},
                     {"ratio_cap", t.ratio_cap},
                     {"split_min", t.split_min},
                     {"split_fraction", t.split_fraction},
                     {"ball_factor", t.ball_factor},
                     {"nodal_samples", t.nodal_samples},
                     {"doubling_factor", t.doubling_factor},
                     {"doubling_centers", t.doubling_centers},
                     {"tunneling_radii", t.tunneling_radii},
                     {"fbi_C0", t.fbi_C0},
                     {"low_fraction", t.low_fraction}};
  return j.dump(indent);
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fnv1a_hex(const std::string &bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvWriter::comment(const std::string &line) { comments_.push_back(line); }

std::string CsvWriter::escape(const std::string &f) {
  if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
  std::string out = "\"";
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void CsvWriter::row(const std::vector<std::string> &fields) {
  if (fields.size() != header_.size()) throw Error("CsvWriter: row width does not match the header");
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) body_ += ',';
    body_ += escape(fields[i]);
  }
  body_ += "\r\n";
}

std::string CsvWriter::str() const {
  std::string out;
  for (const auto &c : comments_) out += "# " + c + "\r\n";
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (i) out += ',';
    out += escape(header_[i]);
  }
  out += "\r\n";
  return out + body_;
}

std::string field_to_csv(const ScalarField &u) {
  CsvWriter w({"ix", "iy", "value"});
  w.comment("dim=" + std::to_string(u.grid.dim()));
  w.comment("n=" + std::to_string(u.grid.n()));
  if (u.h) w.comment("h=" + format_double(*u.h));
  if (!u.label.empty()) w.comment("label=" + u.label);
  for (std::size_t i = 0; i < u.grid.size(); ++i) {
    const auto c = u.grid.coords(i);
    w.row({std::to_string(c[0]), std::to_string(c[1]), format_double(u.values[i])});
  }
  return w.str();
}

ScalarField field_from_csv(const std::string &text) {
  std::istringstream in(text);
  std::string line;
  int dim = 0, n = 0;
  std::optional<double> h;
  std::string label;
  bool header = false;
  std::vector<std::pair<std::size_t, double>> rows;
  auto parse_double = [](const std::string &s, const std::string &what) {
    double v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw Error("field csv: bad " + what + " \"" + s + "\"");
    return v;
  };
  auto parse_int = [](const std::string &s, const std::string &what) {
    long v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw Error("field csv: bad " + what + " \"" + s + "\"");
    return v;
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string kv = line.substr(1);
      kv.erase(0, kv.find_first_not_of(' '));
      const auto eq = kv.find('=');
      if (eq == std::string::npos) continue;
      const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
      if (k == "dim") dim = static_cast<int>(parse_int(v, "dim"));
      if (k == "n") n = static_cast<int>(parse_int(v, "n"));
      if (k == "h") h = parse_double(v, "h");
      if (k == "label") label = v;
      continue;
    }
    if (!header) {
      if (line != "ix,iy,value") throw Error("field csv: expected header ix,iy,value");
      header = true;
      if (dim == 0 || n == 0) throw Error("field csv: dim and n metadata must precede the header");
      continue;
    }
    const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) throw Error("field csv: short row");
    const long ix = parse_int(line.substr(0, c1), "ix");
    const long iy = parse_int(line.substr(c1 + 1, c2 - c1 - 1), "iy");
    const double v = parse_double(line.substr(c2 + 1), "value");
    if (ix < 0 || ix >= n || iy < 0 || iy >= (dim == 2 ? n : 1)) throw Error("field csv: index out of range");
    rows.push_back({static_cast<std::size_t>(dim == 2 ? iy * n + ix : ix), v});
  }
  if (!header) throw Error("field csv: no header");
  ScalarField u(TorusGrid(dim, n), label);
  u.h = h;
  if (rows.size() != u.grid.size()) throw Error("field csv: expected " + std::to_string(u.grid.size()) + " rows");
  std::vector<char> seen(u.grid.size(), 0);
  for (const auto &[i, v] : rows) {
    if (seen[i]) throw Error("field csv: duplicate index");
    seen[i] = 1;
    u.values[i] = v;
  }
  return u;
}

RasterImage render_levels(const ScalarField &u, int n_levels) {
  if (n_levels < 2) throw Error("render_levels: n_levels must be >= 2");
  const TorusGrid &g = u.grid;
  const int n = g.n();
  const int rows = g.dim() == 2 ? n : 1;
  RasterImage img;
  img.width = n;
  img.height = rows;
  img.gray.assign(g.size(), 128);
  const auto [lo, hi] = std::minmax_element(u.values.begin(), u.values.end());
  img.u_min = *lo;
  img.u_max = *hi;
  const double range = img.u_max - img.u_min;
  if (!(range > 0.0)) return img;
  for (int j = 0; j < n_levels; ++j) img.levels.push_back(img.u_min + (j + 0.5) * range / n_levels);
  for (std::size_t i = 0; i < g.size(); ++i)
    img.gray[i] = static_cast<std::uint8_t>(std::lround(255.0 * (u.values[i] - img.u_min) / range));
  for (int iy = 0; iy < rows; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      double a = u.values[g.index(ix, iy)], b = a;
      const int jx = (ix + 1) % n;
      for (double v : {u.values[g.index(jx, iy)], g.dim() == 2 ? u.values[g.index(ix, (iy + 1) % n)] : a,
                       g.dim() == 2 ? u.values[g.index(jx, (iy + 1) % n)] : a}) {
        a = std::min(a, v);
        b = std::max(b, v);
      }
      for (double l : img.levels)
        if (a <= l && l < b) {
          img.gray[g.index(ix, iy)] = 0;
          break;
        }
    }
  return img;
}

std::string to_pgm(const RasterImage &img) {
  std::string out = "P5\n";
  out += "# u_min=" + format_double(img.u_min) + " u_max=" + format_double(img.u_max) + "\n";
  out += "# gray=round(255*(u-u_min)/(u_max-u_min)); contour pixels 0; levels=" + std::to_string(img.levels.size());
  for (double l : img.levels) out += " " + format_double(l);
  out += "\n";
  out += std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(reinterpret_cast<const char *>(img.gray.data()), img.gray.size());
  return out;
}

OverlapReport forbidden_overlap(const ScalarField &u, const ScalarField &V, double E, double low_fraction) {
  if (V.grid != u.grid) throw Error("forbidden_overlap: V and u live on different grids");
  OverlapReport rep;
  const double cut = low_fraction * u.sup_norm();
  rep.low.resize(u.values.size());
  rep.mask.resize(u.values.size());
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    rep.low[i] = std::abs(u.values[i]) < cut;
    rep.mask[i] = V.values[i] > E;
    rep.mask_pixels += rep.mask[i];
    rep.overlap_pixels += rep.mask[i] && rep.low[i];
  }
  rep.fraction = rep.mask_pixels ? double(rep.overlap_pixels) / rep.mask_pixels : 0.0;
  return rep;
}

void write_file(const std::string &path, const std::string &bytes) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot open " + path + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("write to " + path + " failed");
}

std::string read_file(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

} // namespace semilab
