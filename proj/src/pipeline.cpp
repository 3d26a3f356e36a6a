#include "semilab/pipeline.hpp"

#include <fftw3.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>

#include "json.hpp"
#include "semilab/analytic.hpp"
#include "semilab/carleman.hpp"
#include "semilab/eigensolver.hpp"
#include "semilab/fbi.hpp"
#include "semilab/localization.hpp"
#include "semilab/nodal.hpp"
#include "semilab/parallel.hpp"
#include "semilab/spectral.hpp"

namespace semilab {

using nlohmann::json;

namespace {

constexpr std::size_t kVanishingPoints = 8;

std::string fd(double v) { return format_double(v); }

struct Context {
  const ExperimentConfig &cfg;
  std::string dir;
  std::vector<SolveResult> solved; // per h
  std::vector<ScalarField> V;      // per h, on each eigenfunction grid
  std::vector<std::string> solve_errors;

  bool have(std::size_t k) const { return solve_errors[k].empty() && !solved[k].pairs.empty(); }
  const EigenPair &pair(std::size_t k) const {
    if (!have(k)) throw Error("no eigenpair at h = " + fd(cfg.h_list[k]) + ": " + solve_errors[k]);
    return solved[k].pairs.front();
  }
  std::string put(TaskRecord &rec, const std::string &name, const std::string &bytes) const {
    write_file((std::filesystem::path(dir) / name).string(), bytes);
    rec.files.push_back(name);
    return name;
  }
};

void solve_all(Context &ctx) {
  const auto &c = ctx.cfg;
  const std::size_t nh = c.h_list.size();
  ctx.solved.resize(nh);
  ctx.solve_errors.assign(nh, "");
  for (std::size_t k = 0; k < nh; ++k) {
    const double h = c.h_list[k];
    const int n = c.grid ? *c.grid : minimum_grid_size(h);
    const TorusGrid g(c.dim, n);
    ctx.V.push_back(potential_eval(c.potential, g));
    try {
      const auto mode = g.size() <= kDenseLimit && c.dim == 1 ? SolverMode::Dense : SolverMode::Iterative;
      ctx.solved[k] = solve_eigenpairs(ctx.V.back(), h, c.energy_target, c.eigencount, mode);
      for (auto &p : ctx.solved[k].pairs) p.field.h = h;
    } catch (const std::exception &e) {
      ctx.solve_errors[k] = e.what();
    }
  }
}

void task_solve(Context &ctx, TaskRecord &rec) {
  CsvWriter w({"h", "index", "energy", "residual", "n"});
  for (std::size_t k = 0; k < ctx.cfg.h_list.size(); ++k) {
    if (!ctx.have(k)) {
      rec.ok = false;
      rec.notes.push_back("h=" + fd(ctx.cfg.h_list[k]) + ": " + ctx.solve_errors[k]);
      continue;
    }
    const auto &pairs = ctx.solved[k].pairs;
    for (std::size_t i = 0; i < pairs.size(); ++i)
      w.row({fd(pairs[i].h), std::to_string(i), fd(pairs[i].energy), fd(pairs[i].residual),
             std::to_string(pairs[i].field.grid.n())});
    for (const auto &warn : ctx.solved[k].warnings) rec.notes.push_back("h=" + fd(ctx.cfg.h_list[k]) + ": " + warn);
    ctx.put(rec, "field_h" + std::to_string(k) + ".csv", field_to_csv(pairs.front().field));
  }
  ctx.put(rec, "eigenpairs.csv", w.str());
  if (!rec.ok) rec.error = "eigensolve failed for some h";
}

void task_fbi(Context &ctx, TaskRecord &rec, json &summary) {
  std::vector<EigenPair> pairs;
  std::vector<PhaseSpaceGrid> grids;
  for (std::size_t k = 0; k < ctx.cfg.h_list.size(); ++k) {
    const auto &p = ctx.pair(k);
    const double vmin = *std::min_element(ctx.V[k].values.begin(), ctx.V[k].values.end());
    pairs.push_back(p);
    grids.push_back(decay_grid(ctx.cfg.dim, p.h, p.energy, vmin, ctx.cfg.thresholds.fbi_C0));
  }
  const auto rep = decay_scan(pairs, grids, ctx.cfg.thresholds.fbi_C0);
  CsvWriter w({"h", "sup", "sup_norm", "ratio", "dropped"});
  for (const auto &r : rep.table) w.row({fd(r.h), fd(r.sup), fd(r.sup_norm), fd(r.ratio), r.dropped ? "1" : "0"});
  ctx.put(rec, "fbi_decay.csv", w.str());
  summary = {{"delta", rep.delta}, {"log_C1", rep.log_C1}, {"r2", rep.r2}, {"flags", rep.flags}};
}

void task_cauchy(Context &ctx, TaskRecord &rec, json &summary) {
  const int order = ctx.cfg.dim == 1 ? kCauchyOrder1D : kCauchyOrder2D;
  CsvWriter w({"h", "alpha_x", "alpha_y", "M"});
  CsvWriter s({"h", "C_est", "argmax_x", "argmax_y"});
  for (std::size_t k = 0; k < ctx.cfg.h_list.size(); ++k) {
    const auto &p = ctx.pair(k);
    const auto rep = cauchy_fit(p.field, p.h, order);
    for (const auto &row : rep.table)
      w.row({fd(p.h), std::to_string(row.alpha.a[0]), std::to_string(row.alpha.a[1]), fd(row.M)});
    s.row({fd(p.h), fd(rep.C_est), std::to_string(rep.argmax.a[0]), std::to_string(rep.argmax.a[1])});
    summary["C_est"].push_back(rep.C_est);
  }
  ctx.put(rec, "cauchy.csv", w.str());
  ctx.put(rec, "cauchy_summary.csv", s.str());
}

void task_growth(Context &ctx, TaskRecord &rec, json &summary) {
  std::vector<double> t_list = ctx.cfg.growth_t;
  if (t_list.empty()) {
    double t = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < ctx.cfg.h_list.size(); ++k) t = std::min(t, continuation_limit(ctx.pair(k).field, ctx.pair(k).h));
    if (!std::isfinite(t)) t = 0.0;
    t_list = {0.0, 0.5 * t, t};
  }
  summary["t_list"] = t_list;
  CsvWriter w({"h", "t", "M", "ln_ratio"});
  CsvWriter s({"h", "C_growth", "r2", "t_limit", "k_eff"});
  for (std::size_t k = 0; k < ctx.cfg.h_list.size(); ++k) {
    const auto &p = ctx.pair(k);
    const auto rep = continuation_growth(p.field, p.h, t_list);
    for (std::size_t i = 0; i < rep.t_list.size(); ++i)
      w.row({fd(p.h), fd(rep.t_list[i]), fd(rep.M[i]), fd(std::log(rep.M[i] / rep.sup_norm))});
    s.row({fd(p.h), fd(rep.C_growth), fd(rep.r2), fd(rep.t_limit), fd(rep.k_eff)});
    summary["C_growth"].push_back(rep.C_growth);
    for (const auto &f : rep.flags) rec.notes.push_back("h=" + fd(p.h) + ": " + f);
  }
  ctx.put(rec, "growth.csv", w.str());
  ctx.put(rec, "growth_summary.csv", s.str());
}

void task_carleman(Context &ctx, TaskRecord &rec, json &summary) {
  const auto &cc = ctx.cfg.carleman;
  const FourierSeries V(potential_eval(ctx.cfg.potential, TorusGrid(ctx.cfg.dim, 128)), 1e-14);
  const auto sweep = mu_sweep(cc.weight, V, ctx.cfg.energy_target, cc.mu_list);
  CsvWriter w({"mu", "min_bracket", "min_normalized", "samples", "scanned", "argmin_x", "argmin_y"});
  for (std::size_t i = 0; i < sweep.mu.size(); ++i) {
    const auto &s = sweep.scans[i];
    w.row({fd(sweep.mu[i]), fd(s.min_bracket), fd(s.min_normalized), std::to_string(s.samples),
           std::to_string(s.scanned), fd(s.argmin_x[0]), fd(s.argmin_x[1])});
  }
  ctx.put(rec, "carleman.csv", w.str());
  summary = {{"mu0", sweep.mu0}, {"normalized_increasing", sweep.normalized_increasing}};
}

void task_nodal(Context &ctx, TaskRecord &rec, json &summary) {
  const auto &th = ctx.cfg.thresholds;
  CsvWriter w({"h", "energy", "measure", "domains", "zib_radius", "zib_admissible", "zib_violations", "max_ratio",
               "split_pass_fraction", "iso_tested", "iso_failures"});
  std::vector<EigenPair> pairs;
  for (std::size_t k = 0; k < ctx.cfg.h_list.size(); ++k) {
    const auto &p = ctx.pair(k);
    pairs.push_back(p);
    const auto set = extract_nodal_set(p.field);
    const auto zib = zero_in_ball_scan(p.field, p.h, th.C_ball, ctx.V[k], p.energy, th.margin);
    for (const auto &f : zib.flags) rec.notes.push_back("h=" + fd(p.h) + ": " + f);
    std::string max_ratio = "", split = "", iso_t = "", iso_f = "";
    if (ctx.cfg.dim == 2) {
      NodalBallOptions opt;
      opt.radius_factor = th.ball_factor;
      opt.samples = th.nodal_samples;
      opt.seed = ctx.cfg.seed;
      opt.split_threshold = th.split_min;
      const auto sv = nodal_ball_survey(p.field, set, p.h, opt);
      max_ratio = fd(sv.max_ratio);
      split = fd(sv.split_pass_fraction);
      iso_t = std::to_string(sv.iso_tested);
      iso_f = std::to_string(sv.iso_failures);
    }
    w.row({fd(p.h), fd(p.energy), fd(set.total_measure), std::to_string(nodal_domain_count(p.field)), fd(zib.radius),
           std::to_string(zib.admissible), std::to_string(zib.violations.size()), max_ratio, split, iso_t, iso_f});
  }
  ctx.put(rec, "nodal.csv", w.str());
  if (pairs.size() >= 3) {
    const auto sc = nodal_measure_scaling(pairs);
    summary = {{"slope", sc.slope}, {"r2", sc.r2}, {"fitted", sc.fitted}, {"flags", sc.flags}};
  } else {
    rec.notes.push_back("fewer than three h; no scaling fit");
  }
}

std::vector<double> doubling_radii(double h, double factor) {
  std::vector<double> r;
  for (double x = factor * h; x <= 0.1 * (1 + 1e-12); x *= std::sqrt(2.0)) r.push_back(x);
  return r;
}

void task_doubling(Context &ctx, TaskRecord &rec, json &summary) {
  const auto &th = ctx.cfg.thresholds;
  CsvWriter w({"h", "radii", "max_exponent", "argmax_x", "argmax_y", "argmax_r", "samples"});
  for (std::size_t k = 0; k < ctx.cfg.h_list.size(); ++k) {
    const auto &p = ctx.pair(k);
    const auto radii = doubling_radii(p.h, th.doubling_factor);
    if (radii.empty()) {
      rec.notes.push_back("h=" + fd(p.h) + ": no radius in [" + fd(th.doubling_factor) + " h, 0.1]");
      w.row({fd(p.h), "0", "nan", "", "", "", "0"});
      summary["max_exponent"].push_back(nullptr);
      continue;
    }
    const int stride = std::max(1, p.field.grid.n() / th.doubling_centers);
    const auto rep = doubling_survey(p.field, p.h, center_lattice(p.field.grid, stride), radii, th.doubling_factor);
    w.row({fd(p.h), std::to_string(radii.size()), fd(rep.max_exponent), fd(rep.argmax.p[0]), fd(rep.argmax.p[1]),
           fd(rep.argmax.r), std::to_string(rep.samples.size())});
    summary["max_exponent"].push_back(rep.max_exponent);
  }
  ctx.put(rec, "doubling.csv", w.str());
}

void task_tunneling(Context &ctx, TaskRecord &rec) {
  const auto &radii = ctx.cfg.thresholds.tunneling_radii;
  if (radii.empty()) throw Error("tunneling: no radii configured");
  const double rmin = *std::min_element(radii.begin(), radii.end());
  CsvWriter w({"h", "r", "c_meas", "worst_x", "worst_y", "centers", "stride"});
  for (std::size_t k = 0; k < ctx.cfg.h_list.size(); ++k) {
    const auto &p = ctx.pair(k);
    const int stride = tunneling_stride(p.field.grid, rmin);
    for (double r : radii) {
      const auto rep = tunneling_survey(p.field, p.h, r, stride);
      w.row({fd(p.h), fd(r), fd(rep.c_meas), fd(rep.worst_center[0]), fd(rep.worst_center[1]),
             std::to_string(rep.centers), std::to_string(stride)});
    }
  }
  ctx.put(rec, "tunneling.csv", w.str());
}

void task_vanishing(Context &ctx, TaskRecord &rec) {
  CsvWriter w({"h", "rank", "px", "py", "k_est", "fit_count", "n"});
  for (std::size_t k = 0; k < ctx.cfg.h_list.size(); ++k) {
    const auto &p = ctx.pair(k);
    const int n = std::max(p.field.grid.n(), vanishing_grid_size(p.h));
    const auto f = n == p.field.grid.n() ? p.field : fourier_upsample(p.field, n);
    const auto Vf = potential_eval(ctx.cfg.potential, f.grid);
    const auto pts = nodal_minima(f, Vf, p.energy, kVanishingPoints);
    if (pts.empty()) rec.notes.push_back("h=" + fd(p.h) + ": no nodal minimum in the allowed region");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto rep = vanishing_order(f, pts[i], p.h);
      w.row({fd(p.h), std::to_string(i), fd(pts[i][0]), fd(pts[i][1]), fd(rep.k_est), std::to_string(rep.fit_count),
             std::to_string(n)});
    }
  }
  ctx.put(rec, "vanishing.csv", w.str());
}

void task_render(Context &ctx, TaskRecord &rec) {
  CsvWriter w({"h", "energy", "mask_pixels", "overlap_pixels", "fraction"});
  for (std::size_t k = 0; k < ctx.cfg.h_list.size(); ++k) {
    const auto &p = ctx.pair(k);
    ctx.put(rec, "render_h" + std::to_string(k) + ".pgm", to_pgm(render_levels(p.field, ctx.cfg.render_levels)));
    const auto ov = forbidden_overlap(p.field, ctx.V[k], p.energy, ctx.cfg.thresholds.low_fraction);
    w.row({fd(p.h), fd(p.energy), std::to_string(ov.mask_pixels), std::to_string(ov.overlap_pixels), fd(ov.fraction)});
  }
  ctx.put(rec, "render.csv", w.str());
}

} // namespace

PipelineResult run_pipeline(const ExperimentConfig &cfg, const std::vector<std::string> &only) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  for (const auto &o : only)
    if (std::find(kTaskNames.begin(), kTaskNames.end(), o) == kTaskNames.end())
      throw ConfigError("--only: unknown task \"" + o + "\"");
  std::vector<std::string> tasks;
  for (const auto &t : cfg.tasks)
    if (only.empty() || std::find(only.begin(), only.end(), t) != only.end()) tasks.push_back(t);
  if (tasks.empty()) throw ConfigError("--only leaves no task to run");

  PipelineResult res;
  res.output_dir = cfg.output_dir;
  std::filesystem::create_directories(cfg.output_dir);
  Context ctx{cfg, cfg.output_dir, {}, {}, {}};

  const auto t_solve = clock::now();
  solve_all(ctx);
  const double solve_seconds = std::chrono::duration<double>(clock::now() - t_solve).count();

  json summaries = json::object();
  for (const auto &name : tasks) {
    TaskRecord rec;
    rec.name = name;
    const auto t0 = clock::now();
    json summary = json::object();
    try {
      if (name == "solve") task_solve(ctx, rec);
      else if (name == "fbi") task_fbi(ctx, rec, summary);
      else if (name == "cauchy") task_cauchy(ctx, rec, summary);
      else if (name == "growth") task_growth(ctx, rec, summary);
      else if (name == "carleman") task_carleman(ctx, rec, summary);
      else if (name == "nodal") task_nodal(ctx, rec, summary);
      else if (name == "doubling") task_doubling(ctx, rec, summary);
      else if (name == "tunneling") task_tunneling(ctx, rec);
      else if (name == "vanishing") task_vanishing(ctx, rec);
      else if (name == "render") task_render(ctx, rec);
    } catch (const std::exception &e) {
      rec.ok = false;
      rec.error = e.what();
    }
    rec.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    if (!summary.empty()) summaries[name] = summary;
    res.failed |= !rec.ok;
    res.tasks.push_back(rec);
  }

  json m;
  m["tool"] = "semilab";
  m["version"] = kSemilabVersion;
  m["fftw"] = std::string(fftw_version);
  m["threads"] = thread_count();
  const std::string echo = config_to_json(cfg);
  m["config"] = json::parse(echo);
  m["config_hash"] = "fnv1a64:" + fnv1a_hex(echo);
  m["thresholds"] = m["config"]["thresholds"];
  m["solve_seconds"] = solve_seconds;
  json solves = json::array();
  for (std::size_t k = 0; k < cfg.h_list.size(); ++k) {
    json s = {{"h", cfg.h_list[k]}, {"ok", ctx.have(k)}};
    if (ctx.have(k)) {
      s["energy"] = ctx.solved[k].pairs.front().energy;
      s["n"] = ctx.solved[k].pairs.front().field.grid.n();
      s["degenerate"] = ctx.solved[k].degenerate;
    } else {
      s["error"] = ctx.solve_errors[k];
    }
    solves.push_back(s);
  }
  m["eigensolves"] = solves;
  json tj = json::array(), files = json::array();
  for (const auto &r : res.tasks) {
    json t = {{"name", r.name}, {"status", r.ok ? "ok" : "failed"}, {"seconds", r.seconds}, {"files", r.files}};
    if (!r.error.empty()) t["error"] = r.error;
    if (!r.notes.empty()) t["notes"] = r.notes;
    if (summaries.contains(r.name)) t["summary"] = summaries[r.name];
    tj.push_back(t);
    for (const auto &f : r.files) files.push_back(f);
  }
  m["tasks"] = tj;
  files.push_back("manifest.json");
  m["files"] = files;
  m["wall_seconds"] = std::chrono::duration<double>(clock::now() - t_start).count();
  res.manifest_path = (std::filesystem::path(cfg.output_dir) / "manifest.json").string();
  write_file(res.manifest_path, m.dump(2) + "\n");
  return res;
}

} // namespace semilab
