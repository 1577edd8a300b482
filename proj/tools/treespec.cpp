// treespec — spectral analysis of Kirchhoff Laplacians on radial metric trees.
//
// Subcommands: validate, bands, sigma-ac, m, decompose, periodicity,
// reflectionless. Geometry configs are JSON (canonical) or a TOML subset;
// reports are JSON and/or CSV with fixed key/column order so identical
// configs produce byte-identical files.
//
// Exit codes: 0 ok, 1 I/O or parse, 2 validation, 3 numeric non-convergence
// (partial report still written), 4 internal invariant breach.

#include <algorithm>
#include <complex>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "treespec/config.hpp"
#include "treespec/io.hpp"
#include "treespec/measure.hpp"
#include "treespec/pieces.hpp"
#include "treespec/spectral.hpp"
#include "treespec/weyl.hpp"

namespace ts = treespec;

namespace {

constexpr const char* kSchema = "treespec/1";

struct CommonOpts {
  std::string config_path;
  std::string output;
  std::string format = "json";
  std::size_t grid = 500;
  double e_min = 0.0;
  double e_max = 7.0;
  std::string y_ladder;  // comma list, overrides config
  double tol = 1e-8;
  std::size_t generations = 0;
  double ell = 0.0;
  unsigned threads = 0;
};

int exit_parse = 1;
int exit_validation = 2;
int exit_nonconvergence = 3;
int exit_internal = 4;

void add_common(CLI::App* cmd, CommonOpts& o, bool energy_flags = true) {
  cmd->add_option("--config", o.config_path, "geometry/run config (JSON or TOML)")->required();
  cmd->add_option("--output", o.output, "report path base (extension picks or both are added)");
  cmd->add_option("--format", o.format, "json, csv or both")
      ->check(CLI::IsMember({"json", "csv", "both"}));
  if (energy_flags) {
    cmd->add_option("--grid", o.grid, "number of energy grid points");
    cmd->add_option("--e-min", o.e_min, "energy range start");
    cmd->add_option("--e-max", o.e_max, "energy range end");
  }
  cmd->add_option("--y-ladder", o.y_ladder, "comma list of decreasing Im z values");
  cmd->add_option("--tol", o.tol, "disk radius tolerance for truncated m evaluation");
  cmd->add_option("--generations", o.generations, "max generation of the halfline decomposition");
  cmd->add_option("--ell", o.ell, "prefix length for the simple-decomposition check");
  cmd->add_option("--threads", o.threads, "worker threads for energy sweeps (default: cores)");
}

// error reporting: one machine-parsable line on stderr
void report_error(const std::string& cls, int code, const std::string& detail) {
  std::cerr << "{\"error\": \"" << cls << "\", \"code\": " << code << ", \"detail\": \""
            << detail << "\"}\n";
}

std::vector<double> parse_ladder_list(const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out;
  out.reserve(n);
  if (n == 1) {
    out.push_back(lo);
    return out;
  }
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  return out;
}

struct AnalysisDefaults {
  std::vector<double> y_ladder{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  ts::ClassifyThresholds thresholds;
  std::size_t window_atoms = 512;
  double b_max = std::numeric_limits<double>::quiet_NaN();
};

AnalysisDefaults analysis_defaults(const ts::RunConfig& cfg, const CommonOpts& o) {
  AnalysisDefaults d;
  const ts::Json& a = cfg.analysis;
  if (a.contains("y_ladder") && a["y_ladder"].is_array()) {
    d.y_ladder.clear();
    for (const auto& v : a["y_ladder"]) d.y_ladder.push_back(v.get<double>());
  }
  if (!o.y_ladder.empty()) d.y_ladder = parse_ladder_list(o.y_ladder);
  d.thresholds.eps_low = a.value("eps_low", d.thresholds.eps_low);
  d.thresholds.eps_high = a.value("eps_high", d.thresholds.eps_high);
  d.thresholds.collapse_ratio = a.value("collapse_ratio", d.thresholds.collapse_ratio);
  d.window_atoms = a.value("count", d.window_atoms);
  d.b_max = a.value("b_max", d.b_max);
  return d;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ts::ParseError("cannot write '" + path + "'");
  out << text;
}

// --output report -> report.json / report.csv; an explicit extension wins
// for its own format.
std::pair<std::string, std::string> output_paths(const std::string& base) {
  auto ends_with = [&](const char* suf) {
    const std::string s(suf);
    return base.size() > s.size() && base.substr(base.size() - s.size()) == s;
  };
  if (ends_with(".json")) {
    const std::string stem = base.substr(0, base.size() - 5);
    return {base, stem + ".csv"};
  }
  if (ends_with(".csv")) {
    const std::string stem = base.substr(0, base.size() - 4);
    return {stem + ".json", base};
  }
  return {base + ".json", base + ".csv"};
}

void emit_report(const CommonOpts& o, const std::string& json_text, const std::string& csv_text) {
  if (o.output.empty()) return;
  const auto [json_path, csv_path] = output_paths(o.output);
  if (o.format == "json" || o.format == "both") write_text(json_path, json_text);
  if (o.format == "csv" || o.format == "both") write_text(csv_path, csv_text);
}

// chunked parallel sweep; results land in pre-sized slots, assembly stays
// ordered and single-writer
template <typename Fn>
void parallel_chunks(std::size_t n_items, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n_items, 1)));
  if (threads <= 1 || n_items <= 1) {
    fn(0, n_items);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n_items + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t lo = t * chunk;
    const std::size_t hi = std::min(n_items, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (std::thread& th : pool) th.join();
}

const char* tail_mode_name(ts::TailKind k) {
  switch (k) {
    case ts::TailKind::free_tail: return "exact-free-tail";
    case ts::TailKind::periodic_tail: return "exact-periodic-tail";
    case ts::TailKind::window_only: return "truncated-disks";
  }
  return "truncated-disks";
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

int cmd_validate(const CommonOpts& o, bool emit_normalized) {
  const ts::RunConfig cfg = ts::load_run_config(o.config_path);
  const ts::TreeGeometry& g = cfg.geometry;
  std::size_t window = 256;
  if (!g.unbounded()) window = g.explicit_count();
  const ts::AtomicMeasure mu = ts::build_measure(g, window);
  std::printf("valid: gamma=%s min_branching=%s norm_loc=%s window_atoms=%zu\n",
              ts::format_double(g.gamma()).c_str(), ts::format_double(g.min_branching()).c_str(),
              ts::format_double(ts::norm_loc(mu)).c_str(), mu.size());
  if (emit_normalized) {
    const std::string text = ts::normalized_geometry(g);
    if (o.output.empty())
      std::fputs(text.c_str(), stdout);
    else
      write_text(o.output, text);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// bands
// ---------------------------------------------------------------------------

std::vector<ts::PeriodStep> period_of(const ts::TreeGeometry& g) {
  if (g.kind() != ts::GeometryKind::eventually_periodic)
    throw ts::ValidationError("kind", "this command needs an eventually-periodic geometry");
  std::vector<ts::PeriodStep> period;
  for (std::size_t j = 1; j <= g.period(); ++j) {
    const ts::Edge e = g.edge(g.preperiod() + j);
    period.push_back({e.length, e.branching});
  }
  return period;
}

int cmd_bands(const CommonOpts& o, std::size_t resolution) {
  const ts::RunConfig cfg = ts::load_run_config(o.config_path);
  const auto period = period_of(cfg.geometry);
  const ts::BandStructure bs = ts::floquet_bands(period, o.e_min, o.e_max, resolution);

  ts::JsonWriter w;
  w.begin_object();
  w.key("schema").value(kSchema);
  w.key("command").value("bands");
  w.key("seed").value(cfg.seed);
  w.key("parameters").begin_object();
  w.key("e_min").value(o.e_min);
  w.key("e_max").value(o.e_max);
  w.key("resolution").value(resolution);
  w.end_object();
  w.key("period").begin_array();
  for (const auto& st : bs.period) {
    w.begin_object();
    w.key("gap").value(st.gap);
    w.key("branching").value(st.branching);
    w.end_object();
  }
  w.end_array();
  w.key("bands").begin_array();
  for (const auto& b : bs.bands) {
    w.begin_array().value(b[0]).value(b[1]).end_array();
  }
  w.end_array();
  w.key("warnings").begin_array();
  for (const auto& warn : bs.warnings) w.value(warn);
  w.end_array();
  w.end_object();

  ts::CsvWriter csv({"band", "e_lo", "e_hi"});
  for (std::size_t i = 0; i < bs.bands.size(); ++i)
    csv.cell(i).cell(bs.bands[i][0]).cell(bs.bands[i][1]).end_row();

  emit_report(o, w.str() + "\n", csv.str());
  std::printf("bands: %zu band(s) in [%g, %g]", bs.bands.size(), o.e_min, o.e_max);
  if (!bs.bands.empty())
    std::printf(", first [%.5f, %.5f]", bs.bands.front()[0], bs.bands.front()[1]);
  std::printf("\n");
  return 0;
}

// ---------------------------------------------------------------------------
// sigma-ac
// ---------------------------------------------------------------------------

ts::SpectralReport parallel_sigma(const ts::HalflineModel& model, const std::vector<double>& grid,
                                  const std::vector<double>& ladder,
                                  const ts::ClassifyThresholds& thr, const ts::MPlusOptions& opt,
                                  unsigned threads) {
  ts::SpectralReport rep;
  rep.y_ladder = ladder;
  rep.thresholds = thr;
  rep.records.resize(grid.size());
  parallel_chunks(grid.size(), threads, [&](std::size_t lo, std::size_t hi) {
    const std::vector<double> sub(grid.begin() + static_cast<std::ptrdiff_t>(lo),
                                  grid.begin() + static_cast<std::ptrdiff_t>(hi));
    ts::SpectralReport part = ts::sigma_ac_estimate(model, sub, ladder, thr, opt);
    for (std::size_t i = lo; i < hi; ++i) rep.records[i] = std::move(part.records[i - lo]);
  });
  return rep;
}

void write_sigma_records(ts::JsonWriter& w, const ts::SpectralReport& rep) {
  w.key("ac_fraction").value(rep.ac_fraction());
  w.key("ac_intervals").begin_array();
  for (const auto& iv : rep.ac_intervals()) w.begin_array().value(iv[0]).value(iv[1]).end_array();
  w.end_array();
  w.key("records").begin_array();
  for (const auto& r : rep.records) {
    w.begin_object();
    w.key("E").value(r.energy);
    w.key("class").value(ts::to_string(r.cls));
    w.key("ladder").begin_array();
    for (const auto& s : r.ladder) {
      w.begin_object();
      w.key("y").value(s.y);
      w.key("re_m").value(s.m.value.real());
      w.key("im_m").value(s.m.value.imag());
      w.key("radius").value(s.m.error_bound);
      w.key("converged").value(s.m.converged);
      w.end_object();
    }
    w.end_array();
    w.end_object();
  }
  w.end_array();
}

void append_sigma_csv(ts::CsvWriter& csv, const ts::SpectralReport& rep) {
  for (const auto& r : rep.records)
    for (const auto& s : r.ladder)
      csv.cell(r.energy)
          .cell(s.y)
          .cell(s.m.value.real())
          .cell(s.m.value.imag())
          .cell(s.m.error_bound)
          .cell(std::string(ts::to_string(r.cls)))
          .end_row();
}

int cmd_sigma_ac(const CommonOpts& o) {
  const ts::RunConfig cfg = ts::load_run_config(o.config_path);
  const AnalysisDefaults d = analysis_defaults(cfg, o);
  const std::vector<double> grid = linspace(o.e_min, o.e_max, o.grid);
  ts::MPlusOptions opt;
  opt.tol = o.tol;
  opt.b_max = d.b_max;

  ts::JsonWriter w;
  w.begin_object();
  w.key("schema").value(kSchema);
  w.key("command").value("sigma-ac");
  w.key("seed").value(cfg.seed);
  w.key("parameters").begin_object();
  w.key("e_min").value(o.e_min);
  w.key("e_max").value(o.e_max);
  w.key("grid").value(o.grid);
  w.key("y_ladder").begin_array();
  for (double y : d.y_ladder) w.value(y);
  w.end_array();
  w.key("eps_low").value(d.thresholds.eps_low);
  w.key("eps_high").value(d.thresholds.eps_high);
  w.key("collapse_ratio").value(d.thresholds.collapse_ratio);
  w.key("tol").value(o.tol);
  w.key("window_atoms").value(d.window_atoms);
  w.key("generations").value(o.generations);
  w.end_object();

  ts::CsvWriter csv({"E", "y", "re_m", "im_m", "radius", "class"});
  double summary_fraction = 0.0;

  if (o.generations == 0) {
    const ts::HalflineModel model = ts::halfline_model(cfg.geometry, d.window_atoms);
    w.key("mode").value(tail_mode_name(model.tail));
    const ts::SpectralReport rep =
        parallel_sigma(model, grid, d.y_ladder, d.thresholds, opt, o.threads);
    write_sigma_records(w, rep);
    append_sigma_csv(csv, rep);
    summary_fraction = rep.ac_fraction();
  } else {
    const auto entries = ts::decompose_tree(cfg.geometry, o.generations,
                                            cfg.geometry.unbounded() ? d.window_atoms : 0);
    std::vector<ts::SpectralReport> reports(o.generations + 1);
    for (std::size_t k = 0; k <= o.generations; ++k)
      reports[k] = parallel_sigma(ts::generation_model(cfg.geometry, k, d.window_atoms), grid,
                                  d.y_ladder, d.thresholds, opt, o.threads);
    w.key("generations_reports").begin_array();
    for (std::size_t k = 0; k <= o.generations; ++k) {
      w.begin_object();
      w.key("generation").value(k);
      w.key("origin").value(entries[k].op.origin);
      if (entries[k].multiplicity)
        w.key("multiplicity").value(static_cast<unsigned long long>(*entries[k].multiplicity));
      else
        w.key("multiplicity").null();
      write_sigma_records(w, reports[k]);
      w.end_object();
      append_sigma_csv(csv, reports[k]);
    }
    w.end_array();
    // union over the decomposition: ac-like where any generation is
    std::size_t n_ac = 0;
    w.key("union_class").begin_array();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      bool any_ac = false;
      bool all_sing = true;
      for (const auto& rep : reports) {
        any_ac = any_ac || rep.records[i].cls == ts::SpectralClass::ac_like;
        all_sing = all_sing && rep.records[i].cls == ts::SpectralClass::singular_like;
      }
      if (any_ac) ++n_ac;
      w.value(any_ac ? "ac-like" : (all_sing ? "singular-like" : "undecided"));
    }
    w.end_array();
    summary_fraction = static_cast<double>(n_ac) / static_cast<double>(grid.size());
    w.key("union_ac_fraction").value(summary_fraction);
  }
  w.end_object();
  emit_report(o, w.str() + "\n", csv.str());
  std::printf("sigma-ac: ac-like fraction %.4f on %zu-point grid [%g, %g]\n", summary_fraction,
              o.grid, o.e_min, o.e_max);
  return 0;
}

// ---------------------------------------------------------------------------
// m
// ---------------------------------------------------------------------------

int cmd_m(const CommonOpts& o, const std::string& z_text, double t, bool force_truncated) {
  const ts::RunConfig cfg = ts::load_run_config(o.config_path);
  const AnalysisDefaults d = analysis_defaults(cfg, o);
  const std::complex<double> z = ts::parse_complex(z_text);
  ts::MPlusOptions opt;
  opt.tol = o.tol;
  opt.b_max = d.b_max;
  opt.force_truncated = force_truncated;
  const ts::HalflineModel model = ts::halfline_model(cfg.geometry, d.window_atoms);
  const ts::MValue m = ts::m_plus_model(model, t, z, opt);

  ts::JsonWriter w;
  w.begin_object();
  w.key("schema").value(kSchema);
  w.key("command").value("m");
  w.key("seed").value(cfg.seed);
  w.key("z").begin_array().value(z.real()).value(z.imag()).end_array();
  w.key("t").value(t);
  w.key("mode").value(force_truncated ? "truncated-disks" : tail_mode_name(model.tail));
  w.key("value").begin_array().value(m.value.real()).value(m.value.imag()).end_array();
  w.key("error_bound").value(m.error_bound);
  w.key("truncation").value(m.truncation_used);
  w.key("converged").value(m.converged);
  w.end_object();

  ts::CsvWriter csv({"re_z", "im_z", "re_m", "im_m", "error_bound", "truncation", "converged"});
  csv.cell(z.real())
      .cell(z.imag())
      .cell(m.value.real())
      .cell(m.value.imag())
      .cell(m.error_bound)
      .cell(m.truncation_used)
      .cell(std::string(m.converged ? "1" : "0"))
      .end_row();
  emit_report(o, w.str() + "\n", csv.str());

  std::printf("m(%s) = %s + %si, error bound %s (b = %s)%s\n", z_text.c_str(),
              ts::format_double(m.value.real()).c_str(), ts::format_double(m.value.imag()).c_str(),
              ts::format_double(m.error_bound).c_str(),
              ts::format_double(m.truncation_used).c_str(),
              m.converged ? "" : " [not converged]");
  return m.converged ? 0 : exit_nonconvergence;
}

// ---------------------------------------------------------------------------
// decompose
// ---------------------------------------------------------------------------

int cmd_decompose(const CommonOpts& o) {
  const ts::RunConfig cfg = ts::load_run_config(o.config_path);
  const AnalysisDefaults d = analysis_defaults(cfg, o);
  const auto entries = ts::decompose_tree(cfg.geometry, o.generations,
                                          cfg.geometry.unbounded() ? d.window_atoms : 0);

  ts::JsonWriter w;
  w.begin_object();
  w.key("schema").value(kSchema);
  w.key("command").value("decompose");
  w.key("seed").value(cfg.seed);
  w.key("generations").begin_array();
  for (const auto& e : entries) {
    w.begin_object();
    w.key("generation").value(e.op.generation);
    w.key("origin").value(e.op.origin);
    if (e.multiplicity)
      w.key("multiplicity").value(static_cast<unsigned long long>(*e.multiplicity));
    else
      w.key("multiplicity").null();
    w.key("window_atoms").value(e.op.measure.size());
    w.key("first_atoms").begin_array();
    const ts::AtomicMeasure norm = e.op.normalized();
    for (std::size_t i = 0; i < std::min<std::size_t>(norm.size(), 8); ++i)
      w.begin_array().value(norm.position(i)).value(norm.weight(i)).end_array();
    w.end_array();
    w.end_object();
  }
  w.end_array();
  w.end_object();

  ts::CsvWriter csv({"generation", "origin", "multiplicity"});
  for (const auto& e : entries) {
    csv.cell(e.op.generation).cell(e.op.origin);
    if (e.multiplicity)
      csv.cell(std::to_string(*e.multiplicity));
    else
      csv.cell(std::string("unavailable"));
    csv.end_row();
  }
  emit_report(o, w.str() + "\n", csv.str());

  std::printf("decompose: %zu generation(s), multiplicities", entries.size());
  for (const auto& e : entries)
    std::printf(" %s", e.multiplicity ? std::to_string(*e.multiplicity).c_str() : "n/a");
  std::printf("\n");
  return 0;
}

// ---------------------------------------------------------------------------
// periodicity
// ---------------------------------------------------------------------------

int cmd_periodicity(const CommonOpts& o) {
  const ts::RunConfig cfg = ts::load_run_config(o.config_path);
  const AnalysisDefaults d = analysis_defaults(cfg, o);
  std::size_t count = d.window_atoms;
  if (!cfg.geometry.unbounded()) count = cfg.geometry.explicit_count();
  const ts::AtomicMeasure mu = ts::build_measure(cfg.geometry, count);
  const ts::SymbolSequence seq = ts::symbol_sequence(mu);
  if (seq.ids.size() < 2)
    throw ts::ValidationError("count", "periodicity window needs at least 3 atoms");
  const auto hits = ts::detect_eventual_periodicity(seq.ids);

  // f.d.p. tiling against the canonical single-atom alphabet, plus the
  // window-relative simple-decomposition check
  const ts::PieceAlphabet alphabet = ts::canonical_alphabet(mu);
  const ts::FdpResult fdp = ts::check_fdp(mu, alphabet, mu.position(0));
  double ell = o.ell;
  if (!(ell > 0.0)) ell = 2.0 * alphabet.max_length();
  const bool certified = ts::sfdp_single_atom_certificate(alphabet, ell);
  ts::SfdpResult sfdp;
  if (fdp.status == ts::FdpStatus::ok) sfdp = ts::check_sfdp(fdp.decomposition, alphabet, ell, mu);

  // Any long window of an aperiodic sequence still carries repetition hits
  // (tail repeats, Sturmian powers), so a hit only counts as evidence of
  // eventual periodicity when its periodic stretch spans many periods. The
  // headline hit maximises the repetition exponent (n - p)/q; exponents
  // stay below ~3.7 for substitution profiles and grow linearly with the
  // window for truly periodic ones.
  const double n_sym = static_cast<double>(seq.ids.size());
  ts::PeriodicityHit headline{0, 0};
  double exponent = 0.0;
  for (const auto& h : hits) {
    const double e = (n_sym - static_cast<double>(h.preperiod)) / static_cast<double>(h.period);
    if (e > exponent) {
      exponent = e;
      headline = h;
    }
  }
  const bool claimed = exponent >= 4.0;

  ts::JsonWriter w;
  w.begin_object();
  w.key("schema").value(kSchema);
  w.key("command").value("periodicity");
  w.key("seed").value(cfg.seed);
  if (hits.empty()) {
    w.key("preperiod").null();
    w.key("period").null();
  } else {
    w.key("preperiod").value(headline.preperiod);
    w.key("period").value(headline.period);
  }
  w.key("verified_window").value(seq.ids.size());
  w.key("repetition_exponent").value(exponent);
  w.key("early").value(claimed);
  w.key("hits").value(hits.size());
  w.key("legend").begin_array();
  for (const auto& [gap, weight] : seq.legend)
    w.begin_array().value(gap).value(weight).end_array();
  w.end_array();
  w.key("symbols").begin_array();
  for (int id : seq.ids) w.value(id);
  w.end_array();
  w.key("fdp").begin_object();
  w.key("status").value(fdp.status == ts::FdpStatus::ok
                            ? "ok"
                            : (fdp.status == ts::FdpStatus::no_match ? "no-match"
                                                                     : "budget-exceeded"));
  w.key("pieces").value(fdp.decomposition.indices.size());
  w.key("covered_until").value(fdp.covered_until);
  w.end_object();
  w.key("sfdp").begin_object();
  w.key("ell").value(ell);
  w.key("certified").value(certified);
  w.key("holds_on_window").value(sfdp.holds);
  w.end_object();
  w.end_object();

  ts::CsvWriter csv({"preperiod", "period"});
  for (const auto& h : hits) csv.cell(h.preperiod).cell(h.period).end_row();
  emit_report(o, w.str() + "\n", csv.str());

  if (hits.empty())
    std::printf("periodicity: none on window of %zu symbols\n", seq.ids.size());
  else if (claimed)
    std::printf("periodicity: minimal (preperiod, period) = (%zu, %zu) on window of %zu symbols "
                "(%.1f periods verified)\n",
                headline.preperiod, headline.period, seq.ids.size(), exponent);
  else
    std::printf("periodicity: no early periodicity on window of %zu symbols; strongest "
                "repetition (preperiod, period) = (%zu, %zu) spans only %.1f periods\n",
                seq.ids.size(), headline.preperiod, headline.period, exponent);
  return 0;
}

// ---------------------------------------------------------------------------
// reflectionless
// ---------------------------------------------------------------------------

int cmd_reflectionless(const CommonOpts& o, double y) {
  const ts::RunConfig cfg = ts::load_run_config(o.config_path);
  if (cfg.geometry.kind() != ts::GeometryKind::eventually_periodic ||
      cfg.geometry.preperiod() != 0)
    throw ts::ValidationError(
        "kind", "reflectionless probe needs a purely periodic geometry (two-sided extension)");
  const auto period = period_of(cfg.geometry);
  const std::vector<double> grid = linspace(o.e_min, o.e_max, o.grid);
  const ts::ReflectionlessDefect rd = ts::reflectionless_defect_periodic(period, grid, y);

  ts::JsonWriter w;
  w.begin_object();
  w.key("schema").value(kSchema);
  w.key("command").value("reflectionless");
  w.key("seed").value(cfg.seed);
  w.key("parameters").begin_object();
  w.key("y").value(y);
  w.key("e_min").value(o.e_min);
  w.key("e_max").value(o.e_max);
  w.key("grid").value(o.grid);
  w.key("mode").value("exact-periodic-two-sided");
  w.end_object();
  w.key("records").begin_array();
  for (std::size_t i = 0; i < rd.energies.size(); ++i) {
    w.begin_object();
    w.key("E").value(rd.energies[i]);
    w.key("defect").value(rd.defect[i]);
    w.key("re_m_plus").value(rd.m_plus_vals[i].real());
    w.key("im_m_plus").value(rd.m_plus_vals[i].imag());
    w.key("re_m_minus").value(rd.m_minus_vals[i].real());
    w.key("im_m_minus").value(rd.m_minus_vals[i].imag());
    w.end_object();
  }
  w.end_array();
  w.end_object();

  ts::CsvWriter csv({"E", "defect", "re_m_plus", "im_m_plus", "re_m_minus", "im_m_minus"});
  for (std::size_t i = 0; i < rd.energies.size(); ++i)
    csv.cell(rd.energies[i])
        .cell(rd.defect[i])
        .cell(rd.m_plus_vals[i].real())
        .cell(rd.m_plus_vals[i].imag())
        .cell(rd.m_minus_vals[i].real())
        .cell(rd.m_minus_vals[i].imag())
        .end_row();
  emit_report(o, w.str() + "\n", csv.str());

  const auto [mn, mx] = std::minmax_element(rd.defect.begin(), rd.defect.end());
  std::printf("reflectionless: defect range [%s, %s] over %zu energies at y=%s\n",
              ts::format_double(*mn).c_str(), ts::format_double(*mx).c_str(), rd.energies.size(),
              ts::format_double(y).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral analysis of Kirchhoff Laplacians on radial metric trees"};
  app.require_subcommand(1);

  CommonOpts o_validate, o_bands, o_sigma, o_m, o_dec, o_per, o_refl;
  bool emit_normalized = false;
  std::size_t resolution = 2000;
  std::string z_text = "2.0+1.0i";
  double t_point = 0.0;
  bool force_truncated = false;
  double refl_y = 1e-6;

  CLI::App* c_validate = app.add_subcommand("validate", "check a geometry config");
  add_common(c_validate, o_validate, false);
  c_validate->add_flag("--emit-normalized", emit_normalized, "echo the canonical geometry JSON");

  CLI::App* c_bands = app.add_subcommand("bands", "Floquet band structure of the periodic profile");
  add_common(c_bands, o_bands);
  c_bands->add_option("--resolution", resolution, "bracketing grid size");

  CLI::App* c_sigma = app.add_subcommand("sigma-ac", "numerical essential support of the AC spectrum");
  add_common(c_sigma, o_sigma);

  CLI::App* c_m = app.add_subcommand("m", "evaluate the m-function at one z");
  add_common(c_m, o_m, false);
  c_m->add_option("--z", z_text, "complex energy, e.g. 1.0+0.001i")->required();
  c_m->add_option("--t", t_point, "evaluation point (midgap)");
  c_m->add_flag("--truncated", force_truncated, "force the truncated-disk route");

  CLI::App* c_dec = app.add_subcommand("decompose", "halfline decomposition with multiplicities");
  add_common(c_dec, o_dec, false);

  CLI::App* c_per = app.add_subcommand("periodicity", "eventual-periodicity report for the profile window");
  add_common(c_per, o_per, false);

  CLI::App* c_refl = app.add_subcommand("reflectionless", "two-sided reflectionless defect probe");
  add_common(c_refl, o_refl);
  c_refl->add_option("--y", refl_y, "Im z offset for the boundary approach");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    report_error("cli-parse", exit_parse, e.what());
    return exit_parse;
  }

  try {
    if (c_validate->parsed()) return cmd_validate(o_validate, emit_normalized);
    if (c_bands->parsed()) return cmd_bands(o_bands, resolution);
    if (c_sigma->parsed()) return cmd_sigma_ac(o_sigma);
    if (c_m->parsed()) return cmd_m(o_m, z_text, t_point, force_truncated);
    if (c_dec->parsed()) return cmd_decompose(o_dec);
    if (c_per->parsed()) return cmd_periodicity(o_per);
    if (c_refl->parsed()) return cmd_reflectionless(o_refl, refl_y);
  } catch (const ts::ParseError& e) {
    report_error("parse", exit_parse, e.what());
    return exit_parse;
  } catch (const ts::ValidationError& e) {
    report_error(std::string("validation.") + e.field(), exit_validation, e.what());
    return exit_validation;
  } catch (const std::invalid_argument& e) {
    report_error("validation", exit_validation, e.what());
    return exit_validation;
  } catch (const std::exception& e) {
    report_error("internal", exit_internal, e.what());
    return exit_internal;
  }
  return 0;
}
