#pragma once
// Command-line front end. `run_cli` is the whole program minus main(), so
// tests can drive it with in-memory streams.

#include "bellbox/analysis.hpp"
#include "bellbox/error.hpp"
#include "bellbox/format.hpp"
#include "bellbox/sampler.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace bellbox {

enum class OutputMode { Table, Machine };

struct CliOptions {
  std::string subcommand;
  std::string input;
  std::uint64_t seed = 1;
  std::uint64_t trials = 100000;
  std::string schedule = "cycle";
  OutputMode output = OutputMode::Table;
  bool decimal = false;
  std::string out_path;
  std::string records_path;
  unsigned threads = 0; // 0: hardware concurrency
};

namespace cli_detail {

struct LoadedInput {
  std::string name;
  ModelDocument document;
};

/// Raised for bad command-line input; carries the exit code 1 path.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline LoadedInput load_input(const std::string &selector, std::ostream &err) {
  const auto &names = builtin_names();
  if (std::find(names.begin(), names.end(), selector) != names.end() || selector == "singlet")
    return {selector, builtin_document(selector)};
  std::ifstream in(selector, std::ios::binary);
  if (!in) {
    std::string known;
    for (const auto &n : names)
      known += (known.empty() ? "" : ", ") + n;
    throw InputError("'" + selector + "' is neither a builtin (" + known +
                     ") nor a readable file");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  ParseResult r = parse_document(buf.str());
  for (const auto &d : r.diagnostics)
    err << d.str(selector) << '\n';
  if (!r.ok())
    throw InputError("could not parse '" + selector + "'");
  return {selector, std::move(*r.document)};
}

class Printer {
public:
  Printer(std::ostream &os, const CliOptions &opt) : os_(os), opt_(opt) {}

  std::string num(const Number &n) const {
    return opt_.decimal ? n.decimal_str(12) : n.str(12);
  }

  /// Contexts as row blocks, outcome pairs as columns.
  void behavior_table(const Behavior &b) {
    const Scenario &s = b.scenario();
    const auto contexts = s.contexts();
    std::size_t label_w = 7;
    for (const auto &c : contexts)
      label_w = std::max(label_w, s.label(c).size());
    bool uniform = true;
    for (const auto &c : contexts)
      uniform = uniform && b.at(c).rows() == b.at(contexts[0]).rows() &&
                b.at(c).cols() == b.at(contexts[0]).cols();
    std::vector<std::vector<std::string>> cells;
    std::size_t cell_w = 5;
    for (const auto &c : contexts) {
      std::vector<std::string> row;
      const ProbMatrix &m = b.at(c);
      for (std::size_t a = 0; a < m.rows(); ++a)
        for (std::size_t bb = 0; bb < m.cols(); ++bb) {
          std::string v = num(m.at(a, bb));
          if (!uniform)
            v = "(" + std::to_string(a + 1) + "," + std::to_string(bb + 1) + ")=" + v;
          cell_w = std::max(cell_w, v.size());
          row.push_back(std::move(v));
        }
      cells.push_back(std::move(row));
    }
    auto emit = [&](const std::string &label, const std::vector<std::string> &row) {
      std::ostringstream line;
      line << std::left << std::setw(static_cast<int>(label_w)) << label;
      for (const auto &v : row)
        line << "  " << std::setw(static_cast<int>(cell_w)) << v;
      std::string text = line.str();
      text.erase(text.find_last_not_of(' ') + 1);
      os_ << text << '\n';
    };
    std::vector<std::string> header;
    if (uniform) {
      const ProbMatrix &m0 = b.at(contexts[0]);
      for (std::size_t a = 1; a <= m0.rows(); ++a)
        for (std::size_t bb = 1; bb <= m0.cols(); ++bb)
          header.push_back("(" + std::to_string(a) + "," + std::to_string(bb) + ")");
    }
    emit("context", header);
    for (std::size_t k = 0; k < contexts.size(); ++k)
      emit(s.label(contexts[k]), cells[k]);
  }

  void expectations(const Behavior &b) {
    const Scenario &s = b.scenario();
    bool any = false;
    for (const auto &c : s.contexts()) {
      if (s.outcomes(Party::Alice, c.alice) != 2 || s.outcomes(Party::Bob, c.bob) != 2)
        continue;
      if (!any)
        os_ << "expectations\n";
      any = true;
      os_ << "  E(" << s.label(c) << ") = " << num(expectation(b, c)) << '\n';
    }
  }

  std::ostream &os() { return os_; }

private:
  std::ostream &os_;
  const CliOptions &opt_;
};

inline std::string entry_key(const Scenario &s, const Context &c, std::size_t a,
                             std::size_t b, const char *fn = "P") {
  return std::string(fn) + "(" + std::to_string(a) + "," + std::to_string(b) + " | " +
         s.setting(Party::Alice, c.alice).label + "," + s.setting(Party::Bob, c.bob).label +
         ")";
}

inline Behavior input_behavior(const LoadedInput &in) { return document_behavior(in.document); }

// ---- subcommands

inline void cmd_exact(Printer &p, const CliOptions &opt, const LoadedInput &in) {
  const Behavior b = input_behavior(in);
  if (opt.output == OutputMode::Machine) {
    p.os() << serialize_document(behavior_document(b, in.document.name));
    return;
  }
  p.os() << "behavior of " << in.name << '\n';
  p.behavior_table(b);
  p.expectations(b);
}

inline void cmd_show(Printer &p, const CliOptions &, const LoadedInput &in) {
  p.os() << serialize_document(in.document);
}

inline void cmd_chsh(Printer &p, const CliOptions &opt, const LoadedInput &in) {
  const Behavior b = input_behavior(in);
  require_chsh_shape(b.scenario());
  const ChshMax best = chsh_max(b);
  if (opt.output == OutputMode::Machine) {
    p.os() << "[chsh]\n";
    p.os() << "arrangement = " << best.arrangement.str() << '\n';
    p.os() << "max = " << fmt_detail::number_literal(best.value) << '\n';
    p.os() << "signed = " << fmt_detail::number_literal(best.signed_value) << '\n';
    for (const auto &arr : chsh_arrangements())
      p.os() << "value " << arr.str() << " = " << fmt_detail::number_literal(chsh_value(b, arr)) << '\n';
    return;
  }
  p.os() << "CHSH values of " << in.name << " (signs on E(x0,y0), E(x0,y1), E(x1,y0), E(x1,y1))\n";
  for (const auto &arr : chsh_arrangements())
    p.os() << "  " << arr.str() << "  " << p.num(chsh_value(b, arr)) << '\n';
  p.os() << "max |S| = " << p.num(best.value) << " at " << best.arrangement.str()
         << " (signed " << p.num(best.signed_value) << ")\n";
}

inline void cmd_nosig(Printer &p, const CliOptions &opt, const LoadedInput &in) {
  const Behavior b = input_behavior(in);
  validate_behavior(b).throw_if_invalid();
  const Scenario &s = b.scenario();
  const Number residual = nosignaling_residual(b);
  const auto pairs = marginal_pairs(b);
  auto pair_name = [&](const MarginalPair &mp) {
    const Party o = other(mp.party);
    return std::string(party_name(mp.party)) + " " + s.setting(mp.party, mp.own_setting).label +
           " outcome " + std::to_string(mp.outcome) + " | " +
           s.setting(o, mp.co_setting_1).label + " vs " + s.setting(o, mp.co_setting_2).label;
  };
  if (opt.output == OutputMode::Machine) {
    p.os() << "[nosignaling]\n";
    p.os() << "residual = " << fmt_detail::number_literal(residual) << '\n';
    p.os() << "signaling = " << (is_signaling(residual) ? "true" : "false") << '\n';
    for (const auto &mp : pairs)
      p.os() << "pair " << pair_name(mp) << " = " << fmt_detail::number_literal(mp.value_1) << ", "
             << fmt_detail::number_literal(mp.value_2) << '\n';
    return;
  }
  p.os() << "marginal pairs of " << in.name << '\n';
  for (const auto &mp : pairs)
    p.os() << "  " << pair_name(mp) << ": " << p.num(mp.value_1) << " vs "
           << p.num(mp.value_2) << "  (diff " << p.num(mp.difference()) << ")\n";
  p.os() << "no-signaling residual = " << p.num(residual)
         << (is_signaling(residual) ? "  (signaling)" : "  (no-signaling)") << '\n';
}

inline void membership_block(Printer &p, const CliOptions &opt, const MembershipResult &m,
                             const Scenario &s) {
  if (opt.output == OutputMode::Machine) {
    p.os() << "[membership]\n";
    p.os() << "status = " << (m.local ? "LOCAL" : "INFEASIBLE") << '\n';
    p.os() << "snapped = " << (m.snapped ? "true" : "false") << '\n';
    if (m.snapped)
      p.os() << "snap_error = ~" << Number::shortest_double(m.snap_error) << '\n';
    if (m.decomposition) {
      p.os() << "\n[decomposition]\n";
      for (const auto &[st, w] : m.decomposition->terms)
        p.os() << "strategy " << st.str(s) << " = " << fmt_detail::number_literal(w) << '\n';
    }
    if (m.certificate) {
      p.os() << "\n[certificate]\n";
      p.os() << "local_bound = " << fmt_detail::number_literal(m.certificate->local_bound) << '\n';
      p.os() << "value = " << fmt_detail::number_literal(m.certificate->value) << '\n';
      for (const auto &c : s.contexts())
        for (std::size_t a = 1; a <= 2; ++a)
          for (std::size_t b = 1; b <= 2; ++b)
            p.os() << entry_key(s, c, a, b, "W") << " = "
                   << fmt_detail::number_literal(m.certificate->coefficients.p(a, b, c)) << '\n';
    }
    return;
  }
  if (m.snapped)
    p.os() << "floating input snapped to rationals (max error "
           << Number::format_double(m.snap_error, 3) << ")\n";
  if (m.local) {
    p.os() << "membership: LOCAL\n";
    p.os() << "decomposition over deterministic strategies (reconstruction verified)\n";
    for (const auto &[st, w] : m.decomposition->terms)
      p.os() << "  " << std::setw(10) << p.num(w) << "  " << st.str(s) << '\n';
  } else {
    p.os() << "membership: INFEASIBLE\n";
    p.os() << "certificate: functional W with W.P = " << p.num(m.certificate->value)
           << " > " << p.num(m.certificate->local_bound)
           << " = max over deterministic strategies (verified)\n";
    Behavior w = m.certificate->coefficients;
    p.behavior_table(w);
  }
}

inline void cmd_membership(Printer &p, const CliOptions &opt, const LoadedInput &in) {
  const Behavior b = input_behavior(in);
  const MembershipResult m = local_membership(b);
  if (opt.output == OutputMode::Table)
    p.os() << "local polytope membership of " << in.name << '\n';
  membership_block(p, opt, m, b.scenario());
}

inline void cmd_classify(Printer &p, const CliOptions &opt, const LoadedInput &in) {
  const Behavior b = input_behavior(in);
  const AnalysisReport r = classify(b);
  const Scenario &s = b.scenario();
  if (opt.output == OutputMode::Machine) {
    p.os() << "[analysis]\n";
    if (r.chsh) {
      p.os() << "chsh_arrangement = " << r.chsh->arrangement.str() << '\n';
      p.os() << "chsh_max = " << fmt_detail::number_literal(r.chsh->value) << '\n';
    }
    p.os() << "classification = " << to_string(r.classification) << '\n';
    p.os() << "nosignaling_residual = " << fmt_detail::number_literal(r.nosignaling_residual) << '\n';
    p.os() << "\n[expectations]\n";
    for (const auto &[c, e] : r.expectations)
      p.os() << "E(" << s.label(c) << ") = " << fmt_detail::number_literal(e) << '\n';
    if (!r.chsh_values.empty()) {
      p.os() << "\n[chsh]\n";
      for (const auto &[arr, v] : r.chsh_values)
        p.os() << "value " << arr.str() << " = " << fmt_detail::number_literal(v) << '\n';
    }
    if (r.membership) {
      p.os() << '\n';
      membership_block(p, opt, *r.membership, s);
    }
    return;
  }
  p.os() << "analysis of " << in.name << '\n';
  p.behavior_table(b);
  p.expectations(b);
  if (r.chsh) {
    p.os() << "CHSH values\n";
    for (const auto &[arr, v] : r.chsh_values)
      p.os() << "  " << arr.str() << "  " << p.num(v) << '\n';
    p.os() << "chsh_max = " << p.num(r.chsh->value) << " at " << r.chsh->arrangement.str()
           << '\n';
  }
  p.os() << "no-signaling residual = " << p.num(r.nosignaling_residual) << '\n';
  if (r.membership)
    membership_block(p, opt, *r.membership, s);
  p.os() << "classification: " << to_string(r.classification) << '\n';
}

inline ExperimentPlan make_plan(const CliOptions &opt, const Scenario &s) {
  ExperimentPlan plan;
  plan.seed = opt.seed;
  plan.trials = opt.trials;
  if (opt.trials < 1)
    throw InputError("--trials must be at least 1");
  plan.threads = opt.threads ? opt.threads
                             : std::clamp(std::thread::hardware_concurrency(), 1u, 8u);
  plan.keep_records = !opt.records_path.empty();
  const std::string &sch = opt.schedule;
  if (sch == "cycle") {
    plan.schedule = Schedule::Cycle;
  } else if (sch == "uniform") {
    plan.schedule = Schedule::UniformRandom;
  } else if (sch.rfind("fixed:", 0) == 0) {
    const std::string rest = sch.substr(6);
    const auto comma = rest.find(',');
    if (comma == std::string::npos)
      throw InputError("--schedule fixed:<x>,<y> needs two setting labels");
    const auto x = s.find_setting(Party::Alice, rest.substr(0, comma));
    const auto y = s.find_setting(Party::Bob, rest.substr(comma + 1));
    if (!x || !y)
      throw InputError("--schedule " + sch + ": unknown setting label");
    plan.schedule = Schedule::Fixed;
    plan.fixed_context = {*x, *y};
  } else {
    throw InputError("--schedule must be fixed:<x>,<y>, uniform or cycle");
  }
  return plan;
}

inline void cmd_sample(Printer &p, const CliOptions &opt, const LoadedInput &in) {
  const auto model = document_model(in.document);
  if (!model)
    throw InputError("sample needs a [noncontextual] or [contextual] model document");
  const Scenario &s = scenario_of(*model);
  const ExperimentPlan plan = make_plan(opt, s);
  const ExperimentResult res = run_experiment(*model, plan);
  const Behavior exact = exact_behavior(*model);
  if (!opt.records_path.empty()) {
    std::ofstream csv(opt.records_path, std::ios::binary);
    if (!csv)
      throw InputError("cannot write '" + opt.records_path + "'");
    write_trials_csv(csv, s, res.records);
  }
  std::optional<double> deviation;
  bool all_sampled = true;
  for (const auto &c : s.contexts())
    all_sampled = all_sampled && res.empirical.total(c) > 0;
  if (all_sampled)
    deviation = empirical_deviation(res.empirical, exact);

  if (opt.output == OutputMode::Machine) {
    p.os() << "[sample]\n";
    p.os() << "deviation = "
           << (deviation ? "~" + Number::shortest_double(*deviation) : std::string("none"))
           << '\n';
    p.os() << "schedule = " << opt.schedule << '\n';
    p.os() << "seed = " << plan.seed << '\n';
    p.os() << "trials = " << plan.trials << '\n';
    p.os() << "\n[counts]\n";
    for (const auto &c : s.contexts())
      for (std::size_t a = 1; a <= s.outcomes(Party::Alice, c.alice); ++a)
        for (std::size_t b = 1; b <= s.outcomes(Party::Bob, c.bob); ++b)
          p.os() << entry_key(s, c, a, b, "N") << " = " << res.empirical.count(c, a, b) << '\n';
    return;
  }
  p.os() << "sampled " << in.name << ": " << plan.trials << " trials, seed " << plan.seed
         << ", schedule " << opt.schedule << '\n';
  p.os() << "trials per context\n";
  for (const auto &c : s.contexts())
    p.os() << "  " << s.label(c) << "  " << res.empirical.total(c) << '\n';
  if (all_sampled) {
    p.os() << "empirical frequencies\n";
    p.behavior_table(res.empirical.frequencies());
    p.os() << "exact probabilities\n";
    p.behavior_table(exact);
    p.os() << "max deviation = " << Number::format_double(*deviation, 12) << '\n';
  } else {
    p.os() << "empirical frequencies (sampled contexts only)\n";
    for (const auto &c : s.contexts()) {
      if (res.empirical.total(c) == 0)
        continue;
      p.os() << "  " << s.label(c);
      for (std::size_t a = 1; a <= s.outcomes(Party::Alice, c.alice); ++a)
        for (std::size_t b = 1; b <= s.outcomes(Party::Bob, c.bob); ++b)
          p.os() << "  " << Number::format_double(res.empirical.frequency(c, a, b), 12);
      p.os() << '\n';
    }
    p.os() << "max deviation = n/a (not every context was sampled)\n";
  }
}

} // namespace cli_detail

/// Runs one invocation. Exit codes: 0 success, 1 input or parse error,
/// 2 internal invariant violation.
inline int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  using namespace cli_detail;
  CliOptions opt;
  CLI::App app{"Common-cause models, Bell-CHSH analysis and sampling", "bellbox"};
  app.require_subcommand(1);
  std::string output_mode = "table";

  struct Sub {
    const char *name;
    const char *help;
    void (*fn)(Printer &, const CliOptions &, const LoadedInput &);
  };
  const std::vector<Sub> subs{
      {"exact", "print the exact behavior table and expectations", cmd_exact},
      {"sample", "run a seeded experiment and compare with the exact behavior", cmd_sample},
      {"chsh", "print all eight CHSH arrangement values and the maximum", cmd_chsh},
      {"nosig", "print every marginal pair and the no-signaling residual", cmd_nosig},
      {"membership", "decide local polytope membership", cmd_membership},
      {"classify", "full analysis report", cmd_classify},
      {"show", "print the input as a canonical .bellbox document", cmd_show},
  };
  std::vector<CLI::App *> handles;
  for (const auto &sub : subs) {
    CLI::App *sc = app.add_subcommand(sub.name, sub.help);
    sc->add_option("input", opt.input, "builtin name or .bellbox file")->required();
    sc->add_option("--output", output_mode, "table | machine")
        ->check(CLI::IsMember({"table", "machine"}));
    sc->add_flag("--decimal", opt.decimal, "print rationals as decimals in tables");
    sc->add_option("--out", opt.out_path, "write the output to a file");
    if (std::string(sub.name) == "sample") {
      sc->add_option("--seed", opt.seed, "64-bit seed");
      sc->add_option("--trials", opt.trials, "number of trials (>= 1)");
      sc->add_option("--schedule", opt.schedule, "fixed:<x>,<y> | uniform | cycle");
      sc->add_option("--threads", opt.threads, "worker threads (results do not depend on it)");
      sc->add_option("--records", opt.records_path, "write the trial stream as CSV");
    }
    handles.push_back(sc);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError &e) {
    err << "bellbox: " << e.what() << '\n';
    return 1;
  }
  opt.output = output_mode == "machine" ? OutputMode::Machine : OutputMode::Table;

  std::size_t chosen = 0;
  for (std::size_t i = 0; i < handles.size(); ++i)
    if (handles[i]->parsed())
      chosen = i;
  opt.subcommand = subs[chosen].name;

  try {
    const LoadedInput in = load_input(opt.input, err);
    std::ostringstream buffer;
    Printer printer(buffer, opt);
    subs[chosen].fn(printer, opt, in);
    if (opt.out_path.empty()) {
      out << buffer.str();
    } else {
      std::ofstream file(opt.out_path, std::ios::binary);
      if (!file)
        throw InputError("cannot write '" + opt.out_path + "'");
      file << buffer.str();
    }
    return 0;
  } catch (const InputError &e) {
    err << "bellbox: " << e.what() << '\n';
    return 1;
  } catch (const Error &e) {
    err << "bellbox: " << e.what() << '\n';
    return e.code() == ErrorCode::InvariantViolation ? 2 : 1;
  } catch (const std::exception &e) {
    err << "bellbox: internal error: " << e.what() << '\n';
    return 2;
  }
}

} // namespace bellbox
