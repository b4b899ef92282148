#pragma once

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "actint/actint.hpp"

namespace actint::cli {

/// Defaults that an optional key=value config file may override; command-line
/// flags override both. Keys: tol, samples, resolution.
struct Settings {
  double tol = 1e-9;
  std::size_t samples = 10001;
  std::size_t resolution = 1001;
};

inline constexpr const char* kConfigEnv = "ACTINT_CONFIG";

inline Settings load_settings(const std::string& path) {
  Settings s;
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidConfig, "cannot open config '" + path + "'");
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::InvalidConfig, "expected key=value: '" + line + "'");
    auto trim = [](std::string v) {
      const auto b = v.find_first_not_of(" \t\r");
      const auto e = v.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "tol") {
        s.tol = parse_real(value);
      } else if (key == "samples") {
        s.samples = std::stoul(value);
      } else if (key == "resolution") {
        s.resolution = std::stoul(value);
      } else {
        throw Error(ErrorKind::InvalidConfig, "unknown config key '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::InvalidConfig, "bad value for '" + key + "'");
    }
  }
  return s;
}

inline const std::map<std::string, ScalarFunction>& builtin_functions() {
  static const std::map<std::string, ScalarFunction> fns{
      {"identity", [](double x) { return x; }},
      {"abs", [](double x) { return std::fabs(x); }},
      {"square", [](double x) { return x * x; }},
      {"cube", [](double x) { return x * x * x; }},
      {"sin", [](double x) { return std::sin(x); }},
      {"exp", [](double x) { return std::exp(x); }},
      {"relu", [](double x) { return x > 0.0 ? x : 0.0; }},
  };
  return fns;
}

inline const ScalarFunction& builtin(const std::string& name) {
  const auto& fns = builtin_functions();
  const auto it = fns.find(name);
  if (it == fns.end()) throw CLI::ValidationError("--fn", "unknown function '" + name + "'");
  return it->second;
}

namespace detail {

inline Activation activation_option(const std::string& tag) {
  const auto a = parse_activation(tag);
  if (!a) throw CLI::ValidationError("--activation", "unknown activation '" + tag + "'");
  return *a;
}

inline SmoothMode mode_option(const std::string& tag) {
  if (tag == "height") return SmoothMode::HeightMatched;
  if (tag == "literal") return SmoothMode::Literal;
  throw CLI::ValidationError("--mode", "expected height or literal");
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream ss(s);
  while (std::getline(ss, cur, sep)) parts.push_back(cur);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

inline std::size_t parse_index(const std::string& s, const std::string& what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw CLI::ValidationError(what, "expected a non-negative integer, got '" + s + "'");
  return std::stoul(s);
}

inline void emit_network(const NetworkSpec& net, const std::string& output, std::ostream& out) {
  if (output.empty() || output == "-")
    out << serialize_network(net);
  else
    save_network(output, net);
}

inline std::string join_reals(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_real(v[i]);
  return s;
}

// Partition of a piecewise-linear scalar net, read from its exact reconstruction.
inline Partition partition_of(const NetworkSpec& net) {
  const auto kinks = hidden_kinks(net);
  if (kinks.size() < 2) throw Error(ErrorKind::Shape, "network has no piecewise-linear hidden layer");
  const auto pwl = reconstruct_function(net, kinks.front(), kinks.back());
  const auto bps = pwl.breakpoints();
  const auto vals = pwl.node_values();
  return Partition({bps.begin(), bps.end()}, {vals.begin(), vals.end()});
}

}  // namespace detail

/// Runs one CLI invocation. Exit codes: 0 success, 1 domain error, 2 usage error.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Analytic construction, evaluation and inversion of activation-integral networks", "actint"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "key=value file with tol, samples, resolution defaults");

  std::function<void(const Settings&)> action;

  // compile
  auto* compile = app.add_subcommand("compile", "Compile a scalar target into a one-hidden-layer network");
  struct {
    std::string fn, samples, activation = "hard", mode = "height", output;
    std::vector<double> domain;
    std::size_t knots = 0;
  } c;
  compile->add_option("--fn", c.fn, "built-in target: identity, abs, square, cube, sin, exp, relu");
  compile->add_option("--samples", c.samples, "partition CSV (x,f) instead of a built-in target");
  compile->add_option("--domain", c.domain, "interval a b")->expected(2);
  compile->add_option("--knots", c.knots, "number of uniform knots (>= 2)");
  compile->add_option("--activation", c.activation, "hard | relu | sigmoid | tanh");
  compile->add_option("--mode", c.mode, "smooth-unit form: height | literal");
  compile->add_option("-o,--output", c.output, "output document (stdout when omitted)");
  compile->callback([&] {
    action = [&](const Settings&) {
      const auto kind = detail::activation_option(c.activation);
      const auto mode = detail::mode_option(c.mode);
      std::optional<Partition> p;
      if (!c.samples.empty()) {
        if (!c.fn.empty()) throw CLI::ValidationError("--samples", "use either --fn or --samples");
        p = read_partition_csv(c.samples);
      } else {
        if (c.fn.empty() || c.domain.size() != 2 || c.knots == 0)
          throw CLI::RequiredError("compile needs --fn, --domain and --knots (or --samples)");
        p = uniform_partition(c.domain[0], c.domain[1], c.knots, builtin(c.fn));
      }
      detail::emit_network(compile_scalar(*p, kind, mode), c.output, out);
    };
  });

  // compile-composite
  auto* composite = app.add_subcommand("compile-composite", "Compile a chain F_n(...F_1(x)...)");
  struct {
    std::vector<std::string> stages;
    std::string activation = "hard", mode = "height", output;
  } cc;
  composite->add_option("--stage", cc.stages, "NAME:A:B:KNOTS or @partition.csv, innermost first")->required();
  composite->add_option("--activation", cc.activation, "hard | relu | sigmoid | tanh");
  composite->add_option("--mode", cc.mode, "smooth-unit form: height | literal");
  composite->add_option("-o,--output", cc.output, "output document (stdout when omitted)");
  composite->callback([&] {
    action = [&](const Settings&) {
      const auto kind = detail::activation_option(cc.activation);
      std::vector<CompositeStage> stages;
      for (const auto& s : cc.stages) {
        if (!s.empty() && s[0] == '@') {
          stages.push_back({read_partition_csv(s.substr(1)), kind});
          continue;
        }
        const auto parts = detail::split(s, ':');
        if (parts.size() != 4) throw CLI::ValidationError("--stage", "expected NAME:A:B:KNOTS, got '" + s + "'");
        stages.push_back({uniform_partition(parse_real(parts[1]), parse_real(parts[2]),
                                            detail::parse_index(parts[3], "--stage"), builtin(parts[0])),
                          kind});
      }
      detail::emit_network(compile_composite(stages, detail::mode_option(cc.mode)), cc.output, out);
    };
  });

  // compile-grid
  auto* grid = app.add_subcommand("compile-grid", "Compile grid samples through an injective linear code");
  struct {
    std::string samples, activation = "hard", output;
  } cg;
  grid->add_option("--samples", cg.samples, "grid CSV i1,...,in,f")->required();
  grid->add_option("--activation", cg.activation, "hard | relu | sigmoid | tanh");
  grid->add_option("-o,--output", cg.output, "output document (stdout when omitted)");
  grid->callback([&] {
    action = [&](const Settings&) {
      const auto samples = read_grid_csv(cg.samples);
      if (samples.empty()) throw Error(ErrorKind::IncompleteGrid, "no samples");
      std::vector<std::size_t> extents(samples.begin()->first.size(), 0);
      for (const auto& [idx, _] : samples) {
        for (std::size_t k = 0; k < idx.size(); ++k) extents[k] = std::max(extents[k], idx[k] + 1);
      }
      const auto lin = linearize_grid(extents);
      detail::emit_network(compile_multivariate(samples, lin, detail::activation_option(cg.activation)), cg.output, out);
    };
  });

  // eval
  auto* eval = app.add_subcommand("eval", "Forward-evaluate a network document");
  struct {
    std::string net;
    std::vector<double> xs;
    std::vector<std::string> inputs;
  } ev;
  eval->add_option("network", ev.net, "network document")->required();
  eval->add_option("--x", ev.xs, "scalar input (repeatable)");
  eval->add_option("--input", ev.inputs, "comma-separated input vector (repeatable)");
  eval->callback([&] {
    action = [&](const Settings&) {
      const auto net = load_network(ev.net);
      if (ev.xs.empty() && ev.inputs.empty()) throw CLI::RequiredError("eval needs --x or --input");
      for (double x : ev.xs) out << detail::join_reals(forward(net, std::vector<double>{x})) << '\n';
      for (const auto& s : ev.inputs) {
        std::vector<double> in;
        for (const auto& part : detail::split(s, ',')) in.push_back(parse_real(part));
        out << detail::join_reals(forward(net, in)) << '\n';
      }
    };
  });

  // trace
  auto* trace = app.add_subcommand("trace", "Per-layer values as CSV x,layer,unit,value");
  struct {
    std::string net, quantity = "post";
    std::vector<double> xs;
    std::vector<double> range;
  } tr;
  trace->add_option("network", tr.net, "network document")->required();
  trace->add_option("--x", tr.xs, "scalar input (repeatable)");
  trace->add_option("--range", tr.range, "lo hi: trace `resolution` uniform points")->expected(2);
  trace->add_option("--quantity", tr.quantity, "post (layer outputs) | pre (pre-activations)");
  trace->callback([&] {
    action = [&](const Settings& s) {
      if (tr.quantity != "post" && tr.quantity != "pre")
        throw CLI::ValidationError("--quantity", "expected post or pre");
      const auto net = load_network(tr.net);
      std::vector<double> xs = tr.xs;
      if (tr.range.size() == 2) {
        if (s.resolution < 2) throw Error(ErrorKind::InvalidConfig, "resolution must be at least 2");
        for (std::size_t k = 0; k < s.resolution; ++k)
          xs.push_back(tr.range[0] + (tr.range[1] - tr.range[0]) * static_cast<double>(k) /
                                         static_cast<double>(s.resolution - 1));
      }
      if (xs.empty()) throw CLI::RequiredError("trace needs --x or --range");
      out << "x,layer,unit,value\n";
      for (double x : xs) {
        const auto rec = forward_trace(net, std::vector<double>{x});
        for (const auto& lt : rec.layers) {
          const auto& vals = tr.quantity == "pre" ? lt.pre : lt.post;
          for (std::size_t u = 0; u < vals.size(); ++u)
            out << format_real(x) << ',' << lt.layer << ',' << u << ',' << format_real(vals[u]) << '\n';
        }
      }
    };
  });

  // invert
  auto* invert = app.add_subcommand("invert", "Recover unit bands or the piecewise-linear function form");
  struct {
    std::string net, form = "units";
    std::vector<double> domain;
    std::optional<std::size_t> resolution;
  } inv;
  invert->add_option("network", inv.net, "network document")->required();
  invert->add_option("--form", inv.form, "units (band_lo,band_hi,slope,height) | function (breakpoint,value,slope)");
  invert->add_option("--domain", inv.domain, "lo hi for --form function")->expected(2);
  invert->add_option("--resolution", inv.resolution, "sample count for smooth networks");
  invert->callback([&] {
    action = [&](const Settings& s) {
      const auto net = load_network(inv.net);
      if (inv.form == "units") {
        const auto* d = net.layers().size() == 2 ? std::get_if<DenseActivated>(&net.layer(0)) : nullptr;
        const auto* l = net.layers().size() == 2 ? std::get_if<LinearOnly>(&net.layer(1)) : nullptr;
        if (!d || !l || l->weights.rows() != 1)
          throw Error(ErrorKind::Shape, "unit inversion needs a [dense, linear] scalar network");
        const double anchor = l->has_bias ? l->weights(0, l->weights.cols() - 1) : 0.0;
        const auto row = l->weights.row(0).first(d->weights.rows());
        out << "band_lo,band_hi,slope,height\n";
        for (const auto& u : invert_hard_layer(d->weights, row, d->activation, anchor))
          out << format_real(u.band_lo) << ',' << format_real(u.band_hi) << ',' << format_real(u.slope) << ','
              << format_real(u.height) << '\n';
      } else if (inv.form == "function") {
        if (inv.domain.size() != 2) throw CLI::RequiredError("--form function needs --domain lo hi");
        const auto pwl = reconstruct_function(net, inv.domain[0], inv.domain[1], inv.resolution.value_or(s.resolution));
        out << "breakpoint,value,slope\n";
        for (std::size_t k = 0; k < pwl.breakpoints().size(); ++k) {
          const double slope = k < pwl.slopes().size() ? pwl.slopes()[k] : 0.0;
          out << format_real(pwl.breakpoints()[k]) << ',' << format_real(pwl.node_values()[k]) << ','
              << format_real(slope) << '\n';
        }
      } else {
        throw CLI::ValidationError("--form", "expected units or function");
      }
    };
  });

  // enumerate
  auto* enumerate = app.add_subcommand("enumerate", "Count symmetric or composed-decomposed solutions");
  struct {
    std::string net, what;
  } en;
  enumerate->add_option("network", en.net, "network document")->required();
  enumerate->add_option("--what", en.what, "symmetric | composed")->required()->check(CLI::IsMember({"symmetric", "composed"}));
  enumerate->callback([&] {
    action = [&](const Settings&) {
      const auto net = load_network(en.net);
      out << (en.what == "symmetric" ? count_symmetric(net) : count_composed_decomposed(net)) << '\n';
    };
  });

  // transform
  auto* transform = app.add_subcommand("transform", "Apply a solution-preserving rewrite");
  struct {
    std::string net, permute, split, cover, output;
  } tf;
  transform->add_option("network", tf.net, "network document")->required();
  auto* o_perm = transform->add_option("--permute", tf.permute, "LAYER:p0,p1,... (new unit r is old unit p_r)");
  auto* o_split = transform->add_option("--split", tf.split, "LAYER:UNIT:PARTS");
  auto* o_cover = transform->add_option("--cover", tf.cover, "per-unit knot ranges a-b,a-b,... over the net's breakpoints");
  o_perm->excludes(o_split)->excludes(o_cover);
  o_split->excludes(o_cover);
  transform->add_option("-o,--output", tf.output, "output document (stdout when omitted)");
  transform->callback([&] {
    action = [&](const Settings&) {
      const auto net = load_network(tf.net);
      if (!tf.permute.empty()) {
        const auto parts = detail::split(tf.permute, ':');
        if (parts.size() != 2) throw CLI::ValidationError("--permute", "expected LAYER:p0,p1,...");
        std::vector<std::size_t> perm;
        for (const auto& p : detail::split(parts[1], ',')) perm.push_back(detail::parse_index(p, "--permute"));
        detail::emit_network(permute_layer(net, detail::parse_index(parts[0], "--permute"), perm), tf.output, out);
      } else if (!tf.split.empty()) {
        const auto parts = detail::split(tf.split, ':');
        if (parts.size() != 3) throw CLI::ValidationError("--split", "expected LAYER:UNIT:PARTS");
        detail::emit_network(split_first_type(net, detail::parse_index(parts[0], "--split"),
                                              detail::parse_index(parts[1], "--split"),
                                              detail::parse_index(parts[2], "--split")),
                             tf.output, out);
      } else if (!tf.cover.empty()) {
        CoverAssign assign;
        for (const auto& range : detail::split(tf.cover, ',')) {
          const auto ab = detail::split(range, '-');
          if (ab.size() != 2) throw CLI::ValidationError("--cover", "expected a-b ranges, got '" + range + "'");
          assign.push_back({detail::parse_index(ab[0], "--cover"), detail::parse_index(ab[1], "--cover")});
        }
        detail::emit_network(solve_cover(detail::partition_of(net), assign).network, tf.output, out);
      } else {
        throw CLI::RequiredError("transform needs --permute, --split or --cover");
      }
    };
  });

  // verify
  auto* verify = app.add_subcommand("verify", "Compare two scalar networks on a dense grid");
  struct {
    std::string a, b;
    std::vector<double> domain;
    std::optional<std::size_t> samples;
    std::optional<double> tol;
  } vf;
  verify->add_option("first", vf.a, "network document")->required();
  verify->add_option("second", vf.b, "network document")->required();
  verify->add_option("--domain", vf.domain, "lo hi")->required()->expected(2);
  verify->add_option("--samples", vf.samples, "uniform sample count");
  verify->add_option("--tol", vf.tol, "equivalence tolerance");
  verify->callback([&] {
    action = [&](const Settings& s) {
      const auto rep = verify_equivalent(load_network(vf.a), load_network(vf.b), vf.domain[0], vf.domain[1],
                                         vf.samples.value_or(s.samples), vf.tol.value_or(s.tol));
      out << "max_deviation " << format_real(rep.max_deviation) << '\n'
          << "samples " << rep.sample_count << '\n'
          << "equivalent " << (rep.equivalent ? "true" : "false") << '\n';
    };
  });

  // convert
  auto* convert = app.add_subcommand("convert", "Change the activation family of hidden units, matching centers");
  struct {
    std::string net, to, output;
  } cv;
  convert->add_option("network", cv.net, "network document")->required();
  convert->add_option("--to", cv.to, "hard | sigmoid | tanh")->required();
  convert->add_option("-o,--output", cv.output, "output document (stdout when omitted)");
  convert->callback([&] {
    action = [&](const Settings&) {
      const auto target = detail::activation_option(cv.to);
      if (target == Activation::Relu) throw Error(ErrorKind::UnsupportedTarget, "relu has no finite center");
      detail::emit_network(convert_network(load_network(cv.net), target), cv.output, out);
    };
  });

  // classify
  auto* classify_cmd = app.add_subcommand("classify", "Print the variate and linearity class");
  std::string cl_net;
  classify_cmd->add_option("network", cl_net, "network document")->required();
  classify_cmd->callback([&] {
    action = [&](const Settings&) {
      const auto c = classify(load_network(cl_net));
      out << to_string(c.variate) << ' ' << to_string(c.linearity) << '\n';
    };
  });

  // train
  auto* train_cmd = app.add_subcommand("train", "Full-batch gradient descent on an x,y dataset");
  struct {
    std::string data, activation = "sigmoid", output, history;
    TrainConfig cfg;
  } tn;
  train_cmd->add_option("--data", tn.data, "dataset CSV x,y")->required();
  train_cmd->add_option("--width", tn.cfg.hidden_width, "hidden units");
  train_cmd->add_option("--activation", tn.activation, "hard | relu | sigmoid | tanh");
  train_cmd->add_option("--epochs", tn.cfg.epochs, "gradient steps");
  train_cmd->add_option("--lr", tn.cfg.learning_rate, "learning rate");
  train_cmd->add_option("--seed", tn.cfg.seed, "initialization seed");
  train_cmd->add_option("-o,--output", tn.output, "output document (stdout when omitted)");
  train_cmd->add_option("--history", tn.history, "write the loss history CSV (epoch,loss)");
  train_cmd->callback([&] {
    action = [&](const Settings&) {
      tn.cfg.activation = detail::activation_option(tn.activation);
      const auto data = read_samples_csv(tn.data);
      const auto res = train(tn.cfg, data);
      if (!tn.history.empty()) {
        std::ostringstream h;
        h << "epoch,loss\n";
        for (std::size_t e = 0; e < res.loss_history.size(); ++e) h << e << ',' << format_real(res.loss_history[e]) << '\n';
        write_text_file(tn.history, h.str());
      }
      detail::emit_network(res.network, tn.output, out);
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    Settings settings;
    if (!config_path.empty()) {
      settings = load_settings(config_path);
    } else if (const char* env = std::getenv(kConfigEnv); env && *env) {
      settings = load_settings(env);
    }
    if (action) action(settings);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace actint::cli
