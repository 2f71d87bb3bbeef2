#include "impulsim/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace impulsim {

namespace {

struct Entry {
  std::string key;
  std::string value;
  int line = 0;
};

struct Section {
  std::string name;
  int line = 0;
  std::vector<Entry> entries;
};

std::string trim(const std::string& s) {
  std::size_t lo = 0, hi = s.size();
  while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
  while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
  return s.substr(lo, hi - lo);
}

std::vector<Section> tokenize(const std::string& text) {
  std::vector<Section> sections;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    const std::string s = trim(raw);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ScenarioError("unterminated section header", line, s);
      sections.push_back({trim(s.substr(1, s.size() - 2)), line, {}});
      continue;
    }
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ScenarioError("expected key = value", line, s);
    if (sections.empty())
      throw ScenarioError("entry before any [section]", line, s);
    sections.back().entries.push_back(
        {trim(s.substr(0, eq)), trim(s.substr(eq + 1)), line});
  }
  return sections;
}

double parse_double(const std::string& v, int line, const std::string& field) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || trim(std::string(end)) != "")
    throw ScenarioError("malformed number '" + v + "'", line, field);
  if (!std::isfinite(x)) throw ScenarioError("non-finite number", line, field);
  return x;
}

int parse_int(const std::string& v, int line, const std::string& field) {
  const double x = parse_double(v, line, field);
  const int i = static_cast<int>(std::llround(x));
  if (std::abs(x - i) > 1e-9)
    throw ScenarioError("expected an integer, got '" + v + "'", line, field);
  return i;
}

/// Splits on commas at depth zero (outside parentheses and quotes).
std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  int depth = 0;
  bool quoted = false;
  std::string cur;
  for (char c : v) {
    if (c == '"') quoted = !quoted;
    if (!quoted) {
      if (c == '(') ++depth;
      if (c == ')') --depth;
      if (c == ',' && depth == 0) {
        out.push_back(trim(cur));
        cur.clear();
        continue;
      }
    }
    cur += c;
  }
  const std::string last = trim(cur);
  if (!last.empty() || !out.empty()) out.push_back(last);
  return out;
}

std::vector<double> parse_number_list(const std::string& v, int line,
                                      const std::string& field) {
  std::vector<double> out;
  for (const std::string& item : split_list(v))
    out.push_back(parse_double(item, line, field));
  return out;
}

/// "(a,b,c)" or a bare scalar.
Vec parse_tuple(const std::string& v, int line, const std::string& field) {
  std::string body = trim(v);
  if (!body.empty() && body.front() == '(') {
    if (body.back() != ')')
      throw ScenarioError("unterminated tuple '" + v + "'", line, field);
    body = body.substr(1, body.size() - 2);
  }
  return parse_number_list(body, line, field);
}

std::string unquote(const std::string& v, int line, const std::string& field) {
  const std::string s = trim(v);
  if (s.size() < 2 || s.front() != '"' || s.back() != '"')
    throw ScenarioError("expected a quoted expression, got '" + v + "'", line, field);
  return s.substr(1, s.size() - 2);
}

std::vector<std::string> parse_expr_list(const std::string& v, int line,
                                         const std::string& field) {
  std::vector<std::string> out;
  for (const std::string& item : split_list(v)) out.push_back(unquote(item, line, field));
  return out;
}

bool references_k(const std::string& src) {
  ExprDims dims;
  dims.n = 64;
  dims.m = 64;
  dims.l = 64;
  const Expr e = parse_expression(src, dims);
  for (const Variable& v : e.variables())
    if (v.kind == VarKind::K) return true;
  return false;
}

}  // namespace

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

Scenario parse_scenario(const std::string& text, const std::string& name) {
  Scenario sc;
  sc.name = name;
  const std::vector<Section> sections = tokenize(text);

  bool have_dynamics = false, have_input = false, have_initial = false;
  bool have_control_set = false;
  Vec cs_lower, cs_upper;
  std::vector<Vec> cs_vertices;
  std::string cs_kind = "box";
  double cs_whitney = 1.0;
  int cs_line = 0;

  std::map<std::size_t, std::vector<Vec>> bridge_minus, bridge_plus;

  for (const Section& sec : sections) {
    auto fail = [&](const std::string& what, const Entry& e) -> ScenarioError {
      return ScenarioError(what, e.line, "[" + sec.name + "] " + e.key);
    };
    if (sec.name == "dynamics") {
      have_dynamics = true;
      for (const Entry& e : sec.entries) {
        if (e.key == "n") sc.n = parse_int(e.value, e.line, e.key);
        else if (e.key == "m") sc.m = parse_int(e.value, e.line, e.key);
        else if (e.key == "l") sc.l = parse_int(e.value, e.line, e.key);
        else if (e.key == "f") sc.f_src = parse_expr_list(e.value, e.line, e.key);
        else if (e.key == "guard") sc.guard = parse_double(e.value, e.line, e.key);
        else if (e.key.size() > 1 && e.key[0] == 'g') {
          const int idx = parse_int(e.key.substr(1), e.line, e.key);
          if (idx < 1) throw fail("field index must be >= 1", e);
          if (static_cast<std::size_t>(idx) > sc.g_src.size())
            sc.g_src.resize(static_cast<std::size_t>(idx));
          sc.g_src[static_cast<std::size_t>(idx) - 1] =
              parse_expr_list(e.value, e.line, e.key);
        } else {
          throw fail("unknown key", e);
        }
      }
    } else if (sec.name == "control_set") {
      have_control_set = true;
      cs_line = sec.line;
      for (const Entry& e : sec.entries) {
        if (e.key == "kind") cs_kind = trim(e.value);
        else if (e.key == "lower") cs_lower = parse_number_list(e.value, e.line, e.key);
        else if (e.key == "upper") cs_upper = parse_number_list(e.value, e.line, e.key);
        else if (e.key == "whitney") cs_whitney = parse_double(e.value, e.line, e.key);
        else if (e.key == "vertices") {
          for (const std::string& item : split_list(e.value))
            cs_vertices.push_back(parse_tuple(item, e.line, e.key));
        } else {
          throw fail("unknown key", e);
        }
      }
    } else if (sec.name == "input") {
      have_input = true;
      for (const Entry& e : sec.entries) {
        if (e.key == "a") sc.a = parse_double(e.value, e.line, e.key);
        else if (e.key == "b") sc.b = parse_double(e.value, e.line, e.key);
        else if (e.key == "breakpoints")
          sc.breakpoints = parse_number_list(e.value, e.line, e.key);
        else if (e.key.rfind("segment", 0) == 0) {
          const int idx = parse_int(e.key.substr(7), e.line, e.key);
          if (idx < 1) throw fail("segment index must be >= 1", e);
          if (static_cast<std::size_t>(idx) > sc.segments.size())
            sc.segments.resize(static_cast<std::size_t>(idx));
          Scenario::SegmentSpec& seg = sc.segments[static_cast<std::size_t>(idx) - 1];
          const std::string v = trim(e.value);
          if (v.rfind("samples:", 0) == 0) {
            for (const std::string& item : split_list(v.substr(8))) {
              const std::size_t colon = item.find(':');
              if (colon == std::string::npos)
                throw fail("sample entries are time:(values)", e);
              seg.sample_ts.push_back(
                  parse_double(trim(item.substr(0, colon)), e.line, e.key));
              seg.sample_vals.push_back(
                  parse_tuple(trim(item.substr(colon + 1)), e.line, e.key));
            }
          } else {
            seg.exprs = parse_expr_list(e.value, e.line, e.key);
          }
        } else if (e.key.rfind("jump", 0) == 0) {
          const int idx = parse_int(e.key.substr(4), e.line, e.key);
          if (idx < 1) throw fail("jump index must be >= 1", e);
          // left -> at -> right, '->' or whitespace separated
          std::string v = e.value;
          std::string token;
          std::vector<std::string> parts;
          for (std::size_t i = 0; i < v.size();) {
            if (v.compare(i, 2, "->") == 0) {
              i += 2;
              continue;
            }
            if (v[i] == '(') {
              const std::size_t close = v.find(')', i);
              if (close == std::string::npos) throw fail("unterminated tuple", e);
              parts.push_back(v.substr(i, close - i + 1));
              i = close + 1;
              continue;
            }
            ++i;
          }
          if (parts.size() != 3)
            throw fail("expected three tuples: left -> at -> right", e);
          JumpTriple j;
          j.left = parse_tuple(parts[0], e.line, e.key);
          j.at = parse_tuple(parts[1], e.line, e.key);
          j.right = parse_tuple(parts[2], e.line, e.key);
          sc.jump_specs[static_cast<std::size_t>(idx) - 1] = std::move(j);
        } else {
          throw fail("unknown key", e);
        }
      }
    } else if (sec.name == "v") {
      for (const Entry& e : sec.entries) {
        if (e.key == "samples") {
          for (const std::string& item : split_list(e.value))
            sc.v_samples.push_back(parse_tuple(item, e.line, e.key));
        } else if (e.key == "lower") {
          sc.v_lower = parse_number_list(e.value, e.line, e.key);
        } else if (e.key == "upper") {
          sc.v_upper = parse_number_list(e.value, e.line, e.key);
        } else {
          throw fail("unknown key", e);
        }
      }
    } else if (sec.name == "initial") {
      have_initial = true;
      for (const Entry& e : sec.entries) {
        if (e.key == "x") sc.x0 = parse_number_list(e.value, e.line, e.key);
        else throw fail("unknown key", e);
      }
    } else if (sec.name == "solver") {
      for (const Entry& e : sec.entries) {
        if (e.key == "step") sc.step = parse_double(e.value, e.line, e.key);
        else if (e.key == "grid")
          sc.grid = static_cast<std::size_t>(parse_int(e.value, e.line, e.key));
        else throw fail("unknown key", e);
      }
    } else if (sec.name == "sweep") {
      for (const Entry& e : sec.entries) {
        if (e.key == "ks") {
          for (double x : parse_number_list(e.value, e.line, e.key))
            sc.ks.push_back(static_cast<int>(std::llround(x)));
        } else if (e.key == "taus") {
          sc.taus = parse_number_list(e.value, e.line, e.key);
        } else if (e.key == "support") {
          sc.support = parse_double(e.value, e.line, e.key);
        } else {
          throw fail("unknown key", e);
        }
      }
    } else if (sec.name == "bridges") {
      for (const Entry& e : sec.entries) {
        // jump<N>_minus / jump<N>_plus = polyline of tuples
        const std::size_t us = e.key.find('_');
        if (e.key.rfind("jump", 0) != 0 || us == std::string::npos)
          throw fail("expected jump<N>_minus or jump<N>_plus", e);
        const int idx = parse_int(e.key.substr(4, us - 4), e.line, e.key);
        const std::string side = e.key.substr(us + 1);
        std::vector<Vec> poly;
        for (const std::string& item : split_list(e.value))
          poly.push_back(parse_tuple(item, e.line, e.key));
        if (poly.size() < 2) throw fail("polyline needs at least two points", e);
        if (side == "minus") bridge_minus[static_cast<std::size_t>(idx) - 1] = poly;
        else if (side == "plus") bridge_plus[static_cast<std::size_t>(idx) - 1] = poly;
        else throw fail("side must be minus or plus", e);
      }
    } else if (sec.name == "target") {
      for (const Entry& e : sec.entries) {
        if (e.key == "u") sc.target_u_src = parse_expr_list(e.value, e.line, e.key);
        else if (e.key == "x") sc.target_x_src = parse_expr_list(e.value, e.line, e.key);
        else throw fail("unknown key", e);
      }
    } else if (sec.name == "cost") {
      for (const Entry& e : sec.entries) {
        if (e.key == "phi") sc.cost_phi_src = unquote(e.value, e.line, e.key);
        else if (e.key == "times") sc.cost_times = parse_number_list(e.value, e.line, e.key);
        else throw fail("unknown key", e);
      }
    } else {
      throw ScenarioError("unknown section", sec.line, "[" + sec.name + "]");
    }
  }

  if (!have_dynamics) throw ScenarioError("missing [dynamics]", 0, "dynamics");
  if (!have_input) throw ScenarioError("missing [input]", 0, "input");
  if (!have_initial) throw ScenarioError("missing [initial]", 0, "initial");
  if (sc.n < 1) throw ScenarioError("n must be >= 1", 0, "[dynamics] n");
  if (sc.m < 1) throw ScenarioError("m must be >= 1", 0, "[dynamics] m");
  if (sc.l < 0) throw ScenarioError("l must be >= 0", 0, "[dynamics] l");

  if (sc.f_src.empty()) sc.f_src.assign(static_cast<std::size_t>(sc.n), "0");

  // Control set.
  if (!have_control_set) {
    cs_lower.assign(static_cast<std::size_t>(sc.m), -1e3);
    cs_upper.assign(static_cast<std::size_t>(sc.m), 1e3);
  }
  if (cs_kind == "box") {
    if (cs_lower.size() != static_cast<std::size_t>(sc.m) ||
        cs_upper.size() != static_cast<std::size_t>(sc.m))
      throw ScenarioError("box bounds must have m entries", cs_line, "[control_set]");
    sc.control_set = ControlSet::box(cs_lower, cs_upper, cs_whitney);
  } else if (cs_kind == "hull") {
    sc.control_set = ControlSet::hull(cs_vertices, cs_whitney);
    if (sc.control_set.dim() != sc.m)
      throw ScenarioError("hull vertices must have m entries", cs_line, "[control_set]");
  } else {
    throw ScenarioError("kind must be box or hull", cs_line, "[control_set] kind");
  }

  if (sc.breakpoints.empty()) sc.breakpoints = {sc.a, sc.b};
  if (sc.segments.empty()) sc.segments.resize(sc.breakpoints.size() - 1);

  // Validation with named diagnostics.
  ExprDims fdims{sc.n, sc.m, sc.l, true, true};
  for (std::size_t i = 0; i < sc.f_src.size(); ++i) {
    try {
      (void)parse_expression(sc.f_src[i], fdims);
    } catch (const Error& err) {
      throw ScenarioError(err.what(), 0, "[dynamics] f component " + std::to_string(i + 1));
    }
  }
  if (sc.f_src.size() != static_cast<std::size_t>(sc.n))
    throw ScenarioError("f must have n components", 0, "[dynamics] f");
  if (sc.g_src.size() != static_cast<std::size_t>(sc.m))
    throw ScenarioError("need g1..gm", 0, "[dynamics] g");
  ExprDims gdims{sc.n, 0, 0, false, false};
  for (std::size_t a = 0; a < sc.g_src.size(); ++a) {
    if (sc.g_src[a].size() != static_cast<std::size_t>(sc.n))
      throw ScenarioError("g" + std::to_string(a + 1) + " must have n components", 0,
                          "[dynamics] g" + std::to_string(a + 1));
    for (const std::string& src : sc.g_src[a]) {
      try {
        (void)parse_expression(src, gdims);
      } catch (const Error& err) {
        throw ScenarioError(std::string(err.what()) +
                                " (g fields may only reference x variables)",
                            0, "[dynamics] g" + std::to_string(a + 1));
      }
    }
  }

  if (sc.segments.size() + 1 != sc.breakpoints.size())
    throw ScenarioError("need one segment per breakpoint interval", 0, "[input]");
  ExprDims udims{0, 0, 0, true, true};
  for (std::size_t i = 0; i < sc.segments.size(); ++i) {
    const auto& seg = sc.segments[i];
    const std::string field = "[input] segment" + std::to_string(i + 1);
    if (seg.is_expression()) {
      if (seg.exprs.size() != static_cast<std::size_t>(sc.m))
        throw ScenarioError("segment must have m expressions", 0, field);
      for (const std::string& src : seg.exprs) {
        try {
          (void)parse_expression(src, udims);
        } catch (const Error& err) {
          throw ScenarioError(err.what(), 0, field);
        }
        if (references_k(src)) sc.family = true;
      }
    } else if (!seg.sample_ts.empty()) {
      for (const Vec& val : seg.sample_vals)
        if (val.size() != static_cast<std::size_t>(sc.m))
          throw ScenarioError("sample values must have m entries", 0, field);
    } else {
      throw ScenarioError("segment missing", 0, field);
    }
  }
  if (sc.x0.size() != static_cast<std::size_t>(sc.n))
    throw ScenarioError("x must have n entries", 0, "[initial] x");
  if (sc.l > 0) {
    if (sc.v_samples.empty())
      throw ScenarioError("l > 0 requires a [v] block with samples", 0, "[v]");
    for (const Vec& s : sc.v_samples)
      if (s.size() != static_cast<std::size_t>(sc.l))
        throw ScenarioError("v samples must have l entries", 0, "[v] samples");
    if (sc.v_lower.empty()) sc.v_lower.assign(static_cast<std::size_t>(sc.l), -1e3);
    if (sc.v_upper.empty()) sc.v_upper.assign(static_cast<std::size_t>(sc.l), 1e3);
  }
  for (double tau : sc.taus)
    if (tau < sc.a || tau > sc.b)
      throw ScenarioError("tau outside [a,b]", 0, "[sweep] taus");
  for (std::size_t i = 1; i < sc.ks.size(); ++i)
    if (sc.ks[i] <= sc.ks[i - 1])
      throw ScenarioError("ks must be increasing", 0, "[sweep] ks");
  if (sc.support.has_value() &&
      (!(*sc.support > 0.0) || *sc.support > sc.b - sc.a))
    throw ScenarioError("support must lie in (0, b-a]", 0, "[sweep] support");

  for (auto& [idx, poly] : bridge_minus) {
    if (idx >= sc.breakpoints.size())
      throw ScenarioError("bridge index out of range", 0, "[bridges]");
    sc.bridges[idx].minus = Arc(poly);
  }
  for (auto& [idx, poly] : bridge_plus) {
    if (idx >= sc.breakpoints.size())
      throw ScenarioError("bridge index out of range", 0, "[bridges]");
    sc.bridges[idx].plus = Arc(poly);
  }

  if (!sc.target_u_src.empty() &&
      sc.target_u_src.size() != static_cast<std::size_t>(sc.m))
    throw ScenarioError("target u must have m components", 0, "[target] u");
  if (!sc.target_x_src.empty() &&
      sc.target_x_src.size() != static_cast<std::size_t>(sc.n))
    throw ScenarioError("target x must have n components", 0, "[target] x");

  return sc;
}

// ---------------------------------------------------------------------------
// Instantiation
// ---------------------------------------------------------------------------

Dynamics Scenario::make_dynamics() const {
  Dynamics dyn;
  dyn.n = n;
  dyn.m = m;
  dyn.l = l;
  dyn.growth_guard = guard;
  ExprDims fdims{n, m, l, true, false};
  std::vector<Expr> fcomps;
  for (const std::string& src : f_src) fcomps.push_back(parse_expression(src, fdims));
  dyn.drift = VectorField(std::move(fcomps));
  ExprDims gdims{n, 0, 0, false, false};
  for (const auto& field : g_src) {
    std::vector<Expr> comps;
    for (const std::string& src : field) comps.push_back(parse_expression(src, gdims));
    dyn.g.emplace_back(std::move(comps));
  }
  dyn.validate();
  return dyn;
}

std::shared_ptr<const BVPath> Scenario::make_input(std::optional<double> k,
                                                   BVPath::Options options) const {
  if (family && !k.has_value())
    throw ConfigError("scenario '" + name + "': input is a k-family; supply k");
  ExprDims udims{0, 0, 0, true, true};
  std::vector<PathSegment> segs;
  for (const SegmentSpec& spec : segments) {
    if (spec.is_expression()) {
      std::vector<Expr> comps;
      for (const std::string& src : spec.exprs) {
        Expr e = parse_expression(src, udims);
        if (k.has_value()) e = e.substitute_k(*k);
        comps.push_back(std::move(e));
      }
      segs.push_back(PathSegment::expressions(std::move(comps)));
    } else {
      segs.push_back(PathSegment::samples(spec.sample_ts, spec.sample_vals));
    }
  }

  // Jump triples: explicit where specified, continuous closure elsewhere.
  std::vector<JumpTriple> jumps(breakpoints.size());
  auto seg_value = [&](std::size_t seg, double t) {
    if (segments[seg].is_expression()) {
      EvalEnv env;
      env.t = t;
      Vec v(static_cast<std::size_t>(m));
      for (int c = 0; c < m; ++c)
        v[static_cast<std::size_t>(c)] =
            segs[seg].components()[static_cast<std::size_t>(c)].eval(env);
      return v;
    }
    const auto& ts = segs[seg].knots();
    const auto& vals = segs[seg].values();
    if (t <= ts.front()) return vals.front();
    if (t >= ts.back()) return vals.back();
    const std::size_t i = cell_index(ts, t);
    return lerp(vals[i], vals[i + 1],
                (t - ts[i]) / (ts[i + 1] - ts[i]));
  };
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    const auto it = jump_specs.find(i);
    if (it != jump_specs.end()) {
      jumps[i] = it->second;
      continue;
    }
    const Vec left = i > 0 ? seg_value(i - 1, breakpoints[i])
                           : seg_value(0, breakpoints[0]);
    const Vec right =
        i + 1 < breakpoints.size() ? seg_value(i, breakpoints[i]) : left;
    if (dist2(left, right) > 1e-9)
      throw ConfigError("scenario '" + name + "': segments are discontinuous at t = " +
                        double_to_string(breakpoints[i]) +
                        "; add a jump entry for breakpoint " + std::to_string(i + 1));
    jumps[i] = {left, left, right};
  }

  return std::make_shared<const BVPath>(BVPath(a, b, breakpoints, std::move(segs),
                                               std::move(jumps), control_set,
                                               options));
}

std::optional<SampledControl> Scenario::make_v() const {
  if (l == 0) return std::nullopt;
  return SampledControl(a, b, l, v_samples, v_lower, v_upper);
}

ControlTrajectoryPair Scenario::make_target_pair() const {
  if (!has_target())
    throw ConfigError("scenario '" + name + "' declares no [target] block");
  ExprDims dims{0, 0, 0, true, false};
  std::vector<Expr> uexprs, xexprs;
  for (const std::string& src : target_u_src)
    uexprs.push_back(parse_expression(src, dims));
  for (const std::string& src : target_x_src)
    xexprs.push_back(parse_expression(src, dims));
  ControlTrajectoryPair pair;
  pair.a = a;
  pair.b = b;
  pair.m = m;
  pair.n = n;
  pair.u = [uexprs](double t) {
    EvalEnv env;
    env.t = t;
    Vec out(uexprs.size());
    for (std::size_t i = 0; i < uexprs.size(); ++i) out[i] = uexprs[i].eval(env);
    return out;
  };
  pair.x = [xexprs](double t) {
    EvalEnv env;
    env.t = t;
    Vec out(xexprs.size());
    for (std::size_t i = 0; i < xexprs.size(); ++i) out[i] = xexprs[i].eval(env);
    return out;
  };
  return pair;
}

std::function<double(double)> Scenario::make_cost_phi() const {
  if (!has_cost()) throw ConfigError("scenario '" + name + "' declares no [cost] block");
  ExprDims dims{0, 0, 0, true, false};
  const Expr phi = parse_expression(cost_phi_src, dims);
  return [phi](double t) {
    EvalEnv env;
    env.t = t;
    return phi.eval(env);
  };
}

// ---------------------------------------------------------------------------
// Built-ins
// ---------------------------------------------------------------------------

namespace {

const char* kEx21 = R"RAW(# Oscillating three-channel family with non-commuting fields
[dynamics]
n = 6
m = 3
l = 0
f = "0", "0", "0", "0", "-1", "(x3-x5)^2 + x1^2 + x2^2"
g1 = "1", "0", "x2", "0", "0", "0"
g2 = "0", "1", "-x1", "0", "0", "0"
g3 = "0", "0", "0", "x4", "0", "0"

[control_set]
kind = box
lower = -2.5, -1.5, -0.5
upper = 0.5, 1.5, 1.5

[input]
a = 0
b = 1
segment1 = "(cos(k*t)-1)/sqrt(k)", "sin(k*t)/sqrt(k)", "t"

[initial]
x = 0, 0, 1, 1, 1, 0

[sweep]
ks = 25, 100, 400
taus = 0.25, 0.5, 0.75, 1

[target]
u = "0", "0", "t"
x = "0", "0", "1-t", "exp(t)", "1-t", "0"

[cost]
phi = "t"
times = 0.5, 1
)RAW";

const char* kStepNoncomm = R"RAW(# Unit jump driven through non-commuting fields; the bridge matters
[dynamics]
n = 2
m = 2
l = 0
f = "0", "0"
g1 = "1", "0"
g2 = "0", "x1"

[control_set]
kind = box
lower = -0.5, -0.5
upper = 1.5, 1.5
whitney = 2

[input]
a = 0
b = 1
breakpoints = 0, 0.5, 1
segment1 = "0", "0"
segment2 = "1", "1"
jump2 = (0,0) -> (1,1) -> (1,1)

[initial]
x = 0, 0

[sweep]
ks = 16, 64, 256, 1024
taus = 0.2, 0.5, 0.8, 1
)RAW";

const char* kStepComm = R"RAW(# Same jump under commuting diagonal fields; the bridge cannot matter
[dynamics]
n = 2
m = 2
l = 0
f = "0", "0"
g1 = "x1", "0"
g2 = "0", "x2"

[control_set]
kind = box
lower = -0.5, -0.5
upper = 1.5, 1.5
whitney = 2

[input]
a = 0
b = 1
breakpoints = 0, 0.5, 1
segment1 = "0", "0"
segment2 = "1", "1"
jump2 = (0,0) -> (1,1) -> (1,1)

[initial]
x = 1, 1

[sweep]
ks = 16, 64, 256, 1024
taus = 0.2, 0.5, 0.8, 1
)RAW";

}  // namespace

std::vector<std::string> builtin_scenario_names() {
  return {"ex21", "step_noncomm", "step_comm"};
}

bool is_builtin_scenario(const std::string& name) {
  for (const std::string& b : builtin_scenario_names())
    if (b == name) return true;
  return false;
}

Scenario builtin_scenario(const std::string& name) {
  if (name == "ex21") return parse_scenario(kEx21, "ex21");
  if (name == "step_noncomm") return parse_scenario(kStepNoncomm, "step_noncomm");
  if (name == "step_comm") return parse_scenario(kStepComm, "step_comm");
  throw ConfigError("unknown built-in scenario '" + name + "'");
}

Scenario load_scenario(const std::string& path_or_builtin) {
  if (is_builtin_scenario(path_or_builtin)) return builtin_scenario(path_or_builtin);
  std::ifstream in(path_or_builtin);
  if (!in) throw ConfigError("cannot read scenario file '" + path_or_builtin + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path_or_builtin);
}

}  // namespace impulsim
