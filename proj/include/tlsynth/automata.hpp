/* automata.hpp -- limit-deterministic generalized Büchi automata.
 *
 * An automaton is loaded from a small line-oriented document format:
 *
 *   states: q1 q2 q3
 *   initial: q1
 *   deterministic: q2 q3
 *   accepting: F1 = {q2}
 *   q1 -- t --> q2
 *   q1 -- !u & !t --> q1
 *   q1 --eps--> q2
 *
 * Edge guards are conjunctions of literals over atomic propositions; a
 * label set matches a guard iff it satisfies every literal.  Label sets
 * with no matching edge fall into an implicit rejecting sink with a
 * universal self-loop, which keeps the transition relation total without
 * the document having to enumerate the whole alphabet.
 */
#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tlsynth {

// a set of atomic proposition names read off a state ({} = neutral)
using Label = std::set<std::string>;

using AutState = int;

// implicit rejecting sink absorbing label sets with no listed edge
inline constexpr AutState sink_state = -1;

struct ParseError : std::runtime_error {
  int line;
  int column;
  ParseError(int line_, int column_, const std::string& what_)
      : std::runtime_error("line " + std::to_string(line_) + ", column " +
                           std::to_string(column_) + ": " + what_),
        line(line_),
        column(column_) {}
};

struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GuardLiteral {
  std::string ap;
  bool positive = true;
};

// conjunction of literals; an empty conjunction matches every label
struct Guard {
  std::vector<GuardLiteral> literals;

  bool matches(const Label& label) const {
    for (const auto& lit : literals)
      if ((label.count(lit.ap) != 0) != lit.positive) return false;
    return true;
  }

  // two conjunctions are simultaneously satisfiable unless one contains a
  // literal the other negates
  bool compatible_with(const Guard& other) const {
    for (const auto& a : literals)
      for (const auto& b : other.literals)
        if (a.ap == b.ap && a.positive != b.positive) return false;
    return true;
  }

  std::string text() const {
    if (literals.empty()) return "true";
    std::string out;
    for (std::size_t i = 0; i < literals.size(); ++i) {
      if (i) out += " & ";
      if (!literals[i].positive) out += '!';
      out += literals[i].ap;
    }
    return out;
  }
};

struct LdbaEdge {
  AutState src;
  Guard guard;
  AutState dst;
};

// sorted set of automaton states still owed a visit
using Frontier = std::vector<AutState>;

struct Ldba {
  std::vector<std::string> state_names;
  AutState initial = 0;
  std::vector<std::vector<AutState>> accepting_sets;  // each sorted
  std::vector<LdbaEdge> edges;
  std::vector<std::vector<int>> edges_from;       // per state: edge indices
  std::vector<std::vector<AutState>> eps_from;    // per state: sorted targets
  std::vector<char> in_deterministic_part;

  std::size_t size() const { return state_names.size(); }

  AutState state_id(const std::string& name) const {
    for (std::size_t i = 0; i < state_names.size(); ++i)
      if (state_names[i] == name) return static_cast<AutState>(i);
    return sink_state;
  }

  const std::string& name(AutState q) const {
    static const std::string sink_name = "<sink>";
    if (q == sink_state) return sink_name;
    return state_names.at(static_cast<std::size_t>(q));
  }

  bool accepting(AutState q) const {
    for (const auto& fj : accepting_sets)
      if (std::binary_search(fj.begin(), fj.end(), q)) return true;
    return false;
  }

  Frontier accepting_union() const {
    Frontier all;
    for (const auto& fj : accepting_sets) all.insert(all.end(), fj.begin(), fj.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return all;
  }

  bool has_eps_moves() const {
    for (const auto& t : eps_from)
      if (!t.empty()) return true;
    return false;
  }

  // checks every structural condition of limit determinism; throws
  // InvariantError naming the condition that failed
  void validate() const {
    if (state_names.empty()) throw InvariantError("automaton has no states");
    if (initial < 0 || static_cast<std::size_t>(initial) >= size())
      throw InvariantError("initial state is not a declared state");
    if (accepting_sets.empty())
      throw InvariantError("at least one accepting set is required (f >= 1)");
    for (std::size_t j = 0; j < accepting_sets.size(); ++j) {
      if (accepting_sets[j].empty())
        throw InvariantError("accepting set F" + std::to_string(j + 1) +
                             " is empty");
      for (AutState q : accepting_sets[j])
        if (!in_deterministic_part[static_cast<std::size_t>(q)])
          throw InvariantError("accepting set F" + std::to_string(j + 1) +
                               " contains " + name(q) +
                               ", which is outside the deterministic part");
    }
    for (std::size_t q = 0; q < size(); ++q) {
      if (!in_deterministic_part[q]) continue;
      const AutState qs = static_cast<AutState>(q);
      if (!eps_from[q].empty())
        throw InvariantError("state " + name(qs) +
                             " is in the deterministic part but has an "
                             "epsilon move");
      for (int ei : edges_from[q]) {
        const LdbaEdge& e = edges[static_cast<std::size_t>(ei)];
        if (!in_deterministic_part[static_cast<std::size_t>(e.dst)])
          throw InvariantError("deterministic-part state " + name(qs) +
                               " has an edge leaving the deterministic part "
                               "(to " + name(e.dst) + ")");
      }
      for (std::size_t a = 0; a < edges_from[q].size(); ++a) {
        for (std::size_t b = a + 1; b < edges_from[q].size(); ++b) {
          const LdbaEdge& ea = edges[static_cast<std::size_t>(edges_from[q][a])];
          const LdbaEdge& eb = edges[static_cast<std::size_t>(edges_from[q][b])];
          if (ea.dst != eb.dst && ea.guard.compatible_with(eb.guard))
            throw InvariantError(
                "deterministic-part state " + name(qs) +
                " has ambiguous edges: guards '" + ea.guard.text() +
                "' and '" + eb.guard.text() + "' can match the same label");
        }
      }
    }
  }
};

// Delta(q, label): successor set; unlisted pairs go to the implicit sink
inline std::vector<AutState> step_automaton(const Ldba& aut, AutState q,
                                            const Label& label) {
  if (q == sink_state) return {sink_state};
  if (q < 0 || static_cast<std::size_t>(q) >= aut.size())
    throw std::out_of_range("step_automaton: unknown automaton state");
  std::vector<AutState> next;
  for (int ei : aut.edges_from[static_cast<std::size_t>(q)]) {
    const LdbaEdge& e = aut.edges[static_cast<std::size_t>(ei)];
    if (e.guard.matches(label)) next.push_back(e.dst);
  }
  std::sort(next.begin(), next.end());
  next.erase(std::unique(next.begin(), next.end()), next.end());
  if (next.empty()) next.push_back(sink_state);
  return next;
}

inline Frontier initial_frontier(const Ldba& aut) { return aut.accepting_union(); }

struct FrontierStep {
  Frontier next;
  // true when the visit cleared the last owed accepting set (the frontier
  // was restored to the full union, possibly via the empty-set reset)
  bool completed = false;
};

// Three-branch accepting frontier update.  Feeding a state of the set the
// frontier has shrunk to returns the union of all accepting sets minus that
// set; feeding a state of some other owed set removes that set; any other
// state leaves the frontier untouched.  An empty result resets to the full
// union so the cycle can restart.
inline FrontierStep frontier_advance(
    AutState q, const Frontier& frontier,
    const std::vector<std::vector<AutState>>& accepting_sets) {
  FrontierStep step;
  step.next = frontier;
  for (const auto& fj : accepting_sets) {
    if (!std::binary_search(fj.begin(), fj.end(), q)) continue;
    if (frontier == fj) {
      Frontier all;
      for (const auto& fk : accepting_sets)
        all.insert(all.end(), fk.begin(), fk.end());
      std::sort(all.begin(), all.end());
      all.erase(std::unique(all.begin(), all.end()), all.end());
      Frontier out;
      std::set_difference(all.begin(), all.end(), fj.begin(), fj.end(),
                          std::back_inserter(out));
      step.next = std::move(out);
      step.completed = true;
    } else {
      Frontier out;
      std::set_difference(frontier.begin(), frontier.end(), fj.begin(),
                          fj.end(), std::back_inserter(out));
      step.next = std::move(out);
    }
    break;
  }
  if (step.next.empty()) {
    Frontier all;
    for (const auto& fk : accepting_sets)
      all.insert(all.end(), fk.begin(), fk.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    step.next = std::move(all);
    step.completed = true;
  }
  return step;
}

inline Frontier accepting_frontier(
    AutState q, const Frontier& frontier,
    const std::vector<std::vector<AutState>>& accepting_sets) {
  return frontier_advance(q, frontier, accepting_sets).next;
}

inline Frontier accepting_frontier(const Ldba& aut, AutState q,
                                   const Frontier& frontier) {
  return frontier_advance(q, frontier, aut.accepting_sets).next;
}

struct TraceReport {
  std::vector<AutState> run;          // run[0] is the initial state
  std::vector<int> accepting_visits;  // per accepting set, entries at step >= 1
  int frontier_resets = 0;            // completed frontier passes
  bool hit_sink = false;
};

// Runs a finite label sequence through the automaton.  `choices` resolves
// steps with more than one matching successor, in order; it is an error for
// the sequence to run out while nondeterminism remains.
inline TraceReport check_trace(const Ldba& aut, const std::vector<Label>& labels,
                               const std::vector<AutState>& choices = {}) {
  TraceReport rep;
  rep.run.push_back(aut.initial);
  rep.accepting_visits.assign(aut.accepting_sets.size(), 0);
  Frontier frontier = initial_frontier(aut);
  std::size_t next_choice = 0;
  AutState q = aut.initial;
  for (const Label& label : labels) {
    const auto successors = step_automaton(aut, q, label);
    AutState chosen;
    if (successors.size() == 1) {
      chosen = successors.front();
    } else {
      if (next_choice >= choices.size())
        throw std::runtime_error(
            "check_trace: choice sequence exhausted before label sequence");
      chosen = choices[next_choice++];
      if (!std::binary_search(successors.begin(), successors.end(), chosen))
        throw std::runtime_error("check_trace: choice '" + aut.name(chosen) +
                                 "' does not match any successor");
    }
    q = chosen;
    rep.run.push_back(q);
    if (q == sink_state) {
      rep.hit_sink = true;
      continue;
    }
    for (std::size_t j = 0; j < aut.accepting_sets.size(); ++j)
      if (std::binary_search(aut.accepting_sets[j].begin(),
                             aut.accepting_sets[j].end(), q))
        ++rep.accepting_visits[j];
    auto step = frontier_advance(q, frontier, aut.accepting_sets);
    frontier = std::move(step.next);
    if (step.completed) ++rep.frontier_resets;
  }
  return rep;
}

// Shortest forward graph distance from each state to the nearest accepting
// state (edges and epsilon moves alike); unreachable states get INT_MAX.
inline std::vector<int> distance_to_accepting(const Ldba& aut) {
  constexpr int inf = std::numeric_limits<int>::max();
  std::vector<int> dist(aut.size(), inf);
  // reverse adjacency
  std::vector<std::vector<AutState>> rev(aut.size());
  for (const auto& e : aut.edges)
    rev[static_cast<std::size_t>(e.dst)].push_back(e.src);
  for (std::size_t q = 0; q < aut.size(); ++q)
    for (AutState t : aut.eps_from[q])
      rev[static_cast<std::size_t>(t)].push_back(static_cast<AutState>(q));

  std::vector<AutState> frontier;
  for (AutState q = 0; q < static_cast<AutState>(aut.size()); ++q)
    if (aut.accepting(q)) {
      dist[static_cast<std::size_t>(q)] = 0;
      frontier.push_back(q);
    }
  while (!frontier.empty()) {
    std::vector<AutState> next;
    for (AutState q : frontier)
      for (AutState p : rev[static_cast<std::size_t>(q)])
        if (dist[static_cast<std::size_t>(p)] == inf) {
          dist[static_cast<std::size_t>(p)] =
              dist[static_cast<std::size_t>(q)] + 1;
          next.push_back(p);
        }
    frontier = std::move(next);
  }
  return dist;
}

// Training schedule shared by the batch learners: accepting-adjacent states
// first, states that cannot reach an accepting state last, ties by id.
inline std::vector<AutState> backward_training_order(const Ldba& aut) {
  const std::vector<int> dist = distance_to_accepting(aut);
  std::vector<AutState> order(aut.size());
  for (std::size_t i = 0; i < aut.size(); ++i)
    order[i] = static_cast<AutState>(i);
  std::stable_sort(order.begin(), order.end(), [&](AutState a, AutState b) {
    return dist[static_cast<std::size_t>(a)] < dist[static_cast<std::size_t>(b)];
  });
  return order;
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return !std::isdigit(static_cast<unsigned char>(s[0]));
}

inline std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace detail

inline Ldba parse_ldba(const std::string& text) {
  Ldba aut;
  std::vector<std::string> initial_names;
  std::vector<std::string> deterministic_names;
  std::vector<std::vector<std::string>> accepting_names;
  struct RawEdge {
    std::string src, guard, dst;
    int line;
    int src_col, dst_col;
    bool eps;
  };
  std::vector<RawEdge> raw_edges;

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool saw_states = false, saw_initial = false, saw_accepting = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line = line.substr(0, hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;

    if (auto arrow = body.find("-->"); arrow != std::string::npos) {
      const std::string lhs = body.substr(0, arrow);
      const std::string dst = detail::trim(body.substr(arrow + 3));
      const auto dashes = lhs.find("--");
      if (dashes == std::string::npos)
        throw ParseError(line_no, 1, "edge line is missing '--'");
      RawEdge e;
      e.src = detail::trim(lhs.substr(0, dashes));
      e.guard = detail::trim(lhs.substr(dashes + 2));
      e.dst = dst;
      e.line = line_no;
      e.src_col = 1;
      e.dst_col = static_cast<int>(arrow + 4);
      e.eps = (e.guard == "eps");
      if (e.src.empty()) throw ParseError(line_no, 1, "edge has no source state");
      if (e.dst.empty())
        throw ParseError(line_no, e.dst_col, "edge has no target state");
      if (!e.eps && e.guard.empty())
        throw ParseError(line_no, static_cast<int>(dashes + 3),
                         "edge has an empty guard (use 'true' or 'eps')");
      raw_edges.push_back(std::move(e));
      continue;
    }

    const auto colon = body.find(':');
    if (colon == std::string::npos)
      throw ParseError(line_no, 1, "expected 'key:' header or an edge line");
    const std::string key = detail::trim(body.substr(0, colon));
    const std::string rest = detail::trim(body.substr(colon + 1));

    if (key == "states") {
      saw_states = true;
      for (const auto& n : detail::split_ws(rest)) {
        if (!detail::valid_name(n))
          throw ParseError(line_no, static_cast<int>(colon + 2),
                           "invalid state name '" + n + "'");
        if (std::find(aut.state_names.begin(), aut.state_names.end(), n) !=
            aut.state_names.end())
          throw ParseError(line_no, static_cast<int>(colon + 2),
                           "duplicate state name '" + n + "'");
        aut.state_names.push_back(n);
      }
      if (aut.state_names.empty())
        throw ParseError(line_no, static_cast<int>(colon + 2),
                         "'states:' lists no states");
    } else if (key == "initial") {
      saw_initial = true;
      initial_names = detail::split_ws(rest);
      if (initial_names.empty())
        throw ParseError(line_no, static_cast<int>(colon + 2),
                         "'initial:' lists no state");
      if (initial_names.size() > 1)
        throw ParseError(line_no, static_cast<int>(colon + 2),
                         "multiple initial states are not supported; declare "
                         "exactly one");
    } else if (key == "deterministic") {
      for (const auto& n : detail::split_ws(rest)) deterministic_names.push_back(n);
    } else if (key == "accepting") {
      saw_accepting = true;
      std::stringstream groups(rest);
      std::string group;
      while (std::getline(groups, group, ';')) {
        group = detail::trim(group);
        if (group.empty()) continue;
        const auto open = group.find('{');
        const auto close = group.find('}');
        if (open == std::string::npos || close == std::string::npos ||
            close < open)
          throw ParseError(line_no, static_cast<int>(colon + 2),
                           "accepting set must be written as 'Fk = {q, ...}'");
        std::string members = group.substr(open + 1, close - open - 1);
        for (char& c : members)
          if (c == ',') c = ' ';
        accepting_names.push_back(detail::split_ws(members));
      }
    } else {
      throw ParseError(line_no, 1, "unknown header '" + key + "'");
    }
  }

  if (!saw_states) throw ParseError(line_no, 1, "missing 'states:' header");
  if (!saw_initial) throw ParseError(line_no, 1, "missing 'initial:' header");
  if (!saw_accepting)
    throw ParseError(line_no, 1, "missing 'accepting:' header");

  const auto resolve = [&](const std::string& n, int ln, int col) {
    const AutState q = aut.state_id(n);
    if (q == sink_state)
      throw ParseError(ln, col, "unknown state '" + n + "'");
    return q;
  };

  aut.initial = resolve(initial_names.front(), line_no, 1);
  aut.in_deterministic_part.assign(aut.size(), 0);
  for (const auto& n : deterministic_names)
    aut.in_deterministic_part[static_cast<std::size_t>(resolve(n, line_no, 1))] = 1;

  for (const auto& group : accepting_names) {
    if (group.empty()) throw InvariantError("accepting set F" + std::to_string(aut.accepting_sets.size() + 1) + " is empty");
    std::vector<AutState> fj;
    for (const auto& n : group) fj.push_back(resolve(n, line_no, 1));
    std::sort(fj.begin(), fj.end());
    fj.erase(std::unique(fj.begin(), fj.end()), fj.end());
    aut.accepting_sets.push_back(std::move(fj));
  }

  aut.edges_from.assign(aut.size(), {});
  aut.eps_from.assign(aut.size(), {});
  for (const auto& re : raw_edges) {
    const AutState src = resolve(re.src, re.line, re.src_col);
    const AutState dst = resolve(re.dst, re.line, re.dst_col);
    if (re.eps) {
      aut.eps_from[static_cast<std::size_t>(src)].push_back(dst);
      continue;
    }
    Guard guard;
    if (re.guard != "true") {
      std::stringstream lits(re.guard);
      std::string lit;
      while (std::getline(lits, lit, '&')) {
        lit = detail::trim(lit);
        GuardLiteral gl;
        if (!lit.empty() && lit[0] == '!') {
          gl.positive = false;
          lit = detail::trim(lit.substr(1));
        }
        if (!detail::valid_name(lit))
          throw ParseError(re.line, 1,
                           "invalid guard literal in '" + re.guard + "'");
        gl.ap = lit;
        guard.literals.push_back(std::move(gl));
      }
    }
    const int ei = static_cast<int>(aut.edges.size());
    aut.edges.push_back({src, std::move(guard), dst});
    aut.edges_from[static_cast<std::size_t>(src)].push_back(ei);
  }
  for (auto& targets : aut.eps_from) {
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  }

  aut.validate();
  return aut;
}

inline Ldba load_ldba(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open automaton file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_ldba(buf.str());
  } catch (const ParseError& e) {
    throw std::runtime_error(path + ": " + e.what());
  } catch (const InvariantError& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace tlsynth
