#include "dcloc/engine.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace dcloc {

const char* to_string(BranchKind kind) {
  switch (kind) {
    case BranchKind::resistor: return "resistor";
    case BranchKind::inductor: return "inductor";
    case BranchKind::capacitor: return "capacitor";
    case BranchKind::ideal_switch: return "switch";
  }
  return "?";
}

Circuit& Circuit::add_branch(Branch branch) {
  branches_.push_back(std::move(branch));
  return *this;
}

Circuit& Circuit::add_resistor(std::string name, std::string a, std::string b, double ohms) {
  return add_branch({BranchKind::resistor, std::move(name), std::move(a), std::move(b), ohms});
}

Circuit& Circuit::add_inductor(std::string name, std::string a, std::string b, double henry,
                               double initial_current) {
  return add_branch({BranchKind::inductor, std::move(name), std::move(a), std::move(b), henry,
                     initial_current});
}

Circuit& Circuit::add_capacitor(std::string name, std::string a, std::string b, double farad,
                                double initial_voltage) {
  return add_branch({BranchKind::capacitor, std::move(name), std::move(a), std::move(b), farad,
                     initial_voltage});
}

Circuit& Circuit::add_switch(std::string name, std::string a, std::string b, double close_time) {
  return add_branch({BranchKind::ideal_switch, std::move(name), std::move(a), std::move(b), 0.0,
                     0.0, close_time});
}

Circuit& Circuit::probe_voltage(std::string name, std::string pos, std::string neg) {
  voltage_probes_.push_back({std::move(name), std::move(pos), std::move(neg)});
  return *this;
}

Circuit& Circuit::probe_current(std::string name, std::string branch) {
  current_probes_.push_back({std::move(name), std::move(branch)});
  return *this;
}

const Branch* Circuit::find_branch(const std::string& name) const {
  auto it = std::find_if(branches_.begin(), branches_.end(),
                         [&](const Branch& b) { return b.name == name; });
  return it == branches_.end() ? nullptr : &*it;
}

std::vector<std::string> Circuit::nodes() const {
  std::set<std::string> s{ground_};
  for (const auto& b : branches_) {
    s.insert(b.node_a);
    s.insert(b.node_b);
  }
  return {s.begin(), s.end()};
}

bool RawTrace::has(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

const std::vector<double>& RawTrace::operator[](const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::out_of_range("no probe named '" + name + "'");
  return samples[static_cast<std::size_t>(it - names.begin())];
}

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

 private:
  std::vector<std::size_t> parent_;
};

struct Element {
  BranchKind kind;
  std::string name;
  int a;  // unknown index, -1 for ground
  int b;
  double value;
  double initial;
  double close_time;
};

enum class Rule { trapezoidal, backward_euler };

// Equilibrated LDLT of the nodal conductance matrix, in extended precision:
// cable nodes tied to the rest only through inductors are badly conditioned
// while the fault switch is open.
using MatrixXe = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VectorXe = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

struct Factorization {
  VectorXe scale;
  Eigen::LDLT<MatrixXe> ldlt;

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    const VectorXe y = ldlt.solve(scale.cwiseProduct(rhs.cast<long double>()));
    return scale.cwiseProduct(y).cast<double>();
  }
};

}  // namespace

struct TransientSystem::Impl {
  std::vector<std::string> unknown_names;  // representative node name per unknown
  std::vector<Element> elements;
  std::vector<std::size_t> inductors;
  std::vector<std::size_t> capacitors;
  std::vector<std::size_t> switches;

  struct VProbe {
    int pos;
    int neg;
  };
  struct IProbe {
    std::size_t element;
  };
  std::vector<std::string> probe_names;
  std::vector<VProbe> vprobes;
  std::vector<IProbe> iprobes;
  std::size_t state_dim = 0;

  std::size_t n() const { return unknown_names.size(); }

  static double conductance(const Element& e, Rule rule, double h, bool closed) {
    switch (e.kind) {
      case BranchKind::resistor: return 1.0 / e.value;
      case BranchKind::ideal_switch: return closed ? 1.0 / kSwitchOnResistance : 0.0;
      case BranchKind::inductor: return rule == Rule::trapezoidal ? h / (2.0 * e.value) : h / e.value;
      case BranchKind::capacitor: return rule == Rule::trapezoidal ? 2.0 * e.value / h : e.value / h;
    }
    return 0.0;
  }

  std::string describe_floating(const std::vector<bool>& closed) const {
    DisjointSets ds(n() + 1);
    const auto idx = [&](int k) { return k < 0 ? n() : static_cast<std::size_t>(k); };
    for (std::size_t k = 0; k < elements.size(); ++k) {
      const auto& e = elements[k];
      if (e.kind == BranchKind::ideal_switch && !closed[k]) continue;
      ds.unite(idx(e.a), idx(e.b));
    }
    std::ostringstream os;
    os << "singular nodal matrix; floating nodes:";
    for (std::size_t k = 0; k < n(); ++k)
      if (ds.find(k) != ds.find(n())) os << ' ' << unknown_names[k];
    os << "; open switches:";
    for (auto s : switches)
      if (!closed[s]) os << ' ' << elements[s].name;
    return os.str();
  }

  Factorization factorize(const std::vector<bool>& closed, Rule rule, double h) const {
    MatrixXe g = MatrixXe::Zero(static_cast<Eigen::Index>(n()), static_cast<Eigen::Index>(n()));
    for (std::size_t k = 0; k < elements.size(); ++k) {
      const auto& e = elements[k];
      const double y = conductance(e, rule, h, closed[k]);
      if (y == 0.0) continue;
      if (e.a >= 0) g(e.a, e.a) += y;
      if (e.b >= 0) g(e.b, e.b) += y;
      if (e.a >= 0 && e.b >= 0) {
        g(e.a, e.b) -= y;
        g(e.b, e.a) -= y;
      }
    }
    Factorization f;
    f.scale.resize(g.rows());
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      if (!(g(i, i) > 0.0)) throw SimulationError(describe_floating(closed));
      f.scale(i) = 1.0L / std::sqrt(g(i, i));
    }
    const MatrixXe scaled = f.scale.asDiagonal() * g * f.scale.asDiagonal();
    f.ldlt.compute(scaled);
    if (f.ldlt.info() != Eigen::Success || !f.ldlt.isPositive())
      throw SimulationError(describe_floating(closed));
    const auto d = f.ldlt.vectorD();
    if (d.minCoeff() < 1e-13 * d.maxCoeff()) throw SimulationError(describe_floating(closed));
    return f;
  }
};

namespace {

void fail_if(bool bad, const std::string& message) {
  if (bad) throw CircuitError(message);
}

std::size_t count_state_dimension(const std::vector<Element>& elements, std::size_t n) {
  const auto idx = [&](int k) { return k < 0 ? n : static_cast<std::size_t>(k); };

  // Capacitor voltages: rank of the capacitor-only incidence.
  std::size_t cap_rank = 0;
  {
    DisjointSets ds(n + 1);
    for (const auto& e : elements) {
      if (e.kind != BranchKind::capacitor) continue;
      if (ds.find(idx(e.a)) != ds.find(idx(e.b))) {
        ds.unite(idx(e.a), idx(e.b));
        ++cap_rank;
      }
    }
  }

  // Inductor currents: contract every non-inductor branch, then count
  // inductors minus the rank of the inductor incidence on the quotient.
  std::size_t n_ind = 0;
  std::size_t ind_rank = 0;
  {
    DisjointSets contract(n + 1);
    for (const auto& e : elements)
      if (e.kind != BranchKind::inductor) contract.unite(idx(e.a), idx(e.b));
    DisjointSets ds(n + 1);
    for (const auto& e : elements) {
      if (e.kind != BranchKind::inductor) continue;
      ++n_ind;
      const auto a = contract.find(idx(e.a));
      const auto b = contract.find(idx(e.b));
      if (ds.find(a) != ds.find(b)) {
        ds.unite(a, b);
        ++ind_rank;
      }
    }
  }
  return cap_rank + (n_ind - ind_rank);
}

}  // namespace

TransientSystem::TransientSystem(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
TransientSystem::~TransientSystem() = default;
TransientSystem::TransientSystem(TransientSystem&&) noexcept = default;
TransientSystem& TransientSystem::operator=(TransientSystem&&) noexcept = default;

std::size_t TransientSystem::node_count() const { return impl_->n(); }
std::size_t TransientSystem::state_dimension() const { return impl_->state_dim; }

TransientSystem TransientSystem::assemble(const Circuit& circuit) {
  const auto& branches = circuit.branches();
  fail_if(branches.empty(), "circuit has no branches");

  std::set<std::string> branch_names;
  for (const auto& b : branches) {
    fail_if(b.name.empty(), "branch without a name");
    fail_if(!branch_names.insert(b.name).second, "duplicate branch name '" + b.name + "'");
    fail_if(b.node_a == b.node_b, "branch '" + b.name + "' connects node '" + b.node_a + "' to itself");
    switch (b.kind) {
      case BranchKind::resistor:
        fail_if(!(b.value >= 0.0) || !std::isfinite(b.value),
                "resistor '" + b.name + "' has non-positive value");
        break;
      case BranchKind::inductor:
      case BranchKind::capacitor:
        fail_if(!(b.value > 0.0) || !std::isfinite(b.value),
                std::string(to_string(b.kind)) + " '" + b.name + "' has non-positive value");
        fail_if(!std::isfinite(b.initial_state), "branch '" + b.name + "' has non-finite initial state");
        break;
      case BranchKind::ideal_switch:
        fail_if(std::isnan(b.close_time), "switch '" + b.name + "' has NaN close time");
        break;
    }
  }

  // Node numbering; zero-ohm resistors merge their endpoints.
  const auto names = circuit.nodes();
  std::map<std::string, std::size_t> raw;
  for (std::size_t k = 0; k < names.size(); ++k) raw[names[k]] = k;
  DisjointSets merge(names.size());
  for (const auto& b : branches)
    if (b.kind == BranchKind::resistor && b.value == 0.0) merge.unite(raw[b.node_a], raw[b.node_b]);

  // Connectivity over every branch, switches included.
  {
    DisjointSets conn(names.size());
    for (const auto& b : branches) conn.unite(raw[b.node_a], raw[b.node_b]);
    const auto g = conn.find(raw[circuit.ground()]);
    std::string floating;
    for (const auto& nm : names)
      if (conn.find(raw[nm]) != g) floating += " " + nm;
    fail_if(!floating.empty(), "disconnected graph; no path to ground from:" + floating);
  }

  auto impl = std::make_unique<Impl>();
  const auto ground_rep = merge.find(raw[circuit.ground()]);
  std::map<std::size_t, int> rep_index;
  for (const auto& nm : names) {
    const auto r = merge.find(raw[nm]);
    if (r == ground_rep || rep_index.count(r)) continue;
    rep_index[r] = static_cast<int>(impl->unknown_names.size());
    impl->unknown_names.push_back(nm);
  }
  const auto node_index = [&](const std::string& nm) {
    const auto r = merge.find(raw.at(nm));
    return r == ground_rep ? -1 : rep_index.at(r);
  };

  std::unordered_map<std::string, std::size_t> element_of;
  for (const auto& b : branches) {
    if (b.kind == BranchKind::resistor && b.value == 0.0) continue;
    const int a = node_index(b.node_a);
    const int c = node_index(b.node_b);
    fail_if(a == c, "branch '" + b.name + "' is shorted by zero-ohm connections");
    element_of[b.name] = impl->elements.size();
    switch (b.kind) {
      case BranchKind::inductor: impl->inductors.push_back(impl->elements.size()); break;
      case BranchKind::capacitor: impl->capacitors.push_back(impl->elements.size()); break;
      case BranchKind::ideal_switch: impl->switches.push_back(impl->elements.size()); break;
      default: break;
    }
    impl->elements.push_back({b.kind, b.name, a, c, b.value,
                              b.kind == BranchKind::resistor ? 0.0 : b.initial_state, b.close_time});
  }
  fail_if(impl->unknown_names.empty(), "circuit has no non-ground node");

  std::set<std::string> probe_names;
  for (const auto& p : circuit.voltage_probes()) {
    fail_if(!probe_names.insert(p.name).second, "duplicate probe name '" + p.name + "'");
    fail_if(!raw.count(p.node_pos), "probe '" + p.name + "' references unknown node '" + p.node_pos + "'");
    fail_if(!raw.count(p.node_neg), "probe '" + p.name + "' references unknown node '" + p.node_neg + "'");
    impl->probe_names.push_back(p.name);
    impl->vprobes.push_back({node_index(p.node_pos), node_index(p.node_neg)});
  }
  for (const auto& p : circuit.current_probes()) {
    fail_if(!probe_names.insert(p.name).second, "duplicate probe name '" + p.name + "'");
    fail_if(!branch_names.count(p.branch), "probe '" + p.name + "' references unknown branch '" + p.branch + "'");
    fail_if(!element_of.count(p.branch),
            "probe '" + p.name + "' references zero-ohm branch '" + p.branch + "' (merged away)");
    impl->probe_names.push_back(p.name);
    impl->iprobes.push_back({element_of.at(p.branch)});
  }

  impl->state_dim = count_state_dimension(impl->elements, impl->n());
  return TransientSystem(std::move(impl));
}

RawTrace TransientSystem::simulate(double duration, double internal_step, double t_start) const {
  const Impl& sys = *impl_;
  if (!(internal_step > 0.0) || !std::isfinite(internal_step))
    throw std::invalid_argument("internal_step must be positive");
  if (!(duration >= internal_step) || !std::isfinite(duration))
    throw std::invalid_argument("duration must be at least one internal step");

  const double h = internal_step;
  const auto steps = static_cast<std::size_t>(std::floor(duration / h + 1e-9));
  const auto& el = sys.elements;
  const std::size_t n = sys.n();

  // Grid index at which each switch closes; the switch conducts from there on.
  std::vector<long long> close_step(el.size(), -1);
  std::set<long long> events;
  for (auto s : sys.switches) {
    const double tc = el[s].close_time;
    if (tc == std::numeric_limits<double>::infinity()) {
      close_step[s] = std::numeric_limits<long long>::max();
    } else if (tc <= t_start) {
      close_step[s] = 0;
    } else {
      close_step[s] = std::llround((tc - t_start) / h);
      events.insert(close_step[s]);
    }
  }
  std::vector<bool> closed(el.size(), false);
  const auto update_topology = [&](long long step) {
    for (auto s : sys.switches) closed[s] = close_step[s] <= step;
  };

  // Branch state: current through and voltage across every element.
  std::vector<double> cur(el.size(), 0.0), volt(el.size(), 0.0);
  for (std::size_t k = 0; k < el.size(); ++k) {
    if (el[k].kind == BranchKind::inductor) cur[k] = el[k].initial;
    if (el[k].kind == BranchKind::capacitor) volt[k] = el[k].initial;
  }
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  const auto node_v = [&](int k) { return k < 0 ? 0.0 : v(k); };

  // Builds the right-hand side for one step of the given rule, solves, and
  // returns updated branch quantities without committing them.
  const auto step_once = [&](const Factorization& f, Rule rule, double hs,
                             std::vector<double>& cur_out, std::vector<double>& volt_out) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    std::vector<double> hist(el.size(), 0.0);
    for (std::size_t k = 0; k < el.size(); ++k) {
      const auto& e = el[k];
      if (e.kind != BranchKind::inductor && e.kind != BranchKind::capacitor) continue;
      const double g = Impl::conductance(e, rule, hs, true);
      if (e.kind == BranchKind::inductor)
        hist[k] = rule == Rule::trapezoidal ? cur[k] + g * volt[k] : cur[k];
      else
        hist[k] = rule == Rule::trapezoidal ? -g * volt[k] - cur[k] : -g * volt[k];
      if (e.a >= 0) rhs(e.a) -= hist[k];
      if (e.b >= 0) rhs(e.b) += hist[k];
    }
    v = f.solve(rhs);
    for (std::size_t k = 0; k < el.size(); ++k) {
      const auto& e = el[k];
      const double vab = node_v(e.a) - node_v(e.b);
      volt_out[k] = vab;
      const double g = Impl::conductance(e, rule, hs, closed[k]);
      switch (e.kind) {
        case BranchKind::inductor:
        case BranchKind::capacitor: cur_out[k] = g * vab + hist[k]; break;
        default: cur_out[k] = g * vab; break;
      }
    }
  };

  RawTrace trace;
  trace.internal_step = h;
  trace.t0 = t_start;
  trace.duration = static_cast<double>(steps) * h;
  trace.names = sys.probe_names;
  trace.samples.assign(sys.probe_names.size(), std::vector<double>(steps + 1, 0.0));
  const auto record = [&](std::size_t at, const std::vector<double>& c) {
    std::size_t p = 0;
    for (const auto& vp : sys.vprobes) trace.samples[p++][at] = node_v(vp.pos) - node_v(vp.neg);
    for (const auto& ip : sys.iprobes) trace.samples[p++][at] = c[ip.element];
  };

  // Per-topology factorizations, built on first use.
  std::map<std::pair<std::vector<bool>, int>, Factorization> cache;
  const auto factor = [&](Rule rule, double hs, int tag) -> const Factorization& {
    auto key = std::make_pair(closed, tag);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, sys.factorize(closed, rule, hs)).first;
    return it->second;
  };

  // Sample at t_start: node voltages from a tiny implicit step, so series
  // inductor chains split voltage by inductance. Much smaller steps leave
  // clusters tied only through inductors numerically floating.
  update_topology(0);
  {
    const double h_init = h * 1e-3;
    std::vector<double> c0(el.size()), v0(el.size());
    Factorization f0 = sys.factorize(closed, Rule::backward_euler, h_init);
    step_once(f0, Rule::backward_euler, h_init, c0, v0);
    for (auto k : sys.inductors) c0[k] = cur[k];
    record(0, c0);
    for (auto k : sys.capacitors) cur[k] = c0[k];
    for (std::size_t k = 0; k < el.size(); ++k)
      if (el[k].kind != BranchKind::capacitor) volt[k] = v0[k];
  }

  std::vector<double> c_new(el.size()), v_new(el.size());
  bool restart = true;  // no valid trapezoidal history yet
  for (std::size_t s = 0; s < steps; ++s) {
    const auto step = static_cast<long long>(s);
    if (events.count(step)) {
      update_topology(step);
      restart = true;
    }
    if (restart) {
      // Two backward-Euler half steps damp the discontinuity.
      const Factorization& fb = factor(Rule::backward_euler, h / 2, 1);
      for (int half = 0; half < 2; ++half) {
        step_once(fb, Rule::backward_euler, h / 2, c_new, v_new);
        cur = c_new;
        volt = v_new;
      }
      restart = false;
    } else {
      const Factorization& ft = factor(Rule::trapezoidal, h, 0);
      step_once(ft, Rule::trapezoidal, h, c_new, v_new);
      cur = c_new;
      volt = v_new;
    }
    record(s + 1, cur);
  }
  return trace;
}

}  // namespace dcloc
