#include "tmsim/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "tmsim/parallel.hpp"

namespace tmsim {

namespace {

// Bisection keeping the sign of fn(lo) on the left end. Runs until the
// bracket cannot be split further in double precision.
template <typename Fn>
double bisect(Fn&& fn, double lo, double hi) {
  double f_lo = fn(lo);
  double f_hi = fn(hi);
  const bool pos_lo = f_lo > 0.0;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = fn(mid);
    if (f_mid == 0.0) return mid;
    if ((f_mid > 0.0) == pos_lo) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
  }
  return std::abs(f_lo) <= std::abs(f_hi) ? lo : hi;
}

double clamp_inf(double x) { return std::isfinite(x) ? x : std::numeric_limits<double>::infinity(); }

ConditionRecord make_record(std::string id, double lhs, std::string relation, double rhs) {
  ConditionRecord r{std::move(id), std::move(relation), lhs, rhs, ConditionStatus::violated};
  const double scale = std::max(std::abs(lhs), std::abs(rhs));
  if (lhs == rhs || std::abs(lhs - rhs) <= 1e-12 * scale) {
    r.status = ConditionStatus::equality;
  } else if (r.relation == "<" ? lhs < rhs : lhs > rhs) {
    r.status = ConditionStatus::satisfied;
  }
  return r;
}

SteadyState make_state(double u, const Parameters& p) {
  SteadyState ss;
  ss.u_star = u;
  ss.v_star = v_of_u(u, p);
  ss.V_star = p.V0 - p.cG() * (ss.u_star + ss.v_star);
  ss.J0 = jacobian_homogeneous(ss.u_star, ss.v_star, p);
  ss.J1 = jacobian_frozen_pool(ss.u_star, ss.v_star, ss.V_star, p);
  return ss;
}

}  // namespace

double v_of_u(double u, const Parameters& p) {
  const double a1a2 = p.a1 * p.a2;
  if (u == 0.0) {
    if (a1a2 > 0.0) return 0.0;
    // f(0, v) = 0 for every v; continue the nullcline from u > 0.
    if (p.a3 > 0.0) return p.a4 * p.a2 / (p.a3 * p.a5);
    throw std::invalid_argument("v_of_u: nullcline undefined at u = 0 when a1 a2 = a3 = 0");
  }
  const double denominator = (p.a5 + u) * (a1a2 + p.a3 * u);
  if (denominator == 0.0) {
    throw std::invalid_argument("v_of_u: a1 a2 + a3 u vanishes");
  }
  return p.a4 * u * (p.a2 + u) / denominator;
}

double u0(const Parameters& p) {
  if (!(p.a2 > p.a5)) {
    throw SteadyStateError(SteadyStateError::Kind::precondition,
                           "cdt:1 violated (a2 = " + std::to_string(p.a2) +
                               " is not greater than a5 = " + std::to_string(p.a5) + ")");
  }
  const double denom = p.a3 * (p.a2 - p.a5) - p.a1 * p.a2;
  if (!(2.0 * p.a1 * p.a2 < p.a3 * (p.a2 - p.a5))) {
    throw SteadyStateError(SteadyStateError::Kind::precondition,
                           "2 a1 a2 < a3 (a2 - a5) violated (" +
                               std::to_string(2.0 * p.a1 * p.a2) + " vs " +
                               std::to_string(p.a3 * (p.a2 - p.a5)) + ")");
  }
  return p.a1 * p.a2 * p.a5 / denom +
         p.a2 * std::sqrt(p.a1 * p.a5) * std::sqrt((p.a3 - p.a1) * (p.a2 - p.a5)) / denom;
}

double phi(double u, const Parameters& p) {
  const double v = v_of_u(u, p);
  const double w = u + v;
  return p.a6 * (p.V0 - p.cG() * w) * (1.0 - w) - p.a_neg6 * v;
}

Matrix2 jacobian_homogeneous(double u, double v, const Parameters& p) {
  const auto df = jac_f(u, v, p);
  const auto dq = jac_q0(u + v, v, p);
  Matrix2 j;
  j << df.du, df.dv, -df.du + dq.du, -df.dv + dq.dv;
  return j;
}

Matrix2 jacobian_frozen_pool(double u, double v, double Vstar, const Parameters& p) {
  const auto df = jac_f(u, v, p);
  const auto dq = jac_q1(Vstar, p);
  Matrix2 j;
  j << df.du, df.dv, -df.du + dq.du, -df.dv + dq.dv;
  return j;
}

SteadyState find_steady_state(const Parameters& p) {
  p.validate();
  const double lo = u0(p);
  const double cap = p.saturation();
  auto psi = [&](double u) { return u + v_of_u(u, p) - cap; };

  const double psi_lo = psi(lo);
  if (!(psi_lo < 0.0)) {
    throw SteadyStateError(SteadyStateError::Kind::bracket,
                           "u0 + v[u0] = " + std::to_string(psi_lo + cap) +
                               " already reaches min{1, m} = " + std::to_string(cap),
                           psi_lo, psi_lo);
  }

  // Geometric scan upward from u0 for the first crossing of min{1, m}.
  double a = lo;
  double b = lo;
  double step = std::max(cap, lo) * 1e-9;
  while (true) {
    b = std::min(lo + step, cap);
    if (psi(b) >= 0.0) break;
    if (b >= cap) {
      throw SteadyStateError(SteadyStateError::Kind::bracket,
                             "u + v[u] never reaches min{1, m} on (u0, min{1, m}]", psi_lo,
                             psi(b));
    }
    a = b;
    step *= 2.0;
  }
  const double u1 = bisect(psi, a, b);

  constexpr int kScan = 1000;
  std::vector<double> grid(kScan + 1);
  std::vector<double> values(kScan + 1);
  for (int i = 0; i <= kScan; ++i) {
    grid[i] = lo + (u1 - lo) * static_cast<double>(i) / kScan;
    values[i] = phi(grid[i], p);
  }
  int first = -1;
  int changes = 0;
  for (int i = 0; i < kScan; ++i) {
    if ((values[i] > 0.0) != (values[i + 1] > 0.0)) {
      if (first < 0) first = i;
      ++changes;
    }
  }
  if (first < 0) {
    throw SteadyStateError(SteadyStateError::Kind::no_root,
                           "no interior steady state found: phi(u0) = " +
                               std::to_string(values.front()) + ", phi(u1) = " +
                               std::to_string(values.back()),
                           values.front(), values.back());
  }

  const double u_star = bisect([&](double u) { return phi(u, p); }, grid[first], grid[first + 1]);
  SteadyState ss = make_state(u_star, p);
  ss.u0_bracket = lo;
  ss.u1_bracket = u1;
  ss.sign_changes = changes;
  return ss;
}

std::vector<SteadyState> find_homogeneous_states(const Parameters& p, int samples) {
  const double cap = p.saturation();
  std::vector<double> grid(static_cast<std::size_t>(samples));
  std::vector<double> values(grid.size());
  std::vector<char> admissible(grid.size());
  for (int k = 0; k < samples; ++k) {
    const double expo = -12.0 + 12.0 * static_cast<double>(k) / (samples - 1);
    grid[k] = cap * std::pow(10.0, expo);
    const double v = v_of_u(grid[k], p);
    admissible[k] = (grid[k] + v < cap) && std::isfinite(v);
    values[k] = admissible[k] ? phi(grid[k], p) : 0.0;
  }
  std::vector<SteadyState> states;
  for (int k = 0; k + 1 < samples; ++k) {
    if (!admissible[k] || !admissible[k + 1]) continue;
    if ((values[k] > 0.0) == (values[k + 1] > 0.0)) continue;
    const double u = bisect([&](double x) { return phi(x, p); }, grid[k], grid[k + 1]);
    SteadyState ss = make_state(u, p);
    ss.u0_bracket = grid[k];
    ss.u1_bracket = grid[k + 1];
    ss.sign_changes = 1;
    states.push_back(ss);
  }
  return states;
}

std::vector<ConditionRecord> check_conditions(const Parameters& p) {
  const double a1 = p.a1, a2 = p.a2, a3 = p.a3, a4 = p.a4, a5 = p.a5, a6 = p.a6;
  const double an6 = p.a_neg6, V0 = p.V0, m = p.m(), mm = p.saturation();
  const double a3sq = a3 * a3;
  const double gap = a2 - a5;

  std::vector<ConditionRecord> r;
  r.push_back(make_record("cdt:1", a2, ">", a5));
  r.push_back(make_record("cdt:2", 4.0 * a2 * a4, "<", a3 * a5 * mm));
  r.push_back(make_record("cdt:3", 4.0 * a4 * a5 * an6, "<", V0 * a2 * a3 * a6));
  r.push_back(make_record(
      "cdt:4", a1, "<",
      std::min(a3 * gap / (2.0 * a2),
               std::pow(2.0, -8) * a3sq * gap * gap / (a2 * a2 * a5) * mm * mm)));
  r.push_back(make_record("cdt:5", 2.0 * a4 * gap, "<", a3 * a5 * a5));
  r.push_back(make_record("cdt:6", an6, "<", a6 * p.cG() * std::abs(1.0 - m)));
  r.push_back(make_record("cdt:7", a1 * a2, "<", a3 / (1.0 + a3sq)));
  r.push_back(make_record(
      "cdt:8", a1, "<",
      std::min(mm * a3 / (2.0 * a2 * (a3sq + 1.0)),
               mm * mm * a3 * gap / (4.0 * a2 * (a2 + 1.0) * (a2 + 1.0) * (a3sq + 1.0)))));

  const double d1 = 2.0 * (a3 * (a3sq + 2.0) + (a2 + 1.0) * (a3sq + 1.0) * (a6 * V0 + an6)) *
                    (a3sq + 2.0) * (a5 + 1.0) * (a5 + 1.0) /
                    (mm * a3sq * a4 * gap * (a3sq + 1.0));
  const double d2 =
      4.0 * (a3sq + 2.0) * (a3sq + 2.0) * (a5 + 1.0) * (a5 + 1.0) *
      (a3sq * a4 * gap * mm + 4.0 * (a3sq + 2.0) * a6 * V0 * (a2 + 1.0) * (a5 + 1.0) * (a5 + 1.0)) /
      (a3sq * a3 * (a3sq + 1.0) * a4 * a4 * gap * gap * mm * mm);
  r.push_back(make_record("cdt:d1", p.d, ">", clamp_inf(d1)));
  r.push_back(make_record("cdt:d2", p.d, ">", clamp_inf(d2)));
  return r;
}

const ConditionRecord& find_condition(const std::vector<ConditionRecord>& records,
                                      const std::string& id) {
  for (const auto& r : records) {
    if (r.id == id) return r;
  }
  throw std::out_of_range("no condition with id " + id);
}

double sufficient_d(const std::vector<ConditionRecord>& records) {
  return std::max(find_condition(records, "cdt:d1").rhs, find_condition(records, "cdt:d2").rhs);
}

HomogeneousStability homogeneous_stability(const Matrix2& J0) {
  HomogeneousStability s;
  s.trace = J0.trace();
  s.det = J0.determinant();
  s.tu1 = s.trace < 0.0;
  s.tu2 = s.det > 0.0;
  return s;
}

TuringBand turing_conditions(const Matrix2& J1, double d, double gamma) {
  TuringBand band;
  const double det = J1.determinant();
  band.tu3_value = d * J1(0, 0) + J1(1, 1);
  band.tu4_value = band.tu3_value * band.tu3_value - 4.0 * d * det;
  band.tu3 = band.tu3_value > 0.0;
  band.tu4 = band.tu4_value > 0.0;
  if (band.tu3 && band.tu4) {
    const double root = std::sqrt(band.tu4_value);
    band.mu_minus = gamma * (band.tu3_value - root) / (2.0 * d);
    band.mu_plus = gamma * (band.tu3_value + root) / (2.0 * d);
  }
  return band;
}

std::array<std::complex<double>, 2> growth_rates(double lambda, const Matrix2& J1, double d,
                                                 double gamma) {
  const double a = -lambda + gamma * J1(0, 0);
  const double b = gamma * J1(0, 1);
  const double c = gamma * J1(1, 0);
  const double e = -lambda * d + gamma * J1(1, 1);
  const double tr = a + e;
  const double det = a * e - b * c;
  const double disc = tr * tr - 4.0 * det;
  if (disc >= 0.0) {
    const double root = std::sqrt(disc);
    // Avoid cancellation in the smaller-magnitude root.
    const double big = tr >= 0.0 ? 0.5 * (tr + root) : 0.5 * (tr - root);
    const double small = big != 0.0 ? det / big : 0.0;
    const double hi = std::max(big, small);
    const double lo = std::min(big, small);
    return {std::complex<double>(hi, 0.0), std::complex<double>(lo, 0.0)};
  }
  const double im = 0.5 * std::sqrt(-disc);
  return {std::complex<double>(0.5 * tr, im), std::complex<double>(0.5 * tr, -im)};
}

double max_growth_rate(double lambda, const Matrix2& J1, double d, double gamma) {
  return growth_rates(lambda, J1, d, gamma)[0].real();
}

std::vector<UnstableMode> unstable_modes(const Parameters& p, const SteadyState& ss, double d,
                                         std::span<const double> eigenvalues) {
  const TuringBand band = turing_conditions(ss.J1, d, p.gamma);
  std::vector<UnstableMode> modes;
  if (!band.has_band()) return modes;
  for (std::size_t i = 1; i < eigenvalues.size(); ++i) {
    if (band.contains(eigenvalues[i])) {
      modes.push_back({static_cast<int>(i), eigenvalues[i],
                       max_growth_rate(eigenvalues[i], ss.J1, d, p.gamma)});
    }
  }
  return modes;
}

double critical_d(const SteadyState& ss, double d_lo, double d_hi, double tol) {
  if (!(ss.J1(0, 0) > 0.0)) {
    throw std::domain_error("no finite critical d: the activator self-term f_u <= 0");
  }
  if (!(d_lo > 0.0 && d_hi > d_lo && tol > 0.0)) {
    throw std::invalid_argument("critical_d: need 0 < d_lo < d_hi and tol > 0");
  }
  auto unstable = [&](double d) {
    const auto band = turing_conditions(ss.J1, d);
    return band.tu3 && band.tu4;
  };
  const bool at_lo = unstable(d_lo);
  const bool at_hi = unstable(d_hi);
  if (at_lo == at_hi) {
    throw std::invalid_argument("critical_d: Turing conditions " +
                                std::string(at_lo ? "hold" : "fail") + " at both d = " +
                                std::to_string(d_lo) + " and d = " + std::to_string(d_hi));
  }
  double lo = d_lo, hi = d_hi;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (unstable(mid) == at_hi) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return at_hi ? hi : lo;
}

SteadyStateBounds steady_state_bounds(const Parameters& p, const SteadyState& ss) {
  const auto records = check_conditions(p);
  SteadyStateBounds b;
  b.applicable = find_condition(records, "cdt:1").satisfied() &&
                 find_condition(records, "cdt:2").satisfied() &&
                 find_condition(records, "cdt:6").satisfied() &&
                 find_condition(records, "cdt:7").satisfied();
  const double mm = p.saturation();
  const double a3sq = p.a3 * p.a3;
  b.v_upper = p.a4 * p.a2 / (p.a3 * p.a5);
  b.u_lower = 0.5 * mm;
  b.v_lower = p.a4 * (p.a2 + 1.0) * (a3sq + 1.0) * mm /
              (2.0 * (p.a5 + 1.0) * (a3sq + 2.0) * p.a3);
  b.v_upper_holds = ss.v_star < b.v_upper;
  b.u_lower_holds = ss.u_star > b.u_lower;
  b.v_lower_holds = ss.v_star > b.v_lower;
  return b;
}

std::string to_string(Classification c) {
  switch (c) {
    case Classification::ode_unstable: return "ode_unstable";
    case Classification::stable_homogeneous: return "stable_homogeneous";
    case Classification::turing_unstable: return "turing_unstable";
  }
  return "unknown";
}

std::string to_string(ConditionStatus s) {
  switch (s) {
    case ConditionStatus::satisfied: return "satisfied";
    case ConditionStatus::equality: return "equality";
    case ConditionStatus::violated: return "violated";
  }
  return "unknown";
}

TuringReport analyze(const Parameters& p) {
  TuringReport report;
  report.parameters = p;
  report.steady_state = find_steady_state(p);
  report.conditions = check_conditions(p);
  report.sufficient_d = sufficient_d(report.conditions);
  report.homogeneous = homogeneous_stability(report.steady_state.J0);
  report.band = turing_conditions(report.steady_state.J1, p.d, p.gamma);
  try {
    report.d_critical = critical_d(report.steady_state, 1e-3, 1e9, 1e-8);
  } catch (const std::exception& e) {
    report.d_critical_note = e.what();
  }
  report.bounds = steady_state_bounds(p, report.steady_state);
  if (!report.homogeneous.stable()) {
    report.classification = Classification::ode_unstable;
  } else if (report.band.tu3 && report.band.tu4) {
    report.classification = Classification::turing_unstable;
  } else {
    report.classification = Classification::stable_homogeneous;
  }
  return report;
}

namespace {

enum class DrawKind { no_steady_state, not_activator_substrate, ode_unstable, kept };

struct DrawOutcome {
  DrawKind kind = DrawKind::no_steady_state;
  std::vector<NoTuringSample> counterexamples;
  bool margin_violation = false;
};

Parameters sample_parameters(std::uint64_t seed, long draw) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(draw), static_cast<std::uint32_t>(draw >> 32)};
  std::mt19937_64 rng(seq);
  auto log_uniform = [&](double lo, double hi) {
    std::uniform_real_distribution<double> dist(std::log(lo), std::log(hi));
    return std::exp(dist(rng));
  };
  Parameters p;
  p.a1 = log_uniform(1e-3, 1e3);
  p.a2 = log_uniform(1e-3, 1e3);
  p.a3 = log_uniform(1e-3, 1e3);
  p.a4 = log_uniform(1e-3, 1e3);
  p.a5 = log_uniform(1e-3, 1e3);
  p.a6 = log_uniform(1e-3, 1e3);
  p.a_neg6 = log_uniform(1e-3, 1e3);
  p.V0 = log_uniform(0.1, 100.0);
  const double cG = log_uniform(0.1, 100.0);
  p.area = 4.0 * std::numbers::pi;
  p.c = cG / p.area;
  p.gamma = 1.0;
  p.d = 1.0;
  return p;
}

DrawOutcome evaluate_draw(const Parameters& p, const NoTuringScanOptions& options) {
  DrawOutcome out;
  const auto states = find_homogeneous_states(p);
  if (states.empty()) return out;
  out.kind = DrawKind::not_activator_substrate;
  for (const auto& ss : states) {
    const auto& j = ss.J0;
    const bool activator_substrate = j(0, 0) > 0.0 && j(0, 1) > 0.0 && j(1, 0) < 0.0 && j(1, 1) < 0.0;
    if (!activator_substrate) continue;
    if (!homogeneous_stability(j).stable()) {
      if (out.kind == DrawKind::not_activator_substrate) out.kind = DrawKind::ode_unstable;
      continue;
    }
    out.kind = DrawKind::kept;
    const auto band = turing_conditions(ss.J1, options.d);
    if (band.tu3 && band.tu4) {
      Parameters q = p;
      q.d = options.d;
      out.counterexamples.push_back({q, ss, band});
    }
    const auto margin = turing_conditions(ss.J1, options.margin_d);
    if (margin.tu3 && margin.tu4) out.margin_violation = true;
  }
  return out;
}

}  // namespace

NoTuringScanReport no_turing_scan(const NoTuringScanOptions& options) {
  if (options.trials < 1) throw std::invalid_argument("no_turing_scan: trials must be >= 1");
  NoTuringScanReport report;
  constexpr long kBatch = 2048;
  std::vector<DrawOutcome> batch(kBatch);
  while (report.kept < options.trials && report.draws < options.max_draws) {
    const long base = report.draws;
    const long count = std::min(kBatch, options.max_draws - base);
    parallel_for(
        static_cast<std::size_t>(count),
        [&](std::size_t begin, std::size_t end) {
          for (std::size_t i = begin; i < end; ++i) {
            const long draw = base + static_cast<long>(i);
            batch[i] = evaluate_draw(sample_parameters(options.seed, draw), options);
          }
        },
        64);
    // Merge in draw order so the result does not depend on the thread count.
    for (long i = 0; i < count && report.kept < options.trials; ++i) {
      ++report.draws;
      auto& outcome = batch[static_cast<std::size_t>(i)];
      switch (outcome.kind) {
        case DrawKind::no_steady_state: ++report.without_steady_state; break;
        case DrawKind::not_activator_substrate: ++report.not_activator_substrate; break;
        case DrawKind::ode_unstable: ++report.ode_unstable; break;
        case DrawKind::kept:
          ++report.kept;
          for (auto& c : outcome.counterexamples) report.counterexamples.push_back(std::move(c));
          if (outcome.margin_violation) ++report.margin_violations;
          break;
      }
    }
  }
  return report;
}

NoTuringScanReport no_turing_scan(int trials, std::uint64_t seed) {
  NoTuringScanOptions options;
  options.trials = trials;
  options.seed = seed;
  return no_turing_scan(options);
}

}  // namespace tmsim
