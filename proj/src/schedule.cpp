#include "polyflow/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace polyflow::opt {

namespace {

double reactive_per_active(const scen::BuildingParams& b) {
  return std::sqrt(std::max(0.0, 1.0 - b.power_factor * b.power_factor)) / b.power_factor;
}

}  // namespace

std::vector<std::string> comfort_screen(const scen::Scenario& sc, int steps) {
  const int T = steps < 0 ? sc.series.horizon() : steps;
  std::vector<std::string> issues;
  for (size_t i = 0; i < sc.buildings.size(); ++i) {
    const auto& b = sc.buildings[i];
    const auto c = scen::thermal_coefficients(b, sc.series.dt_hours);
    double lo = b.theta_init, hi = b.theta_init;
    for (int t = 0; t < T; ++t) {
      const double drive = c.a_out * sc.series.theta_out[static_cast<size_t>(t)] +
                           c.a_h * sc.series.q_heat_mw[static_cast<size_t>(t)];
      const double q_cool_max = b.cop * b.p_hvac_max;
      lo = c.a_in * lo + drive - c.a_h * q_cool_max;
      hi = c.a_in * hi + drive;
      lo = std::max(lo, b.theta_min);
      hi = std::min(hi, b.theta_max);
      if (lo > hi + 1e-12) {
        issues.push_back("building at bus " + std::to_string(b.bus) +
                         ": comfort band unreachable at step " + std::to_string(t));
        break;
      }
    }
  }
  return issues;
}

MilpModel build_schedule_problem(const ScheduleInputs& in, ScheduleMode mode,
                                 ScheduleColumns* cols_out) {
  if (!in.net || !in.scenario || !in.violation_model || !in.loss_model)
    throw std::invalid_argument("build_schedule_problem: missing inputs");
  const auto& sc = *in.scenario;
  const auto& net = *in.net;
  const int T = in.steps < 0 ? sc.series.horizon() : std::min(in.steps, sc.series.horizon());
  if (T < 1) throw std::invalid_argument("build_schedule_problem: empty horizon");
  if (mode == ScheduleMode::PrunedUnion && (!in.regions || in.regions->empty()))
    throw std::invalid_argument("build_schedule_problem: pruned mode needs retained regions");

  const auto screen = comfort_screen(sc, T);
  if (!screen.empty())
    throw std::runtime_error("build_schedule_problem: " + screen.front());

  const int nl = sc.n_load();
  const int nd = sc.n_dg();
  const int nb = sc.n_building();
  const int d = sc.feature_dim();
  const double base = net.base_mva;
  const double dt = sc.series.dt_hours;

  MilpModel model;
  LinearProgram& lp = model.lp;
  ScheduleColumns cols;
  cols.steps = T;

  const ActivationBounds iv_vio = tighten_intervals(*in.violation_model, in.domain_box);
  const ActivationBounds iv_loss = tighten_intervals(*in.loss_model, in.domain_box);
  auto m_from = [](const ActivationBounds& iv) {
    Vec m(iv.z_lo.size());
    for (int k = 0; k < m.size(); ++k)
      m(k) = std::max(std::abs(iv.z_lo(k)), std::abs(iv.z_hi(k))) + 1e-6;
    return m;
  };
  const Vec m_vio = m_from(iv_vio);
  const Vec m_loss = m_from(iv_loss);
  double m_copy = 1.0;
  if (mode == ScheduleMode::PrunedUnion) {
    const auto box_scaled = pwl::scale_box(in.domain_box, in.violation_model->scaler);
    m_copy = std::max(box_scaled.lo.cwiseAbs().maxCoeff(), box_scaled.hi.cwiseAbs().maxCoeff()) + 1.0;
  }

  for (int t = 0; t < T; ++t) {
    const std::string st = "[" + std::to_string(t) + "]";

    std::vector<int> p_hv(nb), th(nb);
    for (int i = 0; i < nb; ++i) {
      const auto& b = sc.buildings[static_cast<size_t>(i)];
      p_hv[static_cast<size_t>(i)] =
          lp.add_col("p_hv" + st + "_b" + std::to_string(b.bus), 0.0, b.p_hvac_max);
      th[static_cast<size_t>(i)] =
          lp.add_col("theta" + st + "_b" + std::to_string(b.bus), b.theta_min, b.theta_max);
    }
    std::vector<int> lam(nd);
    for (int g = 0; g < nd; ++g)
      lam[static_cast<size_t>(g)] =
          lp.add_col("lambda" + st + "_g" + std::to_string(g), 0.0, 1.0);

    // Feature columns with their implied operating ranges.
    std::vector<int> x(d);
    for (int i = 0; i < nl; ++i) {
      const auto& load = sc.series.loads[static_cast<size_t>(i)];
      const int k = sc.building_at_load(i);
      double hv_p = 0.0, hv_q = 0.0;
      if (k >= 0) {
        const auto& b = sc.buildings[static_cast<size_t>(k)];
        hv_p = b.p_hvac_max / base;
        hv_q = reactive_per_active(b) * b.p_hvac_max / base;
      }
      const double pd = load.p_d_pu[static_cast<size_t>(t)];
      const double qd = load.q_d_pu[static_cast<size_t>(t)];
      x[static_cast<size_t>(i)] = lp.add_col("x_p" + st + "_" + std::to_string(i), pd, pd + hv_p);
      x[static_cast<size_t>(nl + i)] =
          lp.add_col("x_q" + st + "_" + std::to_string(i), qd, qd + hv_q);
    }
    for (int g = 0; g < nd; ++g) {
      const double avail = sc.series.dgs[static_cast<size_t>(g)].g_avail_pu[static_cast<size_t>(t)];
      x[static_cast<size_t>(2 * nl + g)] =
          lp.add_col("x_dg" + st + "_" + std::to_string(g), 0.0, avail);
    }

    const int g_root = lp.add_col("g_root" + st, -kInf, kInf);
    const int g_buy =
        lp.add_col("g_buy" + st, 0.0, kInf, sc.series.eta_buy[static_cast<size_t>(t)] * dt * base);
    const int g_sell = lp.add_col("g_sell" + st, 0.0, kInf,
                                  -sc.series.eta_sell[static_cast<size_t>(t)] * dt * base);
    const int p_loss = lp.add_col("p_loss" + st, -kInf, kInf);

    // Thermal dynamics: end-of-step temperature from the previous state.
    for (int i = 0; i < nb; ++i) {
      const auto& b = sc.buildings[static_cast<size_t>(i)];
      const auto c = scen::thermal_coefficients(b, dt);
      const double drive = c.a_out * sc.series.theta_out[static_cast<size_t>(t)] +
                           c.a_h * sc.series.q_heat_mw[static_cast<size_t>(t)];
      std::vector<std::pair<int, double>> row{{th[static_cast<size_t>(i)], 1.0},
                                              {p_hv[static_cast<size_t>(i)], c.a_h * b.cop}};
      double rhs = drive;
      if (t == 0)
        rhs += c.a_in * b.theta_init;
      else
        row.push_back({cols.theta[static_cast<size_t>(t - 1)][static_cast<size_t>(i)], -c.a_in});
      lp.add_row(std::move(row), RowSense::EQ, rhs);
    }

    // Feature definitions.
    for (int i = 0; i < nl; ++i) {
      const auto& load = sc.series.loads[static_cast<size_t>(i)];
      const int k = sc.building_at_load(i);
      std::vector<std::pair<int, double>> arow{{x[static_cast<size_t>(i)], 1.0}};
      std::vector<std::pair<int, double>> rrow{{x[static_cast<size_t>(nl + i)], 1.0}};
      if (k >= 0) {
        const auto& b = sc.buildings[static_cast<size_t>(k)];
        arow.push_back({p_hv[static_cast<size_t>(k)], -1.0 / base});
        rrow.push_back({p_hv[static_cast<size_t>(k)], -reactive_per_active(b) / base});
      }
      lp.add_row(std::move(arow), RowSense::EQ, load.p_d_pu[static_cast<size_t>(t)]);
      lp.add_row(std::move(rrow), RowSense::EQ, load.q_d_pu[static_cast<size_t>(t)]);
    }
    for (int g = 0; g < nd; ++g) {
      const double avail = sc.series.dgs[static_cast<size_t>(g)].g_avail_pu[static_cast<size_t>(t)];
      lp.add_row({{x[static_cast<size_t>(2 * nl + g)], 1.0}, {lam[static_cast<size_t>(g)], avail}},
                 RowSense::EQ, avail);
    }

    // Violation side.
    if (mode == ScheduleMode::FullNetwork) {
      const int h = lp.add_col("h" + st, -kInf, 0.0);
      cols.violation.push_back(h);
      const auto enc = encode_mlp_bigm(model, *in.violation_model, x, h, m_vio, &iv_vio);
      cols.vio_mu.push_back(enc.binary_cols);
    } else {
      // Scaled copy of the features for the union system.
      const auto& scaler = in.violation_model->scaler;
      std::vector<int> xs(d);
      for (int j = 0; j < d; ++j) {
        xs[static_cast<size_t>(j)] =
            lp.add_col("xs" + st + "_" + std::to_string(j), -kInf, kInf);
        if (scaler.is_identity())
          lp.add_row({{xs[static_cast<size_t>(j)], 1.0}, {x[static_cast<size_t>(j)], -1.0}},
                     RowSense::EQ, 0.0);
        else
          lp.add_row({{xs[static_cast<size_t>(j)], scaler.scale(j)},
                      {x[static_cast<size_t>(j)], -1.0}},
                     RowSense::EQ, -scaler.shift(j));
      }
      const auto enc = encode_region_union(model, *in.regions, xs, m_copy);
      cols.selectors.push_back(enc.selector_cols);
    }

    // Loss estimate and the root power balance.
    {
      const auto enc = encode_mlp_bigm(model, *in.loss_model, x, p_loss, m_loss, &iv_loss);
      cols.loss_mu.push_back(enc.binary_cols);
    }
    std::vector<std::pair<int, double>> balance{{g_root, 1.0}, {p_loss, -1.0}};
    for (int i = 0; i < nl; ++i) balance.push_back({x[static_cast<size_t>(i)], -1.0});
    for (int g = 0; g < nd; ++g) balance.push_back({x[static_cast<size_t>(2 * nl + g)], 1.0});
    lp.add_row(std::move(balance), RowSense::EQ, 0.0);
    lp.add_row({{g_buy, 1.0}, {g_sell, -1.0}, {g_root, -1.0}}, RowSense::EQ, 0.0);

    cols.p_hvac.push_back(std::move(p_hv));
    cols.theta.push_back(std::move(th));
    cols.curtail.push_back(std::move(lam));
    cols.features.push_back(std::move(x));
    cols.g_root.push_back(g_root);
    cols.g_buy.push_back(g_buy);
    cols.g_sell.push_back(g_sell);
    cols.p_loss.push_back(p_loss);
  }

  if (cols_out) *cols_out = cols;
  return model;
}

std::vector<int> branch_priorities(const MilpModel& model, const ScheduleColumns& cols) {
  // Resolving the loss estimate first closes the objective bound fastest;
  // everything else follows in plain most-fractional order.
  std::vector<int> prio(static_cast<size_t>(model.lp.cols()), 0);
  for (const auto& per_step : cols.loss_mu)
    for (int c : per_step) prio[static_cast<size_t>(c)] = 2;
  return prio;
}

std::vector<std::pair<int, double>> warm_start_fixings(const ScheduleInputs& in,
                                                       ScheduleMode mode,
                                                       const ScheduleColumns& cols) {
  const auto& sc = *in.scenario;
  const int T = cols.steps;
  const int nb = sc.n_building();
  const int nd = sc.n_dg();

  // Conservative candidate: ride the warm edge of the comfort band with the
  // least cooling that keeps it reachable, and curtail all generation.
  scen::Schedule sched;
  sched.p_hvac = Mat::Zero(T, nb);
  sched.curtail = Mat::Ones(T, nd);
  for (int i = 0; i < nb; ++i) {
    const auto& b = sc.buildings[static_cast<size_t>(i)];
    const auto c = scen::thermal_coefficients(b, sc.series.dt_hours);
    double theta = b.theta_init;
    for (int t = 0; t < T; ++t) {
      const double drift = c.a_in * theta + c.a_out * sc.series.theta_out[static_cast<size_t>(t)] +
                           c.a_h * sc.series.q_heat_mw[static_cast<size_t>(t)];
      double q_cool = 0.0;
      if (drift > b.theta_max) q_cool = (drift - b.theta_max) / c.a_h;
      q_cool = std::min(q_cool, b.cop * b.p_hvac_max);
      sched.p_hvac(t, i) = q_cool / b.cop;
      theta = drift - c.a_h * q_cool;
      if (theta > b.theta_max + 1e-9 || theta < b.theta_min - 1e-9) return {};
    }
  }

  std::vector<std::pair<int, double>> fixings;
  for (int t = 0; t < T; ++t) {
    const Vec x = scen::feature_vector(sc, sched, t, in.net->base_mva);
    if (mode == ScheduleMode::FullNetwork) {
      if (nn::forward(*in.violation_model, x) > 0.0) return {};
      const auto trace = nn::forward_trace(*in.violation_model, x);
      size_t at = 0;
      for (const Vec& z : trace.z)
        for (int k = 0; k < z.size(); ++k)
          fixings.push_back({cols.vio_mu[static_cast<size_t>(t)][at++], z(k) >= 0.0 ? 1.0 : 0.0});
    } else {
      const Vec x_scaled = in.violation_model->scaler.apply(x);
      int hit = -1;
      for (size_t k = 0; k < in.regions->size(); ++k) {
        if ((*in.regions)[k].contains(x_scaled, 1e-9)) {
          hit = static_cast<int>(k);
          break;
        }
      }
      if (hit < 0) return {};
      for (size_t k = 0; k < in.regions->size(); ++k)
        fixings.push_back(
            {cols.selectors[static_cast<size_t>(t)][k], k == static_cast<size_t>(hit) ? 1.0 : 0.0});
    }
    const auto trace = nn::forward_trace(*in.loss_model, x);
    size_t at = 0;
    for (const Vec& z : trace.z)
      for (int k = 0; k < z.size(); ++k)
        fixings.push_back({cols.loss_mu[static_cast<size_t>(t)][at++], z(k) >= 0.0 ? 1.0 : 0.0});
  }
  return fixings;
}

scen::Schedule extract_schedule(const ScheduleColumns& cols, const Vec& x) {
  scen::Schedule s;
  const int T = cols.steps;
  const int nb = T > 0 ? static_cast<int>(cols.p_hvac.front().size()) : 0;
  const int nd = T > 0 ? static_cast<int>(cols.curtail.front().size()) : 0;
  s.p_hvac = Mat::Zero(T, nb);
  s.curtail = Mat::Zero(T, nd);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < nb; ++i)
      s.p_hvac(t, i) = std::max(0.0, x(cols.p_hvac[static_cast<size_t>(t)][static_cast<size_t>(i)]));
    for (int g = 0; g < nd; ++g) {
      const double v = x(cols.curtail[static_cast<size_t>(t)][static_cast<size_t>(g)]);
      s.curtail(t, g) = std::clamp(v, 0.0, 1.0);
    }
  }
  return s;
}

scen::Scenario scale_dg_availability(const scen::Scenario& sc, double factor) {
  scen::Scenario out = sc;
  for (auto& dg : out.series.dgs)
    for (auto& g : dg.g_avail_pu) g *= factor;
  return out;
}

}  // namespace polyflow::opt
