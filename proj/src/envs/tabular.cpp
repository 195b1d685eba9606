#include "iwm/envs/tabular.hpp"

#include <cmath>

namespace iwm::envs {

namespace {

void check_rows(const std::vector<double>& table, std::size_t rows, std::size_t cols,
                const char* name, double tol) {
  check(table.size() == rows * cols, std::string(name) + ": wrong table size");
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double p = table[r * cols + c];
      check(p >= 0.0, std::string(name) + ": negative probability");
      sum += p;
    }
    check(std::abs(sum - 1.0) <= tol,
          std::string(name) + ": row " + std::to_string(r) + " sums to " + std::to_string(sum));
  }
}

std::size_t sample_row(const std::vector<double>& table, std::size_t row, std::size_t cols,
                       diff::Rng& rng) {
  double u = rng.uniform();
  for (std::size_t c = 0; c < cols; ++c) {
    u -= table[row * cols + c];
    if (u <= 0.0) return c;
  }
  return cols - 1;
}

}  // namespace

void TabularInformedPomdp::validate(double tol) const {
  check(S >= 1 && A >= 1 && I >= 1 && O >= 1, "TabularInformedPomdp: all sizes must be >= 1");
  check(gamma >= 0.0 && gamma < 1.0, "TabularInformedPomdp: gamma must be in [0,1)");
  check_rows(initial, 1, S, "P", tol);
  check_rows(trans, S * A, S, "T", tol);
  check_rows(info, S, I, "I~", tol);
  check_rows(obs, I, O, "O~", tol);
  check(reward.size() == S * A, "R: wrong table size");
}

nlohmann::json TabularInformedPomdp::to_json() const {
  nlohmann::json j;
  j["counts"] = {{"S", S}, {"A", A}, {"I", I}, {"O", O}};
  j["gamma"] = gamma;
  j["P"] = initial;
  auto rows = [](const std::vector<double>& flat, std::size_t nrows, std::size_t ncols) {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t r = 0; r < nrows; ++r)
      out.push_back(std::vector<double>(flat.begin() + r * ncols, flat.begin() + (r + 1) * ncols));
    return out;
  };
  j["T"] = rows(trans, S * A, S);  // row index s*A + a
  j["R"] = rows(reward, S, A);
  j["I"] = rows(info, S, I);
  j["O"] = rows(obs, I, O);
  return j;
}

TabularInformedPomdp TabularInformedPomdp::from_json(const nlohmann::json& j) {
  TabularInformedPomdp p;
  p.S = j.at("counts").at("S").get<std::size_t>();
  p.A = j.at("counts").at("A").get<std::size_t>();
  p.I = j.at("counts").at("I").get<std::size_t>();
  p.O = j.at("counts").at("O").get<std::size_t>();
  p.gamma = j.at("gamma").get<double>();
  p.initial = j.at("P").get<std::vector<double>>();
  auto flat = [](const nlohmann::json& rows) {
    std::vector<double> out;
    for (const auto& row : rows)
      for (const auto& v : row) out.push_back(v.get<double>());
    return out;
  };
  p.trans = flat(j.at("T"));
  p.reward = flat(j.at("R"));
  p.info = flat(j.at("I"));
  p.obs = flat(j.at("O"));
  p.validate();
  return p;
}

TabularInformedPomdp generate_tabular(std::size_t S, std::size_t A, std::size_t I, std::size_t O,
                                      std::uint64_t structure_seed, bool identity_info,
                                      double gamma) {
  check(S >= 1 && A >= 1 && I >= 1 && O >= 1, "generate_tabular: all sizes must be >= 1");
  diff::Rng rng(structure_seed);
  if (identity_info) I = S;
  auto dirichlet_rows = [&](std::size_t rows, std::size_t cols) {
    std::vector<double> out(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < cols; ++c) {
        // Exp(1) draws normalized -> Dirichlet(1,...,1)
        double u = rng.uniform();
        while (u <= 0.0) u = rng.uniform();
        out[r * cols + c] = -std::log(u);
        sum += out[r * cols + c];
      }
      for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] /= sum;
    }
    return out;
  };
  TabularInformedPomdp p;
  p.S = S;
  p.A = A;
  p.I = I;
  p.O = O;
  p.gamma = gamma;
  p.initial = dirichlet_rows(1, S);
  p.trans = dirichlet_rows(S * A, S);
  p.reward.resize(S * A);
  for (auto& r : p.reward) r = rng.uniform(-1.0, 1.0);
  if (identity_info) {
    p.info.assign(S * S, 0.0);
    for (std::size_t s = 0; s < S; ++s) p.info[s * S + s] = 1.0;
  } else {
    p.info = dirichlet_rows(S, I);
  }
  p.obs = dirichlet_rows(I, O);
  p.validate();
  return p;
}

TabularInformedPomdp tiger_pomdp() {
  // states: 0=(left,quiet) 1=(left,heard) 2=(right,quiet) 3=(right,heard)
  // actions: 0=listen 1=open-left 2=open-right
  // observations: 0=no-cue 1=hear-left 2=hear-right
  TabularInformedPomdp p;
  p.S = 4;
  p.A = 3;
  p.I = 4;
  p.O = 3;
  p.gamma = 0.95;
  p.initial = {0.5, 0.0, 0.5, 0.0};
  p.trans.assign(p.S * p.A * p.S, 0.0);
  auto T = [&](std::size_t s, std::size_t a, std::size_t s2) -> double& {
    return p.trans[(s * p.A + a) * p.S + s2];
  };
  for (std::size_t s = 0; s < 4; ++s) {
    const bool left = s < 2;
    T(s, 0, left ? 1 : 3) = 1.0;  // listen marks the heard flag
    for (std::size_t a : {std::size_t{1}, std::size_t{2}}) {
      T(s, a, 0) = 0.5;  // opening re-randomizes the tiger, unheard
      T(s, a, 2) = 0.5;
    }
  }
  p.reward.assign(p.S * p.A, 0.0);
  auto R = [&](std::size_t s, std::size_t a) -> double& { return p.reward[s * p.A + a]; };
  for (std::size_t s = 0; s < 4; ++s) {
    const bool left = s < 2;
    R(s, 0) = -0.1;
    R(s, 1) = left ? -10.0 : 1.0;
    R(s, 2) = left ? 1.0 : -10.0;
  }
  p.info.assign(p.S * p.I, 0.0);  // information is the one-hot true state
  for (std::size_t s = 0; s < 4; ++s) p.info[s * p.I + s] = 1.0;
  p.obs.assign(p.I * p.O, 0.0);
  auto Ob = [&](std::size_t i, std::size_t o) -> double& { return p.obs[i * p.O + o]; };
  Ob(0, 0) = 1.0;
  Ob(2, 0) = 1.0;
  Ob(1, 1) = 0.85;
  Ob(1, 2) = 0.15;
  Ob(3, 2) = 0.85;
  Ob(3, 1) = 0.15;
  p.validate();
  return p;
}

TabularEnv::TabularEnv(TabularInformedPomdp pomdp, std::size_t horizon)
    : pomdp_(std::move(pomdp)), horizon_(horizon) {
  pomdp_.validate();
  check(horizon_ >= 1, "TabularEnv: horizon must be >= 1");
}

EnvDescriptor TabularEnv::descriptor() const {
  EnvDescriptor d;
  d.actions = {true, pomdp_.A, {}};
  d.obs_dim = pomdp_.O;
  d.info_dim = pomdp_.I;
  d.discount = pomdp_.gamma;
  return d;
}

std::pair<std::vector<double>, std::vector<double>> TabularEnv::reset(std::uint64_t seed) {
  rng_.emplace(seed);
  state_ = sample_row(pomdp_.initial, 0, pomdp_.S, *rng_);
  t_ = 0;
  started_ = true;
  const std::size_t i = sample_row(pomdp_.info, state_, pomdp_.I, *rng_);
  const std::size_t o = sample_row(pomdp_.obs, i, pomdp_.O, *rng_);
  return {onehot(i, pomdp_.I), onehot(o, pomdp_.O)};
}

InformedStep TabularEnv::step(int action) {
  check(started_, "TabularEnv: step before reset");
  check(!episode_over(), "TabularEnv: episode is over, reset required");
  check(action >= 0 && static_cast<std::size_t>(action) < pomdp_.A,
        "TabularEnv: action out of range");
  const auto a = static_cast<std::size_t>(action);
  InformedStep out;
  out.reward = pomdp_.R(state_, a);
  state_ = sample_row(pomdp_.trans, state_ * pomdp_.A + a, pomdp_.S, *rng_);
  const std::size_t i = sample_row(pomdp_.info, state_, pomdp_.I, *rng_);
  const std::size_t o = sample_row(pomdp_.obs, i, pomdp_.O, *rng_);
  out.information = onehot(i, pomdp_.I);
  out.observation = onehot(o, pomdp_.O);
  ++t_;
  out.continuation = true;  // infinite-horizon tuple; the cap only truncates
  return out;
}

}  // namespace iwm::envs
