#include "sc/gradcore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "sc/rng.hpp"

namespace sc {

ParamVector make_param_vector(const std::vector<SegmentLayout>& segs) {
  ParamVector p;
  std::size_t off = 0;
  for (SegmentLayout l : segs) {
    l.offset = off;
    off += l.size;
    p.segments.push_back(std::move(l));
  }
  p.values.assign(off, 0.0);
  return p;
}

AdamState make_adam_state(std::size_t n, double lr) {
  AdamState s;
  s.lr = lr;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  return s;
}

void adam_step(ParamVector& p, std::span<const double> grad, AdamState& s,
               const std::vector<bool>& frozen) {
  if (grad.size() != p.size() || s.m.size() != p.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  if (frozen.size() != p.segments.size())
    throw std::invalid_argument("adam_step: freeze mask size mismatch");
  if (s.lr <= 0.0) throw std::invalid_argument("adam_step: lr must be > 0");

  s.step += 1;
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t si = 0; si < p.segments.size(); ++si) {
    if (frozen[si]) continue;
    const auto& l = p.segments[si];
    for (std::size_t i = l.offset; i < l.offset + l.size; ++i) {
      const double g = grad[i];
      s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g;
      s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g * g;
      const double mhat = s.m[i] / bc1;
      const double vhat = s.v[i] / bc2;
      p.values[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
    }
  }
}

GradCheckReport grad_check(const DiffBlock& block, std::span<const double> input,
                           std::span<const double> params, const GradCheckOptions& opt) {
  if (input.size() != block.input_size() || params.size() != block.param_size())
    throw std::invalid_argument("grad_check: size mismatch");

  Rng rng(opt.seed);
  const std::vector<double> y0 = block.forward(input, params);
  for (double v : y0)
    if (!std::isfinite(v)) throw std::runtime_error("grad_check: non-finite forward output");

  std::vector<double> w(y0.size());
  for (double& v : w) v = rng.next_gaussian();

  std::vector<double> d_in(input.size()), d_par(params.size());
  block.backward(input, params, w, d_in, d_par);

  double gmax = 0.0;
  for (double v : d_in) gmax = std::max(gmax, std::abs(v));
  for (double v : d_par) gmax = std::max(gmax, std::abs(v));
  const double floor = 1e-6 * std::max(1.0, gmax);

  auto phi = [&](std::span<const double> in, std::span<const double> par) {
    const std::vector<double> y = block.forward(in, par);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += w[i] * y[i];
    return s;
  };

  std::vector<double> in_copy(input.begin(), input.end());
  std::vector<double> par_copy(params.begin(), params.end());

  GradCheckReport rep;
  auto check_side = [&](std::vector<double>& vec, const std::vector<double>& analytic,
                        const char* label) {
    if (vec.empty()) return;
    std::vector<std::size_t> idx(vec.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (idx.size() > opt.max_coords) {
      for (std::size_t i = 0; i < opt.max_coords; ++i) {
        const std::size_t j = i + rng.next_below(static_cast<std::uint32_t>(idx.size() - i));
        std::swap(idx[i], idx[j]);
      }
      idx.resize(opt.max_coords);
    }
    for (const std::size_t i : idx) {
      const double save = vec[i];
      vec[i] = save + opt.step;
      const double fp = phi(in_copy, par_copy);
      vec[i] = save - opt.step;
      const double fm = phi(in_copy, par_copy);
      vec[i] = save;
      const double fd = (fp - fm) / (2.0 * opt.step);
      const double an = analytic[i];
      const double err = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), floor});
      ++rep.n_checked;
      if (err > rep.max_rel_err) {
        rep.max_rel_err = err;
        rep.worst = std::string(label) + "[" + std::to_string(i) + "]";
      }
    }
  };
  check_side(in_copy, d_in, "input");
  check_side(par_copy, d_par, "param");
  return rep;
}

void save_checkpoint(const ParamVector& p, const std::filesystem::path& path) {
  nlohmann::json j;
  j["format"] = "sc-paramvec";
  j["version"] = 1;
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& l : p.segments) {
    nlohmann::json s;
    s["name"] = l.name;
    s["shape"] = l.shape;
    s["data"] = std::vector<double>(p.values.begin() + static_cast<std::ptrdiff_t>(l.offset),
                                    p.values.begin() +
                                        static_cast<std::ptrdiff_t>(l.offset + l.size));
    segs.push_back(std::move(s));
  }
  j["segments"] = std::move(segs);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path.string());
  out << j.dump(1) << "\n";
}

ParamVector load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path.string());
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "sc-paramvec")
    throw std::runtime_error("load_checkpoint: unrecognized format");
  std::vector<SegmentLayout> layouts;
  std::vector<std::vector<double>> data;
  for (const auto& s : j.at("segments")) {
    SegmentLayout l;
    l.name = s.at("name").get<std::string>();
    l.shape = s.at("shape").get<std::vector<std::size_t>>();
    auto d = s.at("data").get<std::vector<double>>();
    l.size = d.size();
    layouts.push_back(l);
    data.push_back(std::move(d));
  }
  ParamVector p = make_param_vector(layouts);
  for (std::size_t i = 0; i < layouts.size(); ++i)
    std::copy(data[i].begin(), data[i].end(),
              p.values.begin() + static_cast<std::ptrdiff_t>(p.segments[i].offset));
  return p;
}

}  // namespace sc
