#include "dscnn/convolution.hpp"

#include <algorithm>
#include <sstream>

#include "dscnn/error.hpp"
#include "dscnn/init.hpp"
#include "dscnn/ops.hpp"
#include "dscnn/rng.hpp"

namespace dscnn {

namespace {

void check_maps(const std::vector<const Matrix*>& maps, std::size_t channels,
                std::size_t feat_dim) {
  if (maps.empty()) throw DomainError("convolution: no input maps");
  if (maps.size() != channels) {
    throw DimensionError("convolution: filter expects " +
                         std::to_string(channels) + " channels, got " +
                         std::to_string(maps.size()));
  }
  for (const Matrix* m : maps) {
    if (!m->same_shape(*maps.front())) {
      throw DimensionError("convolution: channel maps disagree on shape " +
                           maps.front()->shape_str() + " vs " +
                           m->shape_str());
    }
    if (m->rows() != feat_dim) {
      throw DimensionError("convolution: map has " +
                           std::to_string(m->rows()) + " features, filter " +
                           std::to_string(feat_dim));
    }
  }
  if (maps.front()->cols() == 0) {
    throw DomainError("convolution: empty sequence");
  }
}

// Pre-activation maps of a filter group, n_f x (s+l-1). Column w of
// `weights` enumerates (channel r, feature i, offset j) as (r*d+i)*l+j.
// Zero padding is implicit: offsets falling outside the input are skipped.
Matrix group_preact(const std::vector<const Matrix*>& maps,
                    const Matrix& weights, std::size_t window) {
  const std::size_t c = maps.size();
  const std::size_t d = maps.front()->rows();
  const std::size_t s = maps.front()->cols();
  const std::size_t l = window;
  const std::size_t out_len = s + l - 1;
  const std::size_t n_f = weights.rows();
  if (weights.cols() != c * d * l) {
    throw DimensionError("convolution: weight row length " +
                         std::to_string(weights.cols()) + " != c*d*l = " +
                         std::to_string(c * d * l));
  }
  Matrix preact(n_f, out_len);
  for (std::size_t f = 0; f < n_f; ++f) {
    const double* w = weights.data() + f * weights.cols();
    for (std::size_t r = 0; r < c; ++r) {
      const Matrix& map = *maps[r];
      for (std::size_t i = 0; i < d; ++i) {
        const double* row = map.data() + i * s;
        const double* wrow = w + (r * d + i) * l;
        for (std::size_t j = 0; j < l; ++j) {
          const double wv = wrow[j];
          if (wv == 0.0) continue;
          // k = src + (l-1) - j stays inside [0, out_len) for all src
          for (std::size_t src = 0; src < s; ++src) {
            preact(f, src + l - 1 - j) += wv * row[src];
          }
        }
      }
    }
  }
  return preact;
}

Matrix flatten_filter(const Filter& f) {
  Matrix flat(1, f.channels * f.feat_dim * f.window);
  for (std::size_t row = 0; row < f.weights.rows(); ++row)
    for (std::size_t j = 0; j < f.window; ++j)
      flat(0, row * f.window + j) = f.weights(row, j);
  return flat;
}

void validate_filter(const Filter& f) {
  if (f.window < 1) throw DomainError("convolution: window must be >= 1");
  if (f.channels < 1) throw DomainError("convolution: channels must be >= 1");
  if (f.weights.rows() != f.channels * f.feat_dim ||
      f.weights.cols() != f.window) {
    throw DimensionError("convolution: filter weights " +
                         f.weights.shape_str() + " do not match c*d x l");
  }
  if (!f.weights.all_finite()) {
    throw DomainError("convolution: non-finite filter weights");
  }
}

}  // namespace

std::size_t FilterBank::total_filters() const {
  std::size_t n = 0;
  for (const FilterGroup& g : groups) n += g.weights.rows();
  return n;
}

std::vector<std::pair<std::size_t, std::size_t>> parse_filter_spec(
    const std::string& spec) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::istringstream in(spec);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw FormatError("filter spec entry '" + item +
                        "' is not window:count");
    }
    long window = 0, count = 0;
    try {
      window = std::stol(item.substr(0, colon));
      count = std::stol(item.substr(colon + 1));
    } catch (const std::exception&) {
      throw FormatError("filter spec entry '" + item + "' is not numeric");
    }
    if (window < 1 || count < 1) {
      throw DomainError("filter spec entry '" + item +
                        "' needs window >= 1 and count >= 1");
    }
    out.emplace_back(static_cast<std::size_t>(window),
                     static_cast<std::size_t>(count));
  }
  if (out.empty()) throw DomainError("filter spec is empty");
  std::sort(out.begin(), out.end());
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].first == out[i - 1].first) {
      throw DomainError("filter spec repeats window size " +
                        std::to_string(out[i].first));
    }
  }
  return out;
}

FilterBank make_filter_bank(
    const std::vector<std::pair<std::size_t, std::size_t>>& spec,
    std::size_t channels, std::size_t feat_dim, Nonlin nonlinearity,
    std::uint64_t seed, double half_width) {
  if (channels < 1 || feat_dim < 1) {
    throw DomainError("make_filter_bank: zero dimension");
  }
  FilterBank bank;
  bank.channels = channels;
  bank.feat_dim = feat_dim;
  bank.nonlinearity = nonlinearity;
  for (const auto& [window, count] : spec) {
    FilterGroup g;
    g.window = window;
    g.weights = init_uniform(count, channels * feat_dim * window, half_width,
                             derive_seed(seed, "conv-w", window));
    g.bias = Matrix(count, 1);
    bank.groups.push_back(std::move(g));
  }
  return bank;
}

Filter bank_filter(const FilterBank& bank, std::size_t group,
                   std::size_t index) {
  const FilterGroup& g = bank.groups.at(group);
  Filter f;
  f.channels = bank.channels;
  f.feat_dim = bank.feat_dim;
  f.window = g.window;
  f.weights = Matrix(bank.channels * bank.feat_dim, g.window);
  for (std::size_t row = 0; row < f.weights.rows(); ++row)
    for (std::size_t j = 0; j < g.window; ++j)
      f.weights(row, j) = g.weights(index, row * g.window + j);
  f.bias = g.bias(index, 0);
  return f;
}

Matrix wide_conv(const Matrix& h, const Filter& f, Nonlin nonlinearity) {
  if (f.channels != 1) {
    throw DimensionError("wide_conv: filter has " +
                         std::to_string(f.channels) +
                         " channels, expected 1");
  }
  return wide_conv_multichannel({h}, f, nonlinearity);
}

Matrix wide_conv_multichannel(const std::vector<Matrix>& maps,
                              const Filter& f, Nonlin nonlinearity) {
  validate_filter(f);
  std::vector<const Matrix*> ptrs;
  for (const Matrix& m : maps) ptrs.push_back(&m);
  check_maps(ptrs, f.channels, f.feat_dim);
  Matrix preact = group_preact(ptrs, flatten_filter(f), f.window);
  Matrix out(preact.cols(), 1);
  for (std::size_t k = 0; k < preact.cols(); ++k)
    out(k, 0) = preact(0, k) + f.bias;
  return map_elementwise(out, nonlinearity);
}

double max_over_time(const Matrix& feature_map) {
  if (feature_map.size() == 0) {
    throw DomainError("max_over_time: empty feature map");
  }
  double best = feature_map.data()[0];
  for (std::size_t i = 1; i < feature_map.size(); ++i)
    best = std::max(best, feature_map.data()[i]);
  return best;
}

Matrix bank_apply(const std::vector<Matrix>& maps, const FilterBank& bank) {
  std::vector<const Matrix*> ptrs;
  for (const Matrix& m : maps) ptrs.push_back(&m);
  check_maps(ptrs, bank.channels, bank.feat_dim);
  Matrix out(bank.total_filters(), 1);
  std::size_t at = 0;
  for (const FilterGroup& g : bank.groups) {
    Matrix preact = group_preact(ptrs, g.weights, g.window);
    for (std::size_t f = 0; f < preact.rows(); ++f) {
      double best = preact(f, 0) + g.bias(f, 0);
      for (std::size_t k = 1; k < preact.cols(); ++k)
        best = std::max(best, preact(f, k) + g.bias(f, 0));
      Matrix one(1, 1);
      one(0, 0) = best;
      out(at++, 0) = map_elementwise(one, bank.nonlinearity)(0, 0);
    }
  }
  return out;
}

namespace ag {

NodeId conv_group(Tape& t, const std::vector<NodeId>& maps, NodeId weights,
                  NodeId bias, std::size_t window, Nonlin nonlinearity) {
  if (window < 1) throw DomainError("conv_group: window must be >= 1");
  if (maps.empty()) throw DomainError("conv_group: no input maps");
  std::vector<const Matrix*> ptrs;
  for (NodeId m : maps) ptrs.push_back(&t.value(m));
  const Matrix& wv = t.value(weights);
  const std::size_t d = ptrs.front()->rows();
  check_maps(ptrs, maps.size(), d);
  Matrix preact = group_preact(ptrs, wv, window);
  const Matrix& bv = t.value(bias);
  require_shape(bv, preact.rows(), 1, "conv_group bias");
  for (std::size_t f = 0; f < preact.rows(); ++f)
    for (std::size_t k = 0; k < preact.cols(); ++k)
      preact(f, k) += bv(f, 0);
  Matrix act = map_elementwise(preact, nonlinearity);

  std::vector<NodeId> deps = maps;
  deps.push_back(weights);
  deps.push_back(bias);
  return t.push(
      std::move(act), deps,
      [maps, weights, bias, window, nonlinearity,
       preact](Tape& tp, NodeId out) {
        const Matrix& g = tp.grad_view(out);
        const Matrix& act_v = tp.value(out);
        const std::size_t c = maps.size();
        const Matrix& first = tp.value(maps[0]);
        const std::size_t d = first.rows();
        const std::size_t s = first.cols();
        const std::size_t l = window;
        // chain through the nonlinearity once
        Matrix gp(g.rows(), g.cols());
        for (std::size_t i = 0; i < gp.size(); ++i) {
          gp.data()[i] = g.data()[i] * nonlin_derivative(nonlinearity,
                                                         preact.data()[i],
                                                         act_v.data()[i]);
        }
        if (tp.needs_grad(bias)) {
          Matrix& gb = tp.grad(bias);
          for (std::size_t f = 0; f < gp.rows(); ++f)
            for (std::size_t k = 0; k < gp.cols(); ++k)
              gb(f, 0) += gp(f, k);
        }
        const Matrix& wv = tp.value(weights);
        if (tp.needs_grad(weights)) {
          Matrix& gw = tp.grad(weights);
          for (std::size_t f = 0; f < gp.rows(); ++f) {
            for (std::size_t r = 0; r < c; ++r) {
              const Matrix& map = tp.value(maps[r]);
              for (std::size_t i = 0; i < d; ++i) {
                for (std::size_t j = 0; j < l; ++j) {
                  double acc = 0.0;
                  for (std::size_t src = 0; src < s; ++src)
                    acc += gp(f, src + l - 1 - j) * map(i, src);
                  gw(f, (r * d + i) * l + j) += acc;
                }
              }
            }
          }
        }
        for (std::size_t r = 0; r < c; ++r) {
          if (!tp.needs_grad(maps[r])) continue;
          Matrix& gm = tp.grad(maps[r]);
          for (std::size_t f = 0; f < gp.rows(); ++f) {
            const double* w = wv.data() + f * wv.cols();
            for (std::size_t i = 0; i < d; ++i) {
              const double* wrow = w + (r * d + i) * l;
              for (std::size_t j = 0; j < l; ++j) {
                const double weight = wrow[j];
                if (weight == 0.0) continue;
                for (std::size_t src = 0; src < s; ++src)
                  gm(i, src) += gp(f, src + l - 1 - j) * weight;
              }
            }
          }
        }
      });
}

NodeId rowmax(Tape& t, NodeId m) {
  const Matrix& mv = t.value(m);
  if (mv.size() == 0) throw DomainError("rowmax: empty matrix");
  Matrix value(mv.rows(), 1);
  std::vector<std::size_t> argmax(mv.rows(), 0);
  for (std::size_t i = 0; i < mv.rows(); ++i) {
    double best = mv(i, 0);
    for (std::size_t j = 1; j < mv.cols(); ++j) {
      if (mv(i, j) > best) {  // strict: ties keep the first index
        best = mv(i, j);
        argmax[i] = j;
      }
    }
    value(i, 0) = best;
  }
  return t.push(std::move(value), {m}, [m, argmax](Tape& tp, NodeId out) {
    if (!tp.needs_grad(m)) return;
    const Matrix& g = tp.grad_view(out);
    Matrix& gm = tp.grad(m);
    for (std::size_t i = 0; i < g.rows(); ++i) gm(i, argmax[i]) += g(i, 0);
  });
}

BankNodes bank_push(Tape& t, const FilterBank& bank, bool as_parameters) {
  BankNodes nodes;
  for (const FilterGroup& g : bank.groups) {
    nodes.weights.push_back(as_parameters ? t.parameter(g.weights)
                                          : t.constant(g.weights));
    nodes.bias.push_back(as_parameters ? t.parameter(g.bias)
                                       : t.constant(g.bias));
  }
  return nodes;
}

NodeId bank_apply_node(Tape& t, const std::vector<NodeId>& maps,
                       const FilterBank& bank, const BankNodes& nodes) {
  std::vector<NodeId> pooled;
  for (std::size_t g = 0; g < bank.groups.size(); ++g) {
    NodeId act = conv_group(t, maps, nodes.weights[g], nodes.bias[g],
                            bank.groups[g].window, bank.nonlinearity);
    pooled.push_back(rowmax(t, act));
  }
  return concat_rows(t, pooled);
}

}  // namespace ag

}  // namespace dscnn
