#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dscnn/matrix.hpp"
#include "dscnn/tape.hpp"

namespace dscnn {

/// One convolution filter over c stacked d x s feature maps with window l.
/// Weights are stored as a (c*d) x l matrix; row r*d + i is feature i of
/// channel r.
struct Filter {
  std::size_t channels = 1;
  std::size_t feat_dim = 0;
  std::size_t window = 0;
  Matrix weights;  // (channels * feat_dim) x window
  double bias = 0.0;
};

/// Filters grouped by window size. Rows of `weights` are filters, columns
/// enumerate (channel, feature, offset) as (r*d + i)*l + j. The pooled
/// feature vector is ordered by (window size, filter index).
struct FilterGroup {
  std::size_t window = 0;
  Matrix weights;  // n_filters x (channels * feat_dim * window)
  Matrix bias;     // n_filters x 1
};

struct FilterBank {
  std::size_t channels = 1;
  std::size_t feat_dim = 0;
  Nonlin nonlinearity = Nonlin::relu;
  std::vector<FilterGroup> groups;  // ascending window size

  std::size_t total_filters() const;
};

/// Window spec "3:100,4:100,5:100" parsed into (window, count) pairs.
std::vector<std::pair<std::size_t, std::size_t>> parse_filter_spec(
    const std::string& spec);

FilterBank make_filter_bank(
    const std::vector<std::pair<std::size_t, std::size_t>>& spec,
    std::size_t channels, std::size_t feat_dim, Nonlin nonlinearity,
    std::uint64_t seed, double half_width = 0.01);

Filter bank_filter(const FilterBank& bank, std::size_t group,
                   std::size_t index);

/// Wide 1-D convolution of a single d x s map: the input is padded with
/// l-1 zero columns on both ends and the filter slides over every window,
/// so the feature map has s+l-1 entries.
Matrix wide_conv(const Matrix& h, const Filter& f,
                 Nonlin nonlinearity = Nonlin::identity);

/// Multi-channel form; reduces to wide_conv when maps.size() == 1.
Matrix wide_conv_multichannel(const std::vector<Matrix>& maps,
                              const Filter& f,
                              Nonlin nonlinearity = Nonlin::identity);

/// Largest entry of a feature map; on ties the first index is the
/// (sub)gradient carrier.
double max_over_time(const Matrix& feature_map);

/// Pooled feature vector over the whole bank: one max per filter.
Matrix bank_apply(const std::vector<Matrix>& maps, const FilterBank& bank);

namespace ag {

/// Recorded convolution of one filter group over c channel maps. Produces
/// the activated n_filters x (s+l-1) feature maps.
NodeId conv_group(Tape& t, const std::vector<NodeId>& maps, NodeId weights,
                  NodeId bias, std::size_t window, Nonlin nonlinearity);

/// Row-wise max with first-index tie breaking, n x m -> n x 1.
NodeId rowmax(Tape& t, NodeId m);

/// Recorded bank application; returns the pooled feature vector node.
struct BankNodes {
  std::vector<NodeId> weights;  // per group
  std::vector<NodeId> bias;
};

BankNodes bank_push(Tape& t, const FilterBank& bank, bool as_parameters = true);

NodeId bank_apply_node(Tape& t, const std::vector<NodeId>& maps,
                       const FilterBank& bank, const BankNodes& nodes);

}  // namespace ag

}  // namespace dscnn
