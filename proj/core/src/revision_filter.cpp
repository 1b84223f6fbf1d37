#include "polyboost/revision_filter.hpp"

#include <cmath>
#include <numeric>

#include "polyboost/edit_distance.hpp"
#include "polyboost/parallel.hpp"
#include "polyboost/templating.hpp"

namespace polyboost {

namespace {

std::size_t alpha_count(double alpha, std::size_t n) {
  const auto k = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(n)));
  return std::min(k, n);
}

/// Selects the k largest-distance indices among `candidates`, earlier file
/// order winning ties, and appends them to `selected`.
void select_from(std::span<const std::size_t> candidates,
                 const std::vector<RevisionExample>& records, double alpha,
                 std::vector<std::size_t>& selected) {
  const std::size_t k = alpha_count(alpha, candidates.size());
  std::vector<std::size_t> order(candidates.begin(), candidates.end());
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const std::size_t da = *records[a].distance;
    const std::size_t db = *records[b].distance;
    if (da != db) return da > db;
    return a < b;
  });
  selected.insert(selected.end(), order.begin(), order.begin() + k);
}

}  // namespace

void validate_filter_config(const FilterConfig& config) {
  if (!(config.alpha > 0.0) || !(config.alpha <= 1.0)) {
    throw ValidationError("alpha must be in (0, 1], got " + std::to_string(config.alpha));
  }
}

std::size_t revision_distance(const RevisionExample& example) {
  return edit_distance(render_pair(example.original), render_pair(example.boosted));
}

Dataset<RevisionExample> compute_distances(const Dataset<RevisionExample>& examples) {
  const auto& records = examples.records();
  const std::size_t workers = std::min<std::size_t>(std::thread::hardware_concurrency(), 8);
  auto updated = parallel_map<RevisionExample>(
      records.size(), std::max<std::size_t>(workers, 1), [&](std::size_t i) {
        RevisionExample copy = records[i];
        copy.distance = revision_distance(copy);
        return copy;
      });
  return Dataset<RevisionExample>(std::move(updated));
}

Dataset<RevisionExample> select_top_alpha(const Dataset<RevisionExample>& examples,
                                          const FilterConfig& config) {
  validate_filter_config(config);
  const auto& records = examples.records();
  for (const auto& example : records) {
    if (!example.distance) {
      throw ValidationError("distance not computed for id " + example.original.id);
    }
  }

  std::vector<std::size_t> selected;
  if (config.scope == FilterScope::Global) {
    std::vector<std::size_t> all(records.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    select_from(all, records, config.alpha, selected);
  } else {
    for (const auto& code : examples.languages()) {
      select_from(examples.indices_for(code), records, config.alpha, selected);
    }
  }
  std::sort(selected.begin(), selected.end());
  return examples.subset(selected);
}

}  // namespace polyboost
