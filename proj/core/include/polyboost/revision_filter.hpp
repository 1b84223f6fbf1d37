#pragma once

#include <cstddef>

#include "polyboost/corpus.hpp"

namespace polyboost {

enum class FilterScope { PerLanguage, Global };

/// Quality-control filter settings: keep the top `alpha` fraction of revision
/// examples ranked by revision distance.
struct FilterConfig {
  double alpha = 0.30;
  FilterScope scope = FilterScope::PerLanguage;
};

/// Throws ValidationError unless 0 < alpha <= 1.
void validate_filter_config(const FilterConfig& config);

/// Edit distance between the rendered original and the rendered boosted pair.
/// Rendering covers all three fields, so revisions to the instruction or the
/// input count toward the distance too.
std::size_t revision_distance(const RevisionExample& example);

/// Returns a copy of the dataset with every record's distance computed.
Dataset<RevisionExample> compute_distances(const Dataset<RevisionExample>& examples);

/// Keeps the ceil(alpha * N) examples with the largest distances — per
/// language by default, over the whole dataset for Global scope. Ties break
/// toward earlier file order, and the output preserves the input's relative
/// order. Every record must have a computed distance.
Dataset<RevisionExample> select_top_alpha(const Dataset<RevisionExample>& examples,
                                          const FilterConfig& config);

}  // namespace polyboost
