#include "msa/dataset.hpp"

#include <cmath>

#include "msa/errors.hpp"

namespace msa {

std::vector<Index> DomainSamples::labeled_indices() const {
  std::vector<Index> out;
  for (Index i = 0; i < size(); ++i) {
    if (labeled[static_cast<std::size_t>(i)]) out.push_back(i);
  }
  return out;
}

std::vector<Index> DomainSamples::unlabeled_indices() const {
  std::vector<Index> out;
  for (Index i = 0; i < size(); ++i) {
    if (!labeled[static_cast<std::size_t>(i)]) out.push_back(i);
  }
  return out;
}

Index Dataset::p() const {
  if (source.bands.empty() || source.bands.front().empty()) return 0;
  return source.bands.front().front().dim();
}

void Dataset::validate() const {
  for (const DomainSamples* domain : {&source, &target}) {
    if (domain->bands.empty()) throw ValidationError("Dataset: a domain has no bands");
    if (domain->size() == 0) throw ValidationError("Dataset: a domain has no samples");
    if (static_cast<Index>(domain->labeled.size()) != domain->size()) {
      throw ValidationError("Dataset: labeled mask size differs from the label count");
    }
    for (const auto& band : domain->bands) {
      if (static_cast<Index>(band.size()) != domain->size()) {
        throw ValidationError("Dataset: band sample count differs from the label count");
      }
    }
    for (Index i = 0; i < domain->size(); ++i) {
      if (domain->labeled[static_cast<std::size_t>(i)] && !std::isfinite(domain->labels[i])) {
        throw ValidationError("Dataset: a labeled sample has no label");
      }
    }
  }
  if (source.band_count() != target.band_count()) {
    throw ValidationError("Dataset: source and target have different band counts");
  }
  for (Index b = 0; b < source.band_count(); ++b) {
    const Index p = source.bands[static_cast<std::size_t>(b)].front().dim();
    for (const DomainSamples* domain : {&source, &target}) {
      for (const auto& cov : domain->bands[static_cast<std::size_t>(b)]) {
        if (cov.dim() != p) throw ValidationError("Dataset: covariance sizes differ within a band");
      }
    }
  }
}

EmbeddedPair embed_pair(const Dataset& data, EmbeddingMode mode, const spd::MeanOptions& options) {
  data.validate();
  EmbeddedPair out;
  out.mode = mode;
  std::vector<Matrix> source_blocks;
  std::vector<Matrix> target_blocks;
  for (std::size_t b = 0; b < data.source.bands.size(); ++b) {
    const auto& src = data.source.bands[b];
    const auto& tgt = data.target.bands[b];
    if (mode == EmbeddingMode::global_mean) {
      std::vector<spd::SpdMatrix> all(src);
      all.insert(all.end(), tgt.begin(), tgt.end());
      spd::SpdMatrix mean = spd::riemannian_mean(all, options);
      auto s = spd::embed_dataset(src, mean, options);
      auto t = spd::embed_dataset(tgt, mean, options);
      source_blocks.push_back(std::move(s.x));
      target_blocks.push_back(std::move(t.x));
      out.source_means.push_back(mean);
      out.target_means.push_back(std::move(mean));
    } else {
      auto s = spd::embed_dataset(src, std::nullopt, options);
      auto t = spd::embed_dataset(tgt, std::nullopt, options);
      source_blocks.push_back(std::move(s.x));
      target_blocks.push_back(std::move(t.x));
      out.source_means.push_back(std::move(s.base));
      out.target_means.push_back(std::move(t.base));
    }
    out.block_sizes.push_back(source_blocks.back().cols());
  }
  Index total = 0;
  for (Index size : out.block_sizes) total += size;
  out.source.resize(data.source.size(), total);
  out.target.resize(data.target.size(), total);
  Index offset = 0;
  for (std::size_t b = 0; b < source_blocks.size(); ++b) {
    out.source.middleCols(offset, out.block_sizes[b]) = source_blocks[b];
    out.target.middleCols(offset, out.block_sizes[b]) = target_blocks[b];
    offset += out.block_sizes[b];
  }
  return out;
}

std::vector<Matrix> split_blocks(const Matrix& x, const std::vector<Index>& block_sizes) {
  std::vector<Matrix> out;
  Index offset = 0;
  for (Index size : block_sizes) {
    if (offset + size > x.cols()) throw ValidationError("split_blocks: blocks exceed the column count");
    out.emplace_back(x.middleCols(offset, size));
    offset += size;
  }
  if (offset != x.cols()) throw ValidationError("split_blocks: blocks do not cover every column");
  return out;
}

}  // namespace msa
