#include "lovm/gap_bridge.hpp"

namespace lovm {

const char* to_string(GapLevel level) {
  return level == GapLevel::class_mean ? "class_mean" : "dataset_mean";
}

GapLevel gap_level_from_string(const std::string& s) {
  if (s == "class_mean") return GapLevel::class_mean;
  if (s == "dataset_mean") return GapLevel::dataset_mean;
  throw Error(ErrorKind::invalid_argument, "unknown gap level '" + s + "'");
}

ModalityTransform fit_modality_transform(std::span<const Matrix> images_per_class,
                                         std::span<const Matrix> captions_per_class) {
  ModalityTransform t;
  const Matrix images = vstack(images_per_class);
  if (images.rows() > 0) t.image = zscore_stats(images);
  const Matrix captions = vstack(captions_per_class);
  if (captions.rows() > 0) t.text = zscore_stats(captions);
  return t;
}

Matrix to_text_space(const Matrix& texts, const ModalityTransform& transform) {
  if (texts.rows() == 0) return texts;
  const Matrix z = transform.text ? apply_zscore(texts, *transform.text) : texts;
  return l2_normalize(z).values;
}

std::vector<Matrix> to_text_space(std::span<const Matrix> texts, const ModalityTransform& transform) {
  std::vector<Matrix> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(to_text_space(t, transform));
  return out;
}

Matrix to_image_space(const Matrix& images, const ModalityTransform& transform) {
  if (images.rows() == 0) return images;
  const Matrix z = transform.image ? apply_zscore(images, *transform.image) : images;
  return l2_normalize(z).values;
}

GapTable compute_class_gap_vectors(std::span<const Matrix> images_per_class,
                                   const Matrix& text_prototypes,
                                   const ModalityTransform& transform, GapLevel level) {
  const Index k = text_prototypes.rows();
  if (static_cast<Index>(images_per_class.size()) != k) {
    throw Error(ErrorKind::invalid_argument,
                "compute_class_gap_vectors: one image block per class required");
  }
  const Index d = text_prototypes.cols();
  const Matrix protos = to_text_space(text_prototypes, transform);

  GapTable table;
  table.level = level;
  table.gaps = Matrix::Zero(k, d);
  table.missing.assign(static_cast<std::size_t>(k), 0);

  Vector total = Vector::Zero(d);
  Index total_count = 0;
  for (Index c = 0; c < k; ++c) {
    const auto& block = images_per_class[static_cast<std::size_t>(c)];
    if (block.rows() == 0) {
      table.missing[static_cast<std::size_t>(c)] = 1;
      continue;
    }
    if (block.cols() != d) {
      throw Error(ErrorKind::invalid_argument, "compute_class_gap_vectors: dimension mismatch");
    }
    const Matrix imgs = to_image_space(block, transform);
    const Vector sum = imgs.colwise().sum().transpose() - static_cast<double>(imgs.rows()) *
                                                              protos.row(c).transpose();
    table.gaps.row(c) = (sum / static_cast<double>(imgs.rows())).transpose();
    total += sum;
    total_count += imgs.rows();
  }
  if (level == GapLevel::dataset_mean && total_count > 0) {
    const Vector mean = total / static_cast<double>(total_count);
    for (Index c = 0; c < k; ++c) table.gaps.row(c) = mean.transpose();
    table.missing.assign(static_cast<std::size_t>(k), 0);
  }
  return table;
}

GapTable transfer_gap_vectors(const TransportPlan& plan, const GapTable& source, Index k_T) {
  if (plan.plan.cols() != k_T || plan.plan.rows() != source.class_count()) {
    throw Error(ErrorKind::invalid_argument, "transfer_gap_vectors: plan shape mismatch");
  }
  Matrix weights = plan.plan;
  for (Index i = 0; i < weights.rows(); ++i) {
    if (!source.is_missing(i)) continue;
    if (weights.row(i).maxCoeff() > 1e-12) {
      throw Error(ErrorKind::asset_missing, "transfer_gap_vectors: source class " +
                                                std::to_string(i) +
                                                " has no gap vector but carries transport mass");
    }
    weights.row(i).setZero();
  }
  GapTable out;
  out.model_id = source.model_id;
  out.level = source.level;
  out.gaps = static_cast<double>(k_T) * (weights.transpose() * source.gaps);
  out.missing.assign(static_cast<std::size_t>(k_T), 0);
  return out;
}

std::vector<Matrix> apply_gap_to_texts(std::span<const Matrix> text_emb_per_class,
                                       const GapTable& target_gaps) {
  if (static_cast<Index>(text_emb_per_class.size()) != target_gaps.class_count()) {
    throw Error(ErrorKind::invalid_argument, "apply_gap_to_texts: class count mismatch");
  }
  std::vector<Matrix> out;
  out.reserve(text_emb_per_class.size());
  for (Index c = 0; c < target_gaps.class_count(); ++c) {
    const auto& t = text_emb_per_class[static_cast<std::size_t>(c)];
    if (t.rows() > 0 && t.cols() != target_gaps.dim()) {
      throw Error(ErrorKind::invalid_argument, "apply_gap_to_texts: dimension mismatch");
    }
    out.push_back(t.rowwise() + target_gaps.gaps.row(c));
  }
  return out;
}

double gap_residual_variance(std::span<const Matrix> images_per_class, const Matrix& text_prototypes,
                             const ModalityTransform& transform, const GapTable& table) {
  const Matrix protos = to_text_space(text_prototypes, transform);
  double total = 0.0;
  Index count = 0;
  for (Index c = 0; c < protos.rows(); ++c) {
    const auto& block = images_per_class[static_cast<std::size_t>(c)];
    if (block.rows() == 0) continue;
    const Matrix imgs = to_image_space(block, transform);
    const Matrix residual =
        (imgs.rowwise() - protos.row(c)).rowwise() - table.gaps.row(c);
    total += residual.squaredNorm();
    count += imgs.rows();
  }
  return count > 0 ? total / static_cast<double>(count) : 0.0;
}

}  // namespace lovm
