#pragma once

#include "lovm/core.hpp"
#include "lovm/transport.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lovm {

enum class GapLevel { class_mean, dataset_mean };

const char* to_string(GapLevel level);
GapLevel gap_level_from_string(const std::string& s);

struct GapTable {
  std::string model_id;
  Matrix gaps;                // k x d_m
  std::vector<char> missing;  // rows without image support
  GapLevel level = GapLevel::class_mean;

  Index class_count() const { return gaps.rows(); }
  Index dim() const { return gaps.cols(); }
  bool is_missing(Index row) const { return missing[static_cast<std::size_t>(row)] != 0; }
};

/// Per-modality z-score statistics applied before gap arithmetic. An absent
/// side leaves that modality untouched.
struct ModalityTransform {
  std::optional<ZScoreStats<double>> image;
  std::optional<ZScoreStats<double>> text;
};

/// Image statistics over all images of a dataset; text statistics over all
/// of its caption embeddings.
ModalityTransform fit_modality_transform(std::span<const Matrix> images_per_class,
                                         std::span<const Matrix> captions_per_class);

/// Maps text embeddings into gap space: z-score with the text statistics,
/// then unit-normalize each row.
Matrix to_text_space(const Matrix& texts, const ModalityTransform& transform);
std::vector<Matrix> to_text_space(std::span<const Matrix> texts, const ModalityTransform& transform);
Matrix to_image_space(const Matrix& images, const ModalityTransform& transform);

/// Row c is the mean over class-c images of
/// normalize(image) - normalize(prototype_c), after the modality z-scores.
/// At dataset_mean level every row holds the mean over all images instead.
GapTable compute_class_gap_vectors(std::span<const Matrix> images_per_class,
                                   const Matrix& text_prototypes,
                                   const ModalityTransform& transform = {},
                                   GapLevel level = GapLevel::class_mean);

/// Target row j = k_T * sum_i plan_ij * G_i.
GapTable transfer_gap_vectors(const TransportPlan& plan, const GapTable& source, Index k_T);

/// Adds gap row j to every text embedding of class j.
std::vector<Matrix> apply_gap_to_texts(std::span<const Matrix> text_emb_per_class,
                                       const GapTable& target_gaps);

/// Mean squared distance between each image's own gap
/// (normalize(image) - normalize(prototype)) and its class row in `table`.
double gap_residual_variance(std::span<const Matrix> images_per_class, const Matrix& text_prototypes,
                             const ModalityTransform& transform, const GapTable& table);

}  // namespace lovm
