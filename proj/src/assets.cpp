#include "lovm/assets.hpp"

#include <set>
#include <sstream>

namespace lovm {

const ModelAssets* AssetBundle::find_model(std::string_view model_id) const {
  for (const auto& m : models) {
    if (m.model_id == model_id) return &m;
  }
  return nullptr;
}

const ModelAssets& AssetBundle::model(std::string_view model_id) const {
  if (const auto* m = find_model(model_id)) return *m;
  throw Error(ErrorKind::asset_missing,
              "dataset '" + dataset_id + "' has no assets for model '" + std::string(model_id) + "'");
}

ModelZoo make_zoo(std::vector<std::string> model_ids) {
  if (model_ids.size() < 2) {
    throw Error(ErrorKind::invalid_argument, "model zoo needs at least two models");
  }
  std::set<std::string> seen;
  for (const auto& id : model_ids) {
    if (!seen.insert(id).second) {
      throw Error(ErrorKind::invalid_argument, "duplicate model id '" + id + "'");
    }
  }
  return ModelZoo{std::move(model_ids)};
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& v : violations) os << v.location << ": " << v.message << '\n';
  return os.str();
}

double dataset_accuracy(const ModelAssets& model) {
  if (!model.class_accuracies || model.class_accuracies->size() == 0) {
    throw Error(ErrorKind::asset_missing, "model '" + model.model_id + "' has no class_accuracies");
  }
  return model.class_accuracies->mean();
}

namespace {

class Checker {
 public:
  explicit Checker(ValidationReport& report) : report_(report) {}

  void fail(const std::string& where, const std::string& what) {
    report_.violations.push_back({where, what});
  }

  void finite(const std::string& where, const Matrix& m) {
    if (!m.allFinite()) fail(where, "non-finite value");
  }

  void per_class(const std::string& where, const std::vector<Matrix>& blocks, Index k, Index dim,
                 bool require_rows) {
    if (static_cast<Index>(blocks.size()) != k) {
      fail(where, "expected " + std::to_string(k) + " per-class blocks, found " +
                      std::to_string(blocks.size()));
      return;
    }
    for (Index c = 0; c < k; ++c) {
      const auto& b = blocks[static_cast<std::size_t>(c)];
      const std::string at = where + "[" + std::to_string(c) + "]";
      if (require_rows && b.rows() == 0) fail(at, "no rows");
      if (b.rows() > 0 && b.cols() != dim) {
        fail(at, "dimension " + std::to_string(b.cols()) + " != model dimension " +
                     std::to_string(dim));
      }
      finite(at, b);
    }
  }

 private:
  ValidationReport& report_;
};

}  // namespace

ValidationReport validate_bundle(const AssetBundle& bundle, const ModelZoo& zoo) {
  ValidationReport report;
  Checker check(report);
  const std::string ds = bundle.dataset_id;
  const Index k = bundle.class_count();

  if (k < 1) check.fail(ds, "empty class vocabulary");
  {
    std::set<std::string> seen;
    for (const auto& n : bundle.vocabulary.names) {
      if (!seen.insert(n).second) check.fail(ds + "/vocabulary", "duplicate class name '" + n + "'");
    }
  }
  if (bundle.classname_embeddings.rows() != k) {
    check.fail(ds + "/classname_embeddings",
               "rows " + std::to_string(bundle.classname_embeddings.rows()) +
                   " != class count " + std::to_string(k));
  }
  check.finite(ds + "/classname_embeddings", bundle.classname_embeddings);

  for (const auto& id : zoo.model_ids) {
    if (!bundle.find_model(id)) check.fail(ds + "/" + id, "model listed in zoo has no assets");
  }

  for (const auto& m : bundle.models) {
    const std::string where = ds + "/" + m.model_id;
    const Index d = m.dim();
    if (m.classifiers.rows() != k) {
      check.fail(where + "/classifier_embeddings",
                 "rows " + std::to_string(m.classifiers.rows()) + " != class count " +
                     std::to_string(k));
    }
    if (d < 1) check.fail(where + "/classifier_embeddings", "zero dimension");
    check.finite(where + "/classifier_embeddings", m.classifiers);
    check.per_class(where + "/caption_embeddings", m.captions, k, d, true);
    if (m.has_synonyms()) check.per_class(where + "/synonym_embeddings", m.synonyms, k, d, false);
    if (m.has_images()) check.per_class(where + "/image_embeddings", m.images, k, d, false);
    if (m.class_gaps) {
      if (m.class_gaps->rows() != k || m.class_gaps->cols() != d) {
        check.fail(where + "/gap_table", "shape " + std::to_string(m.class_gaps->rows()) + "x" +
                                             std::to_string(m.class_gaps->cols()) +
                                             " does not match classes x dimension");
      }
      check.finite(where + "/gap_table", *m.class_gaps);
    }
    if (m.class_accuracies) {
      const auto& acc = *m.class_accuracies;
      if (acc.size() != k) {
        check.fail(where + "/class_accuracies", "expected " + std::to_string(k) +
                                                    " accuracies, found " +
                                                    std::to_string(acc.size()));
      }
      for (Index c = 0; c < acc.size(); ++c) {
        if (!std::isfinite(acc[c]) || acc[c] < 0.0 || acc[c] > 1.0) {
          check.fail(where + "/class_accuracies[" + std::to_string(c) + "]",
                     "accuracy " + std::to_string(acc[c]) + " outside [0,1]");
        }
      }
    }
    if (m.imagenet_accuracy) {
      const double a = *m.imagenet_accuracy;
      if (!std::isfinite(a) || a < 0.0 || a > 1.0) {
        check.fail(where + "/imagenet_accuracy", "accuracy " + std::to_string(a) + " outside [0,1]");
      }
    }
  }
  return report;
}

}  // namespace lovm
