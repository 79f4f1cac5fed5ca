#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "topoeeg/learn/forest.hpp"
#include "topoeeg/learn/gnb.hpp"
#include "topoeeg/learn/knn.hpp"

namespace topoeeg {

enum class ClassifierKind { rf, knn, gnb };

inline std::string_view classifier_name(ClassifierKind k) noexcept {
  switch (k) {
    case ClassifierKind::rf: return "rf";
    case ClassifierKind::knn: return "knn";
    case ClassifierKind::gnb: return "gnb";
  }
  return "?";
}

inline ClassifierKind parse_classifier(std::string_view s) {
  if (s == "rf") return ClassifierKind::rf;
  if (s == "knn") return ClassifierKind::knn;
  if (s == "gnb") return ClassifierKind::gnb;
  throw ParameterError("unknown classifier '" + std::string(s) + "' (expected rf, knn or gnb)");
}

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::rf;
  ForestParams forest{};
  std::size_t knn_k = 5;
};

using AnyModel = std::variant<ForestModel, KnnModel, GnbModel>;

inline AnyModel fit(const ClassifierSpec& spec, const Examples& train, std::uint64_t seed, int num_classes) {
  switch (spec.kind) {
    case ClassifierKind::rf: return rf_train(train, spec.forest, seed, num_classes);
    case ClassifierKind::knn: return knn_fit(train, spec.knn_k, num_classes);
    case ClassifierKind::gnb: return gnb_fit(train, num_classes);
  }
  throw ParameterError("fit: unknown classifier");
}

inline int predict(const AnyModel& model, std::span<const double> x) {
  return std::visit(
      [&](const auto& m) -> int {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, ForestModel>) return rf_predict(m, x).label;
        else if constexpr (std::is_same_v<M, KnnModel>) return knn_predict(m, x);
        else return gnb_predict(m, x);
      },
      model);
}

inline ClassifierKind model_kind(const AnyModel& m) noexcept {
  return static_cast<ClassifierKind>(m.index());
}

}  // namespace topoeeg
