#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "taglab/baselines.h"
#include "taglab/crf.h"
#include "taglab/neural.h"

namespace taglab {

inline constexpr const char* kContainerMagic = "TAGLAB";
inline constexpr int kContainerVersion = 1;

// Layout:
//   TAGLAB <version>\n
//   kind <kind>\n
//   meta <n>\n<n bytes of JSON>\n
//   block <name> <rank> <dims...> <count>\n<count little-endian float64>\n   (repeated)
//   end\n
struct ModelContainer {
  struct Block {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> values;
  };
  std::string kind;
  nlohmann::ordered_json meta;
  std::vector<Block> blocks;
};

std::string serialize_container(const ModelContainer& container);
// Raises FormatError on bad magic, unsupported version, or truncation.
ModelContainer parse_container(std::string_view bytes);

using AnyModel = std::variant<MajorModel, MemoModel, CrfModel, TaggerModel>;

const char* model_kind(const AnyModel& model);

ModelContainer to_container(const AnyModel& model);
AnyModel from_container(const ModelContainer& container);

void save_model(const std::filesystem::path& path, const AnyModel& model);
AnyModel load_model(const std::filesystem::path& path);
// Raises FormatError when the stored kind differs.
AnyModel load_model(const std::filesystem::path& path, std::string_view expected_kind);

std::vector<std::string> predict(const AnyModel& model, const TaggedSentence& sentence);

nlohmann::ordered_json to_json(const NeuralConfig& config);
NeuralConfig neural_config_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const TrainConfig& config);
nlohmann::ordered_json to_json(const CrfConfig& config);
nlohmann::ordered_json to_json(const Vocabulary& vocab);
Vocabulary vocabulary_from_json(const nlohmann::ordered_json& j);

}  // namespace taglab
