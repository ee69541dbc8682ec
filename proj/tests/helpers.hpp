#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <string>
#include <string_view>

#include "haluj/haluj.hpp"

namespace th {

/// Build an instance from a category pattern: 'o' completely irrelevant,
/// 'p' partially irrelevant, 'r' highly related, 'm' misleading highly
/// related. Texts are distinct and nonempty.
inline haluj::Instance make_instance(std::string id, haluj::Label label,
                                     std::string_view pattern) {
  haluj::Instance inst;
  inst.id = std::move(id);
  inst.claim = "Claim for " + inst.id + " states a checkable fact.";
  inst.label = label;
  inst.source = haluj::Source::multi_evidence;
  for (size_t i = 0; i < pattern.size(); ++i) {
    haluj::EvidenceItem e;
    e.eid = static_cast<int>(i) + 1;
    e.text = "Evidence body " + std::to_string(i + 1) + " for " + inst.id + ".";
    switch (pattern[i]) {
      case 'o': e.category = haluj::EvidenceCategory::CompletelyIrrelevant; break;
      case 'p': e.category = haluj::EvidenceCategory::PartiallyIrrelevant; break;
      case 'r': e.category = haluj::EvidenceCategory::HighlyRelated; break;
      case 'm':
        e.category = haluj::EvidenceCategory::HighlyRelated;
        e.misleading = true;
        e.explanation = "Slants incidental detail toward the wrong verdict.";
        break;
      default: throw std::runtime_error("bad pattern char");
    }
    inst.evidence.push_back(std::move(e));
  }
  haluj::validate_instance(inst);
  return inst;
}

/// Fresh scratch directory under the build tree.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("haluj-test-" + tag + "-" + std::to_string(counter++) + "-" +
                    std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// A valid oracle-style detect response for the given instance view.
inline std::string verdict_json(haluj::Label label, const std::string& reasoning) {
  return haluj::json{{"factuality", std::string(haluj::label_name(label))},
                     {"reasoning", reasoning}}
      .dump();
}

}  // namespace th
