#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "trajmark/domain.hpp"
#include "trajmark/trajectory.hpp"

namespace trajmark {

/// Trajectories of the protected agent, with private reasoning and tool
/// observations. Query ids are "<stage>-<index>".
std::vector<FullTrajectory> generate_victim_corpus(const DomainSpec& d, std::size_t n, std::uint64_t seed,
                                                   std::string_view stage = "victim");

/// Grey-box view of a freshly generated victim corpus.
Corpus generate_grey_corpus(const DomainSpec& d, std::size_t n, std::uint64_t seed, std::string_view stage = "victim");

/// Stand-in for a model fine-tuned on harvested grey-box trajectories: per set,
/// the member distribution is eta * (harvested frequencies) + (1 - eta) * (the
/// domain's natural distribution). Sets never seen in the harvest keep the
/// natural distribution and are listed in `fallback_sets`.
struct SurrogateModel {
  std::string domain;
  double eta = 1.0;
  std::map<std::string, Distribution> fitted;
  std::vector<std::string> fallback_sets;
  std::size_t harvest_size = 0;
};

SurrogateModel fit_surrogate(const Corpus& harvested, const DomainSpec& d, double eta);

/// Samples the surrogate on fresh queries. Sentinel-free: only grey-box fields exist.
Corpus sample_surrogate(const SurrogateModel& m, const DomainSpec& d, std::size_t n, std::uint64_t seed,
                        std::string_view stage = "suspect");

nlohmann::ordered_json to_json(const SurrogateModel& m);

/// Marker embedded in every thought and observation of a victim trajectory;
/// none may survive into a grey-box corpus.
inline constexpr std::string_view kPrivateMarker = "[[private:";

}  // namespace trajmark
