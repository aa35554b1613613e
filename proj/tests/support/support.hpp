#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dmescope/campaign.hpp"
#include "dmescope/dmf.hpp"
#include "dmescope/ui_model.hpp"

namespace dmescope::test {

std::string fixture(const std::string& relative);
std::string read_file(const std::string& path);
nlohmann::json read_json_file(const std::string& path);

Widget node(std::string cls, std::vector<Widget> children = {});
Widget node_at(std::string cls, Bounds b, std::vector<Widget> children = {});

/// Random ordered tree with `nodes` nodes labelled from the first `labels`
/// class names.
Widget random_tree(std::mt19937_64& rng, std::size_t nodes, std::size_t labels);

/// Minimum edit cost over every valid mapping between the two trees
/// (one-to-one, preserving ancestry and left-to-right order).
std::size_t brute_force_edit_distance(const Widget& a, const Widget& b);

/// Outcome of the count/membership rules, computed by pairwise text
/// comparison instead of multiset maps.
PostOutcome multiset_oracle(DmfType t, const DumState& before, const DumState& after,
                            const std::optional<DataItem>& target, std::span<const std::string> inputs);

DumState state_of(const std::vector<std::vector<std::string>>& items);

/// Launch-screen DUMs of `app`, then collection with the scripted backend.
std::vector<DmfInstance> collect_app(const std::string& app, const std::string& script,
                                     const std::vector<DmfType>& types);

CampaignResult fuzz_app(const std::string& app, std::span<const DmfInstance> dmfs, const std::string& script,
                        std::size_t budget, std::uint64_t seed);

struct CorpusEntry {
    std::string twin;
    std::string faulty;
    std::string script;
    std::vector<DmfType> types;
    std::string fault;
};

std::vector<CorpusEntry> fault_corpus();

/// Performs steps given as `{type, target, text?}` where target is a resource
/// id or the visible text of an offered action. Returns false when a step has
/// no matching action.
bool perform_steps(Environment& env, const nlohmann::json& steps);

}  // namespace dmescope::test
