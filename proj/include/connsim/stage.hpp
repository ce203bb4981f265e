#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace connsim {

/// Multiple-sclerosis clinical stages. The enumerator order is the fixed
/// tie-break order used by argmax.
enum class Stage { CIS = 0, RR = 1, PP = 2, SP = 3 };

inline constexpr std::array<Stage, 4> kStages{Stage::CIS, Stage::RR, Stage::PP, Stage::SP};

std::string_view to_string(Stage s);
/// Accepts "CIS"/"cis" etc.
std::optional<Stage> parse_stage(std::string_view text);

struct StageProbabilities {
    std::array<double, 4> p{0.25, 0.25, 0.25, 0.25};

    double operator[](Stage s) const { return p[static_cast<int>(s)]; }
    double& operator[](Stage s) { return p[static_cast<int>(s)]; }

    /// First stage (in CIS < RR < PP < SP order) holding the maximum.
    Stage argmax() const;

    friend bool operator==(const StageProbabilities&, const StageProbabilities&) = default;
};

}  // namespace connsim
