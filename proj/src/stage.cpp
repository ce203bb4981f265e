#include "connsim/stage.hpp"

#include <algorithm>
#include <cctype>

namespace connsim {

std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::CIS: return "CIS";
        case Stage::RR: return "RR";
        case Stage::PP: return "PP";
        case Stage::SP: return "SP";
    }
    return "?";
}

std::optional<Stage> parse_stage(std::string_view text) {
    std::string upper(text);
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    for (Stage s : kStages) {
        if (upper == to_string(s)) {
            return s;
        }
    }
    return std::nullopt;
}

Stage StageProbabilities::argmax() const {
    int best = 0;
    for (int i = 1; i < 4; ++i) {
        if (p[i] > p[best]) {
            best = i;
        }
    }
    return static_cast<Stage>(best);
}

}  // namespace connsim
