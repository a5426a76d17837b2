#pragma once

#include "ldg/checkpoint.hpp"
#include "ldg/data.hpp"
#include "ldg/evalkit.hpp"

namespace ldg {

// Per pseudo-domain: Frechet distance between that domain's prompt-free
// final features and the target set's, plus the mean adapter weight the
// target receives for that domain's prompt. Spearman correlation across
// domains (absent when M < 3). Requires a +P+A checkpoint with a frozen
// assignment.
DomainDistanceReport analyze_prompt_weights(const Checkpoint& ckpt, const Dataset& source,
                                            const Dataset& target);

}  // namespace ldg
