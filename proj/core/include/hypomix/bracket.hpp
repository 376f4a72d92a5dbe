#pragma once

#include <vector>

#include "hypomix/poly.hpp"

namespace hypomix {

/// A filtration member together with the multi-index that generated it:
/// index (i1, ..., im) stands for [X_{i1}, [X_{i2}, [..., X_{im}]]] where
/// X_0 is the drift field and X_j (j >= 1) the j-th noise field.
struct TaggedField {
    PolyVectorField F;
    std::vector<int> index;
    int depth = 0; ///< filtration level at which the field first appeared
};

/// Bracket filtration V_0 subset V_1 subset ... with the parabolic
/// convention: V_0 holds only the noise fields; the drift enters through
/// brackets. levels[n] stores the fields NEW at level n after removing
/// zero fields and exact scalar multiples of earlier entries.
struct Filtration {
    int dim = 0;
    std::vector<std::vector<TaggedField>> levels;

    int max_depth() const { return static_cast<int>(levels.size()) - 1; }
    long total() const {
        long t = 0;
        for (const auto& l : levels) t += static_cast<long>(l.size());
        return t;
    }
    /// All retained fields in (depth, generation) order.
    std::vector<const TaggedField*> all() const;
};

/// Generate the filtration from drift x0 and the spanning (noise) fields.
/// Throws if the retained-field count exceeds cap (blow-up guard).
Filtration generate_filtration(const PolyVectorField& x0,
                               const std::vector<PolyVectorField>& spanning_fields,
                               int depth = 6, long cap = 5000);

} // namespace hypomix
