#include "hypomix/bracket.hpp"

#include "hypomix/errors.hpp"

namespace hypomix {

std::vector<const TaggedField*> Filtration::all() const {
    std::vector<const TaggedField*> out;
    out.reserve(total());
    for (const auto& l : levels)
        for (const auto& f : l) out.push_back(&f);
    return out;
}

Filtration generate_filtration(const PolyVectorField& x0,
                               const std::vector<PolyVectorField>& spanning_fields,
                               int depth, long cap) {
    if (depth < 0 || depth > 12) throw ValidationError("filtration depth out of range [0, 12]");
    for (const auto& f : spanning_fields)
        if (f.dim() != x0.dim()) throw DimensionError("spanning field dimension != drift dimension");

    Filtration out;
    out.dim = x0.dim();
    out.levels.resize(1);

    auto retained = [&](const PolyVectorField& f) {
        for (const auto& lvl : out.levels)
            for (const auto& t : lvl)
                if (f.scalar_multiple_of(t.F)) return true;
        return false;
    };

    for (size_t j = 0; j < spanning_fields.size(); ++j) {
        const auto& f = spanning_fields[j];
        if (f.is_zero() || retained(f)) continue;
        out.levels[0].push_back(TaggedField{f, {static_cast<int>(j) + 1}, 0});
    }

    // generators X_0 = x0 and X_j = spanning_fields[j-1]
    for (int n = 1; n <= depth; ++n) {
        out.levels.emplace_back();
        const auto& prev = out.levels[n - 1];
        for (const auto& y : prev) {
            for (int i = 0; i <= static_cast<int>(spanning_fields.size()); ++i) {
                PolyVectorField br = (i == 0) ? lie_bracket(x0, y.F)
                                              : lie_bracket(spanning_fields[i - 1], y.F);
                if (br.is_zero() || retained(br)) continue;
                std::vector<int> idx;
                idx.reserve(y.index.size() + 1);
                idx.push_back(i);
                idx.insert(idx.end(), y.index.begin(), y.index.end());
                out.levels[n].push_back(TaggedField{std::move(br), std::move(idx), n});
                if (out.total() > cap)
                    throw Error("filtration exceeded the retained-field cap (" + std::to_string(cap) +
                                ") at level " + std::to_string(n) + "; the bracket family is blowing up");
            }
        }
    }
    return out;
}

} // namespace hypomix
