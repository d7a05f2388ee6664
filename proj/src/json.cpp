#include "evc/json.hpp"

#include <cmath>

namespace evc {

namespace {

nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json number(const std::optional<double>& v) { return v ? number(*v) : nlohmann::json(nullptr); }

} // namespace

nlohmann::json to_json(const VoxelStats& s)
{
    return {{"nonzero_fraction", s.nonzero_fraction},
            {"above_one_fraction_of_nonzero", s.above_one_fraction_of_nonzero},
            {"total_mass", s.total_mass},
            {"max_value", s.max_value}};
}

nlohmann::json to_json(const VoxelMetrics& m)
{
    return {{"tpf1", m.tpf1}, {"tf1", m.tf1}, {"rf1", m.rf1}, {"tpacc", m.tpacc},
            {"tacc", m.tacc}, {"racc", m.racc}, {"pmse2", m.pmse2}, {"pmse4", m.pmse4}};
}

nlohmann::json to_json(const StreamMetrics& m)
{
    return {{"mete", number(m.mete)}, {"noe", m.noe}, {"gper", number(m.gper)},
            {"c_mete", number(m.c_mete)}, {"c_noe", number(m.c_noe)}};
}

nlohmann::json to_json(const LossReport& r)
{
    return {{"stp", r.stp}, {"tp", r.tp}, {"ef", r.ef}, {"bc", r.bc}, {"combined", r.combined}, {"adv", nullptr}};
}

} // namespace evc
