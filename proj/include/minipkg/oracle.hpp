// Copyright (c) 2026, minipkg contributors
//
// Distributed under the terms of the BSD 3-Clause License.
//
// The full license is in the file LICENSE, distributed with this software.

#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "minipkg/errors.hpp"
#include "minipkg/solver.hpp"

namespace minipkg
{
    // Exhaustive reference solver. It enumerates one choice per package name
    // (a record or absence, which is the subset enumeration filtered by the
    // one-record-per-name rule), keeps every consistent assignment, and picks
    // the optimum with a standalone comparator. Everything here is written
    // against the documented semantics, not the production search.
    namespace oracle_detail
    {
        struct name_slot
        {
            std::string name;
            bool requested = false;
            std::vector<candidate> candidates;
            std::vector<std::vector<match_spec>> parsed_deps;
            int locked_choice = -1;
        };

        struct universe
        {
            std::vector<name_slot> slots;
            std::map<std::string, std::size_t> index_of;
        };

        inline auto prefer(const candidate& a, const candidate& b) -> bool
        {
            if (a.rank != b.rank)
            {
                return a.rank < b.rank;
            }
            auto cv = compare_versions(a.record.ver, b.record.ver);
            if (cv != std::strong_ordering::equal)
            {
                return cv == std::strong_ordering::greater;
            }
            if (a.record.build_number != b.record.build_number)
            {
                return a.record.build_number > b.record.build_number;
            }
            bool an = a.record.plat == platform::noarch;
            bool bn = b.record.plat == platform::noarch;
            if (an != bn)
            {
                return !an;
            }
            if (a.record.build != b.record.build)
            {
                return a.record.build < b.record.build;
            }
            return a.record.filename < b.record.filename;
        }

        inline auto build_universe(const solve_request& request) -> universe
        {
            universe u;
            std::vector<std::string> pending;
            std::set<std::string> requested_names;
            for (const auto& spec : request.specs)
            {
                if (spec.name.rfind("__", 0) == 0)
                {
                    continue;
                }
                if (requested_names.insert(spec.name).second)
                {
                    pending.push_back(spec.name);
                }
            }
            std::vector<std::string> requested_in_order = pending;

            std::set<std::string> known(pending.begin(), pending.end());
            std::map<std::string, name_slot> slots;
            while (!pending.empty())
            {
                auto name = pending.back();
                pending.pop_back();
                if (slots.count(name) != 0)
                {
                    continue;
                }
                name_slot slot;
                slot.name = name;
                slot.requested = requested_names.count(name) != 0;
                slot.candidates = request.index.candidates_for(name);
                for (const auto& locked : request.locked)
                {
                    if (locked.name != name)
                    {
                        continue;
                    }
                    bool found = false;
                    for (std::size_t i = 0; i < slot.candidates.size(); ++i)
                    {
                        const auto& r = slot.candidates[i].record;
                        if (r.version == locked.version && r.build == locked.build
                            && r.channel == locked.channel)
                        {
                            slot.locked_choice = static_cast<int>(i);
                            found = true;
                            break;
                        }
                    }
                    if (!found)
                    {
                        slot.candidates.push_back(
                            candidate{ locked, request.index.channel_order.size() }
                        );
                        slot.locked_choice = static_cast<int>(slot.candidates.size() - 1);
                    }
                    break;
                }
                std::stable_sort(
                    slot.candidates.begin(),
                    slot.candidates.end(),
                    [](const candidate& a, const candidate& b) { return prefer(a, b); }
                );
                if (slot.locked_choice >= 0)
                {
                    // recompute the locked position after sorting
                    for (std::size_t i = 0; i < slot.candidates.size(); ++i)
                    {
                        const auto& r = slot.candidates[i].record;
                        const auto& locked = *std::find_if(
                            request.locked.begin(),
                            request.locked.end(),
                            [&name](const package_record& l) { return l.name == name; }
                        );
                        if (r.version == locked.version && r.build == locked.build
                            && r.channel == locked.channel)
                        {
                            slot.locked_choice = static_cast<int>(i);
                            break;
                        }
                    }
                }
                slot.parsed_deps.resize(slot.candidates.size());
                for (std::size_t i = 0; i < slot.candidates.size(); ++i)
                {
                    for (const auto& dep_text : slot.candidates[i].record.depends)
                    {
                        auto dep = parse_matchspec(dep_text);
                        if (dep.name.rfind("__", 0) == 0)
                        {
                            slot.parsed_deps[i].push_back(std::move(dep));
                            continue;
                        }
                        if (known.insert(dep.name).second)
                        {
                            pending.push_back(dep.name);
                        }
                        slot.parsed_deps[i].push_back(std::move(dep));
                    }
                }
                slots.emplace(name, std::move(slot));
            }

            for (const auto& name : requested_in_order)
            {
                u.index_of.emplace(name, u.slots.size());
                u.slots.push_back(std::move(slots.at(name)));
            }
            for (auto& [name, slot] : slots)
            {
                if (u.index_of.count(name) == 0)
                {
                    u.index_of.emplace(name, u.slots.size());
                    u.slots.push_back(std::move(slot));
                }
            }
            return u;
        }

        // choice encoding: -1 absent, otherwise candidate position
        inline auto choice_rank(const name_slot& slot, int choice) -> std::size_t
        {
            if (slot.locked_choice >= 0 && choice == slot.locked_choice)
            {
                return 0;
            }
            if (choice < 0)
            {
                return 1;
            }
            std::size_t rank = 2;
            for (int i = 0; i < choice; ++i)
            {
                if (i != slot.locked_choice)
                {
                    ++rank;
                }
            }
            return rank;
        }

        inline auto better_assignment(
            const universe& u,
            const std::vector<int>& a,
            const std::vector<int>& b
        ) -> bool
        {
            for (std::size_t n = 0; n < u.slots.size(); ++n)
            {
                auto ra = choice_rank(u.slots[n], a[n]);
                auto rb = choice_rank(u.slots[n], b[n]);
                if (ra != rb)
                {
                    return ra < rb;
                }
            }
            return false;
        }

        inline auto virtual_satisfies(
            const std::vector<virtual_package>& virtuals,
            const match_spec& spec
        ) -> bool
        {
            for (const auto& v : virtuals)
            {
                if (v.name == spec.name)
                {
                    return spec_matches(spec, v);
                }
            }
            return false;
        }

        inline auto assignment_is_solution(
            const solve_request& request,
            const universe& u,
            const std::vector<int>& choice
        ) -> bool
        {
            auto lookup = [&](const std::string& name) -> const package_record*
            {
                auto it = u.index_of.find(name);
                if (it == u.index_of.end() || choice[it->second] < 0)
                {
                    return nullptr;
                }
                return &u.slots[it->second]
                            .candidates[static_cast<std::size_t>(choice[it->second])]
                            .record;
            };

            for (const auto& spec : request.specs)
            {
                if (spec.name.rfind("__", 0) == 0)
                {
                    if (!virtual_satisfies(request.virtuals, spec))
                    {
                        return false;
                    }
                    continue;
                }
                const auto* r = lookup(spec.name);
                if (r == nullptr || !spec_matches(spec, *r))
                {
                    return false;
                }
            }
            for (std::size_t n = 0; n < u.slots.size(); ++n)
            {
                if (choice[n] < 0)
                {
                    continue;
                }
                for (const auto& dep : u.slots[n].parsed_deps[static_cast<std::size_t>(choice[n])])
                {
                    if (dep.name.rfind("__", 0) == 0)
                    {
                        if (!virtual_satisfies(request.virtuals, dep))
                        {
                            return false;
                        }
                        continue;
                    }
                    const auto* r = lookup(dep.name);
                    if (r == nullptr || !spec_matches(dep, *r))
                    {
                        return false;
                    }
                }
            }
            for (const auto& pin : request.pins)
            {
                const auto* r = lookup(pin.name);
                if (r != nullptr && !spec_matches(pin, *r))
                {
                    return false;
                }
            }
            for (const auto& name : request.excluded_names)
            {
                if (lookup(name) != nullptr)
                {
                    return false;
                }
            }
            return true;
        }

        // sound pruning only: a violation between the newest choice and the
        // already-fixed prefix can never be repaired later
        inline auto prefix_viable(
            const solve_request& request,
            const universe& u,
            const std::vector<int>& choice,
            std::size_t n
        ) -> bool
        {
            int v = choice[n];
            if (v < 0)
            {
                if (u.slots[n].requested)
                {
                    return false;
                }
            }
            else
            {
                for (const auto& name : request.excluded_names)
                {
                    if (name == u.slots[n].name)
                    {
                        return false;
                    }
                }
                for (const auto& pin : request.pins)
                {
                    if (pin.name == u.slots[n].name
                        && !spec_matches(
                            pin,
                            u.slots[n].candidates[static_cast<std::size_t>(v)].record
                        ))
                    {
                        return false;
                    }
                }
                for (const auto& dep :
                     u.slots[n].parsed_deps[static_cast<std::size_t>(v)])
                {
                    if (dep.name.rfind("__", 0) == 0)
                    {
                        if (!virtual_satisfies(request.virtuals, dep))
                        {
                            return false;
                        }
                        continue;
                    }
                    auto it = u.index_of.find(dep.name);
                    if (it == u.index_of.end())
                    {
                        return false;
                    }
                    if (it->second <= n && choice[it->second] != -2)
                    {
                        int tv = choice[it->second];
                        if (tv < 0
                            || !spec_matches(
                                dep,
                                u.slots[it->second]
                                    .candidates[static_cast<std::size_t>(tv)]
                                    .record
                            ))
                        {
                            return false;
                        }
                    }
                }
            }
            // dependencies of earlier choices pointing at this name
            for (std::size_t m = 0; m < n; ++m)
            {
                if (choice[m] < 0)
                {
                    continue;
                }
                for (const auto& dep :
                     u.slots[m].parsed_deps[static_cast<std::size_t>(choice[m])])
                {
                    if (dep.name != u.slots[n].name)
                    {
                        continue;
                    }
                    if (v < 0
                        || !spec_matches(
                            dep,
                            u.slots[n].candidates[static_cast<std::size_t>(v)].record
                        ))
                    {
                        return false;
                    }
                }
            }
            return true;
        }
    }

    inline auto brute_force_solve(const solve_request& request) -> solve_result
    {
        auto u = oracle_detail::build_universe(request);

        std::size_t total = 0;
        for (const auto& slot : u.slots)
        {
            total += slot.candidates.size();
        }
        if (total > 24)
        {
            throw instance_too_large(
                std::to_string(total) + " candidates exceed the enumeration bound of 24"
            );
        }

        std::vector<int> choice(u.slots.size(), -2);
        std::vector<int> best;
        bool found = false;

        auto recurse = [&](auto&& self, std::size_t n) -> void
        {
            if (n == u.slots.size())
            {
                if (oracle_detail::assignment_is_solution(request, u, choice))
                {
                    if (!found || oracle_detail::better_assignment(u, choice, best))
                    {
                        best = choice;
                        found = true;
                    }
                }
                return;
            }
            for (int v = -1; v < static_cast<int>(u.slots[n].candidates.size()); ++v)
            {
                choice[n] = v;
                if (oracle_detail::prefix_viable(request, u, choice, n))
                {
                    self(self, n + 1);
                }
            }
            choice[n] = -2;
        };
        recurse(recurse, 0);

        solve_result result;
        if (!found)
        {
            result.unsat = unsat_explanation{};
            return result;
        }
        solution sol;
        for (std::size_t n = 0; n < u.slots.size(); ++n)
        {
            if (best[n] >= 0)
            {
                sol.records.push_back(
                    u.slots[n].candidates[static_cast<std::size_t>(best[n])].record
                );
            }
        }
        std::sort(
            sol.records.begin(),
            sol.records.end(),
            [](const package_record& a, const package_record& b) { return a.name < b.name; }
        );
        result.sat = std::move(sol);
        return result;
    }
}
