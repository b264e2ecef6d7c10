// Copyright (c) 2026, minipkg contributors
//
// Distributed under the terms of the BSD 3-Clause License.
//
// The full license is in the file LICENSE, distributed with this software.

#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "minipkg/channel.hpp"
#include "minipkg/errors.hpp"
#include "minipkg/match_spec.hpp"
#include "minipkg/record.hpp"

namespace minipkg
{
    struct solve_request
    {
        std::vector<match_spec> specs;
        merged_index index;
        std::vector<virtual_package> virtuals;
        std::vector<match_spec> pins;
        std::vector<package_record> locked;
        // names that must not appear in the solution at all; used by removal
        std::vector<std::string> excluded_names;
    };

    struct solution
    {
        // sorted by name; at most one record per name
        std::vector<package_record> records;
    };

    struct explanation_node
    {
        std::string label;
        std::vector<explanation_node> children;
    };

    struct unsat_explanation
    {
        std::vector<explanation_node> roots;
    };

    inline void render_explanation_node(
        const explanation_node& node,
        std::size_t depth,
        std::string& out
    )
    {
        out.append(depth * 2, ' ');
        out += node.label;
        out += '\n';
        for (const auto& child : node.children)
        {
            render_explanation_node(child, depth + 1, out);
        }
    }

    inline auto render_explanation(const unsat_explanation& explanation) -> std::string
    {
        std::string out;
        for (const auto& root : explanation.roots)
        {
            render_explanation_node(root, 0, out);
        }
        return out;
    }

    struct solve_result
    {
        std::optional<solution> sat;
        std::optional<unsat_explanation> unsat;

        [[nodiscard]] auto ok() const -> bool
        {
            return sat.has_value();
        }
    };

    // A clause either demands that a requested spec is satisfied (no owner)
    // or that a candidate's dependency is satisfied (owner set). `allowed`
    // is a membership mask over the candidates of the target name; absent
    // never satisfies a clause.
    struct sat_clause
    {
        std::optional<std::pair<std::size_t, std::size_t>> owner;
        std::size_t target = 0;
        std::vector<char> allowed;
        std::string origin;
    };

    struct name_entry
    {
        std::string name;
        bool requested = false;
        std::vector<candidate> candidates;
        std::optional<std::size_t> locked_cand;
        std::vector<char> excluded;
        std::vector<std::string> exclusion_reason;
        std::vector<std::vector<match_spec>> deps;
    };

    struct clause_set
    {
        std::vector<name_entry> names;
        std::map<std::string, std::size_t> name_index;
        std::vector<sat_clause> request_clauses;
        std::vector<sat_clause> dep_clauses;

        // lookup tables for the search
        std::vector<std::vector<std::size_t>> requests_by_target;
        std::vector<std::vector<std::size_t>> deps_by_target;
        std::vector<std::vector<std::vector<std::size_t>>> deps_by_owner;

        [[nodiscard]] auto variable_count() const -> std::size_t
        {
            std::size_t n = 0;
            for (const auto& entry : names)
            {
                n += entry.candidates.size();
            }
            return n;
        }
    };

    namespace detail
    {
        inline auto is_virtual_name(const std::string& name) -> bool
        {
            return name.rfind("__", 0) == 0;
        }

        inline auto find_virtual(
            const std::vector<virtual_package>& virtuals,
            const std::string& name
        ) -> const virtual_package*
        {
            for (const auto& v : virtuals)
            {
                if (v.name == name)
                {
                    return &v;
                }
            }
            return nullptr;
        }

        inline auto records_identical(const package_record& a, const package_record& b) -> bool
        {
            return a.name == b.name && a.version == b.version && a.build == b.build
                   && a.channel == b.channel;
        }
    }

    inline auto encode(const solve_request& request) -> clause_set
    {
        clause_set cs;

        // universe discovery: requested names in appearance order, then every
        // name reachable through depends edges
        std::vector<std::string> requested_order;
        std::set<std::string> seen;
        for (const auto& spec : request.specs)
        {
            if (detail::is_virtual_name(spec.name))
            {
                continue;
            }
            if (seen.insert(spec.name).second)
            {
                requested_order.push_back(spec.name);
            }
        }

        std::set<std::string> discovered;
        std::vector<std::string> queue = requested_order;
        std::map<std::string, name_entry> entries;
        while (!queue.empty())
        {
            auto name = queue.back();
            queue.pop_back();
            if (entries.count(name) != 0)
            {
                continue;
            }

            name_entry entry;
            entry.name = name;
            entry.candidates = request.index.candidates_for(name);
            for (const auto& locked : request.locked)
            {
                if (locked.name != name)
                {
                    continue;
                }
                auto it = std::find_if(
                    entry.candidates.begin(),
                    entry.candidates.end(),
                    [&locked](const candidate& c)
                    { return detail::records_identical(c.record, locked); }
                );
                if (it == entry.candidates.end())
                {
                    // an installed record missing from the index is still a
                    // legal choice; it ranks below every channel
                    entry.candidates.push_back(
                        candidate{ locked, request.index.channel_order.size() }
                    );
                    entry.locked_cand = entry.candidates.size() - 1;
                }
                else
                {
                    entry.locked_cand = static_cast<std::size_t>(
                        std::distance(entry.candidates.begin(), it)
                    );
                }
                break;
            }

            entry.excluded.assign(entry.candidates.size(), 0);
            entry.exclusion_reason.assign(entry.candidates.size(), "");
            entry.deps.resize(entry.candidates.size());

            const bool name_excluded = std::find(
                                           request.excluded_names.begin(),
                                           request.excluded_names.end(),
                                           name
                                       )
                                       != request.excluded_names.end();

            for (std::size_t c = 0; c < entry.candidates.size(); ++c)
            {
                if (name_excluded)
                {
                    entry.excluded[c] = 1;
                    entry.exclusion_reason[c] = "excluded by request";
                    continue;
                }
                for (const auto& pin : request.pins)
                {
                    if (pin.name == name && !spec_matches(pin, entry.candidates[c].record))
                    {
                        entry.excluded[c] = 1;
                        entry.exclusion_reason[c] = "conflicts with pinned " + render(pin);
                        break;
                    }
                }
                if (entry.excluded[c] != 0)
                {
                    continue;
                }
                for (const auto& dep_text : entry.candidates[c].record.depends)
                {
                    auto dep = parse_matchspec(dep_text);
                    if (detail::is_virtual_name(dep.name))
                    {
                        const auto* v = detail::find_virtual(request.virtuals, dep.name);
                        if (v == nullptr || !spec_matches(dep, *v))
                        {
                            entry.excluded[c] = 1;
                            entry.exclusion_reason[c] = "requires " + render(dep)
                                                        + (v == nullptr
                                                               ? ", which the host does not provide"
                                                               : ", but the host provides "
                                                                     + v->version_text);
                            break;
                        }
                        continue;
                    }
                    entry.deps[c].push_back(dep);
                    if (discovered.insert(dep.name).second)
                    {
                        queue.push_back(dep.name);
                    }
                }
            }
            entries.emplace(name, std::move(entry));
        }

        std::vector<std::string> discovered_order;
        for (const auto& name : discovered)
        {
            if (std::find(requested_order.begin(), requested_order.end(), name)
                == requested_order.end())
            {
                discovered_order.push_back(name);
            }
        }

        for (const auto& name : requested_order)
        {
            entries[name].requested = true;
            cs.name_index.emplace(name, cs.names.size());
            cs.names.push_back(std::move(entries[name]));
        }
        for (const auto& name : discovered_order)
        {
            cs.name_index.emplace(name, cs.names.size());
            cs.names.push_back(std::move(entries[name]));
        }

        cs.requests_by_target.resize(cs.names.size());
        cs.deps_by_target.resize(cs.names.size());
        cs.deps_by_owner.resize(cs.names.size());
        for (std::size_t n = 0; n < cs.names.size(); ++n)
        {
            cs.deps_by_owner[n].resize(cs.names[n].candidates.size());
        }

        // request clauses; a spec no record or virtual can satisfy is
        // reported before any search happens
        std::vector<std::string> missing;
        for (const auto& spec : request.specs)
        {
            if (detail::is_virtual_name(spec.name))
            {
                const auto* v = detail::find_virtual(request.virtuals, spec.name);
                if (v == nullptr || !spec_matches(spec, *v))
                {
                    missing.push_back(render(spec));
                }
                continue;
            }
            auto target = cs.name_index.at(spec.name);
            sat_clause clause;
            clause.target = target;
            clause.origin = render(spec);
            clause.allowed.assign(cs.names[target].candidates.size(), 0);
            bool any = false;
            for (std::size_t c = 0; c < cs.names[target].candidates.size(); ++c)
            {
                if (spec_matches(spec, cs.names[target].candidates[c].record))
                {
                    clause.allowed[c] = 1;
                    any = true;
                }
            }
            if (!any)
            {
                missing.push_back(render(spec));
                continue;
            }
            cs.requests_by_target[target].push_back(cs.request_clauses.size());
            cs.request_clauses.push_back(std::move(clause));
        }
        if (!missing.empty())
        {
            std::string joined;
            for (const auto& m : missing)
            {
                if (!joined.empty())
                {
                    joined += "; ";
                }
                joined += m;
            }
            throw spec_has_no_candidates(joined);
        }

        // dependency clauses; an empty clause body collapses to a static
        // exclusion of its owner
        for (std::size_t n = 0; n < cs.names.size(); ++n)
        {
            auto& entry = cs.names[n];
            for (std::size_t c = 0; c < entry.candidates.size(); ++c)
            {
                if (entry.excluded[c] != 0)
                {
                    continue;
                }
                for (const auto& dep : entry.deps[c])
                {
                    auto target = cs.name_index.at(dep.name);
                    sat_clause clause;
                    clause.owner = std::make_pair(n, c);
                    clause.target = target;
                    clause.origin = render(dep);
                    clause.allowed.assign(cs.names[target].candidates.size(), 0);
                    bool any = false;
                    for (std::size_t t = 0; t < cs.names[target].candidates.size(); ++t)
                    {
                        if (spec_matches(dep, cs.names[target].candidates[t].record))
                        {
                            clause.allowed[t] = 1;
                            any = true;
                        }
                    }
                    if (!any)
                    {
                        entry.excluded[c] = 1;
                        entry.exclusion_reason[c] = "requires " + render(dep)
                                                    + ", for which no candidate matches";
                        break;
                    }
                    cs.deps_by_target[target].push_back(cs.dep_clauses.size());
                    cs.deps_by_owner[n][c].push_back(cs.dep_clauses.size());
                    cs.dep_clauses.push_back(std::move(clause));
                }
            }
        }

        return cs;
    }

    namespace detail
    {
        // value order per name: the locked record first, then absence, then
        // the remaining candidates in preference order; the leftmost
        // consistent leaf of this order is the objective optimum
        inline auto value_order(const name_entry& entry) -> std::vector<int>
        {
            std::vector<int> order;
            if (entry.locked_cand)
            {
                order.push_back(static_cast<int>(*entry.locked_cand));
            }
            order.push_back(-1);
            for (std::size_t c = 0; c < entry.candidates.size(); ++c)
            {
                if (!entry.locked_cand || *entry.locked_cand != c)
                {
                    order.push_back(static_cast<int>(c));
                }
            }
            return order;
        }

        constexpr int unassigned = -2;
        constexpr int absent = -1;

        // checks every clause whose endpoints are both decided by this new
        // assignment; clauses spanning an undecided name are deferred to the
        // moment that name is assigned
        inline auto assignment_consistent(
            const clause_set& cs,
            const std::vector<int>& assignment,
            std::size_t n,
            int v
        ) -> bool
        {
            const auto& entry = cs.names[n];
            if (v >= 0 && entry.excluded[static_cast<std::size_t>(v)] != 0)
            {
                return false;
            }
            for (auto idx : cs.requests_by_target[n])
            {
                const auto& clause = cs.request_clauses[idx];
                if (v < 0 || clause.allowed[static_cast<std::size_t>(v)] == 0)
                {
                    return false;
                }
            }
            for (auto idx : cs.deps_by_target[n])
            {
                const auto& clause = cs.dep_clauses[idx];
                auto [owner_name, owner_cand] = *clause.owner;
                if (owner_name == n)
                {
                    continue;
                }
                if (assignment[owner_name] == static_cast<int>(owner_cand))
                {
                    if (v < 0 || clause.allowed[static_cast<std::size_t>(v)] == 0)
                    {
                        return false;
                    }
                }
            }
            if (v >= 0)
            {
                for (auto idx : cs.deps_by_owner[n][static_cast<std::size_t>(v)])
                {
                    const auto& clause = cs.dep_clauses[idx];
                    int assigned = clause.target == n ? v : assignment[clause.target];
                    if (assigned == unassigned)
                    {
                        continue;
                    }
                    if (assigned == absent
                        || clause.allowed[static_cast<std::size_t>(assigned)] == 0)
                    {
                        return false;
                    }
                }
            }
            return true;
        }
    }

    inline auto validate_solution(const solve_request& request, const solution& sol)
        -> std::vector<std::string>
    {
        std::vector<std::string> problems;
        std::map<std::string, const package_record*> by_name;
        for (const auto& record : sol.records)
        {
            if (!by_name.emplace(record.name, &record).second)
            {
                problems.push_back("duplicate name: " + record.name);
            }
        }

        auto satisfied = [&](const match_spec& spec) -> bool
        {
            if (detail::is_virtual_name(spec.name))
            {
                const auto* v = detail::find_virtual(request.virtuals, spec.name);
                return v != nullptr && spec_matches(spec, *v);
            }
            auto it = by_name.find(spec.name);
            return it != by_name.end() && spec_matches(spec, *it->second);
        };

        for (const auto& spec : request.specs)
        {
            if (!satisfied(spec))
            {
                problems.push_back("requested spec unsatisfied: " + render(spec));
            }
        }
        for (const auto& record : sol.records)
        {
            for (const auto& dep_text : record.depends)
            {
                if (!satisfied(parse_matchspec(dep_text)))
                {
                    problems.push_back(
                        "dependency of " + record.name + " unsatisfied: " + dep_text
                    );
                }
            }
        }
        for (const auto& pin : request.pins)
        {
            auto it = by_name.find(pin.name);
            if (it != by_name.end() && !spec_matches(pin, *it->second))
            {
                problems.push_back("pin violated: " + render(pin));
            }
        }
        for (const auto& name : request.excluded_names)
        {
            if (by_name.count(name) != 0)
            {
                problems.push_back("excluded name present: " + name);
            }
        }
        return problems;
    }

    namespace detail
    {
        struct viability
        {
            std::vector<std::vector<char>> viable;
        };

        // fixpoint over "a candidate is viable when none of its dependency
        // clauses is empty after removing non-viable candidates"
        inline auto compute_viability(const clause_set& cs) -> viability
        {
            viability out;
            out.viable.resize(cs.names.size());
            for (std::size_t n = 0; n < cs.names.size(); ++n)
            {
                out.viable[n].resize(cs.names[n].candidates.size());
                for (std::size_t c = 0; c < cs.names[n].candidates.size(); ++c)
                {
                    out.viable[n][c] = cs.names[n].excluded[c] == 0 ? 1 : 0;
                }
            }
            bool changed = true;
            while (changed)
            {
                changed = false;
                for (const auto& clause : cs.dep_clauses)
                {
                    auto [owner_name, owner_cand] = *clause.owner;
                    if (out.viable[owner_name][owner_cand] == 0)
                    {
                        continue;
                    }
                    bool any = false;
                    for (std::size_t t = 0; t < clause.allowed.size(); ++t)
                    {
                        if (clause.allowed[t] != 0 && out.viable[clause.target][t] != 0)
                        {
                            any = true;
                            break;
                        }
                    }
                    if (!any)
                    {
                        out.viable[owner_name][owner_cand] = 0;
                        changed = true;
                    }
                }
            }
            return out;
        }

        constexpr std::size_t explain_depth_cap = 10;

        inline auto candidate_label(const package_record& record) -> std::string
        {
            return record.name + " " + record.version + " " + record.build;
        }

        inline void describe_spec(
            const clause_set& cs,
            const viability& via,
            const match_spec& spec,
            std::vector<std::string>& path,
            std::size_t depth,
            explanation_node& node
        )
        {
            node.label = render(spec);
            if (depth >= explain_depth_cap)
            {
                node.children.push_back(explanation_node{ "(deeper conflicts elided)", {} });
                return;
            }
            if (std::find(path.begin(), path.end(), spec.name) != path.end())
            {
                node.children.push_back(explanation_node{ "(dependency cycle elided)", {} });
                return;
            }
            auto it = cs.name_index.find(spec.name);
            if (it == cs.name_index.end() || cs.names[it->second].candidates.empty())
            {
                node.children.push_back(explanation_node{ "no candidate matches", {} });
                return;
            }
            const auto& entry = cs.names[it->second];
            path.push_back(spec.name);
            bool matched_any = false;
            for (std::size_t c = 0; c < entry.candidates.size(); ++c)
            {
                if (!spec_matches(spec, entry.candidates[c].record))
                {
                    continue;
                }
                matched_any = true;
                explanation_node cand_node;
                cand_node.label = candidate_label(entry.candidates[c].record);
                if (entry.excluded[c] != 0)
                {
                    // re-derive the unmatched dependency as a recursive child
                    // when that is what excluded the candidate
                    bool described = false;
                    for (const auto& dep : entry.deps[c])
                    {
                        auto dep_it = cs.name_index.find(dep.name);
                        bool dep_has_candidate = false;
                        if (dep_it != cs.name_index.end())
                        {
                            for (const auto& target_cand : cs.names[dep_it->second].candidates)
                            {
                                if (spec_matches(dep, target_cand.record))
                                {
                                    dep_has_candidate = true;
                                    break;
                                }
                            }
                        }
                        if (!dep_has_candidate)
                        {
                            explanation_node dep_node;
                            dep_node.label = "dependency unsatisfiable: " + render(dep);
                            explanation_node sub;
                            describe_spec(cs, via, dep, path, depth + 1, sub);
                            dep_node.children.push_back(std::move(sub));
                            cand_node.children.push_back(std::move(dep_node));
                            described = true;
                            break;
                        }
                    }
                    if (!described)
                    {
                        cand_node.children.push_back(
                            explanation_node{ entry.exclusion_reason[c], {} }
                        );
                    }
                    node.children.push_back(std::move(cand_node));
                    continue;
                }
                // the candidate is not statically excluded; find the first
                // dependency whose clause lost all viable candidates
                bool described = false;
                for (auto clause_idx : cs.deps_by_owner[it->second][c])
                {
                    const auto& clause = cs.dep_clauses[clause_idx];
                    bool any = false;
                    for (std::size_t t = 0; t < clause.allowed.size(); ++t)
                    {
                        if (clause.allowed[t] != 0 && via.viable[clause.target][t] != 0)
                        {
                            any = true;
                            break;
                        }
                    }
                    if (!any)
                    {
                        explanation_node dep_node;
                        dep_node.label = "dependency unsatisfiable: " + clause.origin;
                        explanation_node sub;
                        describe_spec(
                            cs,
                            via,
                            parse_matchspec(clause.origin),
                            path,
                            depth + 1,
                            sub
                        );
                        dep_node.children.push_back(std::move(sub));
                        cand_node.children.push_back(std::move(dep_node));
                        described = true;
                        break;
                    }
                }
                if (!described)
                {
                    cand_node.children.push_back(
                        explanation_node{ "candidate is viable in isolation", {} }
                    );
                }
                node.children.push_back(std::move(cand_node));
            }
            path.pop_back();
            if (!matched_any)
            {
                node.children.push_back(explanation_node{ "no candidate matches", {} });
            }
        }

        // one backtrack-free pass in preference order; used to name the
        // conflicting choice when every spec is viable in isolation
        struct greedy_outcome
        {
            bool failed = false;
            std::size_t failed_name = 0;
            std::vector<int> assignment;
            std::vector<std::string> conflicts;
        };

        inline auto greedy_pass(const clause_set& cs) -> greedy_outcome
        {
            greedy_outcome out;
            out.assignment.assign(cs.names.size(), unassigned);
            for (std::size_t n = 0; n < cs.names.size(); ++n)
            {
                bool placed = false;
                std::vector<std::string> conflicts;
                for (int v : value_order(cs.names[n]))
                {
                    if (assignment_consistent(cs, out.assignment, n, v))
                    {
                        out.assignment[n] = v;
                        placed = true;
                        break;
                    }
                    if (v >= 0)
                    {
                        // name the first already-decided clause participant
                        std::string reason = "conflicts with a chosen record";
                        for (auto idx : cs.deps_by_owner[n][static_cast<std::size_t>(v)])
                        {
                            const auto& clause = cs.dep_clauses[idx];
                            int assigned = out.assignment[clause.target];
                            if (assigned == absent
                                || (assigned >= 0
                                    && clause.allowed[static_cast<std::size_t>(assigned)] == 0))
                            {
                                const auto& target_entry = cs.names[clause.target];
                                reason = "requires " + clause.origin + ", conflicts with chosen "
                                         + (assigned == absent
                                                ? target_entry.name + " (absent)"
                                                : candidate_label(
                                                    target_entry
                                                        .candidates[static_cast<std::size_t>(
                                                            assigned
                                                        )]
                                                        .record
                                                ));
                                break;
                            }
                        }
                        for (auto idx : cs.deps_by_target[n])
                        {
                            const auto& clause = cs.dep_clauses[idx];
                            auto [owner_name, owner_cand] = *clause.owner;
                            if (owner_name != n
                                && out.assignment[owner_name] == static_cast<int>(owner_cand)
                                && clause.allowed[static_cast<std::size_t>(v)] == 0)
                            {
                                reason = "conflicts with chosen "
                                         + candidate_label(
                                             cs.names[owner_name].candidates[owner_cand].record
                                         )
                                         + " (requires " + clause.origin + ")";
                                break;
                            }
                        }
                        conflicts.push_back(
                            candidate_label(cs.names[n].candidates[static_cast<std::size_t>(v)].record)
                            + ": " + reason
                        );
                    }
                }
                if (!placed)
                {
                    out.failed = true;
                    out.failed_name = n;
                    out.conflicts = std::move(conflicts);
                    return out;
                }
            }
            return out;
        }
    }

    inline auto explain(const solve_request& request, const clause_set& cs) -> unsat_explanation
    {
        unsat_explanation out;
        auto via = detail::compute_viability(cs);

        std::vector<const match_spec*> failing;
        for (const auto& spec : request.specs)
        {
            auto it = cs.name_index.find(spec.name);
            if (it == cs.name_index.end())
            {
                continue;
            }
            bool any_viable = false;
            for (std::size_t c = 0; c < cs.names[it->second].candidates.size(); ++c)
            {
                if (via.viable[it->second][c] != 0
                    && spec_matches(spec, cs.names[it->second].candidates[c].record))
                {
                    any_viable = true;
                    break;
                }
            }
            if (!any_viable)
            {
                failing.push_back(&spec);
            }
        }

        for (const auto* spec : failing)
        {
            explanation_node node;
            std::vector<std::string> path;
            detail::describe_spec(cs, via, *spec, path, 0, node);
            out.roots.push_back(std::move(node));
        }

        if (out.roots.empty())
        {
            // every spec is viable in isolation, so the conflict is between
            // choices; a greedy pass pinpoints the first clash
            auto greedy = detail::greedy_pass(cs);
            if (greedy.failed)
            {
                explanation_node node;
                node.label = cs.names[greedy.failed_name].name
                             + ": no candidate is compatible with the other choices";
                for (const auto& conflict : greedy.conflicts)
                {
                    node.children.push_back(explanation_node{ conflict, {} });
                }
                out.roots.push_back(std::move(node));
            }
            else
            {
                out.roots.push_back(
                    explanation_node{ "request unsatisfiable (combinational conflict)", {} }
                );
            }
        }

        std::sort(
            out.roots.begin(),
            out.roots.end(),
            [](const explanation_node& a, const explanation_node& b) { return a.label < b.label; }
        );
        return out;
    }

    // Explanation entry point usable without a prior encode; requested specs
    // with zero matching candidates become single-leaf roots.
    inline auto explain(const solve_request& request) -> unsat_explanation
    {
        unsat_explanation explanation;
        for (const auto& spec : request.specs)
        {
            bool any = false;
            if (detail::is_virtual_name(spec.name))
            {
                const auto* v = detail::find_virtual(request.virtuals, spec.name);
                any = v != nullptr && spec_matches(spec, *v);
            }
            else
            {
                for (const auto& c : request.index.candidates_for(spec.name))
                {
                    if (spec_matches(spec, c.record))
                    {
                        any = true;
                        break;
                    }
                }
            }
            if (!any)
            {
                explanation_node node;
                node.label = render(spec);
                node.children.push_back(explanation_node{ "no candidate matches", {} });
                explanation.roots.push_back(std::move(node));
            }
        }
        if (!explanation.roots.empty())
        {
            std::sort(
                explanation.roots.begin(),
                explanation.roots.end(),
                [](const explanation_node& a, const explanation_node& b)
                { return a.label < b.label; }
            );
            return explanation;
        }
        return explain(request, encode(request));
    }

    inline auto solve(const solve_request& request) -> solve_result
    {
        solve_result result;
        clause_set cs = encode(request);

        std::vector<int> assignment(cs.names.size(), detail::unassigned);
        std::vector<std::vector<int>> orders;
        orders.reserve(cs.names.size());
        for (const auto& entry : cs.names)
        {
            orders.push_back(detail::value_order(entry));
        }

        // chronological depth-first search over the fixed name order; the
        // first full assignment is the lexicographic optimum because every
        // value list is in preference order
        std::vector<std::size_t> cursor(cs.names.size(), 0);
        std::size_t level = 0;
        bool sat = false;
        while (true)
        {
            if (level == cs.names.size())
            {
                sat = true;
                break;
            }
            bool advanced = false;
            while (cursor[level] < orders[level].size())
            {
                int v = orders[level][cursor[level]];
                ++cursor[level];
                if (detail::assignment_consistent(cs, assignment, level, v))
                {
                    assignment[level] = v;
                    ++level;
                    advanced = true;
                    break;
                }
            }
            if (advanced)
            {
                continue;
            }
            if (level == 0)
            {
                break;
            }
            cursor[level] = 0;
            assignment[level] = detail::unassigned;
            --level;
            assignment[level] = detail::unassigned;
        }

        if (!sat)
        {
            result.unsat = explain(request, cs);
            return result;
        }

        solution sol;
        for (std::size_t n = 0; n < cs.names.size(); ++n)
        {
            if (assignment[n] >= 0)
            {
                sol.records.push_back(
                    cs.names[n].candidates[static_cast<std::size_t>(assignment[n])].record
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
