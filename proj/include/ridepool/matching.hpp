#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "ridepool/acceptance.hpp"
#include "ridepool/core.hpp"
#include "ridepool/pricing.hpp"
#include "ridepool/shareability.hpp"

namespace ridepool {

// An exact partition of travellers into priced rides.
struct Offer {
    std::vector<std::int64_t> selected;                    // ride ids, ascending
    std::map<std::int64_t, std::int64_t> assignment;       // traveller -> ride
    double total_objective = 0.0;
};

namespace detail {

struct MatchInstance {
    std::vector<std::int64_t> travellers;                  // sorted ids
    std::vector<std::size_t> ride_index;                   // into graph.rides
    std::vector<double> objective;                         // O per ride
    std::vector<std::vector<std::size_t>> ride_members;    // traveller slots
    std::vector<std::vector<std::size_t>> rides_of;        // per traveller slot
};

inline MatchInstance build_instance(const ShareabilityGraph& graph,
                                    const std::vector<PricedRide>& priced) {
    MatchInstance inst;
    std::unordered_map<std::int64_t, double> objective_by_id;
    for (const auto& p : priced) objective_by_id[p.ride_id] = p.objective;

    for (const auto& ride : graph.rides)
        for (auto m : ride.members) inst.travellers.push_back(m);
    std::sort(inst.travellers.begin(), inst.travellers.end());
    inst.travellers.erase(
        std::unique(inst.travellers.begin(), inst.travellers.end()),
        inst.travellers.end());
    std::unordered_map<std::int64_t, std::size_t> slot;
    for (std::size_t i = 0; i < inst.travellers.size(); ++i)
        slot[inst.travellers[i]] = i;
    inst.rides_of.resize(inst.travellers.size());

    for (std::size_t r = 0; r < graph.rides.size(); ++r) {
        const auto& ride = graph.rides[r];
        auto it = objective_by_id.find(ride.ride_id);
        if (it == objective_by_id.end()) continue;
        const std::size_t local = inst.ride_index.size();
        inst.ride_index.push_back(r);
        inst.objective.push_back(it->second);
        std::vector<std::size_t> members;
        for (auto m : ride.members) members.push_back(slot.at(m));
        std::sort(members.begin(), members.end());
        inst.ride_members.push_back(members);
        for (auto s : members) inst.rides_of[s].push_back(local);
    }
    return inst;
}

struct BranchState {
    const MatchInstance* inst = nullptr;
    std::vector<bool> assigned;
    std::vector<std::size_t> chosen;
    std::vector<double> per_traveller_bound;
    double current = 0.0;
    double remaining_bound = 0.0;
    double best_value = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> best_chosen;

    void run() {
        per_traveller_bound.assign(inst->travellers.size(),
                                   -std::numeric_limits<double>::infinity());
        for (std::size_t r = 0; r < inst->objective.size(); ++r) {
            const double per = inst->objective[r] /
                               static_cast<double>(inst->ride_members[r].size());
            for (auto s : inst->ride_members[r])
                per_traveller_bound[s] = std::max(per_traveller_bound[s], per);
        }
        for (std::size_t s = 0; s < per_traveller_bound.size(); ++s) {
            if (per_traveller_bound[s] ==
                -std::numeric_limits<double>::infinity())
                throw std::invalid_argument(
                    "traveller " + std::to_string(inst->travellers[s]) +
                    " has no priced ride");
            remaining_bound += per_traveller_bound[s];
        }
        assigned.assign(inst->travellers.size(), false);
        branch(0);
    }

    void branch(std::size_t from) {
        while (from < assigned.size() && assigned[from]) ++from;
        if (from == assigned.size()) {
            const bool better = current > best_value + 1e-12;
            const bool tie = std::fabs(current - best_value) <= 1e-12;
            if (better || (tie && canonical_smaller())) {
                best_value = std::max(best_value, current);
                best_chosen = chosen;
                std::sort(best_chosen.begin(), best_chosen.end());
            }
            return;
        }
        if (current + remaining_bound < best_value - 1e-12) return;
        for (auto r : inst->rides_of[from]) {
            bool free = true;
            for (auto s : inst->ride_members[r]) free = free && !assigned[s];
            if (!free) continue;
            for (auto s : inst->ride_members[r]) {
                assigned[s] = true;
                remaining_bound -= per_traveller_bound[s];
            }
            chosen.push_back(r);
            current += inst->objective[r];
            branch(from + 1);
            current -= inst->objective[r];
            chosen.pop_back();
            for (auto s : inst->ride_members[r]) {
                assigned[s] = false;
                remaining_bound += per_traveller_bound[s];
            }
        }
    }

    bool canonical_smaller() const {
        auto sorted = chosen;
        std::sort(sorted.begin(), sorted.end());
        std::vector<std::int64_t> a, b;
        for (auto r : sorted) a.push_back(inst->ride_index[r]);
        for (auto r : best_chosen) b.push_back(inst->ride_index[r]);
        return a < b;
    }
};

}  // namespace detail

namespace detail {

// Union of the travellers' connected components through shared rides. Each
// component can be matched independently, which keeps the exact search
// tractable on batch-sized graphs.
inline std::vector<std::size_t> traveller_components(const MatchInstance& inst) {
    std::vector<std::size_t> parent(inst.travellers.size());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
    const auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& members : inst.ride_members)
        for (std::size_t i = 1; i < members.size(); ++i) {
            const auto a = find(members[0]), b = find(members[i]);
            if (a != b) parent[std::max(a, b)] = std::min(a, b);
        }
    std::vector<std::size_t> root(parent.size());
    for (std::size_t i = 0; i < parent.size(); ++i) root[i] = find(i);
    return root;
}

inline MatchInstance sub_instance(const MatchInstance& inst,
                                  const std::vector<std::size_t>& root,
                                  std::size_t component) {
    MatchInstance sub;
    std::vector<std::size_t> slot_of(root.size(), SIZE_MAX);
    for (std::size_t s = 0; s < root.size(); ++s) {
        if (root[s] != component) continue;
        slot_of[s] = sub.travellers.size();
        sub.travellers.push_back(inst.travellers[s]);
    }
    sub.rides_of.resize(sub.travellers.size());
    for (std::size_t r = 0; r < inst.ride_members.size(); ++r) {
        if (root[inst.ride_members[r][0]] != component) continue;
        const std::size_t local = sub.ride_index.size();
        sub.ride_index.push_back(inst.ride_index[r]);
        sub.objective.push_back(inst.objective[r]);
        std::vector<std::size_t> members;
        for (auto s : inst.ride_members[r]) members.push_back(slot_of[s]);
        sub.ride_members.push_back(members);
        for (auto s : members) sub.rides_of[s].push_back(local);
    }
    return sub;
}

// When every traveller has a priced private ride, the partitioning problem
// reduces to packing disjoint shared rides by their gain over the private
// baseline. Rides with non-positive gain never enter an optimal (and
// tie-smallest) solution, which keeps the exact search small on batch-sized
// graphs.
struct GainPacker {
    const MatchInstance* inst = nullptr;
    std::vector<std::size_t> private_of;                // slot -> local ride
    std::vector<std::size_t> cand;                      // local ride indices
    std::vector<double> gain;                           // parallel to cand
    std::vector<std::vector<std::size_t>> cand_of;      // slot -> cand index

    std::vector<char> forced_out;                       // per cand index
    std::vector<char> covered;                          // per slot
    std::vector<std::size_t> chosen;                    // cand indices
    // pair-branching state: slots that must ride together / apart
    std::vector<std::pair<std::size_t, std::size_t>> same;
    std::vector<std::pair<std::size_t, std::size_t>> apart;
    double current = 0.0;
    double best_gain = 0.0;
    std::vector<std::size_t> best_chosen;
    std::vector<std::int64_t> best_ids;
    std::size_t nodes = 0;  // explored subproblems, for instrumentation

    // Sorted ride-id set implied by a candidate selection: chosen shared
    // rides plus the private rides of everyone left over.
    std::vector<std::int64_t> ids_for(
        const std::vector<std::size_t>& selection,
        const std::vector<std::int64_t>& ride_ids) const {
        std::vector<bool> used(private_of.size(), false);
        std::vector<std::int64_t> ids;
        for (auto c : selection) {
            ids.push_back(ride_ids[inst->ride_index[cand[c]]]);
            for (auto s : inst->ride_members[cand[c]]) used[s] = true;
        }
        for (std::size_t s = 0; s < private_of.size(); ++s)
            if (!used[s])
                ids.push_back(ride_ids[inst->ride_index[private_of[s]]]);
        std::sort(ids.begin(), ids.end());
        return ids;
    }

    void offer_solution(const std::vector<std::size_t>& selection, double value,
                        const std::vector<std::int64_t>& ride_ids) {
        if (value > best_gain + 1e-12) {
            best_gain = value;
            best_chosen = selection;
            best_ids = ids_for(selection, ride_ids);
        } else if (std::fabs(value - best_gain) <= 1e-12) {
            auto ids = ids_for(selection, ride_ids);
            if (ids < best_ids) {
                best_chosen = selection;
                best_ids = std::move(ids);
            }
        }
    }

    // Packing relaxation over the columns still available at this node:
    //   max { g x : sum_{r ni s} x_r <= 1, x >= 0 },
    // solved by a full-tableau simplex (largest-coefficient rule with a
    // Bland fallback for guaranteed termination). Returns the optimum and
    // the primal solution per column.
    static double solve_lp(const std::vector<std::vector<std::size_t>>& col_rows,
                           const std::vector<double>& col_gain, std::size_t m,
                           std::vector<double>& x,
                           std::vector<double>* duals = nullptr) {
        const std::size_t n = col_rows.size();
        std::vector<std::vector<double>> tab(m, std::vector<double>(n + m, 0.0));
        std::vector<double> rhs(m, 1.0), obj(n + m, 0.0);
        std::vector<std::size_t> basis(m);
        for (std::size_t j = 0; j < n; ++j) {
            for (auto i : col_rows[j]) tab[i][j] = 1.0;
            obj[j] = col_gain[j];
        }
        for (std::size_t i = 0; i < m; ++i) {
            tab[i][n + i] = 1.0;
            basis[i] = n + i;
        }

        constexpr double kEps = 1e-9;
        double value = 0.0;
        for (std::size_t iter = 0, bland_after = 4 * (n + m) + 64;; ++iter) {
            std::size_t enter = n + m;
            double best = kEps;
            for (std::size_t j = 0; j < n + m; ++j) {
                if (obj[j] <= kEps) continue;
                if (iter >= bland_after) {  // Bland's rule: guaranteed finite
                    enter = j;
                    break;
                }
                if (obj[j] > best) {
                    best = obj[j];
                    enter = j;
                }
            }
            if (enter == n + m) break;
            std::size_t leave = m;
            double ratio = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                if (tab[i][enter] <= kEps) continue;
                const double r = rhs[i] / tab[i][enter];
                if (leave == m || r < ratio - 1e-12 ||
                    (r < ratio + 1e-12 && basis[i] < basis[leave])) {
                    leave = i;
                    ratio = r;
                }
            }
            if (leave == m) break;  // unbounded; cannot happen with g finite
            const double pivot = tab[leave][enter];
            for (auto& v : tab[leave]) v /= pivot;
            rhs[leave] /= pivot;
            for (std::size_t i = 0; i < m; ++i) {
                if (i == leave || tab[i][enter] == 0.0) continue;
                const double f = tab[i][enter];
                for (std::size_t j = 0; j < n + m; ++j)
                    tab[i][j] -= f * tab[leave][j];
                rhs[i] -= f * rhs[leave];
            }
            const double f = obj[enter];
            for (std::size_t j = 0; j < n + m; ++j)
                obj[j] -= f * tab[leave][j];
            value += f * rhs[leave];
            basis[leave] = enter;
        }
        x.assign(n, 0.0);
        for (std::size_t i = 0; i < m; ++i)
            if (basis[i] < n) x[basis[i]] = rhs[i];
        if (duals) {
            duals->assign(m, 0.0);
            for (std::size_t i = 0; i < m; ++i)
                (*duals)[i] = std::max(0.0, -obj[n + i]);
        }
        return value;
    }

    void seed_greedy(const std::vector<std::int64_t>& ride_ids) {
        std::vector<std::size_t> order(cand.size());
        for (std::size_t c = 0; c < cand.size(); ++c) order[c] = c;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double pa = gain[a] / static_cast<double>(
                                            inst->ride_members[cand[a]].size());
            const double pb = gain[b] / static_cast<double>(
                                            inst->ride_members[cand[b]].size());
            if (pa != pb) return pa > pb;
            return a < b;
        });
        std::vector<bool> taken(private_of.size(), false);
        std::vector<std::size_t> picks;
        double value = 0.0;
        for (auto c : order) {
            bool free = true;
            for (auto s : inst->ride_members[cand[c]]) free = free && !taken[s];
            if (!free) continue;
            for (auto s : inst->ride_members[cand[c]]) taken[s] = true;
            picks.push_back(c);
            value += gain[c];
        }
        best_gain = 0.0;
        best_chosen.clear();
        best_ids = ids_for({}, ride_ids);
        offer_solution(picks, value, ride_ids);
    }

    // Round the root relaxation: pack columns by descending LP weight, then
    // top up with any still-compatible candidates by per-capita gain. Far
    // stronger than the plain greedy when the relaxation concentrates weight
    // on a good packing.
    void round_lp_incumbent(const std::vector<double>& x,
                            const std::vector<std::int64_t>& ride_ids) {
        std::vector<std::size_t> order;
        for (std::size_t c = 0; c < cand.size(); ++c)
            if (x[c] > 1e-9) order.push_back(c);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) {
                             if (x[a] != x[b]) return x[a] > x[b];
                             return a < b;
                         });
        for (std::size_t c = 0; c < cand.size(); ++c)
            if (x[c] <= 1e-9) order.push_back(c);
        std::vector<bool> taken(private_of.size(), false);
        std::vector<std::size_t> picks;
        double value = 0.0;
        for (auto c : order) {
            bool free = true;
            for (auto s : inst->ride_members[cand[c]]) free = free && !taken[s];
            if (!free) continue;
            for (auto s : inst->ride_members[cand[c]]) taken[s] = true;
            picks.push_back(c);
            value += gain[c];
        }
        offer_solution(picks, value, ride_ids);
    }

    // Root reduced-cost fixing: with dual-feasible prices u (sum U >= LP
    // optimum) and an incumbent z, no solution containing ride j can exceed
    // U + rc_j where rc_j = g_j - sum_{s in j} u_s, so rides with
    // U + rc_j < z - eps can never improve on or tie the incumbent and are
    // removed before branching.
    void fix_by_reduced_cost(const std::vector<std::int64_t>& ride_ids) {
        if (cand.empty()) return;
        std::vector<std::size_t> row_of(private_of.size(),
                                        static_cast<std::size_t>(-1));
        std::size_t m = 0;
        std::vector<std::vector<std::size_t>> col_rows(cand.size());
        for (std::size_t j = 0; j < cand.size(); ++j)
            for (auto s : inst->ride_members[cand[j]]) {
                if (row_of[s] == static_cast<std::size_t>(-1)) row_of[s] = m++;
                col_rows[j].push_back(row_of[s]);
            }
        std::vector<double> x, duals;
        solve_lp(col_rows, gain, m, x, &duals);
        round_lp_incumbent(x, ride_ids);
        // repair any floating-point dual infeasibility
        for (std::size_t j = 0; j < cand.size(); ++j) {
            double total = 0.0;
            for (auto i : col_rows[j]) total += duals[i];
            const double deficit = gain[j] - total;
            if (deficit <= 0.0) continue;
            const double per =
                deficit / static_cast<double>(col_rows[j].size()) + 1e-12;
            for (auto i : col_rows[j]) duals[i] += per;
        }
        double upper = 0.0;
        for (std::size_t i = 0; i < m; ++i) upper += duals[i];

        std::vector<std::size_t> kept_cand;
        std::vector<double> kept_gain;
        std::vector<std::size_t> new_index(cand.size(),
                                           static_cast<std::size_t>(-1));
        for (std::size_t j = 0; j < cand.size(); ++j) {
            double total = 0.0;
            for (auto i : col_rows[j]) total += duals[i];
            if (upper + (gain[j] - total) >= best_gain - 1e-9) {
                new_index[j] = kept_cand.size();
                kept_cand.push_back(cand[j]);
                kept_gain.push_back(gain[j]);
            }
        }
        // columns of any solution matching the incumbent always survive the
        // test above, so the stored indices can be remapped in place
        for (auto& c : best_chosen) c = new_index[c];
        cand = std::move(kept_cand);
        gain = std::move(kept_gain);
        for (auto& list : cand_of) list.clear();
        for (std::size_t j = 0; j < cand.size(); ++j)
            for (auto s : inst->ride_members[cand[j]])
                cand_of[s].push_back(j);
    }

    void run(const std::vector<std::int64_t>& ride_ids) {
        covered.assign(private_of.size(), 0);
        seed_greedy(ride_ids);
        fix_by_reduced_cost(ride_ids);
        forced_out.assign(cand.size(), 0);
        branch(ride_ids);
    }

    bool allowed(std::size_t c) const {
        if (forced_out[c]) return false;
        const auto& mem = inst->ride_members[cand[c]];
        for (auto s : mem)
            if (covered[s]) return false;
        const auto has = [&](std::size_t s) {
            return std::find(mem.begin(), mem.end(), s) != mem.end();
        };
        for (const auto& [s, t] : same)
            if (has(s) != has(t)) return false;
        for (const auto& [s, t] : apart)
            if (has(s) && has(t)) return false;
        return true;
    }

    // LP-guided branch and bound over candidate rides: solve the relaxation
    // of the free subproblem and prune on its value. Fractional solutions
    // are split on a traveller pair (together in one ride vs never
    // together), which converges far faster than ride-variable splits on
    // dense batches; when no usable pair exists the most fractional ride is
    // split instead (include first). Integral relaxations close the node
    // with a proven subtree optimum.
    void branch(const std::vector<std::int64_t>& ride_ids) {
        ++nodes;
        std::vector<std::size_t> cols;
        for (std::size_t c = 0; c < cand.size(); ++c)
            if (allowed(c)) cols.push_back(c);
        if (cols.empty()) {
            offer_solution(chosen, current, ride_ids);
            return;
        }
        std::vector<std::size_t> row_of(private_of.size(),
                                        static_cast<std::size_t>(-1));
        std::size_t m = 0;
        std::vector<std::vector<std::size_t>> col_rows(cols.size());
        std::vector<double> col_gain(cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j) {
            col_gain[j] = gain[cols[j]];
            for (auto s : inst->ride_members[cand[cols[j]]]) {
                if (row_of[s] == static_cast<std::size_t>(-1)) row_of[s] = m++;
                col_rows[j].push_back(row_of[s]);
            }
        }
        std::vector<double> x;
        const double relax = solve_lp(col_rows, col_gain, m, x);
        // small safety margin: the simplex stops within 1e-9 of the optimum
        if (current + relax + 1e-7 < best_gain - 1e-12) return;

        std::size_t split = cols.size();
        double split_frac = 1.0;
        bool integral = true;
        double int_value = current;
        std::vector<std::size_t> int_set = chosen;
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const double frac = std::fabs(x[j] - 0.5);
            if (x[j] > 1e-7 && x[j] < 1.0 - 1e-7) integral = false;
            if (frac < split_frac - 1e-12) {
                split_frac = frac;
                split = j;
            }
            if (x[j] >= 1.0 - 1e-7) {
                int_value += gain[cols[j]];
                int_set.push_back(cols[j]);
            }
        }
        if (integral) {
            offer_solution(int_set, int_value, ride_ids);
            return;
        }

        // Pair split: total LP weight on columns holding both s and t. A
        // fractional pair whose "together" branch also removes a column
        // (one with exactly one of the two) shrinks both children.
        std::map<std::pair<std::size_t, std::size_t>, double> pair_weight;
        for (std::size_t j = 0; j < cols.size(); ++j) {
            if (x[j] <= 1e-9) continue;
            const auto& mem = inst->ride_members[cand[cols[j]]];
            for (std::size_t a = 0; a < mem.size(); ++a)
                for (std::size_t b = a + 1; b < mem.size(); ++b)
                    pair_weight[{std::min(mem[a], mem[b]),
                                 std::max(mem[a], mem[b])}] += x[j];
        }
        std::vector<std::pair<double, std::pair<std::size_t, std::size_t>>>
            frac_pairs;
        for (const auto& [st, w] : pair_weight)
            if (w > 1e-6 && w < 1.0 - 1e-6)
                frac_pairs.push_back({std::fabs(w - 0.5), st});
        std::sort(frac_pairs.begin(), frac_pairs.end());
        for (const auto& [score, st] : frac_pairs) {
            bool splits_same = false;
            for (auto c : cols) {
                const auto& mem = inst->ride_members[cand[c]];
                const bool hs = std::find(mem.begin(), mem.end(), st.first) !=
                                mem.end();
                const bool ht = std::find(mem.begin(), mem.end(), st.second) !=
                                mem.end();
                if (hs != ht) {
                    splits_same = true;
                    break;
                }
            }
            if (!splits_same) continue;
            same.push_back(st);
            branch(ride_ids);
            same.pop_back();
            apart.push_back(st);
            branch(ride_ids);
            apart.pop_back();
            return;
        }

        const std::size_t c = cols[split];
        for (auto s : inst->ride_members[cand[c]]) covered[s] = 1;
        chosen.push_back(c);
        current += gain[c];
        branch(ride_ids);
        current -= gain[c];
        chosen.pop_back();
        for (auto s : inst->ride_members[cand[c]]) covered[s] = 0;

        forced_out[c] = 1;
        branch(ride_ids);
        forced_out[c] = 0;
    }
};

}  // namespace detail

// Exact optimum of the set-partitioning program: one ride per traveller,
// maximize the summed objective. When every traveller holds a priced private
// ride the search runs in gain space over the private baseline; otherwise a
// direct branch and bound per connected component. Both bounds are exact at
// leaves, so the search proves optimality. Ties resolve to the
// lexicographically smallest selected ride-id set.
inline Offer solve_offer(const ShareabilityGraph& graph,
                         const std::vector<PricedRide>& priced) {
    detail::MatchInstance inst = detail::build_instance(graph, priced);
    std::vector<std::int64_t> ride_ids(graph.rides.size());
    for (std::size_t r = 0; r < graph.rides.size(); ++r)
        ride_ids[r] = graph.rides[r].ride_id;

    // Private ride of each traveller slot, if everyone has one.
    constexpr auto kNone = static_cast<std::size_t>(-1);
    std::vector<std::size_t> private_of(inst.travellers.size(), kNone);
    for (std::size_t r = 0; r < inst.ride_members.size(); ++r)
        if (inst.ride_members[r].size() == 1)
            private_of[inst.ride_members[r][0]] = r;
    const bool reducible =
        std::find(private_of.begin(), private_of.end(), kNone) ==
        private_of.end();

    Offer offer;
    if (reducible) {
        detail::GainPacker packer;
        packer.inst = &inst;
        packer.private_of = private_of;
        packer.cand_of.resize(inst.travellers.size());
        double base = 0.0;
        for (auto r : private_of) base += inst.objective[r];
        for (std::size_t r = 0; r < inst.ride_members.size(); ++r) {
            if (inst.ride_members[r].size() < 2) continue;
            double g = inst.objective[r];
            for (auto s : inst.ride_members[r]) g -= inst.objective[private_of[s]];
            if (g <= 1e-12) continue;
            for (auto s : inst.ride_members[r])
                packer.cand_of[s].push_back(packer.cand.size());
            packer.cand.push_back(r);
            packer.gain.push_back(g);
        }
        packer.run(ride_ids);
        offer.total_objective = base + packer.best_gain;
        std::vector<bool> covered(inst.travellers.size(), false);
        for (auto c : packer.best_chosen) {
            const auto& ride = graph.rides[inst.ride_index[packer.cand[c]]];
            offer.selected.push_back(ride.ride_id);
            for (auto m : ride.members) offer.assignment[m] = ride.ride_id;
            for (auto s : inst.ride_members[packer.cand[c]]) covered[s] = true;
        }
        for (std::size_t s = 0; s < inst.travellers.size(); ++s) {
            if (covered[s]) continue;
            const auto& ride = graph.rides[inst.ride_index[private_of[s]]];
            offer.selected.push_back(ride.ride_id);
            offer.assignment[inst.travellers[s]] = ride.ride_id;
        }
    } else {
        const auto root = detail::traveller_components(inst);
        offer.total_objective = 0.0;
        for (std::size_t c = 0; c < root.size(); ++c) {
            if (root[c] != c) continue;
            detail::MatchInstance sub = detail::sub_instance(inst, root, c);
            detail::BranchState state;
            state.inst = &sub;
            state.run();
            offer.total_objective += state.best_value;
            for (auto r : state.best_chosen) {
                const auto& ride = graph.rides[sub.ride_index[r]];
                offer.selected.push_back(ride.ride_id);
                for (auto m : ride.members) offer.assignment[m] = ride.ride_id;
            }
        }
    }
    std::sort(offer.selected.begin(), offer.selected.end());
    return offer;
}

namespace detail {

// Enumerates every partition of the travellers into graph rides, invoking
// yield with the selected ride indices.
inline void for_each_partition(
    const MatchInstance& inst, std::vector<bool>& assigned,
    std::vector<std::size_t>& chosen, std::size_t from,
    const std::function<void(const std::vector<std::size_t>&)>& yield) {
    while (from < assigned.size() && assigned[from]) ++from;
    if (from == assigned.size()) {
        yield(chosen);
        return;
    }
    for (auto r : inst.rides_of[from]) {
        bool free = true;
        for (auto s : inst.ride_members[r]) free = free && !assigned[s];
        if (!free) continue;
        for (auto s : inst.ride_members[r]) assigned[s] = true;
        chosen.push_back(r);
        for_each_partition(inst, assigned, chosen, from + 1, yield);
        chosen.pop_back();
        for (auto s : inst.ride_members[r]) assigned[s] = false;
    }
}

}  // namespace detail

// Checks the pricing decomposition on a small instance: per-ride argmax
// pricing followed by exact matching must equal the joint brute force over
// all candidate discount assignments and all matchings. The joint side
// evaluates rides through the configuration-enumeration path.
inline bool verify_local_global(const ShareabilityGraph& graph,
                                const DiscretizedGrid& grid,
                                const PricingConfig& cfg,
                                const SharingPenaltyRule& rule = {},
                                double tolerance = 1e-9) {
    std::vector<PricedRide> priced;
    std::vector<double> joint_value(graph.rides.size());
    for (std::size_t r = 0; r < graph.rides.size(); ++r) {
        const auto& ride = graph.rides[r];
        if (ride.degree() == 1) {
            priced.push_back(price_private(ride, cfg, cfg.lambda_hat));
            joint_value[r] = priced.back().objective;
            continue;
        }
        std::vector<AcceptanceCurve> curves;
        for (std::size_t m = 0; m < ride.members.size(); ++m)
            curves.push_back(build_curve(ride, m, grid, cfg.rho, rule));
        priced.push_back(optimize_discounts(ride, curves, cfg, 0));

        // Full-grid brute force via the 2^k enumeration oracle.
        std::vector<std::vector<double>> cands;
        for (const auto& c : curves)
            cands.push_back(
                candidate_discounts(c, cfg.lambda_hat, 0, cfg.lambda_cap));
        std::vector<std::size_t> idx(cands.size(), 0);
        std::vector<double> vec(cands.size());
        double best = -std::numeric_limits<double>::infinity();
        bool done = false;
        while (!done) {
            for (std::size_t i = 0; i < cands.size(); ++i)
                vec[i] = cands[i][idx[i]];
            const auto [gamma, psi] = enumeration_oracle(ride, curves, vec, cfg);
            best = std::max(best, apply_weights(cfg.shared_weights, gamma, psi) *
                                      ride.degree());
            done = true;
            for (std::size_t i = cands.size(); i-- > 0;) {
                if (++idx[i] < cands[i].size()) {
                    done = false;
                    break;
                }
                idx[i] = 0;
            }
        }
        joint_value[r] = best;
    }

    const Offer decomposed = solve_offer(graph, priced);

    detail::MatchInstance inst = detail::build_instance(graph, priced);
    double joint_best = -std::numeric_limits<double>::infinity();
    std::vector<bool> assigned(inst.travellers.size(), false);
    std::vector<std::size_t> chosen;
    detail::for_each_partition(
        inst, assigned, chosen, 0, [&](const std::vector<std::size_t>& sel) {
            double total = 0.0;
            for (auto r : sel) total += joint_value[inst.ride_index[r]];
            joint_best = std::max(joint_best, total);
        });

    return std::fabs(decomposed.total_objective - joint_best) <= tolerance;
}

inline void write_offer_csv(const std::string& path, const Offer& offer,
                            const ShareabilityGraph& graph,
                            const std::vector<PricedRide>& priced) {
    std::unordered_map<std::int64_t, const PricedRide*> by_id;
    for (const auto& p : priced) by_id[p.ride_id] = &p;
    std::unordered_map<std::int64_t, const ShareableRide*> ride_by_id;
    for (const auto& r : graph.rides) ride_by_id[r.ride_id] = &r;

    std::ofstream out(path);
    if (!out) throw DataError("cannot write offer file: " + path);
    out << "traveller_id,ride_id,degree,discount,expected_profitability\n";
    for (const auto& [traveller, ride_id] : offer.assignment) {
        const auto* ride = ride_by_id.at(ride_id);
        const auto* p = by_id.at(ride_id);
        std::size_t pos = 0;
        while (ride->members[pos] != traveller) ++pos;
        out << traveller << ',' << ride_id << ',' << p->degree << ','
            << format_double(p->discounts[pos]) << ','
            << format_double(p->profitability) << "\n";
    }
}

}  // namespace ridepool
