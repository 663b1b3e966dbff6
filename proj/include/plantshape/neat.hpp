#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "rng.hpp"

namespace plantshape::neat {

enum class NodeType { Input, Bias, Hidden, Output };

struct NodeGene {
    int id = 0;
    NodeType type = NodeType::Hidden;
};

struct ConnGene {
    int in = 0;
    int out = 0;
    double weight = 0.0;
    bool enabled = true;
    int innovation = 0;
};

struct Genome {
    std::vector<NodeGene> nodes;
    std::vector<ConnGene> conns;
    double fitness = 0.0;

    bool has_connection(int in, int out) const {
        for (const auto& c : conns)
            if (c.in == in && c.out == out) return true;
        return false;
    }
    bool has_node(int id) const {
        for (const auto& n : nodes)
            if (n.id == id) return true;
        return false;
    }
};

struct NeatParams {
    int population = 50;
    double c1 = 1.0; // excess coefficient
    double c2 = 1.0; // disjoint coefficient
    double c3 = 0.4; // weight-difference coefficient
    double delta_threshold = 3.0;
    double weight_mutate_rate = 0.8;  // per genome
    double weight_replace_fraction = 0.1; // within a weight mutation
    double weight_mutate_power = 0.5;
    double add_connection_rate = 0.05;
    double add_node_rate = 0.03;
    double crossover_rate = 0.75;
    double interspecies_rate = 0.001;
    int elitism = 1; // champions copied per species
    int stagnation_limit = 15;
    double weight_min = -8.0;
    double weight_max = 8.0;
    double survival_threshold = 0.2;
    double sigmoid_slope = 4.9;
    double disabled_inherit_rate = 0.75;

    void validate() const {
        if (population < 2) throw std::invalid_argument("population must be >= 2");
        for (double r : {weight_mutate_rate, add_connection_rate, add_node_rate, crossover_rate,
                         survival_threshold})
            if (r < 0.0 || r > 1.0) throw std::invalid_argument("rates must be in [0,1]");
        if (weight_min >= weight_max) throw std::invalid_argument("bad weight range");
    }
};

// Run-wide registry so the same structural novelty always receives the same
// innovation number and node id, no matter which genome discovers it.
class InnovationDb {
public:
    InnovationDb(int first_node_id, int first_innovation)
        : next_node_id_(first_node_id), next_innovation_(first_innovation) {}

    int connection_innovation(int in, int out) {
        auto key = std::make_pair(in, out);
        auto it = conn_innov_.find(key);
        if (it != conn_innov_.end()) return it->second;
        const int innov = next_innovation_++;
        conn_innov_.emplace(key, innov);
        return innov;
    }

    // Node introduced by splitting the connection with the given innovation.
    int split_node_id(int conn_innovation) {
        auto it = split_nodes_.find(conn_innovation);
        if (it != split_nodes_.end()) return it->second;
        const int id = next_node_id_++;
        split_nodes_.emplace(conn_innovation, id);
        return id;
    }

    const std::map<std::pair<int, int>, int>& connections() const { return conn_innov_; }

private:
    int next_node_id_;
    int next_innovation_;
    std::map<std::pair<int, int>, int> conn_innov_;
    std::map<int, int> split_nodes_;
};

// Minimal starting genome: inputs + bias fully connected to outputs.
inline Genome minimal_genome(int n_inputs, int n_outputs, InnovationDb& db, Rng& rng,
                             const NeatParams& params, bool random_weights = true) {
    Genome g;
    for (int i = 0; i < n_inputs; ++i) g.nodes.push_back({i, NodeType::Input});
    g.nodes.push_back({n_inputs, NodeType::Bias});
    for (int o = 0; o < n_outputs; ++o) g.nodes.push_back({n_inputs + 1 + o, NodeType::Output});
    for (int s = 0; s <= n_inputs; ++s)
        for (int o = 0; o < n_outputs; ++o) {
            const int dst = n_inputs + 1 + o;
            ConnGene c;
            c.in = s;
            c.out = dst;
            c.weight = random_weights ? rng.uniform(-1.0, 1.0) : 0.0;
            c.enabled = true;
            c.innovation = db.connection_innovation(s, dst);
            g.conns.push_back(c);
        }
    (void)params;
    return g;
}

// ---------------------------------------------------------------------------
// Phenotype: the genome compiled into an evaluable (possibly recurrent)
// network. activate() runs enough synchronous relaxation passes to let a
// signal cross the network once; values persist between calls, so recurrent
// connections see the previous activation.

class Phenotype {
public:
    explicit Phenotype(const Genome& g, double sigmoid_slope = 4.9)
        : slope_(sigmoid_slope) {
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            index_of_[g.nodes[i].id] = int(i);
            types_.push_back(g.nodes[i].type);
            if (g.nodes[i].type == NodeType::Input) input_idx_.push_back(int(i));
            if (g.nodes[i].type == NodeType::Output) output_idx_.push_back(int(i));
            if (g.nodes[i].type == NodeType::Hidden) ++hidden_count_;
        }
        incoming_.resize(g.nodes.size());
        for (const auto& c : g.conns) {
            if (!c.enabled) continue;
            auto si = index_of_.find(c.in);
            auto di = index_of_.find(c.out);
            if (si == index_of_.end() || di == index_of_.end())
                throw std::invalid_argument("connection references unknown node");
            incoming_[di->second].push_back({si->second, c.weight});
        }
        values_.assign(g.nodes.size(), 0.0);
        passes_ = std::min(hidden_count_ + 1, 12);
        reset();
    }

    void reset() {
        std::fill(values_.begin(), values_.end(), 0.0);
        for (std::size_t i = 0; i < types_.size(); ++i)
            if (types_[i] == NodeType::Bias) values_[i] = 1.0;
    }

    std::vector<double> activate(const std::vector<double>& inputs) {
        if (inputs.size() != input_idx_.size())
            throw std::invalid_argument("input count does not match phenotype");
        for (double v : inputs)
            if (!std::isfinite(v)) throw std::invalid_argument("non-finite phenotype input");
        for (std::size_t i = 0; i < inputs.size(); ++i) values_[input_idx_[i]] = inputs[i];
        std::vector<double> next = values_;
        for (int pass = 0; pass < passes_; ++pass) {
            for (std::size_t n = 0; n < values_.size(); ++n) {
                if (types_[n] == NodeType::Input || types_[n] == NodeType::Bias) continue;
                double z = 0.0;
                for (const auto& l : incoming_[n]) z += l.weight * values_[l.src];
                next[n] = 1.0 / (1.0 + std::exp(-slope_ * z));
            }
            values_ = next;
        }
        std::vector<double> out;
        out.reserve(output_idx_.size());
        for (int oi : output_idx_) out.push_back(values_[oi]);
        return out;
    }

    int input_count() const { return int(input_idx_.size()); }
    int output_count() const { return int(output_idx_.size()); }

private:
    struct Link {
        int src;
        double weight;
    };

    double slope_;
    int hidden_count_ = 0;
    int passes_ = 1;
    std::unordered_map<int, int> index_of_;
    std::vector<NodeType> types_;
    std::vector<int> input_idx_, output_idx_;
    std::vector<std::vector<Link>> incoming_;
    std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Compatibility distance and speciation.

inline double compatibility(const Genome& a, const Genome& b, const NeatParams& p) {
    auto ca = a.conns;
    auto cb = b.conns;
    auto by_innov = [](const ConnGene& x, const ConnGene& y) { return x.innovation < y.innovation; };
    std::sort(ca.begin(), ca.end(), by_innov);
    std::sort(cb.begin(), cb.end(), by_innov);

    std::size_t i = 0, j = 0;
    int matching = 0, disjoint = 0, excess = 0;
    double weight_diff = 0.0;
    const int max_a = ca.empty() ? -1 : ca.back().innovation;
    const int max_b = cb.empty() ? -1 : cb.back().innovation;
    while (i < ca.size() || j < cb.size()) {
        if (i < ca.size() && j < cb.size() && ca[i].innovation == cb[j].innovation) {
            weight_diff += std::abs(ca[i].weight - cb[j].weight);
            ++matching;
            ++i;
            ++j;
        } else if (j >= cb.size() || (i < ca.size() && ca[i].innovation < cb[j].innovation)) {
            if (ca[i].innovation > max_b) ++excess; else ++disjoint;
            ++i;
        } else {
            if (cb[j].innovation > max_a) ++excess; else ++disjoint;
            ++j;
        }
    }
    const std::size_t larger = std::max(ca.size(), cb.size());
    const double n = larger < 20 ? 1.0 : double(larger);
    const double wbar = matching > 0 ? weight_diff / matching : 0.0;
    return p.c1 * excess / n + p.c2 * disjoint / n + p.c3 * wbar;
}

struct Species {
    Genome representative;
    std::vector<std::size_t> members; // indices into the population
    double best_fitness = -std::numeric_limits<double>::infinity();
    int generations_since_improvement = 0;
};

// Assigns every genome to the first species whose representative is within
// the compatibility threshold; unmatched genomes found new species.
inline void speciate(const std::vector<Genome>& population, std::vector<Species>& species,
                     const NeatParams& params) {
    for (auto& s : species) s.members.clear();
    for (std::size_t gi = 0; gi < population.size(); ++gi) {
        bool placed = false;
        for (auto& s : species) {
            if (compatibility(population[gi], s.representative, params) < params.delta_threshold) {
                s.members.push_back(gi);
                placed = true;
                break;
            }
        }
        if (!placed) {
            Species s;
            s.representative = population[gi];
            s.members.push_back(gi);
            species.push_back(std::move(s));
        }
    }
    species.erase(std::remove_if(species.begin(), species.end(),
                                 [](const Species& s) { return s.members.empty(); }),
                  species.end());
}

// ---------------------------------------------------------------------------
// Mutation and crossover.

inline void mutate_weights(Genome& g, const NeatParams& p, Rng& rng) {
    for (auto& c : g.conns) {
        if (rng.next_double() < p.weight_replace_fraction)
            c.weight = rng.uniform(p.weight_min, p.weight_max);
        else
            c.weight += rng.uniform(-p.weight_mutate_power, p.weight_mutate_power);
        c.weight = std::clamp(c.weight, p.weight_min, p.weight_max);
    }
}

inline bool mutate_add_connection(Genome& g, const NeatParams& p, InnovationDb& db, Rng& rng) {
    for (int attempt = 0; attempt < 20; ++attempt) {
        const NodeGene& src = g.nodes[rng.next_below(g.nodes.size())];
        const NodeGene& dst = g.nodes[rng.next_below(g.nodes.size())];
        if (dst.type == NodeType::Input || dst.type == NodeType::Bias) continue;
        if (g.has_connection(src.id, dst.id)) continue;
        ConnGene c;
        c.in = src.id;
        c.out = dst.id;
        c.weight = rng.uniform(-p.weight_mutate_power * 2, p.weight_mutate_power * 2);
        c.enabled = true;
        c.innovation = db.connection_innovation(src.id, dst.id);
        g.conns.push_back(c);
        return true;
    }
    return false;
}

// Splits an enabled connection: the old gene is disabled, the incoming new
// connection gets weight 1.0 and the outgoing one the old weight.
inline bool mutate_add_node(Genome& g, InnovationDb& db, Rng& rng) {
    std::vector<std::size_t> enabled;
    for (std::size_t i = 0; i < g.conns.size(); ++i)
        if (g.conns[i].enabled) enabled.push_back(i);
    if (enabled.empty()) return false;
    const std::size_t pick = enabled[rng.next_below(enabled.size())];
    const int node_id = db.split_node_id(g.conns[pick].innovation);
    if (g.has_node(node_id)) return false; // this genome already split that gene once
    ConnGene& old = g.conns[pick];
    old.enabled = false;
    g.nodes.push_back({node_id, NodeType::Hidden});
    ConnGene in_conn{old.in, node_id, 1.0, true, db.connection_innovation(old.in, node_id)};
    ConnGene out_conn{node_id, old.out, old.weight, true,
                      db.connection_innovation(node_id, old.out)};
    g.conns.push_back(in_conn);
    g.conns.push_back(out_conn);
    return true;
}

inline void mutate(Genome& g, const NeatParams& p, InnovationDb& db, Rng& rng) {
    if (rng.next_double() < p.weight_mutate_rate) mutate_weights(g, p, rng);
    if (rng.next_double() < p.add_node_rate) mutate_add_node(g, db, rng);
    if (rng.next_double() < p.add_connection_rate) mutate_add_connection(g, p, db, rng);
}

// NEAT recombination: matching genes picked randomly per gene, disjoint and
// excess inherited from the fitter parent (from both on equal fitness).
inline Genome crossover(const Genome& a, const Genome& b, const NeatParams& p, Rng& rng) {
    const bool equal = a.fitness == b.fitness;
    const Genome& fit = (a.fitness >= b.fitness) ? a : b;
    const Genome& weak = (a.fitness >= b.fitness) ? b : a;

    std::unordered_map<int, const ConnGene*> weak_by_innov;
    for (const auto& c : weak.conns) weak_by_innov[c.innovation] = &c;
    std::unordered_map<int, const ConnGene*> fit_by_innov;
    for (const auto& c : fit.conns) fit_by_innov[c.innovation] = &c;

    Genome child;
    child.nodes = fit.nodes;
    auto add_gene = [&](const ConnGene& gene, const ConnGene* other) {
        ConnGene c = gene;
        if (other && rng.next_double() < 0.5) c.weight = other->weight;
        const bool either_disabled = !gene.enabled || (other && !other->enabled);
        if (either_disabled)
            c.enabled = !(rng.next_double() < p.disabled_inherit_rate);
        if (!child.has_connection(c.in, c.out)) child.conns.push_back(c);
    };

    for (const auto& c : fit.conns) {
        auto it = weak_by_innov.find(c.innovation);
        add_gene(c, it != weak_by_innov.end() ? it->second : nullptr);
    }
    if (equal) {
        // inherit the weaker parent's disjoint/excess genes too
        for (const auto& c : weak.conns) {
            if (fit_by_innov.count(c.innovation)) continue;
            for (int id : {c.in, c.out})
                if (!child.has_node(id)) {
                    for (const auto& n : weak.nodes)
                        if (n.id == id) child.nodes.push_back(n);
                }
            add_gene(c, nullptr);
        }
    }
    return child;
}

// ---------------------------------------------------------------------------
// The generational loop.

struct EvolveStats {
    std::vector<double> best_fitness;  // per generation
    std::vector<int> species_count;    // per generation
};

struct EvolveResult {
    Genome champion;
    EvolveStats stats;
};

using EvalFn = std::function<double(const Genome&)>;

inline EvolveResult evolve(const EvalFn& eval_fn, int n_inputs, int n_outputs,
                           const NeatParams& params, int generations, std::uint64_t seed) {
    params.validate();
    Rng rng(seed);
    InnovationDb db(n_inputs + 1 + n_outputs, 0);

    std::vector<Genome> population;
    population.reserve(params.population);
    for (int i = 0; i < params.population; ++i)
        population.push_back(minimal_genome(n_inputs, n_outputs, db, rng, params));

    std::vector<Species> species;
    EvolveResult result;
    result.champion.fitness = -std::numeric_limits<double>::infinity();

    for (int gen = 0; gen < generations; ++gen) {
        for (auto& g : population) g.fitness = eval_fn(g);

        std::size_t champ_idx = 0;
        for (std::size_t i = 1; i < population.size(); ++i)
            if (population[i].fitness > population[champ_idx].fitness) champ_idx = i;
        if (population[champ_idx].fitness > result.champion.fitness)
            result.champion = population[champ_idx];
        result.stats.best_fitness.push_back(population[champ_idx].fitness);

        speciate(population, species, params);
        result.stats.species_count.push_back(int(species.size()));

        // stagnation bookkeeping
        for (auto& s : species) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t m : s.members) best = std::max(best, population[m].fitness);
            if (best > s.best_fitness) {
                s.best_fitness = best;
                s.generations_since_improvement = 0;
            } else {
                ++s.generations_since_improvement;
            }
        }
        // remove stagnant species, but never the one holding the champion
        std::vector<Species> kept;
        for (auto& s : species) {
            const bool has_champ =
                std::find(s.members.begin(), s.members.end(), champ_idx) != s.members.end();
            if (s.generations_since_improvement <= params.stagnation_limit || has_champ)
                kept.push_back(std::move(s));
        }
        species = std::move(kept);
        if (species.empty()) {
            Species s;
            s.representative = population[champ_idx];
            for (std::size_t i = 0; i < population.size(); ++i) s.members.push_back(i);
            species.push_back(std::move(s));
        }

        // fitness sharing; fitness may be negative, so shift before sharing
        double min_fit = population[0].fitness;
        for (const auto& g : population) min_fit = std::min(min_fit, g.fitness);
        std::vector<double> species_share(species.size(), 0.0);
        double total_share = 0.0;
        for (std::size_t si = 0; si < species.size(); ++si) {
            for (std::size_t m : species[si].members)
                species_share[si] += (population[m].fitness - min_fit + 1e-9) /
                                     double(species[si].members.size());
            total_share += species_share[si];
        }

        // offspring quotas (largest remainder)
        std::vector<int> quota(species.size(), 0);
        int assigned = 0;
        std::vector<std::pair<double, std::size_t>> remainders;
        for (std::size_t si = 0; si < species.size(); ++si) {
            const double exact = total_share > 0.0
                                     ? params.population * species_share[si] / total_share
                                     : double(params.population) / double(species.size());
            quota[si] = int(exact);
            assigned += quota[si];
            remainders.push_back({exact - quota[si], si});
        }
        std::sort(remainders.begin(), remainders.end(), [](const auto& x, const auto& y) {
            return x.first != y.first ? x.first > y.first : x.second < y.second;
        });
        for (std::size_t k = 0; assigned < params.population; ++k, ++assigned)
            ++quota[remainders[k % remainders.size()].second];

        std::vector<Genome> next_pop;
        next_pop.reserve(params.population);
        bool champion_copied = false;
        for (std::size_t si = 0; si < species.size(); ++si) {
            auto& s = species[si];
            std::sort(s.members.begin(), s.members.end(), [&](std::size_t x, std::size_t y) {
                return population[x].fitness != population[y].fitness
                           ? population[x].fitness > population[y].fitness
                           : x < y;
            });
            int n_off = quota[si];
            if (n_off <= 0) continue;

            // elitism: species champion passes through unmodified
            for (int e = 0; e < params.elitism && n_off > 0 && e < int(s.members.size()); ++e) {
                next_pop.push_back(population[s.members[e]]);
                if (s.members[e] == champ_idx) champion_copied = true;
                --n_off;
            }

            const std::size_t breeders =
                std::max<std::size_t>(1, std::size_t(params.survival_threshold * s.members.size()));
            auto pick_parent = [&]() -> const Genome& {
                return population[s.members[rng.next_below(breeders)]];
            };
            while (n_off > 0) {
                Genome child;
                if (s.members.size() > 1 && rng.next_double() < params.crossover_rate) {
                    const Genome& pa = pick_parent();
                    if (species.size() > 1 && rng.next_double() < params.interspecies_rate) {
                        std::size_t osi = rng.next_below(species.size());
                        const auto& other = species[osi].members;
                        child = crossover(pa, population[other[0]], params, rng);
                    } else {
                        child = crossover(pa, pick_parent(), params, rng);
                    }
                } else {
                    child = pick_parent();
                }
                mutate(child, params, db, rng);
                next_pop.push_back(std::move(child));
                --n_off;
            }
            s.representative = population[s.members[0]];
        }
        if (!champion_copied && !next_pop.empty())
            next_pop[0] = population[champ_idx]; // keep the run monotone
        while (int(next_pop.size()) < params.population)
            next_pop.push_back(population[champ_idx]);
        next_pop.resize(params.population);
        population = std::move(next_pop);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Validation (used by tests) and serialization.

inline void validate_genome(const Genome& g) {
    std::unordered_set<int> node_ids;
    for (const auto& n : g.nodes)
        if (!node_ids.insert(n.id).second)
            throw std::runtime_error("duplicate node id " + std::to_string(n.id));
    std::unordered_set<long long> pairs;
    std::unordered_set<int> innovs;
    for (const auto& c : g.conns) {
        if (!node_ids.count(c.in) || !node_ids.count(c.out))
            throw std::runtime_error("connection references missing node");
        const long long key = (long long)c.in * 1000003 + c.out;
        if (!pairs.insert(key).second)
            throw std::runtime_error("duplicate connection " + std::to_string(c.in) + "->" +
                                     std::to_string(c.out));
        if (!innovs.insert(c.innovation).second)
            throw std::runtime_error("duplicate innovation in genome");
    }
}

inline constexpr const char* kGenomeHeader = "# plantshape genome v1";

inline void save_genome(const Genome& g, std::ostream& os) {
    os << kGenomeHeader << '\n';
    os << g.nodes.size() << ' ' << g.conns.size() << '\n';
    for (const auto& n : g.nodes) os << n.id << ' ' << int(n.type) << '\n';
    char buf[32];
    for (const auto& c : g.conns) {
        std::snprintf(buf, sizeof buf, "%.17g", c.weight);
        os << c.in << ' ' << c.out << ' ' << buf << ' ' << int(c.enabled) << ' ' << c.innovation
           << '\n';
    }
}

inline Genome load_genome(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kGenomeHeader)
        throw std::runtime_error("missing genome header");
    std::size_t nn, nc;
    if (!(is >> nn >> nc)) throw std::runtime_error("bad genome counts");
    Genome g;
    for (std::size_t i = 0; i < nn; ++i) {
        int id, ty;
        if (!(is >> id >> ty)) throw std::runtime_error("truncated genome nodes");
        g.nodes.push_back({id, NodeType(ty)});
    }
    for (std::size_t i = 0; i < nc; ++i) {
        ConnGene c;
        int en;
        if (!(is >> c.in >> c.out >> c.weight >> en >> c.innovation))
            throw std::runtime_error("truncated genome connections");
        c.enabled = en != 0;
        g.conns.push_back(c);
    }
    return g;
}

} // namespace plantshape::neat
