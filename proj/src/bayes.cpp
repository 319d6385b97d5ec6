#include "qa/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <queue>
#include <set>

#include "qa/error.hpp"

namespace qa::bayes {

namespace {

// Table over a sorted set of variables; the last variable varies fastest.
struct Factor {
    std::vector<std::size_t> vars;
    std::vector<int> cards;
    std::vector<double> values;
};

std::size_t stride_after(const Factor& f, std::size_t pos) {
    std::size_t s = 1;
    for (std::size_t k = pos + 1; k < f.cards.size(); ++k) s *= static_cast<std::size_t>(f.cards[k]);
    return s;
}

Factor multiply(const Factor& a, const Factor& b) {
    Factor out;
    std::set_union(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(), std::back_inserter(out.vars));
    const std::size_t n = out.vars.size();
    out.cards.resize(n);
    std::vector<std::size_t> sa(n, 0), sb(n, 0);
    std::size_t total = 1;
    for (std::size_t d = 0; d < n; ++d) {
        const std::size_t v = out.vars[d];
        auto ia = std::lower_bound(a.vars.begin(), a.vars.end(), v);
        auto ib = std::lower_bound(b.vars.begin(), b.vars.end(), v);
        if (ia != a.vars.end() && *ia == v) {
            const auto pos = static_cast<std::size_t>(ia - a.vars.begin());
            out.cards[d] = a.cards[pos];
            sa[d] = stride_after(a, pos);
        }
        if (ib != b.vars.end() && *ib == v) {
            const auto pos = static_cast<std::size_t>(ib - b.vars.begin());
            out.cards[d] = b.cards[pos];
            sb[d] = stride_after(b, pos);
        }
        total *= static_cast<std::size_t>(out.cards[d]);
    }
    out.values.resize(total);

    std::vector<int> assign(n, 0);
    std::size_t ia = 0, ib = 0;
    for (std::size_t k = 0; k < total; ++k) {
        out.values[k] = a.values[ia] * b.values[ib];
        for (std::size_t d = n; d-- > 0;) {
            ++assign[d];
            ia += sa[d];
            ib += sb[d];
            if (assign[d] < out.cards[d]) break;
            ia -= sa[d] * static_cast<std::size_t>(out.cards[d]);
            ib -= sb[d] * static_cast<std::size_t>(out.cards[d]);
            assign[d] = 0;
        }
    }
    return out;
}

Factor sum_out(const Factor& f, std::size_t var) {
    const auto pos = static_cast<std::size_t>(std::lower_bound(f.vars.begin(), f.vars.end(), var) - f.vars.begin());
    const std::size_t inner = stride_after(f, pos);
    const auto card = static_cast<std::size_t>(f.cards[pos]);
    Factor out;
    out.vars = f.vars;
    out.cards = f.cards;
    out.vars.erase(out.vars.begin() + static_cast<std::ptrdiff_t>(pos));
    out.cards.erase(out.cards.begin() + static_cast<std::ptrdiff_t>(pos));
    const std::size_t outer = f.values.size() / (card * inner);
    out.values.assign(outer * inner, 0.0);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t s = 0; s < card; ++s) {
            const double* src = f.values.data() + (o * card + s) * inner;
            double* dst = out.values.data() + o * inner;
            for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
        }
    }
    return out;
}

Factor restrict_to(const Factor& f, std::size_t var, int state) {
    const auto pos = static_cast<std::size_t>(std::lower_bound(f.vars.begin(), f.vars.end(), var) - f.vars.begin());
    const std::size_t inner = stride_after(f, pos);
    const auto card = static_cast<std::size_t>(f.cards[pos]);
    Factor out;
    out.vars = f.vars;
    out.cards = f.cards;
    out.vars.erase(out.vars.begin() + static_cast<std::ptrdiff_t>(pos));
    out.cards.erase(out.cards.begin() + static_cast<std::ptrdiff_t>(pos));
    const std::size_t outer = f.values.size() / (card * inner);
    out.values.resize(outer * inner);
    for (std::size_t o = 0; o < outer; ++o) {
        const double* src = f.values.data() + (o * card + static_cast<std::size_t>(state)) * inner;
        std::copy(src, src + inner, out.values.data() + o * inner);
    }
    return out;
}

Factor cpt_factor(const BayesNet& net, std::size_t i) {
    const Node& node = net.node(i);
    const auto& pidx = net.parent_indices()[i];

    Factor f;
    f.vars = pidx;
    f.vars.push_back(i);
    std::sort(f.vars.begin(), f.vars.end());
    std::size_t total = 1;
    for (std::size_t v : f.vars) {
        f.cards.push_back(static_cast<int>(net.node(v).states.size()));
        total *= static_cast<std::size_t>(f.cards.back());
    }
    f.values.resize(total);

    // Position of each parent and of the child inside f.vars.
    std::vector<std::size_t> parent_pos(pidx.size());
    for (std::size_t k = 0; k < pidx.size(); ++k) {
        parent_pos[k] = static_cast<std::size_t>(std::lower_bound(f.vars.begin(), f.vars.end(), pidx[k]) - f.vars.begin());
    }
    const auto child_pos = static_cast<std::size_t>(std::lower_bound(f.vars.begin(), f.vars.end(), i) - f.vars.begin());

    std::vector<int> assign(f.vars.size(), 0);
    std::vector<int> parent_states(pidx.size());
    for (std::size_t k = 0; k < total; ++k) {
        for (std::size_t p = 0; p < pidx.size(); ++p) parent_states[p] = assign[parent_pos[p]];
        f.values[k] = node.npt.at(node.npt.row_of(parent_states), assign[child_pos]);
        for (std::size_t d = assign.size(); d-- > 0;) {
            if (++assign[d] < f.cards[d]) break;
            assign[d] = 0;
        }
    }
    return f;
}

std::vector<bool> ancestral_set(const BayesNet& net, std::span<const std::size_t> seeds) {
    std::vector<bool> keep(net.size(), false);
    std::vector<std::size_t> stack(seeds.begin(), seeds.end());
    while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        if (keep[v]) continue;
        keep[v] = true;
        for (std::size_t p : net.parent_indices()[v]) stack.push_back(p);
    }
    return keep;
}

// Greedy min-degree choice; ties go to the smallest node index.
std::size_t pick_min_degree(const std::vector<Factor>& factors, const std::set<std::size_t>& remaining) {
    std::size_t best = *remaining.begin();
    std::size_t best_degree = static_cast<std::size_t>(-1);
    for (std::size_t v : remaining) {
        std::set<std::size_t> neighbours;
        for (const auto& f : factors) {
            if (!std::binary_search(f.vars.begin(), f.vars.end(), v)) continue;
            neighbours.insert(f.vars.begin(), f.vars.end());
        }
        neighbours.erase(v);
        if (neighbours.size() < best_degree) {
            best_degree = neighbours.size();
            best = v;
        }
    }
    return best;
}

Posterior finish(const BayesNet& net, std::size_t target, std::vector<double> weights) {
    double z = 0.0;
    for (double w : weights) z += w;
    if (!(z > 0.0)) {
        throw Error(Errc::inconsistent_evidence, "evidence has zero probability (querying '" + net.node(target).id + "')");
    }
    for (double& w : weights) w /= z;
    Posterior post{net.node(target).id, std::move(weights), std::nullopt, std::nullopt};
    if (net.node(target).midpoints) {
        const Moments m = posterior_stats(post.probabilities, *net.node(target).midpoints);
        post.mean = m.mean;
        post.sd = m.sd;
    }
    return post;
}

}  // namespace

std::string_view to_string(NodeKind kind) noexcept {
    switch (kind) {
        case NodeKind::activity: return "activity";
        case NodeKind::factor: return "factor";
        case NodeKind::measure: return "measure";
        case NodeKind::metric: return "metric";
    }
    return "unknown";
}

const Node& BayesNet::node(std::string_view id) const { return nodes_[index_of(id)]; }

std::size_t BayesNet::index_of(std::string_view id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw Error(Errc::not_found, "unknown node '" + std::string(id) + "'");
    return it->second;
}

std::optional<std::size_t> BayesNet::find(std::string_view id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

BayesNet build_net(std::vector<Node> nodes) {
    BayesNet net;
    net.nodes_ = std::move(nodes);
    for (std::size_t i = 0; i < net.nodes_.size(); ++i) {
        if (!net.index_.emplace(net.nodes_[i].id, i).second) {
            throw Error(Errc::invalid, "duplicate node id '" + net.nodes_[i].id + "'");
        }
    }

    net.parents_.resize(net.nodes_.size());
    for (std::size_t i = 0; i < net.nodes_.size(); ++i) {
        const Node& n = net.nodes_[i];
        if (n.states.empty()) throw Error(Errc::invalid, "node '" + n.id + "' has no states");
        std::set<std::string> seen;
        for (const auto& p : n.parents) {
            auto it = net.index_.find(p);
            if (it == net.index_.end()) {
                throw Error(Errc::reference, "node '" + n.id + "' lists unknown parent '" + p + "'");
            }
            if (!seen.insert(p).second) throw Error(Errc::invalid, "node '" + n.id + "' repeats parent '" + p + "'");
            net.parents_[i].push_back(it->second);
        }
    }

    for (std::size_t i = 0; i < net.nodes_.size(); ++i) {
        const Node& n = net.nodes_[i];
        if (n.npt.child_states() != static_cast<int>(n.states.size())) {
            throw Error(Errc::dimension, "node '" + n.id + "': NPT has " + std::to_string(n.npt.child_states()) +
                                             " columns for " + std::to_string(n.states.size()) + " states");
        }
        std::vector<int> expected;
        for (std::size_t p : net.parents_[i]) expected.push_back(static_cast<int>(net.nodes_[p].states.size()));
        if (n.npt.parent_cards() != expected) {
            throw Error(Errc::dimension, "node '" + n.id + "': NPT rows do not match parent state counts");
        }
        if (n.midpoints && n.midpoints->size() != n.states.size()) {
            throw Error(Errc::dimension, "node '" + n.id + "': scale size differs from state count");
        }
        for (double p : n.npt.table()) {
            if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::invalid, "node '" + n.id + "': NPT entry outside [0,1]");
        }
        if (npt::normalization_error(n.npt) > 1e-9) {
            throw Error(Errc::invalid, "node '" + n.id + "': NPT row does not sum to 1");
        }
    }

    // Cycle check with path reporting.
    enum class Mark { none, active, done };
    std::vector<Mark> mark(net.nodes_.size(), Mark::none);
    std::vector<std::size_t> path;
    auto visit = [&](auto&& self, std::size_t v) -> void {
        mark[v] = Mark::active;
        path.push_back(v);
        for (std::size_t p : net.parents_[v]) {
            if (mark[p] == Mark::active) {
                auto first = std::find(path.begin(), path.end(), p);
                std::string msg;
                for (auto it = first; it != path.end(); ++it) msg += net.nodes_[*it].id + " <- ";
                msg += net.nodes_[p].id;
                throw Error(Errc::cycle, "cycle in net: " + msg);
            }
            if (mark[p] == Mark::none) self(self, p);
        }
        path.pop_back();
        mark[v] = Mark::done;
    };
    for (std::size_t i = 0; i < net.nodes_.size(); ++i) {
        if (mark[i] == Mark::none) visit(visit, i);
    }

    // Kahn's algorithm, smallest index first.
    std::vector<std::size_t> indegree(net.nodes_.size(), 0);
    std::vector<std::vector<std::size_t>> children(net.nodes_.size());
    for (std::size_t i = 0; i < net.nodes_.size(); ++i) {
        indegree[i] = net.parents_[i].size();
        for (std::size_t p : net.parents_[i]) children[p].push_back(i);
    }
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t i = 0; i < net.nodes_.size(); ++i) {
        if (indegree[i] == 0) ready.push(i);
    }
    while (!ready.empty()) {
        const std::size_t v = ready.top();
        ready.pop();
        net.topo_.push_back(v);
        for (std::size_t c : children[v]) {
            if (--indegree[c] == 0) ready.push(c);
        }
    }
    return net;
}

void check_evidence(const BayesNet& net, const Evidence& evidence) {
    for (const auto& [id, state] : evidence) {
        const Node& n = net.node(id);
        if (state < 0 || state >= static_cast<int>(n.states.size())) {
            throw Error(Errc::invalid, "evidence state " + std::to_string(state) + " out of range for node '" + id + "'");
        }
    }
}

Posterior query_marginal(const BayesNet& net, const Evidence& evidence, std::string_view target) {
    const std::size_t t = net.index_of(target);
    check_evidence(net, evidence);

    std::vector<int> observed(net.size(), -1);
    std::vector<std::size_t> seeds{t};
    for (const auto& [id, state] : evidence) {
        const std::size_t v = net.index_of(id);
        observed[v] = state;
        seeds.push_back(v);
    }
    const std::vector<bool> relevant = ancestral_set(net, seeds);

    std::vector<Factor> factors;
    std::set<std::size_t> remaining;
    for (std::size_t i = 0; i < net.size(); ++i) {
        if (!relevant[i]) continue;
        Factor f = cpt_factor(net, i);
        for (std::size_t k = f.vars.size(); k-- > 0;) {
            const std::size_t v = f.vars[k];
            if (observed[v] >= 0) f = restrict_to(f, v, observed[v]);
        }
        factors.push_back(std::move(f));
        if (i != t && observed[i] < 0) remaining.insert(i);
    }

    while (!remaining.empty()) {
        const std::size_t v = pick_min_degree(factors, remaining);
        remaining.erase(v);
        std::vector<Factor> keep;
        std::optional<Factor> joined;
        for (auto& f : factors) {
            if (std::binary_search(f.vars.begin(), f.vars.end(), v)) {
                joined = joined ? multiply(*joined, f) : std::move(f);
            } else {
                keep.push_back(std::move(f));
            }
        }
        if (joined) keep.push_back(sum_out(*joined, v));
        factors = std::move(keep);
    }

    Factor result{{}, {}, {1.0}};
    for (const auto& f : factors) result = multiply(result, f);

    const auto n_states = net.node(t).states.size();
    if (observed[t] >= 0) {
        std::vector<double> point(n_states, 0.0);
        point[static_cast<std::size_t>(observed[t])] = result.values.at(0);
        return finish(net, t, std::move(point));
    }
    return finish(net, t, std::move(result.values));
}

std::vector<Posterior> query_all_serial(const BayesNet& net, const Evidence& evidence) {
    std::vector<Posterior> out;
    out.reserve(net.size());
    for (const auto& n : net.nodes()) out.push_back(query_marginal(net, evidence, n.id));
    return out;
}

std::vector<Posterior> query_all(const BayesNet& net, const Evidence& evidence) {
    check_evidence(net, evidence);
    const auto n = static_cast<std::ptrdiff_t>(net.size());
    std::vector<Posterior> out(net.size());
    std::vector<std::exception_ptr> errors(net.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            out[static_cast<std::size_t>(i)] = query_marginal(net, evidence, net.node(static_cast<std::size_t>(i)).id);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

Posterior joint_enumerate(const BayesNet& net, const Evidence& evidence, std::string_view target, double guard) {
    const std::size_t t = net.index_of(target);
    check_evidence(net, evidence);

    double space = 1.0;
    for (const auto& n : net.nodes()) space *= static_cast<double>(n.states.size());
    if (space > guard) {
        throw Error(Errc::guard, "joint state space " + std::to_string(space) + " exceeds enumeration guard");
    }

    std::vector<int> assign(net.size(), 0);
    std::vector<std::size_t> free_vars;
    for (std::size_t i = 0; i < net.size(); ++i) {
        auto it = evidence.find(net.node(i).id);
        if (it != evidence.end()) assign[i] = it->second;
        else free_vars.push_back(i);
    }

    std::vector<double> acc(net.node(t).states.size(), 0.0);
    std::vector<int> parent_states;
    for (;;) {
        double p = 1.0;
        for (std::size_t i = 0; i < net.size() && p != 0.0; ++i) {
            const auto& pidx = net.parent_indices()[i];
            parent_states.resize(pidx.size());
            for (std::size_t k = 0; k < pidx.size(); ++k) parent_states[k] = assign[pidx[k]];
            const Node& node = net.node(i);
            p *= node.npt.at(node.npt.row_of(parent_states), assign[i]);
        }
        acc[static_cast<std::size_t>(assign[t])] += p;

        std::size_t d = free_vars.size();
        for (; d-- > 0;) {
            const std::size_t v = free_vars[d];
            if (++assign[v] < static_cast<int>(net.node(v).states.size())) break;
            assign[v] = 0;
        }
        if (d == static_cast<std::size_t>(-1)) break;
    }
    return finish(net, t, std::move(acc));
}

Moments posterior_stats(std::span<const double> probabilities, std::span<const double> midpoints) {
    if (probabilities.size() != midpoints.size() || probabilities.empty()) {
        throw Error(Errc::invalid, "posterior and scale sizes differ");
    }
    double mean = 0.0, second = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        mean += probabilities[i] * midpoints[i];
        second += probabilities[i] * midpoints[i] * midpoints[i];
    }
    return {mean, std::sqrt(std::max(0.0, second - mean * mean))};
}

Moments posterior_stats(const Posterior& posterior, const Node& node) {
    if (!node.midpoints) throw Error(Errc::invalid, "node '" + node.id + "' has no ranked or numeric scale");
    return posterior_stats(posterior.probabilities, *node.midpoints);
}

}  // namespace qa::bayes
