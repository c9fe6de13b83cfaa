#include "hgnplan/task.h"

#include "hgnplan/errors.h"

#include <algorithm>
#include <bit>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace hgnplan {

State::State(std::size_t width) : width_(width), words_((width + 63) / 64, 0) {}

State State::from_ids(std::size_t width, std::span<const PropId> ids) {
    State s(width);
    for (PropId p : ids) {
        if (p < 0 || static_cast<std::size_t>(p) >= width)
            throw std::out_of_range("proposition id out of range");
        s.set(p);
    }
    return s;
}

bool State::contains_all(std::span<const PropId> ids) const {
    for (PropId p : ids)
        if (!test(p))
            return false;
    return true;
}

std::vector<PropId> State::ids() const {
    std::vector<PropId> out;
    for (std::size_t w = 0; w < words_.size(); ++w) {
        std::uint64_t word = words_[w];
        while (word) {
            int b = std::countr_zero(word);
            out.push_back(static_cast<PropId>(w * 64 + static_cast<std::size_t>(b)));
            word &= word - 1;
        }
    }
    return out;
}

std::size_t State::count() const {
    std::size_t n = 0;
    for (auto w : words_)
        n += static_cast<std::size_t>(std::popcount(w));
    return n;
}

std::size_t State::hash() const {
    std::uint64_t h = 0x9e3779b97f4a7c15ull ^ width_;
    for (auto w : words_) {
        h ^= w + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        h *= 0xff51afd7ed558ccdull;
    }
    return static_cast<std::size_t>(h ^ (h >> 33));
}

namespace {

void canonicalize(std::vector<PropId> &ids, std::size_t n, const char *what) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (PropId p : ids)
        if (p < 0 || static_cast<std::size_t>(p) >= n)
            throw std::invalid_argument(std::string("proposition id out of range in ") + what);
}

}  // namespace

GroundedTask GroundedTask::make(std::vector<std::string> props, std::vector<GroundedAction> actions,
                                std::vector<PropId> init, std::vector<PropId> goal, std::string name) {
    for (std::size_t i = 1; i < props.size(); ++i)
        if (!(props[i - 1] < props[i]))
            throw std::invalid_argument("proposition names must be unique and sorted: '" + props[i - 1] +
                                        "' before '" + props[i] + "'");
    const std::size_t n = props.size();
    for (auto &a : actions) {
        canonicalize(a.pre, n, "precondition");
        canonicalize(a.add, n, "add effect");
        canonicalize(a.del, n, "delete effect");
        if (!(a.cost >= 0.0))
            throw std::invalid_argument("negative action cost for '" + a.name + "'");
    }
    canonicalize(init, n, "initial state");
    canonicalize(goal, n, "goal");
    GroundedTask t;
    t.name_ = std::move(name);
    t.props_ = std::move(props);
    t.actions_ = std::move(actions);
    t.init_ = std::move(init);
    t.goal_ = std::move(goal);
    return t;
}

State GroundedTask::initial_state() const {
    return State::from_ids(props_.size(), init_);
}

State GroundedTask::make_state(std::span<const PropId> ids) const {
    return State::from_ids(props_.size(), ids);
}

PropId GroundedTask::find_prop(std::string_view n) const {
    auto it = std::lower_bound(props_.begin(), props_.end(), n,
                               [](const std::string &a, std::string_view b) { return a < b; });
    if (it == props_.end() || *it != n)
        return -1;
    return static_cast<PropId>(it - props_.begin());
}

double GroundedTask::min_action_cost() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto &a : actions_)
        m = std::min(m, a.cost);
    return m;
}

bool is_applicable(const State &s, const GroundedAction &o) {
    return s.contains_all(o.pre);
}

State apply_action(const State &s, const GroundedAction &o) {
    if (!is_applicable(s, o))
        throw PreconditionViolation("action '" + o.name + "' is not applicable");
    State next = s;
    for (PropId p : o.del)
        next.reset(p);
    for (PropId p : o.add)
        next.set(p);
    return next;
}

bool is_goal(const State &s, const GroundedTask &t) {
    return s.contains_all(t.goal());
}

// ---------------------------------------------------------------------------
// Grounding

namespace {

using Fact = std::vector<int>;  // predicate index followed by object indices

struct FactHash {
    std::size_t operator()(const Fact &f) const {
        std::size_t h = 1469598103934665603ull;
        for (int x : f)
            h = (h ^ static_cast<std::size_t>(x)) * 1099511628211ull;
        return h;
    }
};

// Atom argument compiled against a schema: variable index, or constant object.
struct Term {
    int var = -1;
    int object = -1;
};

struct CompiledAtom {
    int predicate = 0;
    std::vector<Term> terms;
};

struct CompiledSchema {
    const ActionSchema *schema = nullptr;
    std::vector<std::vector<int>> candidates;  // per parameter: type-compatible objects
    std::vector<CompiledAtom> pre, add, del;
};

class Grounder {
public:
    Grounder(const DomainDef &dom, const ProblemDef &prob, const GroundingOptions &opts)
        : dom_(dom), opts_(opts) {
        for (const auto &c : dom.constants)
            add_object(c);
        for (const auto &o : prob.objects)
            add_object(o);
        for (std::size_t i = 0; i < dom.predicates.size(); ++i)
            pred_index_[dom.predicates[i].name] = static_cast<int>(i);
        for (const auto &s : dom.schemas)
            schemas_.push_back(compile(s));
        per_pred_.resize(dom.predicates.size());
        for (const auto &a : prob.init) {
            Fact f = ground_constant(a);
            insert_fact(f);
            init_set_.insert(std::move(f));
        }
        for (const auto &a : prob.goal)
            goal_.push_back(ground_constant(a));
    }

    GroundedTask run(const std::string &name) {
        fixpoint();
        return build(name);
    }

private:
    void add_object(const TypedName &o) {
        if (object_index_.count(o.name))
            return;
        object_index_[o.name] = static_cast<int>(objects_.size());
        objects_.push_back(o);
    }

    Fact ground_constant(const Atom &a) const {
        Fact f{pred_index_.at(a.predicate)};
        for (const auto &arg : a.args)
            f.push_back(object_index_.at(arg));
        return f;
    }

    CompiledSchema compile(const ActionSchema &s) const {
        CompiledSchema cs;
        cs.schema = &s;
        std::map<std::string, int> var_index;
        for (std::size_t i = 0; i < s.params.size(); ++i) {
            var_index[s.params[i].name] = static_cast<int>(i);
            std::vector<int> cands;
            for (std::size_t o = 0; o < objects_.size(); ++o)
                if (dom_.is_subtype(objects_[o].type, s.params[i].type))
                    cands.push_back(static_cast<int>(o));
            cs.candidates.push_back(std::move(cands));
        }
        auto compile_atoms = [&](const std::vector<Atom> &atoms) {
            std::vector<CompiledAtom> out;
            for (const auto &a : atoms) {
                CompiledAtom ca;
                ca.predicate = pred_index_.at(a.predicate);
                for (const auto &arg : a.args) {
                    Term t;
                    if (auto it = var_index.find(arg); it != var_index.end())
                        t.var = it->second;
                    else
                        t.object = object_index_.at(arg);
                    ca.terms.push_back(t);
                }
                out.push_back(std::move(ca));
            }
            return out;
        };
        cs.pre = compile_atoms(s.pre);
        cs.add = compile_atoms(s.add);
        cs.del = compile_atoms(s.del);
        return cs;
    }

    bool insert_fact(const Fact &f) {
        if (!reached_.insert(f).second)
            return false;
        per_pred_[static_cast<std::size_t>(f[0])].push_back(f);
        return true;
    }

    Fact instantiate(const CompiledAtom &a, const std::vector<int> &binding) const {
        Fact f{a.predicate};
        for (const auto &t : a.terms)
            f.push_back(t.var >= 0 ? binding[static_cast<std::size_t>(t.var)] : t.object);
        return f;
    }

    bool candidate_ok(const CompiledSchema &cs, int var, int object) const {
        const auto &c = cs.candidates[static_cast<std::size_t>(var)];
        return std::binary_search(c.begin(), c.end(), object);
    }

    template <typename Emit>
    void enumerate_params(const CompiledSchema &cs, std::vector<int> &binding, std::size_t var, Emit &emit) {
        if (var == binding.size()) {
            emit(binding);
            return;
        }
        if (binding[var] >= 0) {
            enumerate_params(cs, binding, var + 1, emit);
            return;
        }
        for (int o : cs.candidates[var]) {
            binding[var] = o;
            enumerate_params(cs, binding, var + 1, emit);
        }
        binding[var] = -1;
    }

    template <typename Emit>
    void match(const CompiledSchema &cs, std::vector<int> &binding, std::size_t atom, Emit &emit) {
        if (atom == cs.pre.size()) {
            enumerate_params(cs, binding, 0, emit);
            return;
        }
        const CompiledAtom &a = cs.pre[atom];
        // New facts are only inserted between schema passes.
        const auto &facts = per_pred_[static_cast<std::size_t>(a.predicate)];
        for (std::size_t fi = 0; fi < facts.size(); ++fi) {
            const Fact &f = facts[fi];
            std::vector<int> newly_bound;
            bool ok = true;
            for (std::size_t j = 0; j < a.terms.size() && ok; ++j) {
                const Term &t = a.terms[j];
                int obj = f[j + 1];
                if (t.var < 0) {
                    ok = (obj == t.object);
                } else if (binding[static_cast<std::size_t>(t.var)] >= 0) {
                    ok = (binding[static_cast<std::size_t>(t.var)] == obj);
                } else if (candidate_ok(cs, t.var, obj)) {
                    binding[static_cast<std::size_t>(t.var)] = obj;
                    newly_bound.push_back(t.var);
                } else {
                    ok = false;
                }
            }
            if (ok)
                match(cs, binding, atom + 1, emit);
            for (int v : newly_bound)
                binding[static_cast<std::size_t>(v)] = -1;
        }
    }

    void fixpoint() {
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t si = 0; si < schemas_.size(); ++si) {
                const CompiledSchema &cs = schemas_[si];
                std::vector<Fact> new_facts;
                std::vector<int> binding(cs.schema->params.size(), -1);
                auto emit = [&](const std::vector<int> &b) {
                    std::vector<int> key{static_cast<int>(si)};
                    key.insert(key.end(), b.begin(), b.end());
                    if (!action_keys_.insert(key).second)
                        return;
                    if (action_keys_.size() > opts_.max_actions)
                        throw ResourceLimitError("grounding exceeds the limit of " +
                                                 std::to_string(opts_.max_actions) + " actions");
                    bindings_.push_back(std::move(key));
                    for (const auto &a : cs.add)
                        new_facts.push_back(instantiate(a, b));
                };
                match(cs, binding, 0, emit);
                for (const auto &f : new_facts)
                    if (insert_fact(f))
                        changed = true;
            }
        }
    }

    std::string fact_name(const Fact &f) const {
        std::string s = "(" + dom_.predicates[static_cast<std::size_t>(f[0])].name;
        for (std::size_t i = 1; i < f.size(); ++i)
            s += " " + objects_[static_cast<std::size_t>(f[i])].name;
        return s + ")";
    }

    GroundedTask build(const std::string &name) const {
        struct RawAction {
            std::string name;
            std::vector<Fact> pre, add, del;
            double cost;
        };
        std::vector<RawAction> raw;
        std::unordered_map<Fact, bool, FactHash> changes;  // facts some action adds or deletes
        for (const auto &key : bindings_) {
            const CompiledSchema &cs = schemas_[static_cast<std::size_t>(key[0])];
            std::vector<int> b(key.begin() + 1, key.end());
            RawAction ra;
            ra.name = "(" + cs.schema->name;
            for (int o : b)
                ra.name += " " + objects_[static_cast<std::size_t>(o)].name;
            ra.name += ")";
            ra.cost = cs.schema->cost;
            for (const auto &a : cs.pre)
                ra.pre.push_back(instantiate(a, b));
            for (const auto &a : cs.add)
                ra.add.push_back(instantiate(a, b));
            for (const auto &a : cs.del) {
                Fact f = instantiate(a, b);
                // Facts outside the relaxed-reachable set are never true.
                if (reached_.count(f))
                    ra.del.push_back(std::move(f));
            }
            for (const auto &f : ra.add)
                changes[f] = true;
            for (const auto &f : ra.del)
                changes[f] = true;
            raw.push_back(std::move(ra));
        }

        auto is_static = [&](const Fact &f) { return opts_.remove_static_facts && !changes.count(f); };

        const std::set<Fact> &init_set = init_set_;
        std::set<std::string> names;
        auto keep = [&](const Fact &f) { names.insert(fact_name(f)); };

        std::vector<RawAction> kept;
        for (auto &ra : raw) {
            std::erase_if(ra.pre, is_static);
            std::set<Fact> pre(ra.pre.begin(), ra.pre.end());
            bool adds_something = std::any_of(ra.add.begin(), ra.add.end(),
                                              [&](const Fact &f) { return !pre.count(f); });
            // An action that adds nothing beyond its own preconditions never helps.
            if (!adds_something)
                continue;
            kept.push_back(std::move(ra));
        }
        for (const auto &ra : kept) {
            for (const auto &f : ra.pre)
                keep(f);
            for (const auto &f : ra.add)
                keep(f);
            for (const auto &f : ra.del)
                keep(f);
        }
        for (const auto &f : init_set)
            if (!is_static(f))
                keep(f);
        for (const auto &f : goal_)
            if (!(is_static(f) && init_set.count(f)))
                keep(f);

        std::vector<std::string> props(names.begin(), names.end());
        auto id_of = [&](const Fact &f) {
            auto n = fact_name(f);
            return static_cast<PropId>(std::lower_bound(props.begin(), props.end(), n) - props.begin());
        };

        std::sort(kept.begin(), kept.end(), [](const RawAction &a, const RawAction &b) { return a.name < b.name; });
        std::vector<GroundedAction> actions;
        for (const auto &ra : kept) {
            GroundedAction ga;
            ga.name = ra.name;
            ga.cost = ra.cost;
            for (const auto &f : ra.pre)
                ga.pre.push_back(id_of(f));
            for (const auto &f : ra.add)
                ga.add.push_back(id_of(f));
            for (const auto &f : ra.del)
                ga.del.push_back(id_of(f));
            actions.push_back(std::move(ga));
        }
        std::vector<PropId> init, goal;
        for (const auto &f : init_set)
            if (!is_static(f))
                init.push_back(id_of(f));
        for (const auto &f : goal_)
            if (!(is_static(f) && init_set.count(f)))
                goal.push_back(id_of(f));
        return GroundedTask::make(std::move(props), std::move(actions), std::move(init), std::move(goal), name);
    }

private:
    const DomainDef &dom_;
    const GroundingOptions &opts_;
    std::vector<TypedName> objects_;
    std::map<std::string, int> object_index_;
    std::map<std::string, int> pred_index_;
    std::vector<CompiledSchema> schemas_;
    std::set<Fact> reached_;
    std::vector<std::vector<Fact>> per_pred_;
    std::set<std::vector<int>> action_keys_;
    std::vector<std::vector<int>> bindings_;
    std::vector<Fact> goal_;
    std::set<Fact> init_set_;
};

}  // namespace

GroundedTask ground(const DomainDef &dom, const ProblemDef &prob, const GroundingOptions &opts) {
    Grounder g(dom, prob, opts);
    return g.run(dom.name + "/" + prob.name);
}

GroundedTask load_task(const std::string &domain_path, const std::string &problem_path,
                       const GroundingOptions &opts) {
    DomainDef dom = parse_domain(read_text_file(domain_path));
    ProblemDef prob = parse_problem(read_text_file(problem_path), dom);
    return ground(dom, prob, opts);
}

nlohmann::json to_json(const GroundedTask &t) {
    nlohmann::json j;
    j["name"] = t.name();
    j["propositions"] = t.props();
    nlohmann::json acts = nlohmann::json::array();
    for (const auto &a : t.actions())
        acts.push_back({{"name", a.name}, {"pre", a.pre}, {"add", a.add}, {"del", a.del}, {"cost", a.cost}});
    j["actions"] = std::move(acts);
    j["init"] = t.init();
    j["goal"] = t.goal();
    return j;
}

}  // namespace hgnplan
