#pragma once

#include <map>
#include <string>
#include <vector>

#include "supt/errors.hpp"
#include "supt/tensor.hpp"

namespace supt {

enum class Role { Frozen, Tunable };

// Named tensors with a fixed frozen/tunable role. The optimizer updates only
// tunable entries; frozen tensors must stay bit-identical through a run.
class ParamGroup {
public:
    struct Entry {
        std::string name;
        Tensor2 tensor;
        Role role;
    };

    void add(std::string name, Tensor2 tensor, Role role) {
        if (index_.contains(name)) throw ContractError("duplicate parameter name: " + name);
        index_[name] = entries_.size();
        entries_.push_back({std::move(name), std::move(tensor), role});
    }

    bool has(const std::string& name) const { return index_.contains(name); }

    Tensor2& tensor(const std::string& name) { return entry(name).tensor; }
    const Tensor2& tensor(const std::string& name) const { return entry(name).tensor; }
    Role role(const std::string& name) const { return entry(name).role; }

    const std::vector<Entry>& entries() const { return entries_; }
    std::vector<Entry>& entries() { return entries_; }

    std::size_t count(Role role) const {
        std::size_t n = 0;
        for (const auto& e : entries_)
            if (e.role == role) n += e.tensor.size();
        return n;
    }
    std::size_t count_all() const {
        std::size_t n = 0;
        for (const auto& e : entries_) n += e.tensor.size();
        return n;
    }

    // Merge entries of another group; names must stay unique.
    void absorb(const ParamGroup& other) {
        for (const auto& e : other.entries()) add(e.name, e.tensor, e.role);
    }

private:
    Entry& entry(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw ContractError("unknown parameter: " + name);
        return entries_[it->second];
    }
    const Entry& entry(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ContractError("unknown parameter: " + name);
        return entries_[it->second];
    }

    std::vector<Entry> entries_;
    std::map<std::string, std::size_t> index_;
};

}  // namespace supt
