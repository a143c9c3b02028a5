#pragma once

#include <string>
#include <vector>

#include "subsetflow/tape.hpp"
#include "subsetflow/tensor.hpp"

namespace subsetflow {

// Ordered collection of named parameter tensors. Registration order is part of
// the checkpoint format and of gradient accumulation order; keep it stable.
class ParamStore {
public:
    int add(std::string name, Tensor value) {
        names_.push_back(std::move(name));
        values_.push_back(std::move(value));
        return static_cast<int>(values_.size()) - 1;
    }

    int count() const { return static_cast<int>(values_.size()); }
    const std::string& name(int i) const { return names_[i]; }
    Tensor& value(int i) { return values_[i]; }
    const Tensor& value(int i) const { return values_[i]; }

    // Creates one trainable leaf per parameter on the tape.
    std::vector<Var> bind(Tape& tape) const {
        std::vector<Var> vars;
        vars.reserve(values_.size());
        for (const Tensor& v : values_) vars.push_back(tape.leaf(v, true));
        return vars;
    }

private:
    std::vector<std::string> names_;
    std::vector<Tensor> values_;
};

}  // namespace subsetflow
