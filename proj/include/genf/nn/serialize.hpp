#pragma once

#include <string>

#include "json.hpp"

#include "genf/errors.hpp"
#include "genf/nn/layers.hpp"

namespace genf::nn {

using Json = nlohmann::ordered_json;

inline Json params_to_json(const ParamStore& store) {
    Json tensors = Json::object();
    for (std::size_t i = 0; i < store.params.size(); ++i) {
        const Matrix& m = store.params[i]->val;
        Json rows = Json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            Json row = Json::array();
            for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
            rows.push_back(std::move(row));
        }
        tensors[store.names[i]] = std::move(rows);
    }
    return tensors;
}

// Fills an initialized store's parameters by name; every parameter must be
// present with the exact shape it was built with.
inline void params_from_json(ParamStore& store, const Json& tensors) {
    for (std::size_t i = 0; i < store.params.size(); ++i) {
        const auto& name = store.names[i];
        if (!tensors.contains(name))
            throw DataError("model file is missing tensor '" + name + "'");
        const Json& rows = tensors.at(name);
        Matrix& m = store.params[i]->val;
        if (static_cast<Eigen::Index>(rows.size()) != m.rows())
            throw DataError("tensor '" + name + "' has wrong row count");
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            const Json& row = rows.at(static_cast<std::size_t>(r));
            if (static_cast<Eigen::Index>(row.size()) != m.cols())
                throw DataError("tensor '" + name + "' has wrong column count");
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
        }
    }
}

}  // namespace genf::nn
