#pragma once

#include <json.hpp>

#include "gp/dist.hpp"

namespace gp {

inline nlohmann::json to_json(const CycleLedger& l) {
    return {
        {"reader_cycles", l.reader_cycles},
        {"writer_cycles", l.writer_cycles},
        {"alu_cycles", l.alu_cycles},
        {"sorter_cycles", l.sorter_cycles},
        {"comm_cycles", l.comm_cycles},
        {"controller_overhead_cycles", l.controller_overhead_cycles},
    };
}

inline nlohmann::json to_json(const NetSummary& n) {
    return {
        {"packets", n.packets},
        {"delivered", n.delivered},
        {"makespan_cycles", n.makespan_cycles},
        {"stall_cycles", n.stall_cycles},
        {"busy_link_cycles", n.busy_link_cycles},
        {"utilization", n.utilization},
        {"phases", n.phases},
    };
}

// Stable schema; bump report_version on any key change.
inline nlohmann::json to_json(const SimReport& r, nlohmann::json config = {}) {
    nlohmann::json per_node = nlohmann::json::array();
    for (std::size_t i = 0; i < r.per_node.size(); ++i) {
        nlohmann::json entry = to_json(r.per_node[i]);
        entry["node"] = i;
        if (i < r.per_node_partials.size()) entry["partials_generated"] = r.per_node_partials[i];
        if (i < r.per_node_accumulated.size())
            entry["partials_accumulated"] = r.per_node_accumulated[i];
        if (i < r.per_node_stored.size()) entry["stored_nnz"] = r.per_node_stored[i];
        per_node.push_back(std::move(entry));
    }
    return {
        {"report_version", 1},
        {"config", std::move(config)},
        {"total_cycles", r.total_cycles},
        {"per_node", std::move(per_node)},
        {"net", to_json(r.net)},
        {"partial_products", r.partial_products},
        {"load_imbalance", r.load_imbalance},
        {"throughput_proxy", r.throughput_proxy},
    };
}

}  // namespace gp
