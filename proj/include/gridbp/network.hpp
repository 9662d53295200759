#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridbp {

/// Error raised while reading a case or scenario file. `line` is 1-based;
/// 0 means the problem concerns the file as a whole.
struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, int line_no = 0)
        : std::runtime_error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + msg : msg),
          line(line_no) {}
    int line;
};

struct Bus {
    int id = 0;  // external id as given in the case file
    std::string name;
    bool is_slack = false;
    bool operator==(const Bus&) const = default;
};

struct Branch {
    int from_bus = 0;
    int to_bus = 0;
    double susceptance_pu = 0.0;  // b = -1/x for a line of reactance x
    bool operator==(const Branch&) const = default;
};

enum class MeasurementKind { flow, injection, angle };

/// Immutable bus/branch model. Parsed once, then shared read-only by the
/// factor graph, the oracles and the simulator.
class Network {
  public:
    Network(std::vector<Bus> buses, std::vector<Branch> branches, double base_mva = 100.0);

    static Network parse_case(const std::string& text);
    std::string render() const;

    int bus_count() const { return static_cast<int>(buses_.size()); }
    int branch_count() const { return static_cast<int>(branches_.size()); }
    const std::vector<Bus>& buses() const { return buses_; }
    const std::vector<Branch>& branches() const { return branches_; }
    double base_mva() const { return base_mva_; }

    int slack_bus() const { return slack_id_; }
    bool has_bus(int bus_id) const { return index_.count(bus_id) != 0; }
    /// Internal 0-based index of an external bus id.
    int index_of(int bus_id) const;
    int bus_id_at(int index) const { return buses_.at(index).id; }

    /// Buses adjacent to `bus_id` (external ids, sorted, deduplicated).
    std::vector<int> neighbors(int bus_id) const;

    /// First branch index connecting `from` and `to` in that orientation.
    int find_branch(int from, int to) const;

    /// Linear coefficients of a measurement function, keyed by external bus
    /// id. `location` is a branch index for flow, a bus id otherwise.
    ///   flow (i,j):   {i: -b_ij, j: +b_ij}
    ///   injection i:  {i: -sum_j b_ij, j: +b_ij for each neighbor j}
    ///   angle i:      {i: 1}
    std::map<int, double> measurement_coefficients(MeasurementKind kind, int location) const;

    bool operator==(const Network& other) const;

  private:
    void validate() const;

    std::vector<Bus> buses_;
    std::vector<Branch> branches_;
    double base_mva_;
    int slack_id_ = 0;
    std::map<int, int> index_;  // external id -> internal index
};

}  // namespace gridbp
