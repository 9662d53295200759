#include "gridbp/network.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>
#include <sstream>

namespace gridbp {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

std::vector<std::string> tokens(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string t;
    while (is >> t) out.push_back(t);
    return out;
}

bool parse_double(const std::string& s, double& out) {
    try {
        size_t pos = 0;
        out = std::stod(s, &pos);
        return pos == s.size();
    } catch (const std::exception&) {
        return false;
    }
}

bool parse_int(const std::string& s, int& out) {
    try {
        size_t pos = 0;
        out = std::stoi(s, &pos);
        return pos == s.size();
    } catch (const std::exception&) {
        return false;
    }
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

Network::Network(std::vector<Bus> buses, std::vector<Branch> branches, double base_mva)
    : buses_(std::move(buses)), branches_(std::move(branches)), base_mva_(base_mva) {
    for (int i = 0; i < static_cast<int>(buses_.size()); ++i) {
        if (!index_.emplace(buses_[i].id, i).second)
            throw ParseError("duplicate bus id " + std::to_string(buses_[i].id));
        if (buses_[i].is_slack) slack_id_ = buses_[i].id;
    }
    validate();
}

void Network::validate() const {
    if (buses_.empty()) throw ParseError("no buses defined");
    int slack_count = 0;
    for (const auto& b : buses_) slack_count += b.is_slack ? 1 : 0;
    if (slack_count == 0) throw ParseError("no slack bus defined");
    if (slack_count > 1) throw ParseError("multiple slack buses defined");
    if (base_mva_ <= 0.0) throw ParseError("base_mva must be positive");
    for (const auto& br : branches_) {
        if (!has_bus(br.from_bus))
            throw ParseError("unknown bus " + std::to_string(br.from_bus) + " in branch");
        if (!has_bus(br.to_bus))
            throw ParseError("unknown bus " + std::to_string(br.to_bus) + " in branch");
        if (br.from_bus == br.to_bus)
            throw ParseError("branch connects bus " + std::to_string(br.from_bus) + " to itself");
        if (br.susceptance_pu == 0.0)
            throw ParseError("zero susceptance on branch " + std::to_string(br.from_bus) + "-" +
                             std::to_string(br.to_bus));
    }
    // connectivity: BFS from the first bus over the branch list
    std::vector<char> seen(buses_.size(), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (const auto& br : branches_) {
            int a = index_.at(br.from_bus), b = index_.at(br.to_bus);
            if (a == v && !seen[b]) { seen[b] = 1; stack.push_back(b); }
            if (b == v && !seen[a]) { seen[a] = 1; stack.push_back(a); }
        }
    }
    for (size_t i = 0; i < buses_.size(); ++i)
        if (!seen[i])
            throw ParseError("graph is disconnected: bus " + std::to_string(buses_[i].id) +
                             " unreachable");
}

Network Network::parse_case(const std::string& text) {
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    double base_mva = 100.0;
    bool branch_unit_reactance = false;

    enum class Section { none, buses, branches } section = Section::none;
    std::istringstream is(text);
    std::string raw;
    int line_no = 0;
    // remember the line each entity came from so validation can point at it
    std::set<int> seen_ids;

    while (std::getline(is, raw)) {
        ++line_no;
        std::string line = raw;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line == "[buses]") { section = Section::buses; continue; }
        if (line == "[branches]") { section = Section::branches; continue; }
        if (line.front() == '[')
            throw ParseError("unknown section " + line, line_no);

        if (auto eq = line.find('='); eq != std::string::npos && section == Section::none) {
            std::string key = trim(line.substr(0, eq));
            std::string val = trim(line.substr(eq + 1));
            if (key == "base_mva") {
                if (!parse_double(val, base_mva))
                    throw ParseError("bad base_mva value '" + val + "'", line_no);
            } else if (key == "branch_unit") {
                if (val == "reactance") branch_unit_reactance = true;
                else if (val == "susceptance") branch_unit_reactance = false;
                else throw ParseError("branch_unit must be susceptance or reactance", line_no);
            } else {
                throw ParseError("unknown header key '" + key + "'", line_no);
            }
            continue;
        }

        auto toks = tokens(line);
        if (section == Section::buses) {
            Bus bus;
            if (toks.empty() || !parse_int(toks[0], bus.id))
                throw ParseError("bad bus id '" + toks[0] + "'", line_no);
            for (size_t i = 1; i < toks.size(); ++i) {
                if (toks[i] == "slack") bus.is_slack = true;
                else if (bus.name.empty()) bus.name = toks[i];
                else throw ParseError("unexpected token '" + toks[i] + "' on bus line", line_no);
            }
            if (!seen_ids.insert(bus.id).second)
                throw ParseError("duplicate bus id " + std::to_string(bus.id), line_no);
            buses.push_back(std::move(bus));
        } else if (section == Section::branches) {
            Branch br;
            double value = 0.0;
            if (toks.size() != 3 || !parse_int(toks[0], br.from_bus) ||
                !parse_int(toks[1], br.to_bus) || !parse_double(toks[2], value))
                throw ParseError("expected 'from to value' on branch line", line_no);
            if (value == 0.0)
                throw ParseError("zero " +
                                     std::string(branch_unit_reactance ? "reactance" : "susceptance") +
                                     " on branch",
                                 line_no);
            br.susceptance_pu = branch_unit_reactance ? -1.0 / value : value;
            if (!seen_ids.count(br.from_bus))
                throw ParseError("unknown bus " + std::to_string(br.from_bus) + " in branch", line_no);
            if (!seen_ids.count(br.to_bus))
                throw ParseError("unknown bus " + std::to_string(br.to_bus) + " in branch", line_no);
            if (br.from_bus == br.to_bus)
                throw ParseError("branch connects a bus to itself", line_no);
            branches.push_back(br);
        } else {
            throw ParseError("data outside of a section: '" + line + "'", line_no);
        }
    }

    return Network(std::move(buses), std::move(branches), base_mva);
}

std::string Network::render() const {
    std::ostringstream os;
    os << "base_mva=" << fmt_double(base_mva_) << "\n";
    os << "[buses]\n";
    for (const auto& b : buses_) {
        os << b.id;
        if (!b.name.empty()) os << ' ' << b.name;
        if (b.is_slack) os << " slack";
        os << "\n";
    }
    os << "[branches]\n";
    for (const auto& br : branches_)
        os << br.from_bus << ' ' << br.to_bus << ' ' << fmt_double(br.susceptance_pu) << "\n";
    return os.str();
}

int Network::index_of(int bus_id) const {
    auto it = index_.find(bus_id);
    if (it == index_.end()) throw std::out_of_range("unknown bus id " + std::to_string(bus_id));
    return it->second;
}

std::vector<int> Network::neighbors(int bus_id) const {
    index_of(bus_id);  // validates
    std::set<int> out;
    for (const auto& br : branches_) {
        if (br.from_bus == bus_id) out.insert(br.to_bus);
        if (br.to_bus == bus_id) out.insert(br.from_bus);
    }
    return {out.begin(), out.end()};
}

int Network::find_branch(int from, int to) const {
    for (int i = 0; i < branch_count(); ++i)
        if (branches_[i].from_bus == from && branches_[i].to_bus == to) return i;
    throw std::out_of_range("no branch " + std::to_string(from) + "-" + std::to_string(to));
}

std::map<int, double> Network::measurement_coefficients(MeasurementKind kind, int location) const {
    std::map<int, double> coeffs;
    switch (kind) {
        case MeasurementKind::flow: {
            if (location < 0 || location >= branch_count())
                throw std::out_of_range("unknown branch index " + std::to_string(location));
            const Branch& br = branches_[location];
            coeffs[br.from_bus] = -br.susceptance_pu;
            coeffs[br.to_bus] = br.susceptance_pu;
            break;
        }
        case MeasurementKind::injection: {
            index_of(location);
            coeffs[location] = 0.0;
            for (const auto& br : branches_) {
                if (br.from_bus == location) {
                    coeffs[location] += -br.susceptance_pu;
                    coeffs[br.to_bus] += br.susceptance_pu;
                } else if (br.to_bus == location) {
                    coeffs[location] += -br.susceptance_pu;
                    coeffs[br.from_bus] += br.susceptance_pu;
                }
            }
            break;
        }
        case MeasurementKind::angle:
            index_of(location);
            coeffs[location] = 1.0;
            break;
    }
    return coeffs;
}

bool Network::operator==(const Network& other) const {
    return buses_ == other.buses_ && branches_ == other.branches_ && base_mva_ == other.base_mva_;
}

}  // namespace gridbp
