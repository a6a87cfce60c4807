#include "dymecu/scores.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace dymecu {

double hns(double agent, double random_score, double human_score) {
    if (human_score == random_score)
        throw FlaggedRowError("hns: human score equals random score");
    return (agent - random_score) / (human_score - random_score);
}

double bns(double method, double random_score, double baseline_avg) {
    if (baseline_avg == random_score)
        throw FlaggedRowError("bns: baseline average equals random score");
    return (method - random_score) / (baseline_avg - random_score);
}

int ScoreTable::method_index(const std::string& name) const {
    for (std::size_t i = 0; i < methods.size(); ++i)
        if (methods[i] == name) return static_cast<int>(i);
    throw std::invalid_argument("score table has no method column '" + name + "'");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        // trim surrounding whitespace
        const auto b = tok.find_first_not_of(" \t\r");
        const auto e = tok.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : tok.substr(b, e - b + 1));
    }
    return out;
}

double parse_cell(const std::string& s, int line_no) {
    double v;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw std::invalid_argument("score table line " + std::to_string(line_no) +
                                    ": '" + s + "' is not a number");
    return v;
}

} // namespace

ScoreTable parse_score_table(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    int line_no = 0;
    ScoreTable t;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (line_no == 1) {
            if (cells.size() < 4 || cells[0] != "task" || cells[1] != "random" ||
                cells[2] != "human")
                throw std::invalid_argument(
                    "score table header must be task,random,human,<method...>");
            t.methods.assign(cells.begin() + 3, cells.end());
            continue;
        }
        if (cells.size() != 3 + t.methods.size())
            throw std::invalid_argument("score table line " + std::to_string(line_no) +
                                        ": expected " + std::to_string(3 + t.methods.size()) +
                                        " cells");
        ScoreTable::Row row;
        row.task = cells[0];
        row.random_score = parse_cell(cells[1], line_no);
        row.human_score = parse_cell(cells[2], line_no);
        for (std::size_t i = 3; i < cells.size(); ++i)
            row.scores.push_back(parse_cell(cells[i], line_no));
        t.rows.push_back(std::move(row));
    }
    if (t.methods.empty()) throw std::invalid_argument("score table is empty");
    return t;
}

ScoreTable load_score_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open score table " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_score_table(ss.str());
}

AggregateResult aggregate(const ScoreTable& table, const std::string& method) {
    const int mi = table.method_index(method);
    AggregateResult res;
    double sum_all = 0.0, sum_valid = 0.0;
    for (const auto& row : table.rows) {
        const double score = row.scores[static_cast<std::size_t>(mi)];
        if (row.human_score <= row.random_score) res.flagged.push_back(row.task);
        if (row.human_score != row.random_score) {
            sum_all += hns(score, row.random_score, row.human_score);
            ++res.n_rows_all;
        }
        if (row.human_score > row.random_score) {
            sum_valid += hns(score, row.random_score, row.human_score);
            ++res.n_rows_valid;
        }
        bool best = true;
        for (std::size_t j = 0; j < row.scores.size(); ++j) {
            if (static_cast<int>(j) == mi) continue;
            if (!(score > row.scores[j])) {
                best = false;
                break;
            }
        }
        if (best && row.scores.size() > 1) ++res.n_sota;
    }
    if (res.n_rows_all == 0)
        throw std::invalid_argument("aggregate: no computable rows for method '" + method + "'");
    res.mean_hns_all = sum_all / res.n_rows_all;
    res.mean_hns_valid = res.n_rows_valid > 0 ? sum_valid / res.n_rows_valid : 0.0;
    return res;
}

} // namespace dymecu
