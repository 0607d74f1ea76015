#include "taskgp/data/csv.hpp"

#include "taskgp/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <string_view>
#include <system_error>
#include <vector>

namespace taskgp::data {

namespace {

std::string_view trim(std::string_view s)
{
    auto const is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
    while (!s.empty() && is_space(s.front()))
        s.remove_prefix(1);
    while (!s.empty() && is_space(s.back()))
        s.remove_suffix(1);
    return s;
}

double parse_field(std::string_view field, std::size_t line)
{
    field = trim(field);
    if (!field.empty() && field.front() == '+')
        field.remove_prefix(1);
    double v = 0.0;
    auto const [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size())
        throw parse_error("load_csv: invalid number '" + std::string(field) + "'", line);
    return v;
}

}  // namespace

dataset load_csv(const std::string &path, csv_options opts)
{
    std::ifstream in(path);
    if (!in)
        throw error("load_csv: cannot open " + path);

    std::vector<double> values;
    std::vector<double> targets;
    std::size_t width = 0;
    std::size_t line_no = 0;
    std::string line;
    while (std::getline(in, line))
    {
        ++line_no;
        if (opts.header && line_no == 1)
            continue;
        std::string_view rest = line;
        if (trim(rest).empty())
            continue;

        std::vector<double> row;
        while (true)
        {
            auto const comma = rest.find(',');
            row.push_back(parse_field(rest.substr(0, comma), line_no));
            if (comma == std::string_view::npos)
                break;
            rest.remove_prefix(comma + 1);
        }

        if (width == 0)
        {
            if (row.size() < 2)
                throw parse_error("load_csv: need at least one regressor column and a target column", line_no);
            width = row.size();
        }
        else if (row.size() != width)
        {
            throw dimension_mismatch("load_csv: expected " + std::to_string(width) + " columns, found "
                                         + std::to_string(row.size()),
                                     line_no);
        }
        values.insert(values.end(), row.begin(), row.end() - 1);
        targets.push_back(row.back());
    }

    if (width == 0)
        throw parse_error("load_csv: no data rows in " + path, line_no == 0 ? 1 : line_no);

    return dataset{ linalg::matrix(targets.size(), width - 1, std::move(values)), std::move(targets) };
}

void save_csv(const dataset &data, const std::string &path, csv_options opts)
{
    data.validate();
    std::FILE *f = std::fopen(path.c_str(), "w");
    if (f == nullptr)
        throw error("save_csv: cannot open " + path);

    if (opts.header)
    {
        for (std::size_t k = 0; k < data.dims(); ++k)
            std::fprintf(f, "z%zu,", k);
        std::fprintf(f, "y\n");
    }
    for (std::size_t i = 0; i < data.size(); ++i)
    {
        for (std::size_t k = 0; k < data.dims(); ++k)
            std::fprintf(f, "%.17g,", data.z(i, k));
        std::fprintf(f, "%.17g\n", data.y[i]);
    }
    if (std::fclose(f) != 0)
        throw error("save_csv: write failed for " + path);
}

}  // namespace taskgp::data
