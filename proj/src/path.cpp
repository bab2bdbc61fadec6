#include "pathgibbs/path.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include "json.hpp"

#include "pathgibbs/error.hpp"
#include "pathgibbs/numeric.hpp"

namespace pathgibbs {

namespace {

constexpr double kAlignTol = 1e-7;

void require_same_shape(const IncrementPath& x, const IncrementPath& y, const char* op) {
    if (!(x.grid() == y.grid()) || x.dim() != y.dim())
        throw ArgumentError(fmt::format("{}: paths have different grids or dimensions", op));
}

} // namespace

Grid::Grid(double horizon, double dt) : horizon_(horizon), dt_(dt), n_steps_(0) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw ConfigError(fmt::format("grid: horizon T must be > 0 (got {})", horizon));
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw ConfigError(fmt::format("grid: step dt must be > 0 (got {})", dt));
    const double n = std::round(2.0 * horizon / dt);
    if (std::fabs(n * dt - 2.0 * horizon) > 1e-9 * 2.0 * horizon)
        throw ConfigError(fmt::format("grid: dt = {} does not divide 2T = {}", dt, 2.0 * horizon));
    if (n < 2.0) throw ConfigError("grid: need at least two steps");
    n_steps_ = static_cast<std::size_t>(n);
}

bool Grid::is_node(double t) const noexcept {
    const double x = (t + horizon_) / dt_;
    const double k = std::round(x);
    return std::fabs(x - k) <= kAlignTol && k >= 0.0 && k <= static_cast<double>(n_steps_);
}

std::size_t Grid::node_index(double t) const {
    if (!is_node(t))
        throw ArgumentError(fmt::format("time {} is not a grid node of [-{}, {}] with dt {}", t,
                                        horizon_, horizon_, dt_));
    return static_cast<std::size_t>(std::llround((t + horizon_) / dt_));
}

std::size_t Grid::steps_in(double length) const {
    const double x = length / dt_;
    const double k = std::round(x);
    if (!(length >= 0.0) || std::fabs(x - k) > kAlignTol)
        throw ArgumentError(fmt::format("length {} is not a multiple of dt {}", length, dt_));
    return static_cast<std::size_t>(k);
}

CellRange cells_of(const Grid& grid, const Interval& interval) {
    if (interval.hi < interval.lo)
        throw ArgumentError(fmt::format("interval [{}, {}] is reversed", interval.lo, interval.hi));
    return {grid.node_index(interval.lo), grid.node_index(interval.hi)};
}

IncrementPath::IncrementPath(Grid grid, std::size_t dim)
    : grid_(grid), dim_(dim), steps_(grid.n_steps() * dim, 0.0) {
    if (dim < 1) throw ConfigError("path: dimension must be >= 1");
}

IncrementPath::IncrementPath(Grid grid, std::size_t dim, std::vector<double> steps)
    : grid_(grid), dim_(dim), steps_(std::move(steps)) {
    if (dim < 1) throw ConfigError("path: dimension must be >= 1");
    if (steps_.size() != grid_.n_steps() * dim_)
        throw ArgumentError(fmt::format("path: expected {} step values, got {}",
                                        grid_.n_steps() * dim_, steps_.size()));
}

void IncrementPath::set_steps(std::size_t first, std::span<const double> values) {
    if (values.size() % dim_ != 0 || first * dim_ + values.size() > steps_.size())
        throw ArgumentError("set_steps: range outside the path");
    std::copy(values.begin(), values.end(), steps_.begin() + static_cast<long>(first * dim_));
}

std::vector<double> IncrementPath::increment_nodes(std::size_t i, std::size_t j) const {
    std::vector<double> out(dim_, 0.0);
    const std::size_t lo = std::min(i, j), hi = std::max(i, j);
    const double sign = j >= i ? 1.0 : -1.0;
    for (std::size_t c = 0; c < dim_; ++c) {
        CompensatedSum sum;
        for (std::size_t k = lo; k < hi; ++k) sum += steps_[k * dim_ + c];
        out[c] = sign * sum.value();
    }
    return out;
}

std::vector<double> IncrementPath::increment(double s, double t) const {
    return increment_nodes(grid_.node_index(s), grid_.node_index(t));
}

std::vector<double> IncrementPath::node_positions() const {
    const std::size_t n = grid_.n_steps();
    std::vector<double> pos((n + 1) * dim_, 0.0);
    for (std::size_t c = 0; c < dim_; ++c) {
        CompensatedSum sum;
        for (std::size_t k = 0; k < n; ++k) {
            sum += steps_[k * dim_ + c];
            pos[(k + 1) * dim_ + c] = sum.value();
        }
    }
    return pos;
}

IncrementPath sample_wiener(const Grid& grid, std::size_t dim, Rng& rng) {
    const double sd = std::sqrt(grid.dt());
    std::vector<double> steps(grid.n_steps() * dim);
    for (double& s : steps) s = sd * rng.normal();
    return IncrementPath(grid, dim, std::move(steps));
}

IncrementPath sample_wiener(const Grid& grid, std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    return sample_wiener(grid, dim, rng);
}

IncrementPath ramp_path(const Grid& grid, std::span<const double> slope) {
    const std::size_t dim = slope.size();
    std::vector<double> steps(grid.n_steps() * dim);
    for (std::size_t k = 0; k < grid.n_steps(); ++k)
        for (std::size_t c = 0; c < dim; ++c) steps[k * dim + c] = slope[c] * grid.dt();
    return IncrementPath(grid, dim, std::move(steps));
}

IncrementPath splice(const IncrementPath& x, const IncrementPath& y, const Interval& interval) {
    require_same_shape(x, y, "splice");
    const CellRange inside = cells_of(x.grid(), interval);
    IncrementPath out = y;
    out.set_steps(inside.first, x.steps(inside));
    return out;
}

IncrementPath translate(const IncrementPath& path, double shift, Rng* fresh) {
    const Grid& grid = path.grid();
    const double x = shift / grid.dt();
    const double m = std::round(x);
    if (std::fabs(x - m) > kAlignTol)
        throw ArgumentError(fmt::format("translate: shift {} is not a multiple of dt {}", shift,
                                        grid.dt()));
    const long offset = static_cast<long>(m);
    const long n = static_cast<long>(grid.n_steps());
    const std::size_t dim = path.dim();
    const double sd = std::sqrt(grid.dt());
    std::vector<double> steps(grid.n_steps() * dim, 0.0);
    for (long k = 0; k < n; ++k) {
        const long src = k + offset;
        for (std::size_t c = 0; c < dim; ++c) {
            double& dst = steps[static_cast<std::size_t>(k) * dim + c];
            if (src >= 0 && src < n)
                dst = path.steps()[static_cast<std::size_t>(src) * dim + c];
            else if (fresh != nullptr)
                dst = sd * fresh->normal();
        }
    }
    return IncrementPath(grid, dim, std::move(steps));
}

std::vector<SpinBlock> to_blocks(const IncrementPath& path, double block_length) {
    const Grid& grid = path.grid();
    if (!(block_length > 0.0)) throw ArgumentError("to_blocks: block length must be > 0");
    const std::size_t per_block = grid.steps_in(block_length);
    if (per_block == 0 || grid.n_steps() % per_block != 0)
        throw ArgumentError(fmt::format("to_blocks: block length {} does not divide 2T = {}",
                                        block_length, grid.length()));
    const double first = -grid.horizon() / block_length;
    if (std::fabs(first - std::round(first)) > kAlignTol)
        throw ArgumentError(fmt::format(
            "to_blocks: window start -T = {} is not on the block lattice {} Z", -grid.horizon(),
            block_length));

    std::vector<SpinBlock> blocks;
    const std::size_t count = grid.n_steps() / per_block;
    blocks.reserve(count);
    for (std::size_t b = 0; b < count; ++b) {
        SpinBlock block;
        block.index = std::lround(first) + static_cast<long>(b);
        block.length = block_length;
        block.dim = path.dim();
        const auto src = path.steps(CellRange{b * per_block, (b + 1) * per_block});
        block.steps.assign(src.begin(), src.end());
        blocks.push_back(std::move(block));
    }
    return blocks;
}

IncrementPath from_blocks(std::span<const SpinBlock> blocks, const Grid& grid) {
    if (blocks.empty()) throw ArgumentError("from_blocks: no blocks");
    const std::size_t dim = blocks.front().dim;
    const std::size_t per_block = grid.steps_in(blocks.front().length);
    if (per_block * blocks.size() != grid.n_steps())
        throw ArgumentError("from_blocks: blocks do not cover the window");
    const long first = std::lround(-grid.horizon() / blocks.front().length);
    std::vector<double> steps;
    steps.reserve(grid.n_steps() * dim);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const SpinBlock& block = blocks[b];
        if (block.index != first + static_cast<long>(b) || block.dim != dim ||
            block.steps.size() != per_block * dim)
            throw ArgumentError(fmt::format("from_blocks: block {} is out of sequence", b));
        steps.insert(steps.end(), block.steps.begin(), block.steps.end());
    }
    return IncrementPath(grid, dim, std::move(steps));
}

void write_path_csv(std::ostream& out, const IncrementPath& path, std::uint64_t seed) {
    const Grid& grid = path.grid();
    const nlohmann::json header = {
        {"T", grid.horizon()}, {"dt", grid.dt()}, {"d", path.dim()}, {"seed", seed}};
    out << "# " << header.dump() << '\n';
    fmt::memory_buffer line;
    for (std::size_t k = 0; k < grid.n_steps(); ++k) {
        line.clear();
        fmt::format_to(std::back_inserter(line), "{:.17g}", grid.node_time(k));
        for (double v : path.step(k)) fmt::format_to(std::back_inserter(line), ",{:.17g}", v);
        line.push_back('\n');
        out.write(line.data(), static_cast<std::streamsize>(line.size()));
    }
}

LoadedPath read_path_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
        throw ArgumentError("path csv: missing '# {json}' header");
    const auto header = nlohmann::json::parse(line.substr(2));
    const Grid grid(header.at("T").get<double>(), header.at("dt").get<double>());
    const auto dim = header.at("d").get<std::size_t>();
    const auto seed = header.at("seed").get<std::uint64_t>();

    std::vector<double> steps;
    steps.reserve(grid.n_steps() * dim);
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string cell;
        std::getline(fields, cell, ',');
        const double t = std::stod(cell);
        if (row >= grid.n_steps() || std::fabs(t - grid.node_time(row)) > 1e-9 * grid.length())
            throw ArgumentError(fmt::format("path csv: unexpected row time {} at row {}", t, row));
        std::size_t count = 0;
        while (std::getline(fields, cell, ',')) {
            steps.push_back(std::stod(cell));
            ++count;
        }
        if (count != dim)
            throw ArgumentError(fmt::format("path csv: row {} has {} components, expected {}",
                                            row, count, dim));
        ++row;
    }
    if (row != grid.n_steps())
        throw ArgumentError(
            fmt::format("path csv: {} rows, expected {}", row, grid.n_steps()));
    return {IncrementPath(grid, dim, std::move(steps)), seed};
}

} // namespace pathgibbs
