// Writes the taxonomy fixture as train.tsv, dev.tsv and test.tsv.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ntnkb/synthetic.hpp"

namespace {

void write(const std::filesystem::path& path, const std::vector<ntnkb::RawTriple>& triples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& t : triples) out << t.left << '\t' << t.relation << '\t' << t.right << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generate the synthetic taxonomy fixture"};
    std::string dir = ".";
    std::uint64_t seed = 7;
    app.add_option("--out-dir", dir, "Output directory");
    app.add_option("--seed", seed, "Generator seed");
    CLI11_PARSE(app, argc, argv);

    try {
        const auto splits = ntnkb::make_taxonomy_fixture(seed);
        std::filesystem::create_directories(dir);
        write(std::filesystem::path(dir) / "train.tsv", splits.train);
        write(std::filesystem::path(dir) / "dev.tsv", splits.dev);
        write(std::filesystem::path(dir) / "test.tsv", splits.test);
        std::cout << splits.train.size() << ' ' << splits.dev.size() << ' ' << splits.test.size() << '\n';
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }
    return 0;
}
