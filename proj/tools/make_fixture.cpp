// Writes the synthetic postings CSV used when the real dataset is absent.
//   make_fixture OUT.csv [rows] [seed]
#include <cstdlib>
#include <iostream>
#include <string>

#include "fakejob/error.hpp"
#include "fakejob/ingest.hpp"
#include "fakejob/synthetic.hpp"

int main(int argc, char** argv) {
    if (argc < 2 || argc > 4) {
        std::cerr << "usage: make_fixture OUT.csv [rows] [seed]\n";
        return 1;
    }
    fakejob::synthetic::FixtureConfig cfg;
    try {
        if (argc > 2) cfg.rows = std::stoul(argv[2]);
        if (argc > 3) cfg.seed = std::stoull(argv[3]);
        fakejob::ingest::write_csv(fakejob::synthetic::make_postings(cfg), argv[1]);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
