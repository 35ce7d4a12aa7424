// Line-protocol test oracle. Usage: stub_oracle MODE [d p]
//   quad    reply ½‖x‖²
//   noisy   reply F(x; key) of the sparse-Pareto quadratic with dimension d, tail p
//   nan     reply "nan"
//   silent  never reply
//   garbage reply "hello"
//   exit    exit on the first request
#include <chrono>
#include <cstdio>
#include <optional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rsczo/oracle.hpp"

int main(int argc, char** argv)
{
    const std::string mode = argc > 1 ? argv[1] : "quad";
    std::optional<rsczo::QuadraticProblem> noisy;
    if (mode == "noisy") {
        const std::size_t d = std::stoul(argv[2]);
        noisy.emplace(d, rsczo::NoiseModelSpec{rsczo::NoiseFamily::sparse_pareto, std::stod(argv[3]), 1.0},
                      rsczo::Vec(d, 0.0));
    }
    std::string line;
    while (std::getline(std::cin, line)) {
        std::istringstream is(line);
        std::string verb;
        std::uint64_t key = 0;
        is >> verb >> key;
        std::vector<double> x;
        for (double v; is >> v;)
            x.push_back(v);

        if (mode == "silent") {
            std::this_thread::sleep_for(std::chrono::seconds(30));
            return 0;
        }
        if (mode == "exit")
            return 3;
        if (mode == "nan") {
            std::printf("nan\n");
        } else if (mode == "garbage") {
            std::printf("hello\n");
        } else if (noisy) {
            std::printf("%.17g\n", noisy->evaluate(x, key));
        } else {
            double s = 0.0;
            for (double v : x)
                s += v * v;
            std::printf("%.17g\n", 0.5 * s);
        }
        std::fflush(stdout);
    }
    return 0;
}
