#include <CLI11.hpp>

#include <cstdio>

int main(int argc, char** argv) {
    CLI::App app{"hypomix experiment runner"};
    app.allow_extras();
    CLI11_PARSE(app, argc, argv);
    std::fprintf(stderr, "hypomix: experiment registry not wired up yet\n");
    return 2;
}
