#include "cli_app.hpp"

int main(int argc, char** argv) {
    rieszpot::cli::App app;
    return app.run(argc, argv);
}
