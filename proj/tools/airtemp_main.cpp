#include "airtemp/cli/commands.hpp"

int main(int argc, char** argv) {
    return airtemp::cli::run_cli(argc, argv);
}
