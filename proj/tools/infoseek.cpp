#include "infoseek/cli/commands.hpp"

int main(int argc, char** argv)
{
    return infoseek::cli::run_cli(argc, argv);
}
