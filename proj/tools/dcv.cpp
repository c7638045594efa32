#include "dcv/cli.hpp"

int main(int argc, char** argv)
{
    return dcv::cli::run(argc, argv);
}
