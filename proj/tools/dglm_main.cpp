#include "dglm/cli.hpp"

int main(int argc, char** argv)
{
    return dglm::cli_main(argc, argv);
}
