#include "echoless/cli.hpp"

int main(int argc, char** argv) {
    return echoless::cli_dispatch(argc, argv);
}
