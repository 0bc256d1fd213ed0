#include "memcost/cli/app.hpp"

int main(int argc, char** argv) { return memcost::cli::run(argc, argv); }
