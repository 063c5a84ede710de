#include "geoproto/cli.hpp"

int main(int argc, char** argv) { return geoproto::run(argc, argv); }
