#include "meshfair/report.hpp"

int main(int argc, char** argv) { return meshfair::cli::run(argc, argv); }
