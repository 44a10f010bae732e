#include "attrition/cli.hpp"

int main(int argc, char** argv) { return attrition::cli::run(argc, argv); }
