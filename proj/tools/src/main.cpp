#include "app.hpp"

int main(int argc, char** argv) { return matchlab::cli::run(argc, argv); }
