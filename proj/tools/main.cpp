#include "app.hpp"

int main(int argc, char** argv) { return hypar::cli::main_entry(argc, argv); }
