#include "csipos/cli/app.hpp"

int main(int argc, char** argv) { return csipos::cli::dispatch(argc, argv); }
