#include "mhpinn/cli.hpp"

int main(int argc, char** argv) { return mhpinn::dispatch(argc, argv); }
