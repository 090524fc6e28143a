#include "msgdd/cli.hpp"

int main(int argc, char** argv) { return msgdd::cli_main(argc, argv); }
