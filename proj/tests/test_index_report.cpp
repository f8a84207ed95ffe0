#include "doctest.h"

TEST_SUITE("index_report") {}
