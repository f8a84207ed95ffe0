#include "doctest.h"

TEST_SUITE("gmrf") {}
