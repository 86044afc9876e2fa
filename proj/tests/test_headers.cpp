#include <gtest/gtest.h>

#include "malphase/malphase.hpp"

TEST(Headers, Compile) { SUCCEED(); }
