#pragma once

#include "rnimage/approximators.hpp"
#include "rnimage/basis.hpp"
#include "rnimage/error.hpp"
#include "rnimage/image.hpp"
#include "rnimage/linalg.hpp"
#include "rnimage/matrix.hpp"
#include "rnimage/moments.hpp"
