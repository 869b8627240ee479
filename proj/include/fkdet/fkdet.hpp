#pragma once

#include "fkdet/errors.hpp"
#include "fkdet/scalar.hpp"
#include "fkdet/groups.hpp"
#include "fkdet/ring.hpp"
#include "fkdet/gre_io.hpp"
#include "fkdet/matrix.hpp"
#include "fkdet/logdet.hpp"
#include "fkdet/symbol.hpp"
#include "fkdet/sections.hpp"
#include "fkdet/snf.hpp"
#include "fkdet/fk.hpp"
#include "fkdet/tiling.hpp"
#include "fkdet/perturbed.hpp"
#include "fkdet/mahler.hpp"
#include "fkdet/dynamics.hpp"
