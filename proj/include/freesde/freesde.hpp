#pragma once

#include "freesde/characteristics.hpp"
#include "freesde/density.hpp"
#include "freesde/error.hpp"
#include "freesde/hilbert.hpp"
#include "freesde/ito_moments.hpp"
#include "freesde/models.hpp"
#include "freesde/numeric.hpp"
#include "freesde/polynomial.hpp"
#include "freesde/rmt/ensemble.hpp"
#include "freesde/rmt/matrix_sde.hpp"
#include "freesde/stieltjes.hpp"
