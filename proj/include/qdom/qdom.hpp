#pragma once

#include "qdom/core.hpp"
#include "qdom/dbar.hpp"
#include "qdom/equilibrium.hpp"
#include "qdom/fekete.hpp"
#include "qdom/io.hpp"
#include "qdom/measures.hpp"
#include "qdom/orthopoly.hpp"
#include "qdom/quadrature.hpp"
#include "qdom/schwarz.hpp"
#include "qdom/verify.hpp"
