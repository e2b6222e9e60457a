#pragma once

#include "blindcal/experiment.hpp"
