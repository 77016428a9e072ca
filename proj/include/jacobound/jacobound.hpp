#pragma once

#include "jacobound/activation.hpp"
#include "jacobound/cert.hpp"
#include "jacobound/error.hpp"
#include "jacobound/jacbound.hpp"
#include "jacobound/linalg.hpp"
#include "jacobound/lipschitz.hpp"
#include "jacobound/maxpool.hpp"
#include "jacobound/model_io.hpp"
#include "jacobound/network.hpp"
#include "jacobound/oracle.hpp"
#include "jacobound/parallel.hpp"
#include "jacobound/preact.hpp"
