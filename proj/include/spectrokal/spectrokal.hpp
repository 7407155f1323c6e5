#pragma once

#include "spectrokal/ecg.hpp"
#include "spectrokal/errors.hpp"
#include "spectrokal/fourier_model.hpp"
#include "spectrokal/io.hpp"
#include "spectrokal/oscillator_model.hpp"
#include "spectrokal/simbench.hpp"
#include "spectrokal/spectrogram.hpp"
#include "spectrokal/statespace.hpp"
#include "spectrokal/timed_signal.hpp"
